#include "c2f/camrender.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "c2f/ops.hpp"

namespace c2f::camrender {

Tensor project(const Tensor& points, const Tensor& focal, const Camera& cam,
               i64* clamp_count) {
  require(points.ndim() == 2 && points.dim(1) == 3,
          "project: points must be [K,3]");
  require(focal.size() == 1, "project: focal must be scalar");
  const i64 k = points.dim(0);
  const double f = focal.data()[0];
  std::vector<double> out(k * 2);
  std::vector<bool> clamped(k, false);
  i64 nclamp = 0;
  for (i64 i = 0; i < k; ++i) {
    const double x = points.at(i, 0), y = points.at(i, 1);
    double z = points.at(i, 2);
    if (z <= kZNear) {
      z = kZNear;
      clamped[i] = true;
      ++nclamp;
    }
    out[i * 2 + 0] = f * x / z + cam.cx;
    out[i * 2 + 1] = f * y / z + cam.cy;
  }
  if (clamp_count) *clamp_count = nclamp;
  Tensor r = Tensor::from({k, 2}, std::move(out));
  if (Tape* t = ops::result_tape({&points, &focal})) {
    const int id = t->record(
        k * 2, {points.node(), focal.node()},
        [k, points, f, clamped](Tape::Grads& g) {
          double* gp = g.in(0);
          double* gf = g.in(1);
          for (i64 i = 0; i < k; ++i) {
            const double x = points.at(i, 0), y = points.at(i, 1);
            const double z = clamped[i] ? kZNear : points.at(i, 2);
            const double gu = g.out()[i * 2 + 0], gv = g.out()[i * 2 + 1];
            if (gp) {
              gp[i * 3 + 0] += gu * f / z;
              gp[i * 3 + 1] += gv * f / z;
              if (!clamped[i])
                gp[i * 3 + 2] += -(gu * x + gv * y) * f / (z * z);
            }
            if (gf) gf[0] += (gu * x + gv * y) / z;
          }
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

namespace {

struct Contribution {
  i64 pixel;
  i64 face;
  double occ;  // sigmoid(sharpness * signed distance)
};

// Signed distance of q to triangle (a, b, c): positive inside, negative
// outside, magnitude = distance to the closest edge. Orientation-free.
// Also reports the closest edge and its segment parameter for the backward.
struct SignedDist {
  double d;
  int edge;   // 0:(a,b) 1:(b,c) 2:(c,a)
  double t;   // clamped segment parameter on that edge
  bool inside;
};

inline double cross2(double ax, double ay, double bx, double by) {
  return ax * by - ay * bx;
}

SignedDist signed_distance(const double* tri, double qx, double qy) {
  const double* a = tri;
  const double* b = tri + 2;
  const double* c = tri + 4;
  const double area = cross2(b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1]);
  const double orient = area >= 0.0 ? 1.0 : -1.0;
  const double e0 = cross2(b[0] - a[0], b[1] - a[1], qx - a[0], qy - a[1]);
  const double e1 = cross2(c[0] - b[0], c[1] - b[1], qx - b[0], qy - b[1]);
  const double e2 = cross2(a[0] - c[0], a[1] - c[1], qx - c[0], qy - c[1]);
  const bool inside =
      e0 * orient >= 0.0 && e1 * orient >= 0.0 && e2 * orient >= 0.0;

  SignedDist best{0.0, -1, 0.0, inside};
  double best_d2 = 1e300;
  const double* pts[4] = {a, b, c, a};
  for (int e = 0; e < 3; ++e) {
    const double* p0 = pts[e];
    const double* p1 = pts[e + 1];
    const double ex = p1[0] - p0[0], ey = p1[1] - p0[1];
    const double len2 = ex * ex + ey * ey;
    double t = len2 > 0.0 ? ((qx - p0[0]) * ex + (qy - p0[1]) * ey) / len2 : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    const double dx = qx - (p0[0] + t * ex), dy = qy - (p0[1] + t * ey);
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best.edge = e;
      best.t = t;
    }
  }
  best.d = std::sqrt(best_d2);
  if (!inside) best.d = -best.d;
  return best;
}

inline double sigmoid_stable(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

}  // namespace

Tensor rasterize_projected(const Tensor& p, const std::vector<i64>& faces,
                           i64 height, i64 width, double sharpness) {
  require(p.ndim() == 2 && p.dim(1) == 2, "rasterize: p must be [K,2]");
  require(faces.size() % 3 == 0, "rasterize: faces not a multiple of 3");
  require(sharpness > 0.0, "rasterize: sharpness must be positive");
  const i64 k = p.dim(0);
  const i64 nf = static_cast<i64>(faces.size()) / 3;
  const i64 npix = height * width;

  // sigmoid(-40) vanishes against 1 in f64; beyond this reach a face
  // contributes exactly nothing to the product.
  const double margin = 40.0 / sharpness;

  std::vector<double> complement(npix, 1.0);
  auto contributions = std::make_shared<std::vector<Contribution>>();

  for (i64 f = 0; f < nf; ++f) {
    double tri[6];
    for (int t = 0; t < 3; ++t) {
      const i64 v = faces[f * 3 + t];
      require(v >= 0 && v < k, "rasterize: face index out of range");
      tri[t * 2 + 0] = p.at(v, 0);
      tri[t * 2 + 1] = p.at(v, 1);
    }
    const double area = cross2(tri[2] - tri[0], tri[3] - tri[1],
                               tri[4] - tri[0], tri[5] - tri[1]);
    if (std::abs(area) < 1e-12) continue;  // projected sliver, no coverage
    const double xmin = std::min({tri[0], tri[2], tri[4]}) - margin;
    const double xmax = std::max({tri[0], tri[2], tri[4]}) + margin;
    const double ymin = std::min({tri[1], tri[3], tri[5]}) - margin;
    const double ymax = std::max({tri[1], tri[3], tri[5]}) + margin;
    const i64 x0 = std::max<i64>(0, static_cast<i64>(std::ceil(xmin)));
    const i64 x1 = std::min<i64>(width - 1, static_cast<i64>(std::floor(xmax)));
    const i64 y0 = std::max<i64>(0, static_cast<i64>(std::ceil(ymin)));
    const i64 y1 = std::min<i64>(height - 1, static_cast<i64>(std::floor(ymax)));
    for (i64 y = y0; y <= y1; ++y)
      for (i64 x = x0; x <= x1; ++x) {
        const SignedDist sd = signed_distance(tri, static_cast<double>(x),
                                              static_cast<double>(y));
        const double occ = sigmoid_stable(sharpness * sd.d);
        if (occ <= 0.0) continue;
        const i64 pix = y * width + x;
        complement[pix] *= 1.0 - occ;
        contributions->push_back({pix, f, occ});
      }
  }

  std::vector<double> mask(npix);
  for (i64 i = 0; i < npix; ++i) mask[i] = 1.0 - complement[i];
  Tensor r = Tensor::from({height, width}, std::move(mask));

  if (Tape* t = ops::result_tape({&p})) {
    const int id = t->record(
        npix, {p.node()},
        [p, faces, width, sharpness, contributions](Tape::Grads& g) {
          double* gp = g.in(0);
          if (!gp) return;
          const auto& con = *contributions;
          const size_t m = con.size();
          if (m == 0) return;
          // group contributions per pixel (stable counting sort keeps the
          // face-major order deterministic)
          std::vector<size_t> order(m);
          {
            i64 maxpix = 0;
            for (const auto& cn : con) maxpix = std::max(maxpix, cn.pixel);
            std::vector<i64> cnt(maxpix + 2, 0);
            for (const auto& cn : con) cnt[cn.pixel + 1]++;
            for (i64 i = 0; i + 1 <= maxpix; ++i) cnt[i + 1] += cnt[i];
            std::vector<i64> cursor(cnt.begin(), cnt.end());
            for (size_t i = 0; i < m; ++i) order[cursor[con[i].pixel]++] = i;
          }
          size_t pos = 0;
          std::vector<double> pref, suff;
          while (pos < m) {
            size_t end = pos;
            const i64 pix = con[order[pos]].pixel;
            while (end < m && con[order[end]].pixel == pix) ++end;
            const size_t cntp = end - pos;
            pref.assign(cntp + 1, 1.0);
            suff.assign(cntp + 1, 1.0);
            for (size_t i = 0; i < cntp; ++i)
              pref[i + 1] = pref[i] * (1.0 - con[order[pos + i]].occ);
            for (size_t i = cntp; i-- > 0;)
              suff[i] = suff[i + 1] * (1.0 - con[order[pos + i]].occ);
            const double gout = g.out()[pix];
            if (gout != 0.0) {
              const double qx = static_cast<double>(pix % width);
              const double qy = static_cast<double>(pix / width);
              for (size_t i = 0; i < cntp; ++i) {
                const Contribution& cn = con[order[pos + i]];
                // d mask / d occ_i = prod_{j != i} (1 - occ_j)
                const double docc = gout * pref[i] * suff[i + 1];
                const double dsig = docc * sharpness * cn.occ * (1.0 - cn.occ);
                if (dsig == 0.0) continue;
                double tri[6];
                i64 vid[3];
                for (int tt = 0; tt < 3; ++tt) {
                  vid[tt] = faces[cn.face * 3 + tt];
                  tri[tt * 2 + 0] = p.at(vid[tt], 0);
                  tri[tt * 2 + 1] = p.at(vid[tt], 1);
                }
                const SignedDist sd = signed_distance(tri, qx, qy);
                const double dist = std::abs(sd.d);
                if (dist < 1e-12) continue;  // on the boundary, no stable dir
                const int i0 = sd.edge, i1 = (sd.edge + 1) % 3;
                const double* p0 = tri + i0 * 2;
                const double* p1 = tri + i1 * 2;
                const double mx = p0[0] + sd.t * (p1[0] - p0[0]);
                const double my = p0[1] + sd.t * (p1[1] - p0[1]);
                // unit vector from the closest boundary point toward q
                double ux = (qx - mx) / dist, uy = (qy - my) / dist;
                if (!sd.inside) {
                  ux = -ux;  // d = -dist outside; d(d)/dq flips with it
                  uy = -uy;
                }
                // envelope theorem: t is the minimizer, so treat it fixed
                const double s = dsig;
                gp[vid[i0] * 2 + 0] += -s * (1.0 - sd.t) * ux;
                gp[vid[i0] * 2 + 1] += -s * (1.0 - sd.t) * uy;
                gp[vid[i1] * 2 + 0] += -s * sd.t * ux;
                gp[vid[i1] * 2 + 1] += -s * sd.t * uy;
              }
            }
            pos = end;
          }
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor rasterize_soft(const Tensor& vertices, const std::vector<i64>& faces,
                      const Tensor& focal, const Camera& cam,
                      double sharpness) {
  const Tensor p = project(vertices, focal, cam);
  return rasterize_projected(p, faces, cam.height, cam.width, sharpness);
}

Tensor sample_features(const std::vector<Tensor>& maps, const Tensor& p,
                       i64 image_height, i64 image_width) {
  require(p.ndim() == 2 && p.dim(1) == 2, "sample_features: p must be [K,2]");
  const i64 k = p.dim(0);
  i64 total_d = 0;
  for (const Tensor& m : maps) {
    require(m.ndim() == 3, "sample_features: maps must be [D,h,w]");
    total_d += m.dim(0);
  }
  std::vector<double> out(k * total_d, 0.0);

  struct SampleGeom {
    i64 x0, y0;
    double wx, wy;
    bool clamped_x, clamped_y;
    double su, sv;  // d(map coord)/d(image coord)
  };
  // geometry per (map, point) recomputed in backward; forward fills values
  // (captures by value: the pullback outlives this frame)
  auto geom_for = [p, image_width, image_height](const Tensor& m, i64 i) {
    const i64 h = m.dim(1), w = m.dim(2);
    const double su = static_cast<double>(w) / static_cast<double>(image_width);
    const double sv =
        static_cast<double>(h) / static_cast<double>(image_height);
    double um = (p.at(i, 0) + 0.5) * su - 0.5;
    double vm = (p.at(i, 1) + 0.5) * sv - 0.5;
    SampleGeom geo;
    geo.clamped_x = um <= 0.0 || um >= static_cast<double>(w - 1);
    geo.clamped_y = vm <= 0.0 || vm >= static_cast<double>(h - 1);
    um = std::min(static_cast<double>(w - 1), std::max(0.0, um));
    vm = std::min(static_cast<double>(h - 1), std::max(0.0, vm));
    geo.x0 = std::min<i64>(w - 2 >= 0 ? w - 2 : 0, static_cast<i64>(um));
    geo.y0 = std::min<i64>(h - 2 >= 0 ? h - 2 : 0, static_cast<i64>(vm));
    if (w == 1) geo.x0 = 0;
    if (h == 1) geo.y0 = 0;
    geo.wx = um - static_cast<double>(geo.x0);
    geo.wy = vm - static_cast<double>(geo.y0);
    geo.su = su;
    geo.sv = sv;
    return geo;
  };

  i64 doff = 0;
  for (const Tensor& m : maps) {
    const i64 d = m.dim(0), h = m.dim(1), w = m.dim(2);
    for (i64 i = 0; i < k; ++i) {
      const SampleGeom geo = geom_for(m, i);
      const i64 x1 = std::min<i64>(w - 1, geo.x0 + 1);
      const i64 y1 = std::min<i64>(h - 1, geo.y0 + 1);
      for (i64 c = 0; c < d; ++c) {
        const double* plane = m.data() + c * h * w;
        const double v00 = plane[geo.y0 * w + geo.x0];
        const double v01 = plane[geo.y0 * w + x1];
        const double v10 = plane[y1 * w + geo.x0];
        const double v11 = plane[y1 * w + x1];
        out[i * total_d + doff + c] =
            (1 - geo.wy) * ((1 - geo.wx) * v00 + geo.wx * v01) +
            geo.wy * ((1 - geo.wx) * v10 + geo.wx * v11);
      }
    }
    doff += d;
  }
  Tensor r = Tensor::from({k, total_d}, std::move(out));

  std::vector<const Tensor*> all{&p};
  for (const Tensor& m : maps) all.push_back(&m);
  Tape* t = nullptr;
  for (const Tensor* q : all)
    if (q->tracked()) {
      require(!t || t == q->tape(), "operands recorded on different tapes");
      t = q->tape();
    }
  if (t) {
    std::vector<int> inputs{p.node()};
    for (const Tensor& m : maps) inputs.push_back(m.node());
    std::vector<Tensor> saved_maps = maps;
    const int id = t->record(
        k * total_d, std::move(inputs),
        [k, total_d, p, saved_maps, geom_for](Tape::Grads& g) {
          double* gp = g.in(0);
          i64 doff = 0;
          for (size_t mi = 0; mi < saved_maps.size(); ++mi) {
            const Tensor& m = saved_maps[mi];
            const i64 d = m.dim(0), h = m.dim(1), w = m.dim(2);
            double* gm = g.in(static_cast<int>(mi) + 1);
            for (i64 i = 0; i < k; ++i) {
              const SampleGeom geo = geom_for(m, i);
              const i64 x1 = std::min<i64>(w - 1, geo.x0 + 1);
              const i64 y1 = std::min<i64>(h - 1, geo.y0 + 1);
              double du = 0.0, dv = 0.0;
              for (i64 c = 0; c < d; ++c) {
                const double go = g.out()[i * total_d + doff + c];
                if (go == 0.0) continue;
                const double* plane = m.data() + c * h * w;
                const double v00 = plane[geo.y0 * w + geo.x0];
                const double v01 = plane[geo.y0 * w + x1];
                const double v10 = plane[y1 * w + geo.x0];
                const double v11 = plane[y1 * w + x1];
                if (gm) {
                  double* gplane = gm + c * h * w;
                  gplane[geo.y0 * w + geo.x0] += go * (1 - geo.wy) * (1 - geo.wx);
                  gplane[geo.y0 * w + x1] += go * (1 - geo.wy) * geo.wx;
                  gplane[y1 * w + geo.x0] += go * geo.wy * (1 - geo.wx);
                  gplane[y1 * w + x1] += go * geo.wy * geo.wx;
                }
                du += go * ((1 - geo.wy) * (v01 - v00) + geo.wy * (v11 - v10));
                dv += go * ((1 - geo.wx) * (v10 - v00) + geo.wx * (v11 - v01));
              }
              if (gp) {
                if (!geo.clamped_x) gp[i * 2 + 0] += du * geo.su;
                if (!geo.clamped_y) gp[i * 2 + 1] += dv * geo.sv;
              }
            }
            doff += d;
          }
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

HardRender render_hard(const std::vector<double>& vertices,
                       const std::vector<i64>& faces, const Camera& cam) {
  const i64 k = static_cast<i64>(vertices.size()) / 3;
  const i64 npix = cam.height * cam.width;
  HardRender out;
  out.depth.assign(npix, std::numeric_limits<double>::infinity());
  out.shade.assign(npix, 0.0);
  out.mask.assign(npix, 0);

  std::vector<double> proj(k * 2), zs(k);
  for (i64 i = 0; i < k; ++i) {
    const double z = std::max(kZNear, vertices[i * 3 + 2]);
    proj[i * 2 + 0] = cam.f * vertices[i * 3 + 0] / z + cam.cx;
    proj[i * 2 + 1] = cam.f * vertices[i * 3 + 1] / z + cam.cy;
    zs[i] = z;
  }

  const double light[3] = {0.33, -0.55, -0.77};
  for (size_t f = 0; f < faces.size(); f += 3) {
    const i64 a = faces[f], b = faces[f + 1], c = faces[f + 2];
    const double ax = proj[a * 2], ay = proj[a * 2 + 1];
    const double bx = proj[b * 2], by = proj[b * 2 + 1];
    const double cx = proj[c * 2], cy = proj[c * 2 + 1];
    const double area = cross2(bx - ax, by - ay, cx - ax, cy - ay);
    if (std::abs(area) < 1e-12) continue;

    double n[3];
    {
      double e1[3], e2[3];
      for (int t = 0; t < 3; ++t) {
        e1[t] = vertices[b * 3 + t] - vertices[a * 3 + t];
        e2[t] = vertices[c * 3 + t] - vertices[a * 3 + t];
      }
      n[0] = e1[1] * e2[2] - e1[2] * e2[1];
      n[1] = e1[2] * e2[0] - e1[0] * e2[2];
      n[2] = e1[0] * e2[1] - e1[1] * e2[0];
      const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      if (len > 0)
        for (double& v : n) v /= len;
      if (n[2] > 0)
        for (double& v : n) v = -v;  // face the camera
    }
    const double shade =
        0.5 + 0.5 * std::max(0.0, -(n[0] * light[0] + n[1] * light[1] +
                                    n[2] * light[2]));

    const i64 x0 = std::max<i64>(0, static_cast<i64>(std::ceil(std::min({ax, bx, cx}))));
    const i64 x1 = std::min<i64>(cam.width - 1,
                                 static_cast<i64>(std::floor(std::max({ax, bx, cx}))));
    const i64 y0 = std::max<i64>(0, static_cast<i64>(std::ceil(std::min({ay, by, cy}))));
    const i64 y1 = std::min<i64>(cam.height - 1,
                                 static_cast<i64>(std::floor(std::max({ay, by, cy}))));
    for (i64 y = y0; y <= y1; ++y)
      for (i64 x = x0; x <= x1; ++x) {
        const double qx = static_cast<double>(x), qy = static_cast<double>(y);
        const double w0 = cross2(cx - bx, cy - by, qx - bx, qy - by) / area;
        const double w1 = cross2(ax - cx, ay - cy, qx - cx, qy - cy) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        // perspective-correct depth
        const double inv_z = w0 / zs[a] + w1 / zs[b] + w2 / zs[c];
        const double z = 1.0 / inv_z;
        const i64 pix = y * cam.width + x;
        if (z < out.depth[pix]) {
          out.depth[pix] = z;
          out.shade[pix] = shade;
          out.mask[pix] = 1;
        }
      }
  }
  return out;
}

}  // namespace c2f::camrender
