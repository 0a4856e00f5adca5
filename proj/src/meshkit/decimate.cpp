#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "c2f/meshkit.hpp"

namespace c2f::meshkit {

namespace {

// Symmetric 4x4 quadric, upper triangle: xx xy xz xw yy yz yw zz zw ww.
struct Quadric {
  std::array<double, 10> q{};

  void add_plane(double a, double b, double c, double d) {
    const double p[4] = {a, b, c, d};
    int idx = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) q[idx++] += p[i] * p[j];
  }

  Quadric& operator+=(const Quadric& o) {
    for (int i = 0; i < 10; ++i) q[i] += o.q[i];
    return *this;
  }

  double eval(double x, double y, double z) const {
    return q[0] * x * x + 2 * q[1] * x * y + 2 * q[2] * x * z + 2 * q[3] * x +
           q[4] * y * y + 2 * q[5] * y * z + 2 * q[6] * y + q[7] * z * z +
           2 * q[8] * z + q[9];
  }
};

struct Candidate {
  double cost;
  i64 vmin, vmax;  // the edge, vmin < vmax
  i64 keep;        // surviving endpoint
  u64 ver;         // sum of endpoint versions at push time

  bool operator>(const Candidate& o) const {
    return std::tie(cost, vmin, vmax, keep) >
           std::tie(o.cost, o.vmin, o.vmax, o.keep);
  }
};

}  // namespace

DecimateResult decimate(const Mesh& mesh, i64 target_vertex_count) {
  const i64 c = mesh.vertex_count();
  require(target_vertex_count >= 3, "decimate: target must be >= 3");
  require(target_vertex_count <= c,
          "decimate: target exceeds current vertex count");

  if (target_vertex_count == c) {
    std::vector<SparseMatrix::Triplet> trips;
    for (i64 v = 0; v < c; ++v) trips.emplace_back(v, v, 1.0);
    DecimateResult res;
    res.q_down = std::make_shared<const SparseMatrix>(
        SparseMatrix::from_triplets(c, c, std::move(trips)));
    res.coarse = mesh;
    res.kept.resize(c);
    for (i64 v = 0; v < c; ++v) res.kept[v] = v;
    return res;
  }

  // Per-vertex quadrics from incident face planes.
  std::vector<Quadric> quad(c);
  for (i64 f = 0; f < mesh.face_count(); ++f) {
    const i64 a = mesh.fv(f, 0), b = mesh.fv(f, 1), d = mesh.fv(f, 2);
    double e1[3], e2[3];
    for (int k = 0; k < 3; ++k) {
      e1[k] = mesh.vx(b, k) - mesh.vx(a, k);
      e2[k] = mesh.vx(d, k) - mesh.vx(a, k);
    }
    double n[3] = {e1[1] * e2[2] - e1[2] * e2[1],
                   e1[2] * e2[0] - e1[0] * e2[2],
                   e1[0] * e2[1] - e1[1] * e2[0]};
    const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    if (len < 1e-300) continue;  // geometrically flat face adds no constraint
    for (double& v : n) v /= len;
    const double dd =
        -(n[0] * mesh.vx(a, 0) + n[1] * mesh.vx(a, 1) + n[2] * mesh.vx(a, 2));
    quad[a].add_plane(n[0], n[1], n[2], dd);
    quad[b].add_plane(n[0], n[1], n[2], dd);
    quad[d].add_plane(n[0], n[1], n[2], dd);
  }

  std::vector<std::set<i64>> adj(c);
  for (i64 f = 0; f < mesh.face_count(); ++f)
    for (int k = 0; k < 3; ++k) {
      const i64 a = mesh.fv(f, k), b = mesh.fv(f, (k + 1) % 3);
      adj[a].insert(b);
      adj[b].insert(a);
    }

  std::vector<u64> version(c, 0);
  std::vector<bool> alive(c, true);
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;

  auto push_edge = [&](i64 a, i64 b) {
    const i64 lo = std::min(a, b), hi = std::max(a, b);
    Quadric q = quad[lo];
    q += quad[hi];
    const u64 ver = version[lo] + version[hi];
    heap.push({q.eval(mesh.vx(lo, 0), mesh.vx(lo, 1), mesh.vx(lo, 2)), lo, hi,
               lo, ver});
    heap.push({q.eval(mesh.vx(hi, 0), mesh.vx(hi, 1), mesh.vx(hi, 2)), lo, hi,
               hi, ver});
  };

  for (i64 v = 0; v < c; ++v)
    for (i64 n : adj[v])
      if (v < n) push_edge(v, n);

  // Live faces keyed by sorted vertex triple so collapses that merge two
  // faces keep a single copy.
  std::vector<std::array<i64, 3>> face_verts(mesh.face_count());
  std::vector<bool> face_alive(mesh.face_count(), true);
  std::map<std::array<i64, 3>, i64> face_index;  // sorted triple -> face id
  std::vector<std::set<i64>> vertex_faces(c);
  for (i64 f = 0; f < mesh.face_count(); ++f) {
    face_verts[f] = {mesh.fv(f, 0), mesh.fv(f, 1), mesh.fv(f, 2)};
    std::array<i64, 3> key = face_verts[f];
    std::sort(key.begin(), key.end());
    if (face_index.count(key)) {
      face_alive[f] = false;
      continue;
    }
    face_index[key] = f;
    for (i64 v : face_verts[f]) vertex_faces[v].insert(f);
  }

  i64 alive_count = c;
  while (alive_count > target_vertex_count) {
    require(!heap.empty(),
            "decimate: ran out of collapsible edges before reaching target");
    const Candidate cand = heap.top();
    heap.pop();
    if (!alive[cand.vmin] || !alive[cand.vmax]) continue;
    if (version[cand.vmin] + version[cand.vmax] != cand.ver) continue;
    if (!adj[cand.vmin].count(cand.vmax)) continue;

    const i64 keep = cand.keep;
    const i64 gone = cand.keep == cand.vmin ? cand.vmax : cand.vmin;

    quad[keep] += quad[gone];
    alive[gone] = false;
    --alive_count;
    ++version[keep];
    ++version[gone];

    // Rewire faces incident to the removed vertex.
    const std::vector<i64> gone_faces(vertex_faces[gone].begin(),
                                      vertex_faces[gone].end());
    for (i64 f : gone_faces) {
      if (!face_alive[f]) continue;
      std::array<i64, 3> key = face_verts[f];
      std::sort(key.begin(), key.end());
      face_index.erase(key);
      for (i64& v : face_verts[f])
        if (v == gone) v = keep;
      const auto& fv = face_verts[f];
      const bool degen = fv[0] == fv[1] || fv[1] == fv[2] || fv[0] == fv[2];
      std::array<i64, 3> nkey = fv;
      std::sort(nkey.begin(), nkey.end());
      if (degen || face_index.count(nkey)) {
        face_alive[f] = false;
        for (i64 v : fv)
          if (v != gone) vertex_faces[v].erase(f);
      } else {
        face_index[nkey] = f;
        vertex_faces[keep].insert(f);
      }
    }
    vertex_faces[gone].clear();

    // Contract adjacency.
    adj[keep].erase(gone);
    for (i64 n : adj[gone]) {
      if (n == keep) continue;
      adj[n].erase(gone);
      adj[n].insert(keep);
      adj[keep].insert(n);
    }
    adj[gone].clear();

    for (i64 n : adj[keep]) push_edge(keep, n);
  }

  DecimateResult res;
  res.kept.reserve(target_vertex_count);
  std::vector<i64> remap(c, -1);
  for (i64 v = 0; v < c; ++v)
    if (alive[v]) {
      remap[v] = static_cast<i64>(res.kept.size());
      res.kept.push_back(v);
    }

  std::vector<double> cverts;
  cverts.reserve(res.kept.size() * 3);
  for (i64 v : res.kept)
    cverts.insert(cverts.end(), {mesh.vx(v, 0), mesh.vx(v, 1), mesh.vx(v, 2)});
  std::vector<i64> cfaces;
  for (i64 f = 0; f < mesh.face_count(); ++f) {
    if (!face_alive[f]) continue;
    for (i64 v : face_verts[f]) cfaces.push_back(remap[v]);
  }
  res.coarse = Mesh::create(std::move(cverts), std::move(cfaces));

  std::vector<SparseMatrix::Triplet> trips;
  for (size_t r = 0; r < res.kept.size(); ++r)
    trips.emplace_back(static_cast<i64>(r), res.kept[r], 1.0);
  res.q_down = std::make_shared<const SparseMatrix>(SparseMatrix::from_triplets(
      static_cast<i64>(res.kept.size()), c, std::move(trips)));
  return res;
}

namespace {

// Closest point to p on triangle (a,b,c); returns barycentric weights.
std::array<double, 3> closest_point_bary(const double* p, const double* a,
                                         const double* b, const double* c) {
  double ab[3], ac[3], ap[3], bp[3], cp[3];
  for (int k = 0; k < 3; ++k) {
    ab[k] = b[k] - a[k];
    ac[k] = c[k] - a[k];
    ap[k] = p[k] - a[k];
    bp[k] = p[k] - b[k];
    cp[k] = p[k] - c[k];
  }
  auto dot3 = [](const double* x, const double* y) {
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
  };
  const double d1 = dot3(ab, ap), d2 = dot3(ac, ap);
  if (d1 <= 0 && d2 <= 0) return {1, 0, 0};
  const double d3 = dot3(ab, bp), d4 = dot3(ac, bp);
  if (d3 >= 0 && d4 <= d3) return {0, 1, 0};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return {1 - v, v, 0};
  }
  const double d5 = dot3(ab, cp), d6 = dot3(ac, cp);
  if (d6 >= 0 && d5 <= d6) return {0, 0, 1};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return {1 - w, 0, w};
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0, 1 - w, w};
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return {1 - v - w, v, w};
}

}  // namespace

SparsePtr upsample_transform(const DecimateResult& dec, const Mesh& fine) {
  const i64 l = fine.vertex_count();
  const i64 k = dec.coarse.vertex_count();
  std::vector<i64> fine_to_coarse(l, -1);
  for (size_t r = 0; r < dec.kept.size(); ++r)
    fine_to_coarse[dec.kept[r]] = static_cast<i64>(r);

  std::vector<SparseMatrix::Triplet> trips;
  for (i64 v = 0; v < l; ++v) {
    if (fine_to_coarse[v] >= 0) {
      trips.emplace_back(v, fine_to_coarse[v], 1.0);
      continue;
    }
    const double p[3] = {fine.vx(v, 0), fine.vx(v, 1), fine.vx(v, 2)};
    if (dec.coarse.face_count() == 0) {
      // no surface left; snap to nearest coarse vertex
      i64 best = 0;
      double best_d = 1e300;
      for (i64 cv = 0; cv < k; ++cv) {
        double d = 0;
        for (int t = 0; t < 3; ++t) {
          const double diff = p[t] - dec.coarse.vx(cv, t);
          d += diff * diff;
        }
        if (d < best_d) {
          best_d = d;
          best = cv;
        }
      }
      trips.emplace_back(v, best, 1.0);
      continue;
    }
    double best_d = 1e300;
    i64 best_f = -1;
    std::array<double, 3> best_bary{};
    for (i64 f = 0; f < dec.coarse.face_count(); ++f) {
      const double* a = dec.coarse.vertices.data() + dec.coarse.fv(f, 0) * 3;
      const double* b = dec.coarse.vertices.data() + dec.coarse.fv(f, 1) * 3;
      const double* cc = dec.coarse.vertices.data() + dec.coarse.fv(f, 2) * 3;
      const auto bary = closest_point_bary(p, a, b, cc);
      double d = 0;
      for (int t = 0; t < 3; ++t) {
        const double q = bary[0] * a[t] + bary[1] * b[t] + bary[2] * cc[t];
        const double diff = p[t] - q;
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best_f = f;
        best_bary = bary;
      }
    }
    // weights share a coarse vertex when the face is degenerate at it; merge
    std::map<i64, double> row;
    const double s = best_bary[0] + best_bary[1] + best_bary[2];
    for (int t = 0; t < 3; ++t)
      row[dec.coarse.fv(best_f, t)] += best_bary[t] / s;
    for (const auto& [cv, wgt] : row) trips.emplace_back(v, cv, wgt);
  }
  return std::make_shared<const SparseMatrix>(
      SparseMatrix::from_triplets(l, k, std::move(trips)));
}

}  // namespace c2f::meshkit
