#include "c2f/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "c2f/camrender.hpp"
#include "c2f/pngio.hpp"
#include "c2f/rng.hpp"

namespace c2f::datagen {

namespace fs = std::filesystem;

i64 TrainingSample::visible_count() const {
  i64 n = 0;
  for (double v : visibility) n += v != 0.0;
  return n;
}

i64 TrainingSample::silhouette_area() const {
  i64 n = 0;
  for (std::uint8_t v : silhouette) n += v != 0;
  return n;
}

Tensor TrainingSample::silhouette_tensor() const {
  std::vector<double> v(silhouette.size());
  for (size_t i = 0; i < silhouette.size(); ++i)
    v[i] = silhouette[i] ? 1.0 : 0.0;
  return Tensor::from({height, width}, std::move(v));
}

void PartMap::validate(i64 joint_count) const {
  std::vector<bool> seen(joint_count, false);
  for (const auto& [name, joints] : parts) {
    require(!name.empty(), "part map: empty part name");
    for (i64 j : joints) {
      require(j >= 0 && j < joint_count,
              "part map: joint index out of range in part " + name);
      require(!seen[j], "part map: joint " + std::to_string(j) +
                            " appears in two parts");
      seen[j] = true;
    }
  }
}

PartMap PartMap::toy_default() {
  PartMap m;
  m.parts = {{"legs", {5, 6, 7, 8}}, {"tail", {4}}, {"face", {2, 3}}};
  return m;
}

PartMap PartMap::parse(const std::string& text, i64 joint_count) {
  PartMap m;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    const size_t colon = part.find(':');
    require(colon != std::string::npos,
            "part map: expected name:j0,j1,... in `" + part + "`");
    std::vector<i64> joints;
    std::stringstream js(part.substr(colon + 1));
    std::string tok;
    while (std::getline(js, tok, ','))
      if (!tok.empty()) joints.push_back(std::stoll(tok));
    m.parts.emplace_back(part.substr(0, colon), std::move(joints));
  }
  m.validate(joint_count);
  return m;
}

static double quantize8(double v) {
  const double c = std::min(1.0, std::max(0.0, v));
  return std::round(c * 255.0) / 255.0;
}

Dataset synth_generate(const artmodel::ArticulatedModel& model,
                       const SynthSpec& spec) {
  require(spec.count > 0, "synth: count must be positive");
  const i64 n = model.joint_count, b = model.shape_dims;
  const i64 sz = spec.image_size;
  Rng rng(spec.seed);

  Dataset ds;
  ds.n_kp = n;
  ds.samples.reserve(spec.count);

  const Tensor chol = model.shape_prior_chol;  // [B,B] lower
  i64 attempts_left = spec.count * spec.max_retries;

  while (static_cast<i64>(ds.samples.size()) < spec.count) {
    require(attempts_left-- > 0,
            "synth: retry cap exhausted; generation keeps producing "
            "degenerate silhouettes");

    // beta ~ N(mu, Sigma) through the Cholesky factor
    std::vector<double> z(b);
    for (double& v : z) v = rng.normal();
    std::vector<double> beta(b, 0.0);
    for (i64 i = 0; i < b; ++i) {
      for (i64 j = 0; j <= i; ++j) beta[i] += chol.at(i, j) * z[j];
      beta[i] += model.shape_prior_mean[i];
    }
    // theta ~ N(mu, Sigma) through the Cholesky factor, clipped to the limits
    std::vector<double> theta(3 * n);
    {
      std::vector<double> zp(3 * n);
      for (double& v : zp) v = rng.normal();
      const Tensor& lp = model.pose_prior_chol;
      for (i64 i = 0; i < 3 * n; ++i) {
        double v = model.pose_prior_mean[i];
        for (i64 j = 0; j <= i; ++j) v += lp.at(i, j) * zp[j];
        theta[i] = std::min(model.pose_max[i], std::max(model.pose_min[i], v));
      }
    }
    std::vector<double> gamma = {rng.uniform(-spec.gxy_range, spec.gxy_range),
                                 rng.uniform(-spec.gxy_range, spec.gxy_range),
                                 rng.uniform(spec.gz_min, spec.gz_max)};
    const double focal = rng.uniform(spec.f_min, spec.f_max);

    const Tensor v = artmodel::forward(model, Tensor::from({b}, beta),
                                       Tensor::from({n, 3}, theta),
                                       Tensor::from({3}, gamma));
    const auto cam = camrender::Camera::centered(focal, sz, sz);
    const Tensor ft = Tensor::scalar(focal);

    const Tensor soft = camrender::rasterize_soft(v, model.faces, ft, cam,
                                                  spec.hard_sharpness);
    std::vector<std::uint8_t> mask(sz * sz);
    i64 area = 0;
    for (i64 i = 0; i < sz * sz; ++i) {
      mask[i] = soft.at(i) >= 0.5 ? 1 : 0;
      area += mask[i];
    }
    if (area < spec.min_silhouette_px) continue;  // degenerate; resample

    const camrender::HardRender hard =
        camrender::render_hard(v.vec(), model.faces, cam);

    // depth normalized inside the mask to a fixed visible band
    double zmin = 1e300, zmax = -1e300;
    for (i64 i = 0; i < sz * sz; ++i)
      if (hard.mask[i]) {
        zmin = std::min(zmin, hard.depth[i]);
        zmax = std::max(zmax, hard.depth[i]);
      }
    const double zspan = std::max(1e-9, zmax - zmin);

    std::vector<double> img(3 * sz * sz, 0.0);
    for (i64 i = 0; i < sz * sz; ++i) {
      double d = 0.0, s = 0.0, m = 0.0;
      if (mask[i]) {
        m = 1.0;
        if (hard.mask[i]) {
          d = 0.95 - 0.6 * (hard.depth[i] - zmin) / zspan;
          s = hard.shade[i];
        } else {
          // soft-mask boundary pixel the z-buffer missed
          d = 0.35;
          s = 0.5;
        }
      }
      img[0 * sz * sz + i] = quantize8(d + spec.noise_sigma * rng.normal());
      img[1 * sz * sz + i] = quantize8(s + spec.noise_sigma * rng.normal());
      img[2 * sz * sz + i] = quantize8(m + spec.noise_sigma * rng.normal());
    }

    const Tensor joints = artmodel::regress_joints(model, v);
    const Tensor kp = camrender::project(joints, ft, cam);
    TrainingSample sample;
    sample.image = Tensor::from({3, sz, sz}, std::move(img));
    sample.height = sz;
    sample.width = sz;
    sample.keypoints.assign(kp.data(), kp.data() + n * 2);
    sample.visibility.assign(n, 1.0);
    for (i64 j = 0; j < n; ++j) {
      const double x = sample.keypoints[j * 2], y = sample.keypoints[j * 2 + 1];
      const bool behind = joints.at(j, 2) <= camrender::kZNear;
      const bool in_slack = x >= -0.5 * sz && x <= 1.5 * sz && y >= -0.5 * sz &&
                            y <= 1.5 * sz;
      if (behind || !in_slack) sample.visibility[j] = 0.0;
    }
    sample.silhouette = std::move(mask);
    sample.bbox[0] = 0;
    sample.bbox[1] = 0;
    sample.bbox[2] = static_cast<double>(sz);
    sample.bbox[3] = static_cast<double>(sz);
    sample.transform.orig_height = sz;
    sample.transform.orig_width = sz;
    sample.has_gt_params = true;
    sample.gt_beta = beta;
    sample.gt_theta = theta;
    sample.gt_gamma = gamma;
    sample.gt_focal = focal;
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

// ---- annotation text format -------------------------------------------------
//
//   # c2f annotations
//   n_kp <N>
//   param_dims <B> <NJ>          (only when samples carry synthetic truth)
//   record
//   image <relative path>
//   mask <relative path>
//   bbox <x> <y> <w> <h>
//   keypoints <x y v> * N
//   params <beta..> <theta..> <gamma..> <f>   (optional)
//   end

namespace {

struct RawRecord {
  std::string image, mask;
  double bbox[4];
  std::vector<double> kp;   // n_kp * 3
  std::vector<double> params;
  int lineno = 0;
};

Dataset ingest(const std::vector<RawRecord>& records, i64 n_kp, i64 b, i64 nj,
               const std::string& root) {
  Dataset ds;
  ds.n_kp = n_kp;
  for (const RawRecord& rec : records) {
    const std::string ipath = (fs::path(root) / rec.image).string();
    const std::string mpath = (fs::path(root) / rec.mask).string();
    PngImage img, msk;
    try {
      img = read_png(ipath);
      msk = read_png(mpath);
    } catch (const IoError& e) {
      std::fprintf(stderr, "[datagen] skipping record at line %d: %s\n",
                   rec.lineno, e.what());
      continue;
    }
    if (msk.height != img.height || msk.width != img.width) {
      std::fprintf(stderr,
                   "[datagen] skipping record at line %d: mask size differs "
                   "from image\n",
                   rec.lineno);
      continue;
    }
    TrainingSample s;
    s.height = img.height;
    s.width = img.width;
    std::vector<double> data(3 * img.height * img.width);
    for (i64 y = 0; y < img.height; ++y)
      for (i64 x = 0; x < img.width; ++x)
        for (i64 c = 0; c < 3; ++c)
          data[c * img.height * img.width + y * img.width + x] =
              static_cast<double>(
                  img.at(y, x, img.channels == 3 ? c : 0)) /
              255.0;
    s.image = Tensor::from({3, img.height, img.width}, std::move(data));
    s.silhouette.resize(img.height * img.width);
    i64 area = 0;
    for (i64 i = 0; i < img.height * img.width; ++i) {
      s.silhouette[i] =
          msk.data[i * msk.channels] != 0 ? 1 : 0;  // nonzero = foreground
      area += s.silhouette[i];
    }
    s.keypoints.resize(n_kp * 2);
    s.visibility.resize(n_kp);
    i64 visible = 0;
    for (i64 j = 0; j < n_kp; ++j) {
      s.keypoints[j * 2] = rec.kp[j * 3];
      s.keypoints[j * 2 + 1] = rec.kp[j * 3 + 1];
      s.visibility[j] = rec.kp[j * 3 + 2] != 0.0 ? 1.0 : 0.0;
      visible += s.visibility[j] != 0.0;
    }
    for (int k = 0; k < 4; ++k) s.bbox[k] = rec.bbox[k];
    s.transform.orig_height = img.height;
    s.transform.orig_width = img.width;
    if (visible < 2) {
      std::fprintf(stderr,
                   "[datagen] skipping record at line %d: too few visible "
                   "keypoints (%lld)\n",
                   rec.lineno, static_cast<long long>(visible));
      continue;
    }
    if (area == 0) {
      std::fprintf(stderr,
                   "[datagen] skipping record at line %d: empty silhouette\n",
                   rec.lineno);
      continue;
    }
    if (!rec.params.empty()) {
      require(static_cast<i64>(rec.params.size()) == b + 3 * nj + 3 + 1,
              "annotations: params length mismatch");
      s.has_gt_params = true;
      s.gt_beta.assign(rec.params.begin(), rec.params.begin() + b);
      s.gt_theta.assign(rec.params.begin() + b,
                        rec.params.begin() + b + 3 * nj);
      s.gt_gamma.assign(rec.params.begin() + b + 3 * nj,
                        rec.params.begin() + b + 3 * nj + 3);
      s.gt_focal = rec.params.back();
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset load_text_annotations(const std::string& path,
                              const std::string& root) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations: " + path);
  i64 n_kp = -1, b = 0, nj = 0;
  std::vector<RawRecord> records;
  RawRecord cur;
  bool in_record = false;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw IoError(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "n_kp") {
      if (!(ss >> n_kp) || n_kp <= 0) fail("bad n_kp");
    } else if (key == "param_dims") {
      if (!(ss >> b >> nj)) fail("bad param_dims");
    } else if (key == "record") {
      if (in_record) fail("nested record");
      in_record = true;
      cur = RawRecord{};
      cur.lineno = lineno;
    } else if (key == "image") {
      if (!in_record) fail("image outside record");
      ss >> cur.image;
    } else if (key == "mask") {
      if (!in_record) fail("mask outside record");
      ss >> cur.mask;
    } else if (key == "bbox") {
      if (!in_record) fail("bbox outside record");
      if (!(ss >> cur.bbox[0] >> cur.bbox[1] >> cur.bbox[2] >> cur.bbox[3]))
        fail("bad bbox");
    } else if (key == "keypoints") {
      if (!in_record) fail("keypoints outside record");
      if (n_kp < 0) fail("keypoints before n_kp header");
      cur.kp.resize(n_kp * 3);
      for (i64 i = 0; i < n_kp * 3; ++i)
        if (!(ss >> cur.kp[i])) fail("keypoints: expected " +
                                     std::to_string(n_kp * 3) + " numbers");
    } else if (key == "params") {
      if (!in_record) fail("params outside record");
      double v;
      while (ss >> v) cur.params.push_back(v);
    } else if (key == "end") {
      if (!in_record) fail("end outside record");
      if (cur.image.empty() || cur.mask.empty()) fail("record missing paths");
      if (cur.kp.empty()) fail("record missing keypoints");
      records.push_back(cur);
      in_record = false;
    } else {
      fail("unknown key `" + key + "`");
    }
  }
  if (in_record) fail("unterminated record");
  if (n_kp < 0) throw IoError(path + ": missing n_kp header");
  return ingest(records, n_kp, b, nj, root);
}

// Maps the public StanfordExtra field names onto the text schema.
Dataset load_stanford_json(const std::string& path, const std::string& root) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw IoError(path + ": JSON parse error: " + e.what());
  }
  if (!doc.is_array()) throw IoError(path + ": expected a JSON array");
  std::vector<RawRecord> records;
  i64 n_kp = -1;
  int idx = 0;
  for (const auto& item : doc) {
    ++idx;
    RawRecord rec;
    rec.lineno = idx;
    try {
      rec.image = item.at("img_path").get<std::string>();
      rec.mask = item.count("seg_path")
                     ? item.at("seg_path").get<std::string>()
                     : item.at("msk_path").get<std::string>();
      const auto& bb = item.at("img_bbox");
      for (int k = 0; k < 4; ++k) rec.bbox[k] = bb.at(k).get<double>();
      const auto& joints = item.at("joints");
      if (n_kp < 0) n_kp = static_cast<i64>(joints.size());
      require(static_cast<i64>(joints.size()) == n_kp,
              "stanford json: inconsistent joint counts");
      for (const auto& j : joints)
        for (int k = 0; k < 3; ++k) rec.kp.push_back(j.at(k).get<double>());
    } catch (const std::exception& e) {
      throw IoError(path + ": record " + std::to_string(idx) + ": " +
                    e.what());
    }
    records.push_back(std::move(rec));
  }
  if (n_kp < 0) return Dataset{};
  return ingest(records, n_kp, 0, 0, root);
}

}  // namespace

Dataset load_annotations(const std::string& annotation_file,
                         const std::string& root) {
  if (annotation_file.size() > 5 &&
      annotation_file.substr(annotation_file.size() - 5) == ".json")
    return load_stanford_json(annotation_file, root);
  return load_text_annotations(annotation_file, root);
}

void export_annotations(const Dataset& ds, const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "masks");
  std::FILE* f =
      std::fopen((fs::path(out_dir) / "annotations.txt").string().c_str(), "w");
  if (!f) throw IoError("cannot write annotations in " + out_dir);
  std::fprintf(f, "# c2f annotations\nn_kp %lld\n",
               static_cast<long long>(ds.n_kp));
  bool wrote_dims = false;
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    const TrainingSample& s = ds.samples[i];
    if (s.has_gt_params && !wrote_dims) {
      std::fprintf(f, "param_dims %lld %lld\n",
                   static_cast<long long>(s.gt_beta.size()),
                   static_cast<long long>(s.gt_theta.size() / 3));
      wrote_dims = true;
    }
  }
  char name[64];
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    const TrainingSample& s = ds.samples[i];
    std::snprintf(name, sizeof name, "%06zu.png", i);
    const std::string img_rel = std::string("images/") + name;
    const std::string msk_rel = std::string("masks/") + name;

    std::vector<std::uint8_t> rgb(s.height * s.width * 3);
    const i64 hw = s.height * s.width;
    for (i64 p = 0; p < hw; ++p)
      for (i64 c = 0; c < 3; ++c)
        rgb[p * 3 + c] = static_cast<std::uint8_t>(
            std::lround(std::min(1.0, std::max(0.0, s.image.at(c * hw + p))) *
                        255.0));
    write_rgb_png((fs::path(out_dir) / img_rel).string(), s.height, s.width,
                  rgb.data());
    std::vector<std::uint8_t> m(hw);
    for (i64 p = 0; p < hw; ++p) m[p] = s.silhouette[p] ? 255 : 0;
    write_gray_png((fs::path(out_dir) / msk_rel).string(), s.height, s.width,
                   m.data());

    std::fprintf(f, "record\nimage %s\nmask %s\nbbox %.17g %.17g %.17g %.17g\n",
                 img_rel.c_str(), msk_rel.c_str(), s.bbox[0], s.bbox[1],
                 s.bbox[2], s.bbox[3]);
    std::fprintf(f, "keypoints");
    for (i64 j = 0; j < ds.n_kp; ++j)
      std::fprintf(f, " %.17g %.17g %g", s.keypoints[j * 2],
                   s.keypoints[j * 2 + 1], s.visibility[j]);
    std::fprintf(f, "\n");
    if (s.has_gt_params) {
      std::fprintf(f, "params");
      for (double v : s.gt_beta) std::fprintf(f, " %.17g", v);
      for (double v : s.gt_theta) std::fprintf(f, " %.17g", v);
      for (double v : s.gt_gamma) std::fprintf(f, " %.17g", v);
      std::fprintf(f, " %.17g", s.gt_focal);
      std::fprintf(f, "\n");
    }
    std::fprintf(f, "end\n");
  }
  if (std::fclose(f) != 0) throw IoError("close failed in " + out_dir);
}

TrainingSample crop_and_resize(const TrainingSample& s, const double bbox[4],
                               i64 out_size) {
  require(out_size >= 8, "crop: out_size too small");
  const double bx = bbox[0], by = bbox[1], bw = bbox[2], bh = bbox[3];
  require(bw > 0 && bh > 0, "crop: empty bbox");
  // reject boxes that miss the image entirely
  require(bx < s.width && by < s.height && bx + bw > 0 && by + bh > 0,
          "crop: bbox does not intersect the image");

  const double side = std::max(bw, bh) * 1.05;
  const double cx = bx + bw / 2.0, cy = by + bh / 2.0;
  const double x0 = cx - side / 2.0, y0 = cy - side / 2.0;
  const double scale = static_cast<double>(out_size) / side;

  const i64 hw_in = s.height * s.width;
  auto sample_img = [&](i64 c, double x, double y) {
    // edge replication
    x = std::min(static_cast<double>(s.width - 1), std::max(0.0, x));
    y = std::min(static_cast<double>(s.height - 1), std::max(0.0, y));
    const i64 ix = std::min<i64>(s.width - 2 >= 0 ? s.width - 2 : 0,
                                 static_cast<i64>(x));
    const i64 iy = std::min<i64>(s.height - 2 >= 0 ? s.height - 2 : 0,
                                 static_cast<i64>(y));
    const double wx = x - ix, wy = y - iy;
    const double* plane = s.image.data() + c * hw_in;
    const i64 x1 = std::min<i64>(s.width - 1, ix + 1);
    const i64 y1 = std::min<i64>(s.height - 1, iy + 1);
    return (1 - wy) * ((1 - wx) * plane[iy * s.width + ix] +
                       wx * plane[iy * s.width + x1]) +
           wy * ((1 - wx) * plane[y1 * s.width + ix] +
                 wx * plane[y1 * s.width + x1]);
  };
  auto sample_mask = [&](double x, double y) {
    x = std::min(static_cast<double>(s.width - 1), std::max(0.0, x));
    y = std::min(static_cast<double>(s.height - 1), std::max(0.0, y));
    const i64 ix = std::min<i64>(s.width - 2 >= 0 ? s.width - 2 : 0,
                                 static_cast<i64>(x));
    const i64 iy = std::min<i64>(s.height - 2 >= 0 ? s.height - 2 : 0,
                                 static_cast<i64>(y));
    const double wx = x - ix, wy = y - iy;
    const i64 x1 = std::min<i64>(s.width - 1, ix + 1);
    const i64 y1 = std::min<i64>(s.height - 1, iy + 1);
    auto m = [&](i64 yy, i64 xx) {
      return s.silhouette[yy * s.width + xx] ? 1.0 : 0.0;
    };
    return (1 - wy) * ((1 - wx) * m(iy, ix) + wx * m(iy, x1)) +
           wy * ((1 - wx) * m(y1, ix) + wx * m(y1, x1));
  };

  TrainingSample out;
  out.height = out_size;
  out.width = out_size;
  std::vector<double> img(3 * out_size * out_size);
  out.silhouette.resize(out_size * out_size);
  for (i64 y = 0; y < out_size; ++y)
    for (i64 x = 0; x < out_size; ++x) {
      const double sx = x0 + (static_cast<double>(x)) / scale;
      const double sy = y0 + (static_cast<double>(y)) / scale;
      for (i64 c = 0; c < 3; ++c)
        img[c * out_size * out_size + y * out_size + x] = sample_img(c, sx, sy);
      out.silhouette[y * out_size + x] = sample_mask(sx, sy) >= 0.5 ? 1 : 0;
    }
  out.image = Tensor::from({3, out_size, out_size}, std::move(img));

  out.keypoints.resize(s.keypoints.size());
  out.visibility = s.visibility;
  for (size_t j = 0; j * 2 < s.keypoints.size(); ++j) {
    out.keypoints[j * 2] = (s.keypoints[j * 2] - x0) * scale;
    out.keypoints[j * 2 + 1] = (s.keypoints[j * 2 + 1] - y0) * scale;
  }
  for (int k = 0; k < 4; ++k) out.bbox[k] = bbox[k];

  // compose with any existing transform (crop of a crop)
  const CropTransform& old = s.transform;
  out.transform.scale = old.scale * scale;
  out.transform.ox = old.ox + x0 / old.scale;
  out.transform.oy = old.oy + y0 / old.scale;
  out.transform.orig_height = old.orig_height;
  out.transform.orig_width = old.orig_width;
  out.orig_silhouette =
      s.transform.identity() ? s.silhouette : s.orig_silhouette;

  out.has_gt_params = s.has_gt_params;
  out.gt_beta = s.gt_beta;
  out.gt_theta = s.gt_theta;
  out.gt_gamma = s.gt_gamma;
  out.gt_focal = s.gt_focal;
  return out;
}

std::vector<i64> epoch_order(i64 count, u64 seed, i64 epoch) {
  std::vector<i64> order(count);
  for (i64 i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<u64>(epoch) + 1);
  rng.shuffle(order);
  return order;
}

}  // namespace c2f::datagen
