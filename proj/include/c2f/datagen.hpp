#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "c2f/artmodel.hpp"
#include "c2f/tensor.hpp"

namespace c2f::datagen {

// Affine mapping from this sample's pixel space back to the original
// annotation space: p_orig = p / scale + (ox, oy). Identity for synthetic
// samples; recorded by crop_and_resize so metrics run in original pixels.
struct CropTransform {
  double scale = 1.0;
  double ox = 0.0;
  double oy = 0.0;
  i64 orig_height = 0;
  i64 orig_width = 0;

  void to_original(double x, double y, double* xo, double* yo) const {
    *xo = x / scale + ox;
    *yo = y / scale + oy;
  }
  void from_original(double xo, double yo, double* x, double* y) const {
    *x = (xo - ox) * scale;
    *y = (yo - oy) * scale;
  }
  bool identity() const { return scale == 1.0 && ox == 0.0 && oy == 0.0; }
};

struct TrainingSample {
  Tensor image;                         // [3,H,W] in [0,1]
  i64 height = 0, width = 0;
  std::vector<double> keypoints;        // n_kp x 2, this sample's pixels
  std::vector<double> visibility;       // n_kp, 0/1
  std::vector<std::uint8_t> silhouette; // H*W binary
  double bbox[4] = {0, 0, 0, 0};        // x, y, w, h in original pixels
  CropTransform transform;
  // original-resolution mask kept when cropping so IOU can be evaluated in
  // annotation space; empty when transform is the identity
  std::vector<std::uint8_t> orig_silhouette;

  bool has_gt_params = false;           // synthetic samples carry the truth
  std::vector<double> gt_beta;
  std::vector<double> gt_theta;         // N*3
  std::vector<double> gt_gamma;         // 3
  double gt_focal = 0.0;

  i64 n_keypoints() const { return static_cast<i64>(visibility.size()); }
  i64 visible_count() const;
  i64 silhouette_area() const;
  Tensor silhouette_tensor() const;     // [H,W] of 0/1
};

struct Dataset {
  std::vector<TrainingSample> samples;
  i64 n_kp = 0;

  i64 size() const { return static_cast<i64>(samples.size()); }
};

// Named joint groups for per-part PCK. Groups are disjoint; joints outside
// every group only count toward the average.
struct PartMap {
  std::vector<std::pair<std::string, std::vector<i64>>> parts;

  void validate(i64 joint_count) const;
  static PartMap toy_default();
  // "legs:5,6,7,8;tail:4;face:2,3"
  static PartMap parse(const std::string& text, i64 joint_count);
};

struct SynthSpec {
  i64 count = 200;
  u64 seed = 1;
  i64 image_size = 64;
  double f_min = 55.0, f_max = 90.0;
  double gxy_range = 0.45;
  double gz_min = 4.2, gz_max = 6.2;
  double noise_sigma = 0.02;
  double hard_sharpness = 400.0;  // thresholded at 0.5 for the binary mask
  i64 min_silhouette_px = 50;
  i64 max_retries = 100;
};

// Deterministic synthetic set: parameters drawn from the model priors
// (pose clipped to the limits), silhouette-matted depth/shade images with
// quantized 8-bit values plus Gaussian pixel noise.
Dataset synth_generate(const artmodel::ArticulatedModel& model,
                       const SynthSpec& spec);

// Text annotation format (see export_annotations for the exact layout) or a
// StanfordExtra-style JSON array; image/mask paths resolve against root.
Dataset load_annotations(const std::string& annotation_file,
                         const std::string& root);

// Writes images/, masks/ and annotations.txt under out_dir. Reloading the
// exported directory reproduces the dataset exactly.
void export_annotations(const Dataset& ds, const std::string& out_dir);

// Square crop around bbox with 5% margin and edge replication, bilinearly
// resized to out_size; keypoints/silhouette transformed consistently.
TrainingSample crop_and_resize(const TrainingSample& s, const double bbox[4],
                               i64 out_size);

// Epoch ordering as a pure function of (seed, epoch).
std::vector<i64> epoch_order(i64 count, u64 seed, i64 epoch);

}  // namespace c2f::datagen
