#pragma once
#include <deque>
#include <string>
#include <vector>

#include "c2f/camrender.hpp"
#include "c2f/meshkit.hpp"
#include "c2f/ops.hpp"
#include "c2f/rng.hpp"
#include "c2f/tensor.hpp"

namespace c2f::neural {

// Owns every learnable parameter. Deque keeps addresses stable so layers can
// hold plain pointers; registration order is the canonical (deterministic)
// parameter order used by the optimizer and checkpoints.
class ParamStore {
 public:
  Param* create(const std::string& group, const std::string& name,
                Tensor init);
  const std::vector<Param*>& all() const { return order_; }
  std::vector<Param*> group(const std::string& g) const;
  const std::string& group_of(const Param* p) const;
  i64 total_size() const;

 private:
  std::deque<Param> params_;
  std::vector<Param*> order_;
  std::vector<std::string> groups_;
};

// ---- layers ----------------------------------------------------------------

struct Linear {
  Param* w = nullptr;  // [in, out]
  Param* b = nullptr;  // [out]

  static Linear create(ParamStore& ps, const std::string& group,
                       const std::string& name, i64 in, i64 out, Rng& rng,
                       bool zero_init = false);
  Tensor apply(Tape* t, const Tensor& x) const;  // [n,in] -> [n,out]
  i64 out_dim() const { return b->value.dim(0); }
};

struct GroupNormLayer {
  Param* scale = nullptr;  // [ch], init 1
  Param* shift = nullptr;  // [ch], init 0
  i64 groups = 1;
  static constexpr double kEps = 1e-5;

  static GroupNormLayer create(ParamStore& ps, const std::string& group,
                               const std::string& name, i64 channels,
                               i64 groups);
  Tensor apply_rows(Tape* t, const Tensor& x) const;  // [n, ch]
  Tensor apply_chw(Tape* t, const Tensor& x) const;   // [ch, h, w]
};

struct Conv2dLayer {
  Param* w = nullptr;  // [cout, cin, kh, kw]
  Param* b = nullptr;  // [cout]
  i64 stride = 1;
  i64 pad = 0;

  static Conv2dLayer create(ParamStore& ps, const std::string& group,
                            const std::string& name, i64 cin, i64 cout, i64 k,
                            i64 stride, i64 pad, Rng& rng);
  Tensor apply(Tape* t, const Tensor& x) const;
};

// H = A_tilde X W.
Tensor gcn_layer(const SparsePtr& a_tilde, const Tensor& x, const Tensor& w);

// ---- encoder ---------------------------------------------------------------

struct EncoderConfig {
  std::vector<i64> widths{16, 32, 64, 128};  // stride-2 conv blocks
  i64 global_dim = 128;                      // G
  i64 fc_hidden = 256;
  i64 gn_groups = 8;
  double leaky_slope = 0.01;
  i64 image_size = 64;

  i64 local_dim() const {  // L: concatenated channels of every block output
    i64 s = 0;
    for (i64 w : widths) s += w;
    return s;
  }
};

struct EncoderOutput {
  Tensor h_g;                        // [G]
  std::vector<Tensor> feature_maps;  // block outputs, forward order
};

class Encoder {
 public:
  static Encoder create(ParamStore& ps, const std::string& group,
                        const EncoderConfig& cfg, Rng& rng);
  EncoderOutput encode(Tape* t, const Tensor& image_chw) const;

  EncoderConfig cfg;

 private:
  std::vector<Conv2dLayer> convs_;
  std::vector<GroupNormLayer> norms_;
  Conv2dLayer conv1x1_;
  GroupNormLayer norm1x1_;
  Linear fc1_, fc2_;
};

// ---- parameter heads ---------------------------------------------------------

struct HeadsConfig {
  i64 hidden = 128;
  double focal_offset = 70.0;   // pixels
  double depth_offset = 5.0;    // model units
  double leaky_slope = 0.01;
};

struct ParamPrediction {
  Tensor beta;   // [B]
  Tensor theta;  // [N,3]
  Tensor gamma;  // [3]
  Tensor focal;  // scalar
};

// Five independent 2-layer MLPs; gamma_xy/gamma_z are separate branches and
// focal/depth pass through x -> offset * (x + sqrt(x^2 + 1)), which is
// positive everywhere and equals the offset at x = 0 (zero-init heads start
// at the offsets exactly).
class Heads {
 public:
  static Heads create(ParamStore& ps, const std::string& group, i64 global_dim,
                      i64 shape_dims, i64 joint_count, const HeadsConfig& cfg,
                      Rng& rng);
  ParamPrediction regress(Tape* t, const Tensor& h_g) const;

  HeadsConfig cfg;
  i64 joint_count = 0;

 private:
  Linear beta1_, beta2_, theta1_, theta2_, gxy1_, gxy2_, gz1_, gz2_, f1_, f2_;
};

// ---- mesh refinement GCN -----------------------------------------------------

struct MrgcnConfig {
  std::vector<i64> widths{32, 64, 128};  // per hierarchy level, fine to coarse
  i64 blocks_per_level = 2;
  i64 gn_groups = 8;
  double leaky_slope = 0.01;
};

// Bottleneck residual block with graph convolution in the middle:
// FC(width/2) -> GN -> leaky -> GCN -> GN -> leaky -> FC(width) -> +skip
// (projected when the width changes). The closing FC is zero-initialized.
struct BottleneckBlock {
  Linear fc_in, fc_out, proj;
  GroupNormLayer gn1, gn2;
  Param* gcn_w = nullptr;
  double leaky = 0.01;
  bool has_proj = false;

  static BottleneckBlock create(ParamStore& ps, const std::string& group,
                                const std::string& name, i64 in_width,
                                i64 width, i64 gn_groups, double leaky,
                                Rng& rng);
  Tensor apply(Tape* t, const SparsePtr& a_tilde, const Tensor& x) const;
};

// Encoder-decoder over the mesh hierarchy with concatenation skip
// connections and a zero-initialized 3-channel deformation head, so a fresh
// network predicts exactly zero deformation.
class Mrgcn {
 public:
  static Mrgcn create(ParamStore& ps, const std::string& group, i64 input_dim,
                      const MrgcnConfig& cfg, i64 levels, Rng& rng);
  // X0: [C, input_dim]; hierarchy provides adjacency and transforms.
  Tensor deform(Tape* t, const meshkit::MeshHierarchy& h,
                const Tensor& x0) const;

  MrgcnConfig cfg;
  i64 levels = 0;

 private:
  Linear input_fc_;
  std::vector<std::vector<BottleneckBlock>> enc_blocks_;  // per level
  std::vector<Linear> skip_fc_;                           // per level < last
  std::vector<std::vector<BottleneckBlock>> dec_blocks_;  // per level < last
  Linear head_;
};

// [h_g, h_l, x, y, z] rows for every coarse vertex; h_l bilinearly sampled
// from every encoder map at the vertex projection.
Tensor assemble_node_features(const Tensor& h_g, const Tensor& v_coarse,
                              const std::vector<Tensor>& feature_maps,
                              const Tensor& focal,
                              const camrender::Camera& cam);

// V_f = V_c + dV.
Tensor refine(const Tensor& v_coarse, const Tensor& delta);

}  // namespace c2f::neural
