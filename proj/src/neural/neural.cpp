#include "c2f/neural.hpp"

#include <cmath>

namespace c2f::neural {

Param* ParamStore::create(const std::string& group, const std::string& name,
                          Tensor init) {
  params_.emplace_back(name, std::move(init));
  order_.push_back(&params_.back());
  groups_.push_back(group);
  return order_.back();
}

std::vector<Param*> ParamStore::group(const std::string& g) const {
  std::vector<Param*> out;
  for (size_t i = 0; i < order_.size(); ++i)
    if (groups_[i] == g) out.push_back(order_[i]);
  return out;
}

const std::string& ParamStore::group_of(const Param* p) const {
  for (size_t i = 0; i < order_.size(); ++i)
    if (order_[i] == p) return groups_[i];
  throw ArgumentError("unknown parameter");
}

i64 ParamStore::total_size() const {
  i64 s = 0;
  for (const Param* p : order_) s += p->size();
  return s;
}

static Tensor glorot_uniform(Shape shape, i64 fan_in, i64 fan_out, Rng& rng) {
  const double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(-lim, lim);
  return Tensor::from(std::move(shape), std::move(v));
}

Linear Linear::create(ParamStore& ps, const std::string& group,
                      const std::string& name, i64 in, i64 out, Rng& rng,
                      bool zero_init) {
  Linear l;
  l.w = ps.create(group, name + ".w",
                  zero_init ? Tensor::zeros({in, out})
                            : glorot_uniform({in, out}, in, out, rng));
  l.b = ps.create(group, name + ".b", Tensor::zeros({out}));
  return l;
}

Tensor Linear::apply(Tape* t, const Tensor& x) const {
  require(x.ndim() == 2, "linear: input must be [n,in]");
  return ops::add_rowvec(ops::matmul(x, w->use(t)), b->use(t));
}

GroupNormLayer GroupNormLayer::create(ParamStore& ps, const std::string& group,
                                      const std::string& name, i64 channels,
                                      i64 groups) {
  require(channels % groups == 0,
          "group norm: channels (" + std::to_string(channels) +
              ") not divisible by groups (" + std::to_string(groups) + ")");
  GroupNormLayer g;
  g.scale = ps.create(group, name + ".scale", Tensor::full({channels}, 1.0));
  g.shift = ps.create(group, name + ".shift", Tensor::zeros({channels}));
  g.groups = groups;
  return g;
}

Tensor GroupNormLayer::apply_rows(Tape* t, const Tensor& x) const {
  const Tensor xhat = ops::group_norm_rows(x, groups, kEps);
  return ops::add_rowvec(ops::mul_rowvec(xhat, scale->use(t)), shift->use(t));
}

Tensor GroupNormLayer::apply_chw(Tape* t, const Tensor& x) const {
  const i64 ch = x.dim(0), h = x.dim(1), w = x.dim(2);
  const Tensor xhat = ops::group_norm_chw(x, groups, kEps);
  const Tensor flat = ops::reshape(xhat, {ch, h * w});
  const Tensor affine = ops::add_colvec(
      ops::mul_colvec(flat, scale->use(t)), shift->use(t));
  return ops::reshape(affine, {ch, h, w});
}

Conv2dLayer Conv2dLayer::create(ParamStore& ps, const std::string& group,
                                const std::string& name, i64 cin, i64 cout,
                                i64 k, i64 stride, i64 pad, Rng& rng) {
  Conv2dLayer c;
  const i64 fan_in = cin * k * k, fan_out = cout * k * k;
  c.w = ps.create(group, name + ".w",
                  glorot_uniform({cout, cin, k, k}, fan_in, fan_out, rng));
  c.b = ps.create(group, name + ".b", Tensor::zeros({cout}));
  c.stride = stride;
  c.pad = pad;
  return c;
}

Tensor Conv2dLayer::apply(Tape* t, const Tensor& x) const {
  return ops::conv2d(x, w->use(t), b->use(t), stride, pad);
}

Tensor gcn_layer(const SparsePtr& a_tilde, const Tensor& x, const Tensor& w) {
  return ops::matmul(ops::sparse_dense_matmul(a_tilde, x), w);
}

// ---- encoder ---------------------------------------------------------------

Encoder Encoder::create(ParamStore& ps, const std::string& group,
                        const EncoderConfig& cfg, Rng& rng) {
  Encoder e;
  e.cfg = cfg;
  i64 cin = 3;
  i64 sz = cfg.image_size;
  for (size_t i = 0; i < cfg.widths.size(); ++i) {
    const i64 cout = cfg.widths[i];
    e.convs_.push_back(Conv2dLayer::create(
        ps, group, "enc.conv" + std::to_string(i), cin, cout, 3, 2, 1, rng));
    e.norms_.push_back(GroupNormLayer::create(
        ps, group, "enc.gn" + std::to_string(i), cout,
        std::min(cfg.gn_groups, cout)));
    cin = cout;
    sz = (sz + 1) / 2;
  }
  e.conv1x1_ =
      Conv2dLayer::create(ps, group, "enc.conv1x1", cin, cin, 1, 1, 0, rng);
  e.norm1x1_ = GroupNormLayer::create(ps, group, "enc.gn1x1", cin,
                                      std::min(cfg.gn_groups, cin));
  e.fc1_ = Linear::create(ps, group, "enc.fc1", cin * sz * sz, cfg.fc_hidden,
                          rng);
  e.fc2_ = Linear::create(ps, group, "enc.fc2", cfg.fc_hidden, cfg.global_dim,
                          rng);
  return e;
}

EncoderOutput Encoder::encode(Tape* t, const Tensor& image_chw) const {
  require(image_chw.ndim() == 3 && image_chw.dim(0) == 3,
          "encode: image must be [3,H,W]");
  EncoderOutput out;
  Tensor x = image_chw;
  for (size_t i = 0; i < convs_.size(); ++i) {
    x = convs_[i].apply(t, x);
    x = norms_[i].apply_chw(t, x);
    x = ops::leaky_relu(x, cfg.leaky_slope);
    out.feature_maps.push_back(x);
  }
  x = conv1x1_.apply(t, x);
  x = norm1x1_.apply_chw(t, x);
  x = ops::leaky_relu(x, cfg.leaky_slope);
  const Tensor flat = ops::reshape(x, {1, x.size()});
  Tensor h = fc1_.apply(t, flat);
  h = ops::leaky_relu(h, cfg.leaky_slope);
  h = fc2_.apply(t, h);
  out.h_g = ops::reshape(h, {cfg.global_dim});
  return out;
}

// ---- heads -----------------------------------------------------------------

Heads Heads::create(ParamStore& ps, const std::string& group, i64 global_dim,
                    i64 shape_dims, i64 joint_count, const HeadsConfig& cfg,
                    Rng& rng) {
  Heads h;
  h.cfg = cfg;
  h.joint_count = joint_count;
  const i64 g = global_dim, hid = cfg.hidden;
  h.beta1_ = Linear::create(ps, group, "head.beta1", g, hid, rng);
  h.beta2_ = Linear::create(ps, group, "head.beta2", hid, shape_dims, rng, true);
  h.theta1_ = Linear::create(ps, group, "head.theta1", g, hid, rng);
  h.theta2_ =
      Linear::create(ps, group, "head.theta2", hid, joint_count * 3, rng, true);
  h.gxy1_ = Linear::create(ps, group, "head.gxy1", g, hid, rng);
  h.gxy2_ = Linear::create(ps, group, "head.gxy2", hid, 2, rng, true);
  h.gz1_ = Linear::create(ps, group, "head.gz1", g, hid, rng);
  h.gz2_ = Linear::create(ps, group, "head.gz2", hid, 1, rng, true);
  h.f1_ = Linear::create(ps, group, "head.f1", g, hid, rng);
  h.f2_ = Linear::create(ps, group, "head.f2", hid, 1, rng, true);
  return h;
}

// offset * (x + sqrt(x^2 + 1)): smooth positive map, equals offset at x = 0.
static Tensor positive_map(const Tensor& x, double offset) {
  const Tensor root = ops::sqrt(ops::add_scalar(ops::power(x, 2.0), 1.0));
  return ops::scale(ops::add(x, root), offset);
}

ParamPrediction Heads::regress(Tape* t, const Tensor& h_g) const {
  const Tensor h = ops::reshape(h_g, {1, h_g.size()});
  const double sl = cfg.leaky_slope;
  auto mlp = [&](const Linear& a, const Linear& b) {
    return b.apply(t, ops::leaky_relu(a.apply(t, h), sl));
  };
  ParamPrediction out;
  const Tensor beta = mlp(beta1_, beta2_);
  out.beta = ops::reshape(beta, {beta.size()});
  out.theta = ops::reshape(mlp(theta1_, theta2_), {joint_count, 3});
  const Tensor gxy = mlp(gxy1_, gxy2_);
  const Tensor gz = positive_map(mlp(gz1_, gz2_), cfg.depth_offset);
  out.gamma = ops::reshape(ops::concat({gxy, gz}, 1), {3});
  out.focal =
      ops::reshape(positive_map(mlp(f1_, f2_), cfg.focal_offset), Shape{});
  return out;
}

// ---- MRGCN -----------------------------------------------------------------

BottleneckBlock BottleneckBlock::create(ParamStore& ps,
                                        const std::string& group,
                                        const std::string& name, i64 in_width,
                                        i64 width, i64 gn_groups, double leaky,
                                        Rng& rng) {
  BottleneckBlock b;
  const i64 mid = width / 2;
  require(mid >= 1, "bottleneck: width too small");
  b.fc_in = Linear::create(ps, group, name + ".fc_in", in_width, mid, rng);
  b.gn1 = GroupNormLayer::create(ps, group, name + ".gn1", mid,
                                 std::min(gn_groups, mid));
  b.gcn_w = ps.create(group, name + ".gcn_w",
                      glorot_uniform({mid, mid}, mid, mid, rng));
  b.gn2 = GroupNormLayer::create(ps, group, name + ".gn2", mid,
                                 std::min(gn_groups, mid));
  b.fc_out = Linear::create(ps, group, name + ".fc_out", mid, width, rng, true);
  b.leaky = leaky;
  b.has_proj = in_width != width;
  if (b.has_proj)
    b.proj = Linear::create(ps, group, name + ".proj", in_width, width, rng);
  return b;
}

Tensor BottleneckBlock::apply(Tape* t, const SparsePtr& a_tilde,
                              const Tensor& x) const {
  Tensor h = fc_in.apply(t, x);
  h = ops::leaky_relu(gn1.apply_rows(t, h), leaky);
  h = gcn_layer(a_tilde, h, gcn_w->use(t));
  h = ops::leaky_relu(gn2.apply_rows(t, h), leaky);
  h = fc_out.apply(t, h);
  const Tensor skip = has_proj ? proj.apply(t, x) : x;
  return ops::add(h, skip);
}

Mrgcn Mrgcn::create(ParamStore& ps, const std::string& group, i64 input_dim,
                    const MrgcnConfig& cfg, i64 levels, Rng& rng) {
  require(static_cast<i64>(cfg.widths.size()) >= levels,
          "mrgcn: need a width per hierarchy level");
  Mrgcn m;
  m.cfg = cfg;
  m.levels = levels;
  m.input_fc_ =
      Linear::create(ps, group, "mrgcn.input", input_dim, cfg.widths[0], rng);
  for (i64 l = 0; l < levels; ++l) {
    std::vector<BottleneckBlock> blocks;
    i64 in_w = l == 0 ? cfg.widths[0] : cfg.widths[l - 1];
    for (i64 bidx = 0; bidx < cfg.blocks_per_level; ++bidx) {
      blocks.push_back(BottleneckBlock::create(
          ps, group, "mrgcn.enc" + std::to_string(l) + ".b" + std::to_string(bidx),
          in_w, cfg.widths[l], cfg.gn_groups, cfg.leaky_slope, rng));
      in_w = cfg.widths[l];
    }
    m.enc_blocks_.push_back(std::move(blocks));
  }
  for (i64 l = 0; l + 1 < levels; ++l) {
    // decoder at level l merges the upsampled coarser output with the skip
    m.skip_fc_.push_back(Linear::create(
        ps, group, "mrgcn.skip" + std::to_string(l),
        cfg.widths[l] + cfg.widths[l + 1], cfg.widths[l], rng));
    std::vector<BottleneckBlock> blocks;
    for (i64 bidx = 0; bidx < cfg.blocks_per_level; ++bidx)
      blocks.push_back(BottleneckBlock::create(
          ps, group, "mrgcn.dec" + std::to_string(l) + ".b" + std::to_string(bidx),
          cfg.widths[l], cfg.widths[l], cfg.gn_groups, cfg.leaky_slope, rng));
    m.dec_blocks_.push_back(std::move(blocks));
  }
  m.head_ = Linear::create(ps, group, "mrgcn.head", cfg.widths[0], 3, rng, true);
  return m;
}

Tensor Mrgcn::deform(Tape* t, const meshkit::MeshHierarchy& h,
                     const Tensor& x0) const {
  require(static_cast<i64>(h.levels.size()) == levels,
          "mrgcn: hierarchy level count (" +
              std::to_string(h.levels.size()) + ") does not match config (" +
              std::to_string(levels) + ")");
  require(x0.dim(0) == h.levels[0].mesh.vertex_count(),
          "mrgcn: X0 rows must match the finest level");

  std::vector<Tensor> enc_out(levels);
  Tensor x = input_fc_.apply(t, x0);
  for (i64 l = 0; l < levels; ++l) {
    for (const BottleneckBlock& b : enc_blocks_[l])
      x = b.apply(t, h.levels[l].norm_adjacency, x);
    enc_out[l] = x;
    if (l + 1 < levels) x = ops::sparse_dense_matmul(h.levels[l].down, x);
  }

  Tensor y = enc_out[levels - 1];
  for (i64 l = levels - 2; l >= 0; --l) {
    const Tensor up = ops::sparse_dense_matmul(h.levels[l].up, y);
    const Tensor merged = ops::concat({enc_out[l], up}, 1);
    y = skip_fc_[l].apply(t, merged);
    for (const BottleneckBlock& b : dec_blocks_[l])
      y = b.apply(t, h.levels[l].norm_adjacency, y);
  }
  return head_.apply(t, y);
}

Tensor assemble_node_features(const Tensor& h_g, const Tensor& v_coarse,
                              const std::vector<Tensor>& feature_maps,
                              const Tensor& focal,
                              const camrender::Camera& cam) {
  const i64 c = v_coarse.dim(0);
  const Tensor p = camrender::project(v_coarse, focal, cam);
  const Tensor h_l =
      camrender::sample_features(feature_maps, p, cam.height, cam.width);
  const Tensor hg_rows = ops::broadcast_rows(h_g, c);
  return ops::concat({hg_rows, h_l, v_coarse}, 1);
}

Tensor refine(const Tensor& v_coarse, const Tensor& delta) {
  require(v_coarse.shape() == delta.shape(), "refine: shape mismatch");
  return ops::add(v_coarse, delta);
}

}  // namespace c2f::neural
