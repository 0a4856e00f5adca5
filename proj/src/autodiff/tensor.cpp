#include "c2f/tensor.hpp"

#include <atomic>

namespace c2f {

i64 numel(const Shape& s) {
  i64 n = 1;
  for (i64 d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i)
    out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

Tensor Tensor::zeros(Shape s) {
  return from(std::move(s), std::vector<double>());
}

Tensor Tensor::full(Shape s, double v) {
  const i64 n = numel(s);
  Tensor t;
  t.shape_ = std::move(s);
  t.data_ = std::make_shared<const std::vector<double>>(n, v);
  return t;
}

Tensor Tensor::from(Shape s, std::vector<double> vals) {
  const i64 n = numel(s);
  if (vals.empty()) vals.resize(n, 0.0);
  require(static_cast<i64>(vals.size()) == n,
          "Tensor::from: " + std::to_string(vals.size()) +
              " values for shape " + shape_str(s));
  Tensor t;
  t.shape_ = std::move(s);
  t.data_ = std::make_shared<const std::vector<double>>(std::move(vals));
  return t;
}

double Tensor::item() const {
  require(size() == 1, "item() requires a scalar, got " + shape_str(shape_));
  return (*data_)[0];
}

Tensor Tensor::tracked_as(Tape* t, int node) const {
  Tensor out = *this;
  out.tape_ = t;
  out.node_ = node;
  return out;
}

Tensor Tensor::reshaped_view(Shape s) const {
  require(numel(s) == size(), "reshape size mismatch: " + shape_str(shape_) +
                                  " -> " + shape_str(s));
  Tensor out = *this;
  out.shape_ = std::move(s);
  out.tape_ = nullptr;
  out.node_ = -1;
  return out;
}

Tensor Tensor::detached() const {
  Tensor out = *this;
  out.tape_ = nullptr;
  out.node_ = -1;
  return out;
}

static std::atomic<u64> g_tape_counter{1};

Tape::Tape() : id_(g_tape_counter.fetch_add(1)) {}

int Tape::leaf(i64 size) {
  nodes_.push_back(Node{size, {}, {}});
  grads_.emplace_back();
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::record(i64 out_size, std::vector<int> inputs, Pull pull) {
  nodes_.push_back(Node{out_size, std::move(inputs), std::move(pull)});
  grads_.emplace_back();
  return static_cast<int>(nodes_.size()) - 1;
}

double* Tape::Grads::in(int i) {
  const int id = (*inputs_)[static_cast<size_t>(i)];
  if (id < 0) return nullptr;
  auto& g = tape_->grads_[static_cast<size_t>(id)];
  if (g.empty()) g.assign(static_cast<size_t>(tape_->nodes_[id].size), 0.0);
  return g.data();
}

void Tape::backward(const Tensor& loss) {
  require(loss.tracked() && loss.tape() == this,
          "backward: loss is not on this tape");
  require(loss.size() == 1, "backward: loss must be scalar");
  const int root = loss.node();
  grads_[root].assign(1, 1.0);
  for (int i = root; i >= 0; --i) {
    if (grads_[i].empty()) continue;  // not on any path to the loss
    const Node& n = nodes_[i];
    if (!n.pull) continue;  // leaf
    Grads ctx;
    ctx.tape_ = this;
    ctx.inputs_ = &n.inputs;
    ctx.out_ = grads_[i].data();
    ctx.out_size_ = n.size;
    n.pull(ctx);
  }
}

bool Tape::has_grad(int node) const {
  return node >= 0 && node < static_cast<int>(grads_.size()) &&
         !grads_[node].empty();
}

const std::vector<double>& Tape::grad(int node) const {
  require(has_grad(node), "no gradient recorded for node " +
                              std::to_string(node));
  return grads_[node];
}

std::vector<double> Tape::grad_of(const Tensor& t) const {
  if (!t.tracked() || t.tape() != this || !has_grad(t.node()))
    return std::vector<double>(static_cast<size_t>(t.size()), 0.0);
  return grads_[t.node()];
}

Tensor Param::use(Tape* t) const {
  if (!t) return value;
  if (tape_id_ != t->id()) {
    node_ = t->leaf(value.size());
    tape_id_ = t->id();
  }
  return value.tracked_as(t, node_);
}

}  // namespace c2f
