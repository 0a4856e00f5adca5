#pragma once
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "c2f/common.hpp"

namespace c2f {

using Shape = std::vector<i64>;

i64 numel(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

// Dense f64 array with immutable shared storage. A tensor is either plain
// data or additionally tracked on a tape (node >= 0); ops propagate tracking.
// No operation ever writes through an existing tensor's buffer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double v);
  static Tensor from(Shape s, std::vector<double> vals);
  static Tensor scalar(double v) { return from({}, {v}); }

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  i64 dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  i64 size() const { return data_ ? static_cast<i64>(data_->size()) : 0; }

  const double* data() const { return data_->data(); }
  const std::vector<double>& vec() const { return *data_; }
  double item() const;
  double at(i64 i) const { return (*data_)[i]; }
  double at(i64 r, i64 c) const { return (*data_)[r * shape_[1] + c]; }

  Tape* tape() const { return tape_; }
  int node() const { return node_; }
  bool tracked() const { return tape_ != nullptr; }

  // Same storage, attached to a tape node.
  Tensor tracked_as(Tape* t, int node) const;
  // Same storage with a different shape (sizes must agree); stays untracked.
  Tensor reshaped_view(Shape s) const;
  Tensor detached() const;

 private:
  std::shared_ptr<const std::vector<double>> data_;
  Shape shape_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode tape. Nodes are created in evaluation order, which is a
// topological order by construction; backward walks them once in reverse.
// One tape per training step, single-threaded.
class Tape {
 public:
  // Pullback context: read the output gradient, accumulate into inputs.
  class Grads {
   public:
    const double* out() const { return out_; }
    i64 out_size() const { return out_size_; }
    // Accumulation buffer for input slot i, or nullptr when that input is
    // not tracked (constants never receive gradients).
    double* in(int i);

   private:
    friend class Tape;
    Tape* tape_ = nullptr;
    const std::vector<int>* inputs_ = nullptr;
    const double* out_ = nullptr;
    i64 out_size_ = 0;
  };

  using Pull = std::function<void(Grads&)>;

  Tape();

  // Leaf (parameter/input) node; receives gradients, has no pullback.
  int leaf(i64 size);
  // Interior node. `inputs` may contain -1 for untracked arguments, keeping
  // pullback slot numbering aligned with the op's argument list.
  int record(i64 out_size, std::vector<int> inputs, Pull pull);

  // Seeds d(loss)/d(loss) = 1 and accumulates into every reachable node.
  // The loss must be scalar and live on this tape.
  void backward(const Tensor& loss);

  bool has_grad(int node) const;
  // Gradient buffer for a node (throws if the node never received one).
  const std::vector<double>& grad(int node) const;
  // Gradient for a tensor; zeros when the tensor is untracked or unreached.
  std::vector<double> grad_of(const Tensor& t) const;

  i64 node_count() const { return static_cast<i64>(nodes_.size()); }
  u64 id() const { return id_; }
  i64 node_size(int node) const { return nodes_[node].size; }

 private:
  struct Node {
    i64 size;
    std::vector<int> inputs;
    Pull pull;  // empty for leaves
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  u64 id_;
};

// Learnable parameter: named storage plus a per-tape leaf cache so a forward
// pass can refer to the same parameter many times without duplicating nodes.
struct Param {
  std::string name;
  Tensor value;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}

  Tensor use(Tape* t) const;
  i64 size() const { return value.size(); }

 private:
  mutable u64 tape_id_ = 0;
  mutable int node_ = -1;
};

}  // namespace c2f
