#include "c2f/ops.hpp"

#include <cmath>
#include <cstring>

#include "c2f/kernels.hpp"

namespace c2f::ops {

namespace k = c2f::kernels;

Tape* result_tape(std::initializer_list<const Tensor*> ins) {
  Tape* t = nullptr;
  for (const Tensor* p : ins) {
    if (!p->tracked()) continue;
    require(t == nullptr || t == p->tape(),
            "operands recorded on different tapes");
    t = p->tape();
  }
  return t;
}

static void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
}

// ga[i] += g[i] * b[i]
static void accum_prod(i64 n, const double* g, const double* b, double* ga) {
  for (i64 i = 0; i < n; ++i) ga[i] += g[i] * b[i];
}

// ---- arithmetic ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  const i64 n = a.size();
  std::vector<double> out(n);
  k::add(n, a.data(), b.data(), out.data());
  Tensor r = Tensor::from(a.shape(), std::move(out));
  if (Tape* t = result_tape({&a, &b})) {
    const int id = t->record(n, {a.node(), b.node()}, [n](Tape::Grads& g) {
      if (double* ga = g.in(0)) k::axpy(n, 1.0, g.out(), ga);
      if (double* gb = g.in(1)) k::axpy(n, 1.0, g.out(), gb);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  const i64 n = a.size();
  std::vector<double> out(n);
  k::sub(n, a.data(), b.data(), out.data());
  Tensor r = Tensor::from(a.shape(), std::move(out));
  if (Tape* t = result_tape({&a, &b})) {
    const int id = t->record(n, {a.node(), b.node()}, [n](Tape::Grads& g) {
      if (double* ga = g.in(0)) k::axpy(n, 1.0, g.out(), ga);
      if (double* gb = g.in(1)) k::axpy(n, -1.0, g.out(), gb);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  const i64 n = a.size();
  std::vector<double> out(n);
  k::mul(n, a.data(), b.data(), out.data());
  Tensor r = Tensor::from(a.shape(), std::move(out));
  if (Tape* t = result_tape({&a, &b})) {
    const int id =
        t->record(n, {a.node(), b.node()}, [n, a, b](Tape::Grads& g) {
          if (double* ga = g.in(0)) accum_prod(n, g.out(), b.data(), ga);
          if (double* gb = g.in(1)) accum_prod(n, g.out(), a.data(), gb);
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor add_scalar(const Tensor& a, double c) {
  const i64 n = a.size();
  std::vector<double> out(n);
  for (i64 i = 0; i < n; ++i) out[i] = a.data()[i] + c;
  Tensor r = Tensor::from(a.shape(), std::move(out));
  if (Tape* t = result_tape({&a})) {
    const int id = t->record(n, {a.node()}, [n](Tape::Grads& g) {
      if (double* ga = g.in(0)) k::axpy(n, 1.0, g.out(), ga);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor scale(const Tensor& a, double c) {
  const i64 n = a.size();
  std::vector<double> out(n);
  k::scale(n, c, a.data(), out.data());
  Tensor r = Tensor::from(a.shape(), std::move(out));
  if (Tape* t = result_tape({&a})) {
    const int id = t->record(n, {a.node()}, [n, c](Tape::Grads& g) {
      if (double* ga = g.in(0)) k::axpy(n, c, g.out(), ga);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor add_rowvec(const Tensor& X, const Tensor& v) {
  require(X.ndim() == 2 && v.ndim() == 1 && X.dim(1) == v.dim(0),
          "add_rowvec: need X[m,n], v[n]");
  const i64 m = X.dim(0), n = X.dim(1);
  std::vector<double> out(m * n);
  for (i64 i = 0; i < m; ++i)
    k::add(n, X.data() + i * n, v.data(), out.data() + i * n);
  Tensor r = Tensor::from(X.shape(), std::move(out));
  if (Tape* t = result_tape({&X, &v})) {
    const int id =
        t->record(m * n, {X.node(), v.node()}, [m, n](Tape::Grads& g) {
          if (double* gx = g.in(0)) k::axpy(m * n, 1.0, g.out(), gx);
          if (double* gv = g.in(1))
            for (i64 i = 0; i < m; ++i) k::axpy(n, 1.0, g.out() + i * n, gv);
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor mul_rowvec(const Tensor& X, const Tensor& v) {
  require(X.ndim() == 2 && v.ndim() == 1 && X.dim(1) == v.dim(0),
          "mul_rowvec: need X[m,n], v[n]");
  const i64 m = X.dim(0), n = X.dim(1);
  std::vector<double> out(m * n);
  for (i64 i = 0; i < m; ++i)
    k::mul(n, X.data() + i * n, v.data(), out.data() + i * n);
  Tensor r = Tensor::from(X.shape(), std::move(out));
  if (Tape* t = result_tape({&X, &v})) {
    const int id =
        t->record(m * n, {X.node(), v.node()}, [m, n, X, v](Tape::Grads& g) {
          if (double* gx = g.in(0))
            for (i64 i = 0; i < m; ++i)
              accum_prod(n, g.out() + i * n, v.data(), gx + i * n);
          if (double* gv = g.in(1))
            for (i64 i = 0; i < m; ++i)
              accum_prod(n, g.out() + i * n, X.data() + i * n, gv);
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor mul_colvec(const Tensor& X, const Tensor& c) {
  require(X.ndim() == 2 && c.ndim() == 1 && X.dim(0) == c.dim(0),
          "mul_colvec: need X[m,n], c[m]");
  const i64 m = X.dim(0), n = X.dim(1);
  std::vector<double> out(m * n);
  for (i64 i = 0; i < m; ++i)
    k::scale(n, c.data()[i], X.data() + i * n, out.data() + i * n);
  Tensor r = Tensor::from(X.shape(), std::move(out));
  if (Tape* t = result_tape({&X, &c})) {
    const int id =
        t->record(m * n, {X.node(), c.node()}, [m, n, X, c](Tape::Grads& g) {
          if (double* gx = g.in(0))
            for (i64 i = 0; i < m; ++i)
              k::axpy(n, c.data()[i], g.out() + i * n, gx + i * n);
          if (double* gc = g.in(1))
            for (i64 i = 0; i < m; ++i)
              gc[i] += k::dot(n, g.out() + i * n, X.data() + i * n);
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor add_colvec(const Tensor& X, const Tensor& c) {
  require(X.ndim() == 2 && c.ndim() == 1 && X.dim(0) == c.dim(0),
          "add_colvec: need X[m,n], c[m]");
  const i64 m = X.dim(0), n = X.dim(1);
  std::vector<double> out(m * n);
  for (i64 i = 0; i < m; ++i) {
    const double ci = c.data()[i];
    for (i64 j = 0; j < n; ++j) out[i * n + j] = X.at(i, j) + ci;
  }
  Tensor r = Tensor::from(X.shape(), std::move(out));
  if (Tape* t = result_tape({&X, &c})) {
    const int id =
        t->record(m * n, {X.node(), c.node()}, [m, n](Tape::Grads& g) {
          if (double* gx = g.in(0)) k::axpy(m * n, 1.0, g.out(), gx);
          if (double* gc = g.in(1))
            for (i64 i = 0; i < m; ++i) gc[i] += k::sum(n, g.out() + i * n);
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor broadcast_rows(const Tensor& v, i64 rows) {
  require(v.ndim() == 1, "broadcast_rows: need 1-d input");
  const i64 n = v.dim(0);
  std::vector<double> out(rows * n);
  for (i64 i = 0; i < rows; ++i)
    std::memcpy(out.data() + i * n, v.data(), n * sizeof(double));
  Tensor r = Tensor::from({rows, n}, std::move(out));
  if (Tape* t = result_tape({&v})) {
    const int id = t->record(rows * n, {v.node()}, [rows, n](Tape::Grads& g) {
      if (double* gv = g.in(0))
        for (i64 i = 0; i < rows; ++i) k::axpy(n, 1.0, g.out() + i * n, gv);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

// ---- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& A, const Tensor& B) {
  require(A.ndim() == 2 && B.ndim() == 2 && A.dim(1) == B.dim(0),
          "matmul: incompatible shapes " + shape_str(A.shape()) + " x " +
              shape_str(B.shape()));
  const i64 m = A.dim(0), kk = A.dim(1), n = B.dim(1);
  std::vector<double> out(m * n);
  k::gemm_nn(m, n, kk, A.data(), kk, B.data(), n, out.data(), n, false);
  Tensor r = Tensor::from({m, n}, std::move(out));
  if (Tape* t = result_tape({&A, &B})) {
    const int id =
        t->record(m * n, {A.node(), B.node()}, [m, n, kk, A, B](Tape::Grads& g) {
          // dA = g . B^T ; dB = A^T . g
          if (double* ga = g.in(0))
            k::gemm_nt(m, kk, n, g.out(), n, B.data(), n, ga, kk, true);
          if (double* gb = g.in(1))
            k::gemm_tn(kk, n, m, A.data(), kk, g.out(), n, gb, n, true);
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor transpose(const Tensor& X) {
  require(X.ndim() == 2, "transpose: need 2-d");
  const i64 m = X.dim(0), n = X.dim(1);
  std::vector<double> out(m * n);
  for (i64 i = 0; i < m; ++i)
    for (i64 j = 0; j < n; ++j) out[j * m + i] = X.at(i, j);
  Tensor r = Tensor::from({n, m}, std::move(out));
  if (Tape* t = result_tape({&X})) {
    const int id = t->record(m * n, {X.node()}, [m, n](Tape::Grads& g) {
      if (double* gx = g.in(0))
        for (i64 j = 0; j < n; ++j)
          for (i64 i = 0; i < m; ++i) gx[i * n + j] += g.out()[j * m + i];
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor trisolve_lower(const Tensor& L, const Tensor& x) {
  require(L.ndim() == 2 && L.dim(0) == L.dim(1), "trisolve: L must be square");
  require(x.ndim() == 1 && x.dim(0) == L.dim(0), "trisolve: size mismatch");
  require(!L.tracked(), "trisolve: L must be constant");
  const i64 n = L.dim(0);
  std::vector<double> y(n);
  for (i64 i = 0; i < n; ++i) {
    double s = x.data()[i];
    for (i64 j = 0; j < i; ++j) s -= L.at(i, j) * y[j];
    y[i] = s / L.at(i, i);
  }
  Tensor r = Tensor::from({n}, std::move(y));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(n, {x.node()}, [n, L](Tape::Grads& g) {
      if (double* gx = g.in(0)) {
        // solve L^T z = g
        std::vector<double> z(g.out(), g.out() + n);
        for (i64 i = n - 1; i >= 0; --i) {
          z[i] /= L.at(i, i);
          for (i64 j = 0; j < i; ++j) z[j] -= L.at(i, j) * z[i];
        }
        k::add(n, z.data(), gx, gx);
      }
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor sparse_dense_matmul(const SparsePtr& S, const Tensor& X) {
  require(X.ndim() == 2 && X.dim(0) == S->cols,
          "sparse_dense_matmul: X rows must equal sparse cols");
  const i64 d = X.dim(1);
  std::vector<double> out(S->rows * d);
  S->matmul(X.data(), d, out.data(), false);
  Tensor r = Tensor::from({S->rows, d}, std::move(out));
  if (Tape* t = result_tape({&X})) {
    const int id = t->record(S->rows * d, {X.node()}, [S, d](Tape::Grads& g) {
      if (double* gx = g.in(0)) S->matmul_t(g.out(), d, gx, true);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

// ---- shape -----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape s) {
  require(numel(s) == x.size(), "reshape: size mismatch");
  Tensor r = x.reshaped_view(s);
  if (Tape* t = result_tape({&x})) {
    const i64 n = x.size();
    const int id = t->record(n, {x.node()}, [n](Tape::Grads& g) {
      if (double* gx = g.in(0)) k::axpy(n, 1.0, g.out(), gx);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

// Normalizes 1-d/2-d tensors to (outer, axis_len, inner) around `axis`.
static void axis_spans(const Tensor& x, int axis, i64* outer, i64* len,
                       i64* inner) {
  require(axis >= 0 && axis < x.ndim(), "axis out of range");
  *outer = 1;
  *inner = 1;
  for (int i = 0; i < axis; ++i) *outer *= x.dim(i);
  *len = x.dim(axis);
  for (int i = axis + 1; i < x.ndim(); ++i) *inner *= x.dim(i);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  require(!parts.empty(), "concat: no inputs");
  const int nd = parts[0].ndim();
  require(axis >= 0 && axis < nd, "concat: axis out of range");
  Shape out_shape = parts[0].shape();
  i64 total_axis = 0;
  for (const Tensor& p : parts) {
    require(p.ndim() == nd, "concat: rank mismatch");
    for (int i = 0; i < nd; ++i)
      require(i == axis || p.dim(i) == parts[0].dim(i),
              "concat: off-axis dimension mismatch");
    total_axis += p.dim(axis);
  }
  out_shape[axis] = total_axis;

  i64 outer, len0, inner;
  axis_spans(parts[0], axis, &outer, &len0, &inner);
  std::vector<double> out(numel(out_shape));
  const i64 out_stride = total_axis * inner;
  i64 offset = 0;
  for (const Tensor& p : parts) {
    const i64 len = p.dim(axis);
    for (i64 o = 0; o < outer; ++o)
      std::memcpy(out.data() + o * out_stride + offset * inner,
                  p.data() + o * len * inner, len * inner * sizeof(double));
    offset += len;
  }
  Tensor r = Tensor::from(out_shape, std::move(out));

  std::vector<const Tensor*> ptrs;
  for (const Tensor& p : parts) ptrs.push_back(&p);
  Tape* t = nullptr;
  for (const Tensor* p : ptrs)
    if (p->tracked()) {
      require(!t || t == p->tape(), "operands recorded on different tapes");
      t = p->tape();
    }
  if (t) {
    std::vector<int> inputs;
    std::vector<i64> lens;
    for (const Tensor& p : parts) {
      inputs.push_back(p.node());
      lens.push_back(p.dim(axis));
    }
    const int id = t->record(
        numel(out_shape), std::move(inputs),
        [outer, inner, total_axis, lens](Tape::Grads& g) {
          const i64 out_stride = total_axis * inner;
          i64 offset = 0;
          for (size_t pi = 0; pi < lens.size(); ++pi) {
            const i64 len = lens[pi];
            if (double* gp = g.in(static_cast<int>(pi))) {
              for (i64 o = 0; o < outer; ++o)
                k::axpy(len * inner, 1.0,
                        g.out() + o * out_stride + offset * inner,
                        gp + o * len * inner);
            }
            offset += len;
          }
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor slice(const Tensor& x, int axis, i64 start, i64 len) {
  i64 outer, alen, inner;
  axis_spans(x, axis, &outer, &alen, &inner);
  require(start >= 0 && len >= 0 && start + len <= alen,
          "slice: range out of bounds");
  Shape out_shape = x.shape();
  out_shape[axis] = len;
  std::vector<double> out(outer * len * inner);
  for (i64 o = 0; o < outer; ++o)
    std::memcpy(out.data() + o * len * inner,
                x.data() + (o * alen + start) * inner,
                len * inner * sizeof(double));
  Tensor r = Tensor::from(out_shape, std::move(out));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(
        outer * len * inner, {x.node()},
        [outer, alen, inner, start, len](Tape::Grads& g) {
          if (double* gx = g.in(0))
            for (i64 o = 0; o < outer; ++o)
              k::axpy(len * inner, 1.0, g.out() + o * len * inner,
                      gx + (o * alen + start) * inner);
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& x) {
  const i64 n = x.size();
  Tensor r = Tensor::scalar(k::sum(n, x.data()));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(1, {x.node()}, [n](Tape::Grads& g) {
      if (double* gx = g.in(0)) {
        const double g0 = g.out()[0];
        for (i64 i = 0; i < n; ++i) gx[i] += g0;
      }
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor mean(const Tensor& x) {
  const i64 n = x.size();
  require(n > 0, "mean of empty tensor");
  Tensor r = Tensor::scalar(k::sum(n, x.data()) / static_cast<double>(n));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(1, {x.node()}, [n](Tape::Grads& g) {
      if (double* gx = g.in(0)) {
        const double g0 = g.out()[0] / static_cast<double>(n);
        for (i64 i = 0; i < n; ++i) gx[i] += g0;
      }
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor sum_rows(const Tensor& X) {
  require(X.ndim() == 2, "sum_rows: need 2-d");
  const i64 m = X.dim(0), n = X.dim(1);
  std::vector<double> out(m);
  for (i64 i = 0; i < m; ++i) out[i] = k::sum(n, X.data() + i * n);
  Tensor r = Tensor::from({m}, std::move(out));
  if (Tape* t = result_tape({&X})) {
    const int id = t->record(m, {X.node()}, [m, n](Tape::Grads& g) {
      if (double* gx = g.in(0))
        for (i64 i = 0; i < m; ++i) {
          const double gi = g.out()[i];
          for (i64 j = 0; j < n; ++j) gx[i * n + j] += gi;
        }
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor sum_cols(const Tensor& X) {
  require(X.ndim() == 2, "sum_cols: need 2-d");
  const i64 m = X.dim(0), n = X.dim(1);
  std::vector<double> out(n, 0.0);
  for (i64 i = 0; i < m; ++i) k::add(n, out.data(), X.data() + i * n, out.data());
  Tensor r = Tensor::from({n}, std::move(out));
  if (Tape* t = result_tape({&X})) {
    const int id = t->record(n, {X.node()}, [m, n](Tape::Grads& g) {
      if (double* gx = g.in(0))
        for (i64 i = 0; i < m; ++i) k::axpy(n, 1.0, g.out(), gx + i * n);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

// ---- pointwise -------------------------------------------------------------

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

Tensor leaky_relu(const Tensor& x, double slope) {
  const i64 n = x.size();
  std::vector<double> out(n);
  k::leaky_relu(n, slope, x.data(), out.data());
  Tensor r = Tensor::from(x.shape(), std::move(out));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(n, {x.node()}, [n, slope, x](Tape::Grads& g) {
      if (double* gx = g.in(0))
        k::leaky_relu_bwd(n, slope, x.data(), g.out(), gx);
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor sigmoid(const Tensor& x) {
  const i64 n = x.size();
  std::vector<double> out(n);
  for (i64 i = 0; i < n; ++i) {
    const double v = x.data()[i];
    // branch keeps exp() argument non-positive for stability at both tails
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
  }
  Tensor r = Tensor::from(x.shape(), std::move(out));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(n, {x.node()}, [n, r](Tape::Grads& g) {
      if (double* gx = g.in(0))
        for (i64 i = 0; i < n; ++i) {
          const double s = r.data()[i];
          gx[i] += g.out()[i] * s * (1.0 - s);
        }
    });
    return r.tracked_as(t, id);
  }
  return r;
}

Tensor exp(const Tensor& x) {
  const i64 n = x.size();
  std::vector<double> out(n);
  for (i64 i = 0; i < n; ++i) out[i] = std::exp(x.data()[i]);
  Tensor r = Tensor::from(x.shape(), std::move(out));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(n, {x.node()}, [n, r](Tape::Grads& g) {
      if (double* gx = g.in(0)) accum_prod(n, g.out(), r.data(), gx);
    });
    return r.tracked_as(t, id);
  }
  return r;
}

Tensor log(const Tensor& x) {
  const i64 n = x.size();
  std::vector<double> out(n);
  for (i64 i = 0; i < n; ++i) out[i] = std::log(x.data()[i]);
  Tensor r = Tensor::from(x.shape(), std::move(out));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(n, {x.node()}, [n, x](Tape::Grads& g) {
      if (double* gx = g.in(0))
        for (i64 i = 0; i < n; ++i) gx[i] += g.out()[i] / x.data()[i];
    });
    return r.tracked_as(t, id);
  }
  return r;
}

Tensor sqrt(const Tensor& x) {
  const i64 n = x.size();
  std::vector<double> out(n);
  for (i64 i = 0; i < n; ++i) out[i] = std::sqrt(x.data()[i]);
  Tensor r = Tensor::from(x.shape(), std::move(out));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(n, {x.node()}, [n, r](Tape::Grads& g) {
      if (double* gx = g.in(0))
        for (i64 i = 0; i < n; ++i) gx[i] += g.out()[i] * 0.5 / r.data()[i];
    });
    return r.tracked_as(t, id);
  }
  return r;
}

Tensor power(const Tensor& x, double p) {
  const i64 n = x.size();
  std::vector<double> out(n);
  if (p == 2.0)
    for (i64 i = 0; i < n; ++i) out[i] = x.data()[i] * x.data()[i];
  else
    for (i64 i = 0; i < n; ++i) out[i] = std::pow(x.data()[i], p);
  Tensor r = Tensor::from(x.shape(), std::move(out));
  if (Tape* t = result_tape({&x})) {
    const int id = t->record(n, {x.node()}, [n, p, x](Tape::Grads& g) {
      if (double* gx = g.in(0)) {
        if (p == 2.0)
          for (i64 i = 0; i < n; ++i) gx[i] += g.out()[i] * 2.0 * x.data()[i];
        else
          for (i64 i = 0; i < n; ++i)
            gx[i] += g.out()[i] * p * std::pow(x.data()[i], p - 1.0);
      }
    });
    return r.tracked_as(t, id);
  }
  return r;
}

// ---- indexing --------------------------------------------------------------

Tensor gather(const Tensor& X, const std::vector<i64>& rows) {
  require(X.ndim() == 2, "gather: need 2-d");
  const i64 m = X.dim(0), n = X.dim(1);
  const i64 kcount = static_cast<i64>(rows.size());
  std::vector<double> out(kcount * n);
  for (i64 r = 0; r < kcount; ++r) {
    require(rows[r] >= 0 && rows[r] < m, "gather: row index out of range");
    std::memcpy(out.data() + r * n, X.data() + rows[r] * n,
                n * sizeof(double));
  }
  Tensor res = Tensor::from({kcount, n}, std::move(out));
  if (Tape* t = result_tape({&X})) {
    const int id = t->record(kcount * n, {X.node()}, [n, rows](Tape::Grads& g) {
      if (double* gx = g.in(0))
        for (size_t r = 0; r < rows.size(); ++r)
          k::axpy(n, 1.0, g.out() + static_cast<i64>(r) * n, gx + rows[r] * n);
    });
    res = res.tracked_as(t, id);
  }
  return res;
}

Tensor scatter_add(const Tensor& X, const std::vector<i64>& rows,
                   i64 out_rows) {
  require(X.ndim() == 2, "scatter_add: need 2-d");
  require(static_cast<i64>(rows.size()) == X.dim(0),
          "scatter_add: one target row per input row");
  const i64 n = X.dim(1);
  std::vector<double> out(out_rows * n, 0.0);
  for (size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < out_rows,
            "scatter_add: row index out of range");
    k::axpy(n, 1.0, X.data() + static_cast<i64>(r) * n,
            out.data() + rows[r] * n);
  }
  Tensor res = Tensor::from({out_rows, n}, std::move(out));
  if (Tape* t = result_tape({&X})) {
    const int id =
        t->record(out_rows * n, {X.node()}, [n, rows](Tape::Grads& g) {
          if (double* gx = g.in(0))
            for (size_t r = 0; r < rows.size(); ++r)
              k::axpy(n, 1.0, g.out() + rows[r] * n,
                      gx + static_cast<i64>(r) * n);
        });
    res = res.tracked_as(t, id);
  }
  return res;
}

// ---- conv2d ----------------------------------------------------------------

static void im2col(const double* X, i64 cin, i64 h, i64 w, i64 kh, i64 kw,
                   i64 stride, i64 pad, i64 oh, i64 ow, double* col) {
  // col[(c*kh+ki)*kw+kj][y*ow+x]
  for (i64 c = 0; c < cin; ++c)
    for (i64 ki = 0; ki < kh; ++ki)
      for (i64 kj = 0; kj < kw; ++kj) {
        double* dst = col + ((c * kh + ki) * kw + kj) * (oh * ow);
        for (i64 y = 0; y < oh; ++y) {
          const i64 sy = y * stride + ki - pad;
          if (sy < 0 || sy >= h) {
            std::memset(dst + y * ow, 0, ow * sizeof(double));
            continue;
          }
          for (i64 x = 0; x < ow; ++x) {
            const i64 sx = x * stride + kj - pad;
            dst[y * ow + x] = (sx < 0 || sx >= w) ? 0.0 : X[(c * h + sy) * w + sx];
          }
        }
      }
}

static void col2im_accum(const double* col, i64 cin, i64 h, i64 w, i64 kh,
                         i64 kw, i64 stride, i64 pad, i64 oh, i64 ow,
                         double* gX) {
  for (i64 c = 0; c < cin; ++c)
    for (i64 ki = 0; ki < kh; ++ki)
      for (i64 kj = 0; kj < kw; ++kj) {
        const double* src = col + ((c * kh + ki) * kw + kj) * (oh * ow);
        for (i64 y = 0; y < oh; ++y) {
          const i64 sy = y * stride + ki - pad;
          if (sy < 0 || sy >= h) continue;
          for (i64 x = 0; x < ow; ++x) {
            const i64 sx = x * stride + kj - pad;
            if (sx < 0 || sx >= w) continue;
            gX[(c * h + sy) * w + sx] += src[y * ow + x];
          }
        }
      }
}

Tensor conv2d(const Tensor& X, const Tensor& W, const Tensor& bias, i64 stride,
              i64 pad) {
  require(X.ndim() == 3, "conv2d: X must be [cin,h,w]");
  require(W.ndim() == 4, "conv2d: W must be [cout,cin,kh,kw]");
  require(W.dim(1) == X.dim(0), "conv2d: channel mismatch");
  require(bias.ndim() == 1 && bias.dim(0) == W.dim(0),
          "conv2d: bias size mismatch");
  require(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const i64 cin = X.dim(0), h = X.dim(1), w = X.dim(2);
  const i64 cout = W.dim(0), kh = W.dim(2), kw = W.dim(3);
  const i64 oh = (h + 2 * pad - kh) / stride + 1;
  const i64 ow = (w + 2 * pad - kw) / stride + 1;
  require(oh >= 1 && ow >= 1, "conv2d: kernel larger than padded input");

  const i64 patch = cin * kh * kw;
  std::vector<double> colv(patch * oh * ow);
  im2col(X.data(), cin, h, w, kh, kw, stride, pad, oh, ow, colv.data());
  Tensor col = Tensor::from({patch, oh * ow}, std::move(colv));

  std::vector<double> out(cout * oh * ow);
  k::gemm_nn(cout, oh * ow, patch, W.data(), patch, col.data(), oh * ow,
             out.data(), oh * ow, false);
  for (i64 c = 0; c < cout; ++c) {
    const double b = bias.data()[c];
    for (i64 i = 0; i < oh * ow; ++i) out[c * oh * ow + i] += b;
  }
  Tensor r = Tensor::from({cout, oh, ow}, std::move(out));

  if (Tape* t = result_tape({&X, &W, &bias})) {
    const int id = t->record(
        cout * oh * ow, {X.node(), W.node(), bias.node()},
        [=](Tape::Grads& g) {
          const i64 spatial = oh * ow;
          if (double* gw = g.in(1))
            k::gemm_nt(cout, patch, spatial, g.out(), spatial, col.data(),
                       spatial, gw, patch, true);
          if (double* gb = g.in(2))
            for (i64 c = 0; c < cout; ++c)
              gb[c] += k::sum(spatial, g.out() + c * spatial);
          if (double* gx = g.in(0)) {
            std::vector<double> gcol(patch * spatial);
            k::gemm_tn(patch, spatial, cout, W.data(), patch, g.out(), spatial,
                       gcol.data(), spatial, false);
            col2im_accum(gcol.data(), cin, h, w, kh, kw, stride, pad, oh, ow,
                         gx);
          }
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

// ---- group normalization ----------------------------------------------------

// Shared backward: gx = invstd * (gy - mean(gy) - xhat * mean(gy * xhat))
// per group, where means run over that group's elements.

Tensor group_norm_rows(const Tensor& X, i64 groups, double eps) {
  require(X.ndim() == 2, "group_norm_rows: need [n, ch]");
  const i64 n = X.dim(0), ch = X.dim(1);
  require(groups >= 1 && ch % groups == 0,
          "group_norm_rows: channels (" + std::to_string(ch) +
              ") not divisible by groups (" + std::to_string(groups) + ")");
  const i64 cpg = ch / groups;
  const i64 cnt = n * cpg;

  std::vector<double> xhat(n * ch);
  std::vector<double> invstd(groups);
  for (i64 g = 0; g < groups; ++g) {
    double m = 0.0;
    for (i64 i = 0; i < n; ++i)
      for (i64 c = g * cpg; c < (g + 1) * cpg; ++c) m += X.at(i, c);
    m /= static_cast<double>(cnt);
    double v = 0.0;
    for (i64 i = 0; i < n; ++i)
      for (i64 c = g * cpg; c < (g + 1) * cpg; ++c) {
        const double d = X.at(i, c) - m;
        v += d * d;
      }
    v /= static_cast<double>(cnt);
    const double is = 1.0 / std::sqrt(v + eps);
    invstd[g] = is;
    for (i64 i = 0; i < n; ++i)
      for (i64 c = g * cpg; c < (g + 1) * cpg; ++c)
        xhat[i * ch + c] = (X.at(i, c) - m) * is;
  }
  Tensor r = Tensor::from(X.shape(), std::move(xhat));

  if (Tape* t = result_tape({&X})) {
    const int id = t->record(
        n * ch, {X.node()}, [n, ch, cpg, groups, cnt, r, invstd](Tape::Grads& g) {
          if (double* gx = g.in(0)) {
            for (i64 grp = 0; grp < groups; ++grp) {
              double mg = 0.0, mgx = 0.0;
              for (i64 i = 0; i < n; ++i)
                for (i64 c = grp * cpg; c < (grp + 1) * cpg; ++c) {
                  const double gy = g.out()[i * ch + c];
                  mg += gy;
                  mgx += gy * r.data()[i * ch + c];
                }
              mg /= static_cast<double>(cnt);
              mgx /= static_cast<double>(cnt);
              for (i64 i = 0; i < n; ++i)
                for (i64 c = grp * cpg; c < (grp + 1) * cpg; ++c) {
                  const i64 idx = i * ch + c;
                  gx[idx] += invstd[grp] *
                             (g.out()[idx] - mg - r.data()[idx] * mgx);
                }
            }
          }
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor group_norm_chw(const Tensor& X, i64 groups, double eps) {
  require(X.ndim() == 3, "group_norm_chw: need [ch,h,w]");
  const i64 ch = X.dim(0), spatial = X.dim(1) * X.dim(2);
  require(groups >= 1 && ch % groups == 0,
          "group_norm_chw: channels (" + std::to_string(ch) +
              ") not divisible by groups (" + std::to_string(groups) + ")");
  const i64 cpg = ch / groups;
  const i64 cnt = cpg * spatial;  // contiguous block per group

  std::vector<double> xhat(ch * spatial);
  std::vector<double> invstd(groups);
  for (i64 g = 0; g < groups; ++g) {
    const double* base = X.data() + g * cnt;
    const double m = k::sum(cnt, base) / static_cast<double>(cnt);
    double v = 0.0;
    for (i64 i = 0; i < cnt; ++i) {
      const double d = base[i] - m;
      v += d * d;
    }
    v /= static_cast<double>(cnt);
    const double is = 1.0 / std::sqrt(v + eps);
    invstd[g] = is;
    double* dst = xhat.data() + g * cnt;
    for (i64 i = 0; i < cnt; ++i) dst[i] = (base[i] - m) * is;
  }
  Tensor r = Tensor::from(X.shape(), std::move(xhat));

  if (Tape* t = result_tape({&X})) {
    const int id = t->record(
        ch * spatial, {X.node()}, [groups, cnt, r, invstd](Tape::Grads& g) {
          if (double* gx = g.in(0)) {
            for (i64 grp = 0; grp < groups; ++grp) {
              const double* gy = g.out() + grp * cnt;
              const double* xh = r.data() + grp * cnt;
              double mg = 0.0, mgx = 0.0;
              for (i64 i = 0; i < cnt; ++i) {
                mg += gy[i];
                mgx += gy[i] * xh[i];
              }
              mg /= static_cast<double>(cnt);
              mgx /= static_cast<double>(cnt);
              double* dst = gx + grp * cnt;
              for (i64 i = 0; i < cnt; ++i)
                dst[i] += invstd[grp] * (gy[i] - mg - xh[i] * mgx);
            }
          }
        });
    r = r.tracked_as(t, id);
  }
  return r;
}

void group_norm_stats(const Tensor& X, i64 groups, std::vector<double>* mean,
                      std::vector<double>* var) {
  require(X.ndim() == 2, "group_norm_stats: need [n, ch]");
  const i64 n = X.dim(0), ch = X.dim(1);
  require(ch % groups == 0, "group_norm_stats: indivisible channels");
  const i64 cpg = ch / groups;
  mean->assign(groups, 0.0);
  var->assign(groups, 0.0);
  for (i64 g = 0; g < groups; ++g) {
    double m = 0.0;
    for (i64 i = 0; i < n; ++i)
      for (i64 c = g * cpg; c < (g + 1) * cpg; ++c) m += X.at(i, c);
    m /= static_cast<double>(n * cpg);
    double v = 0.0;
    for (i64 i = 0; i < n; ++i)
      for (i64 c = g * cpg; c < (g + 1) * cpg; ++c) {
        const double d = X.at(i, c) - m;
        v += d * d;
      }
    (*mean)[g] = m;
    (*var)[g] = v / static_cast<double>(n * cpg);
  }
}

}  // namespace c2f::ops
