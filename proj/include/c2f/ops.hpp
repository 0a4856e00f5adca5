#pragma once
#include <initializer_list>
#include <memory>
#include <vector>

#include "c2f/sparse.hpp"
#include "c2f/tensor.hpp"

// Differentiable op set over Tensor. Every op computes its forward value
// eagerly and, when any operand is tracked, records a pullback on that tape.
// Shape mismatches throw at the call site, never inside backward.
namespace c2f::ops {

// Tape shared by the tracked operands (nullptr when none are tracked);
// throws if operands live on different tapes.
Tape* result_tape(std::initializer_list<const Tensor*> ins);

// ---- arithmetic ------------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);
// X[m,n] + v[n] per row / X[m,n] * v[n] per row
Tensor add_rowvec(const Tensor& X, const Tensor& v);
Tensor mul_rowvec(const Tensor& X, const Tensor& v);
// X[m,n] * c[m] per column / X[m,n] + c[m] per column
Tensor mul_colvec(const Tensor& X, const Tensor& c);
Tensor add_colvec(const Tensor& X, const Tensor& c);
Tensor broadcast_rows(const Tensor& v, i64 rows);  // v[n] -> [rows,n]

// ---- linear algebra --------------------------------------------------------
Tensor matmul(const Tensor& A, const Tensor& B);  // [m,k]x[k,n]
Tensor transpose(const Tensor& X);                // 2-d
// y = L^{-1} x for constant lower-triangular L (prior Cholesky factors).
Tensor trisolve_lower(const Tensor& L, const Tensor& x);
Tensor sparse_dense_matmul(const SparsePtr& S, const Tensor& X);

// ---- shape -----------------------------------------------------------------
Tensor reshape(const Tensor& x, Shape s);
Tensor concat(const std::vector<Tensor>& parts, int axis);  // 1-d or 2-d
Tensor slice(const Tensor& x, int axis, i64 start, i64 len);

// ---- reductions ------------------------------------------------------------
Tensor sum(const Tensor& x);        // scalar
Tensor mean(const Tensor& x);       // scalar
Tensor sum_rows(const Tensor& X);   // [m,n] -> [m]
Tensor sum_cols(const Tensor& X);   // [m,n] -> [n]

// ---- pointwise -------------------------------------------------------------
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor power(const Tensor& x, double p);

// ---- indexing --------------------------------------------------------------
Tensor gather(const Tensor& X, const std::vector<i64>& rows);
// out[out_rows, n]; out[rows[r], :] += X[r, :]
Tensor scatter_add(const Tensor& X, const std::vector<i64>& rows, i64 out_rows);

// ---- structured ------------------------------------------------------------
// X[cin,h,w], W[cout,cin,kh,kw], bias[cout]; zero padding, floor output size.
Tensor conv2d(const Tensor& X, const Tensor& W, const Tensor& bias, i64 stride,
              i64 pad);

// Group normalization (epsilon inside the variance sqrt), normalization only;
// affine scale/shift is composed by the caller so its gradients come from the
// generic ops. `rows` layout: X[n, ch], statistics over n x (ch/groups).
// `chw` layout: X[ch, h, w], statistics over (ch/groups) x h x w.
Tensor group_norm_rows(const Tensor& X, i64 groups, double eps);
Tensor group_norm_chw(const Tensor& X, i64 groups, double eps);

// Plain two-pass per-group statistics of the `rows` layout (test oracle
// support and inspection; not differentiable).
void group_norm_stats(const Tensor& X, i64 groups, std::vector<double>* mean,
                      std::vector<double>* var);

}  // namespace c2f::ops
