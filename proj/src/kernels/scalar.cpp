#include <cstring>

#include "detail.hpp"

// Reference kernels. Plain loops in a fixed order; the AVX2 variants are
// checked against these (exactly for elementwise ops, to tolerance for
// reductions and GEMM, which reassociate).
namespace c2f::kernels::scalar_impl {

void add(i64 n, const double* a, const double* b, double* out) {
  for (i64 i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(i64 n, const double* a, const double* b, double* out) {
  for (i64 i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(i64 n, const double* a, const double* b, double* out) {
  for (i64 i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(i64 n, double alpha, const double* a, double* out) {
  for (i64 i = 0; i < n; ++i) out[i] = alpha * a[i];
}

void axpy(i64 n, double alpha, const double* x, double* y) {
  for (i64 i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void leaky_relu(i64 n, double slope, const double* x, double* out) {
  for (i64 i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_bwd(i64 n, double slope, const double* x, const double* g,
                    double* gx) {
  for (i64 i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

double sum(i64 n, const double* a) {
  double s = 0.0;
  for (i64 i = 0; i < n; ++i) s += a[i];
  return s;
}

double dot(i64 n, const double* a, const double* b) {
  double s = 0.0;
  for (i64 i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemm_nn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate) {
  for (i64 i = 0; i < m; ++i) {
    double* c = C + i * ldc;
    if (!accumulate) std::memset(c, 0, sizeof(double) * n);
    const double* a = A + i * lda;
    for (i64 p = 0; p < k; ++p) {
      const double av = a[p];
      const double* b = B + p * ldb;
      for (i64 j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

void gemm_nt(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate) {
  for (i64 i = 0; i < m; ++i) {
    const double* a = A + i * lda;
    double* c = C + i * ldc;
    for (i64 j = 0; j < n; ++j) {
      const double* b = B + j * ldb;
      double s = 0.0;
      for (i64 p = 0; p < k; ++p) s += a[p] * b[p];
      c[j] = accumulate ? c[j] + s : s;
    }
  }
}

void gemm_tn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate) {
  if (!accumulate)
    for (i64 i = 0; i < m; ++i) std::memset(C + i * ldc, 0, sizeof(double) * n);
  for (i64 p = 0; p < k; ++p) {
    const double* a = A + p * lda;
    const double* b = B + p * ldb;
    for (i64 i = 0; i < m; ++i) {
      const double av = a[i];
      double* c = C + i * ldc;
      for (i64 j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

void csr_dense(i64 rows, const i64* rowptr, const i64* col, const double* val,
               const double* X, i64 d, double* out, bool accumulate) {
  for (i64 r = 0; r < rows; ++r) {
    double* o = out + r * d;
    if (!accumulate) std::memset(o, 0, sizeof(double) * d);
    for (i64 p = rowptr[r]; p < rowptr[r + 1]; ++p) {
      const double v = val[p];
      const double* x = X + col[p] * d;
      for (i64 j = 0; j < d; ++j) o[j] += v * x[j];
    }
  }
}

}  // namespace c2f::kernels::scalar_impl
