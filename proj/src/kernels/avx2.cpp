#include <cstring>

#include "detail.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

#define C2F_AVX2 __attribute__((target("avx2,fma")))

namespace c2f::kernels::avx2_impl {

C2F_AVX2 void add(i64 n, const double* a, const double* b, double* out) {
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

C2F_AVX2 void sub(i64 n, const double* a, const double* b, double* out) {
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

C2F_AVX2 void mul(i64 n, const double* a, const double* b, double* out) {
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

C2F_AVX2 void scale(i64 n, double alpha, const double* a, double* out) {
  const __m256d va = _mm256_set1_pd(alpha);
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] = alpha * a[i];
}

C2F_AVX2 void axpy(i64 n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

C2F_AVX2 void leaky_relu(i64 n, double slope, const double* x, double* out) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d neg = _mm256_mul_pd(vs, v);
    const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(neg, v, mask));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

C2F_AVX2 void leaky_relu_bwd(i64 n, double slope, const double* x,
                             const double* g, double* gx) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d neg = _mm256_mul_pd(vs, gv);
    const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
    const __m256d d = _mm256_blendv_pd(neg, gv, mask);
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), d));
  }
  for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

C2F_AVX2 static inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

C2F_AVX2 double sum(i64 n, const double* a) {
  __m256d acc = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

C2F_AVX2 double dot(i64 n, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// 4x8 register tile; rows beyond multiples of 4 and columns beyond multiples
// of 8 fall through to narrower code paths.
C2F_AVX2 void gemm_nn(i64 m, i64 n, i64 k, const double* A, i64 lda,
                      const double* B, i64 ldb, double* C, i64 ldc,
                      bool accumulate) {
  if (!accumulate)
    for (i64 i = 0; i < m; ++i) std::memset(C + i * ldc, 0, sizeof(double) * n);

  i64 i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = A + (i + 0) * lda;
    const double* a1 = A + (i + 1) * lda;
    const double* a2 = A + (i + 2) * lda;
    const double* a3 = A + (i + 3) * lda;
    i64 j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c00 = _mm256_loadu_pd(C + (i + 0) * ldc + j);
      __m256d c01 = _mm256_loadu_pd(C + (i + 0) * ldc + j + 4);
      __m256d c10 = _mm256_loadu_pd(C + (i + 1) * ldc + j);
      __m256d c11 = _mm256_loadu_pd(C + (i + 1) * ldc + j + 4);
      __m256d c20 = _mm256_loadu_pd(C + (i + 2) * ldc + j);
      __m256d c21 = _mm256_loadu_pd(C + (i + 2) * ldc + j + 4);
      __m256d c30 = _mm256_loadu_pd(C + (i + 3) * ldc + j);
      __m256d c31 = _mm256_loadu_pd(C + (i + 3) * ldc + j + 4);
      for (i64 p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(B + p * ldb + j);
        const __m256d b1 = _mm256_loadu_pd(B + p * ldb + j + 4);
        const __m256d v0 = _mm256_set1_pd(a0[p]);
        const __m256d v1 = _mm256_set1_pd(a1[p]);
        const __m256d v2 = _mm256_set1_pd(a2[p]);
        const __m256d v3 = _mm256_set1_pd(a3[p]);
        c00 = _mm256_fmadd_pd(v0, b0, c00);
        c01 = _mm256_fmadd_pd(v0, b1, c01);
        c10 = _mm256_fmadd_pd(v1, b0, c10);
        c11 = _mm256_fmadd_pd(v1, b1, c11);
        c20 = _mm256_fmadd_pd(v2, b0, c20);
        c21 = _mm256_fmadd_pd(v2, b1, c21);
        c30 = _mm256_fmadd_pd(v3, b0, c30);
        c31 = _mm256_fmadd_pd(v3, b1, c31);
      }
      _mm256_storeu_pd(C + (i + 0) * ldc + j, c00);
      _mm256_storeu_pd(C + (i + 0) * ldc + j + 4, c01);
      _mm256_storeu_pd(C + (i + 1) * ldc + j, c10);
      _mm256_storeu_pd(C + (i + 1) * ldc + j + 4, c11);
      _mm256_storeu_pd(C + (i + 2) * ldc + j, c20);
      _mm256_storeu_pd(C + (i + 2) * ldc + j + 4, c21);
      _mm256_storeu_pd(C + (i + 3) * ldc + j, c30);
      _mm256_storeu_pd(C + (i + 3) * ldc + j + 4, c31);
    }
    for (; j < n; ++j) {
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      for (i64 p = 0; p < k; ++p) {
        const double b = B[p * ldb + j];
        s0 += a0[p] * b;
        s1 += a1[p] * b;
        s2 += a2[p] * b;
        s3 += a3[p] * b;
      }
      C[(i + 0) * ldc + j] += s0;
      C[(i + 1) * ldc + j] += s1;
      C[(i + 2) * ldc + j] += s2;
      C[(i + 3) * ldc + j] += s3;
    }
  }
  for (; i < m; ++i) {
    const double* a = A + i * lda;
    double* c = C + i * ldc;
    for (i64 p = 0; p < k; ++p) {
      const __m256d v = _mm256_set1_pd(a[p]);
      const double* b = B + p * ldb;
      i64 j = 0;
      for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(c + j, _mm256_fmadd_pd(v, _mm256_loadu_pd(b + j),
                                                _mm256_loadu_pd(c + j)));
      for (; j < n; ++j) c[j] += a[p] * b[j];
    }
  }
}

C2F_AVX2 void gemm_nt(i64 m, i64 n, i64 k, const double* A, i64 lda,
                      const double* B, i64 ldb, double* C, i64 ldc,
                      bool accumulate) {
  for (i64 i = 0; i < m; ++i) {
    const double* a = A + i * lda;
    double* c = C + i * ldc;
    for (i64 j = 0; j < n; ++j) {
      const double* b = B + j * ldb;
      __m256d acc = _mm256_setzero_pd();
      i64 p = 0;
      for (; p + 4 <= k; p += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p),
                              acc);
      double s = hsum(acc);
      for (; p < k; ++p) s += a[p] * b[p];
      c[j] = accumulate ? c[j] + s : s;
    }
  }
}

C2F_AVX2 void gemm_tn(i64 m, i64 n, i64 k, const double* A, i64 lda,
                      const double* B, i64 ldb, double* C, i64 ldc,
                      bool accumulate) {
  if (!accumulate)
    for (i64 i = 0; i < m; ++i) std::memset(C + i * ldc, 0, sizeof(double) * n);
  for (i64 p = 0; p < k; ++p) {
    const double* a = A + p * lda;
    const double* b = B + p * ldb;
    for (i64 i = 0; i < m; ++i) {
      const __m256d v = _mm256_set1_pd(a[i]);
      double* c = C + i * ldc;
      i64 j = 0;
      for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(c + j, _mm256_fmadd_pd(v, _mm256_loadu_pd(b + j),
                                                _mm256_loadu_pd(c + j)));
      for (; j < n; ++j) c[j] += a[i] * b[j];
    }
  }
}

C2F_AVX2 void csr_dense(i64 rows, const i64* rowptr, const i64* col,
                        const double* val, const double* X, i64 d, double* out,
                        bool accumulate) {
  for (i64 r = 0; r < rows; ++r) {
    double* o = out + r * d;
    if (!accumulate) std::memset(o, 0, sizeof(double) * d);
    for (i64 p = rowptr[r]; p < rowptr[r + 1]; ++p) {
      const __m256d v = _mm256_set1_pd(val[p]);
      const double* x = X + col[p] * d;
      i64 j = 0;
      for (; j + 4 <= d; j += 4)
        _mm256_storeu_pd(o + j, _mm256_fmadd_pd(v, _mm256_loadu_pd(x + j),
                                                _mm256_loadu_pd(o + j)));
      for (; j < d; ++j) o[j] += val[p] * x[j];
    }
  }
}

}  // namespace c2f::kernels::avx2_impl

#else  // non-x86 fallback: route to the scalar reference

namespace c2f::kernels::avx2_impl {
using namespace c2f::kernels;
void add(i64 n, const double* a, const double* b, double* o) { scalar_impl::add(n, a, b, o); }
void sub(i64 n, const double* a, const double* b, double* o) { scalar_impl::sub(n, a, b, o); }
void mul(i64 n, const double* a, const double* b, double* o) { scalar_impl::mul(n, a, b, o); }
void scale(i64 n, double al, const double* a, double* o) { scalar_impl::scale(n, al, a, o); }
void axpy(i64 n, double al, const double* x, double* y) { scalar_impl::axpy(n, al, x, y); }
void leaky_relu(i64 n, double s, const double* x, double* o) { scalar_impl::leaky_relu(n, s, x, o); }
void leaky_relu_bwd(i64 n, double s, const double* x, const double* g, double* gx) {
  scalar_impl::leaky_relu_bwd(n, s, x, g, gx);
}
double sum(i64 n, const double* a) { return scalar_impl::sum(n, a); }
double dot(i64 n, const double* a, const double* b) { return scalar_impl::dot(n, a, b); }
void gemm_nn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool acc) {
  scalar_impl::gemm_nn(m, n, k, A, lda, B, ldb, C, ldc, acc);
}
void gemm_nt(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool acc) {
  scalar_impl::gemm_nt(m, n, k, A, lda, B, ldb, C, ldc, acc);
}
void gemm_tn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool acc) {
  scalar_impl::gemm_tn(m, n, k, A, lda, B, ldb, C, ldc, acc);
}
void csr_dense(i64 rows, const i64* rowptr, const i64* col, const double* val,
               const double* X, i64 d, double* out, bool acc) {
  scalar_impl::csr_dense(rows, rowptr, col, val, X, d, out, acc);
}
}  // namespace c2f::kernels::avx2_impl

#endif
