#pragma once
#include <string>

#include "c2f/common.hpp"

namespace c2f::kernels {

// Dense inner loops behind the autodiff engine. Every kernel has a scalar
// reference implementation and an AVX2+FMA variant; the backend is chosen at
// runtime (cpuid, overridable via C2F_KERNELS=scalar|avx2 or select()).
// Elementwise kernels are bit-identical across backends; reductions and GEMM
// reassociate under SIMD and are equivalence-tested to tight tolerances.
enum class Backend { scalar, avx2 };

Backend active();
const char* backend_name(Backend b);
bool avx2_supported();
// name: "auto", "scalar" or "avx2". Throws if avx2 is requested but absent.
void select(const std::string& name);

// ---- elementwise ----------------------------------------------------------
void add(i64 n, const double* a, const double* b, double* out);
void sub(i64 n, const double* a, const double* b, double* out);
void mul(i64 n, const double* a, const double* b, double* out);
void scale(i64 n, double alpha, const double* a, double* out);
// y += alpha * x
void axpy(i64 n, double alpha, const double* x, double* y);
void leaky_relu(i64 n, double slope, const double* x, double* out);
// gx += g * (x > 0 ? 1 : slope)
void leaky_relu_bwd(i64 n, double slope, const double* x, const double* g,
                    double* gx);

// ---- reductions ------------------------------------------------------------
double sum(i64 n, const double* a);
double dot(i64 n, const double* a, const double* b);

// ---- GEMM (row-major, leading dimension = row stride) ----------------------
// C[m,n] = A[m,k] * B[k,n]            (accumulate: C +=)
void gemm_nn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
// C[m,n] = A[m,k] * B[n,k]^T
void gemm_nt(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
// C[m,n] = A[k,m]^T * B[k,n]
void gemm_tn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);

// ---- sparse ----------------------------------------------------------------
// out[r,:] (+)= sum_j val[p] * X[col[p],:] over row r's CSR range.
void csr_dense(i64 rows, const i64* rowptr, const i64* col, const double* val,
               const double* X, i64 d, double* out, bool accumulate);

}  // namespace c2f::kernels
