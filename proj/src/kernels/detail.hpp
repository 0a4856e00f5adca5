#pragma once
#include "c2f/kernels.hpp"

// Backend implementations share the public signatures; dispatch.cpp picks one.
namespace c2f::kernels::scalar_impl {
void add(i64 n, const double* a, const double* b, double* out);
void sub(i64 n, const double* a, const double* b, double* out);
void mul(i64 n, const double* a, const double* b, double* out);
void scale(i64 n, double alpha, const double* a, double* out);
void axpy(i64 n, double alpha, const double* x, double* y);
void leaky_relu(i64 n, double slope, const double* x, double* out);
void leaky_relu_bwd(i64 n, double slope, const double* x, const double* g,
                    double* gx);
double sum(i64 n, const double* a);
double dot(i64 n, const double* a, const double* b);
void gemm_nn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
void gemm_nt(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
void gemm_tn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
void csr_dense(i64 rows, const i64* rowptr, const i64* col, const double* val,
               const double* X, i64 d, double* out, bool accumulate);
}  // namespace c2f::kernels::scalar_impl

namespace c2f::kernels::avx2_impl {
void add(i64 n, const double* a, const double* b, double* out);
void sub(i64 n, const double* a, const double* b, double* out);
void mul(i64 n, const double* a, const double* b, double* out);
void scale(i64 n, double alpha, const double* a, double* out);
void axpy(i64 n, double alpha, const double* x, double* y);
void leaky_relu(i64 n, double slope, const double* x, double* out);
void leaky_relu_bwd(i64 n, double slope, const double* x, const double* g,
                    double* gx);
double sum(i64 n, const double* a);
double dot(i64 n, const double* a, const double* b);
void gemm_nn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
void gemm_nt(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
void gemm_tn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate);
void csr_dense(i64 rows, const i64* rowptr, const i64* col, const double* val,
               const double* X, i64 d, double* out, bool accumulate);
}  // namespace c2f::kernels::avx2_impl
