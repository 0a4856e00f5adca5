#include <cstdlib>

#include "detail.hpp"

namespace c2f::kernels {

bool avx2_supported() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

static Backend resolve_default() {
  if (const char* env = std::getenv("C2F_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && avx2_supported()) return Backend::avx2;
    if (v == "avx2") return Backend::scalar;  // requested but unavailable
  }
  return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

static Backend& state() {
  static Backend b = resolve_default();
  return b;
}

Backend active() { return state(); }

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void select(const std::string& name) {
  if (name == "auto") {
    state() = avx2_supported() ? Backend::avx2 : Backend::scalar;
  } else if (name == "scalar") {
    state() = Backend::scalar;
  } else if (name == "avx2") {
    require(avx2_supported(), "avx2 kernels requested but CPU lacks avx2/fma");
    state() = Backend::avx2;
  } else {
    throw ArgumentError("unknown kernel backend: " + name);
  }
}

#define C2F_DISPATCH(fn, ...)                  \
  if (state() == Backend::avx2)                \
    return avx2_impl::fn(__VA_ARGS__);         \
  return scalar_impl::fn(__VA_ARGS__)

void add(i64 n, const double* a, const double* b, double* out) {
  C2F_DISPATCH(add, n, a, b, out);
}
void sub(i64 n, const double* a, const double* b, double* out) {
  C2F_DISPATCH(sub, n, a, b, out);
}
void mul(i64 n, const double* a, const double* b, double* out) {
  C2F_DISPATCH(mul, n, a, b, out);
}
void scale(i64 n, double alpha, const double* a, double* out) {
  C2F_DISPATCH(scale, n, alpha, a, out);
}
void axpy(i64 n, double alpha, const double* x, double* y) {
  C2F_DISPATCH(axpy, n, alpha, x, y);
}
void leaky_relu(i64 n, double slope, const double* x, double* out) {
  C2F_DISPATCH(leaky_relu, n, slope, x, out);
}
void leaky_relu_bwd(i64 n, double slope, const double* x, const double* g,
                    double* gx) {
  C2F_DISPATCH(leaky_relu_bwd, n, slope, x, g, gx);
}
double sum(i64 n, const double* a) { C2F_DISPATCH(sum, n, a); }
double dot(i64 n, const double* a, const double* b) {
  C2F_DISPATCH(dot, n, a, b);
}
void gemm_nn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate) {
  C2F_DISPATCH(gemm_nn, m, n, k, A, lda, B, ldb, C, ldc, accumulate);
}
void gemm_nt(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate) {
  C2F_DISPATCH(gemm_nt, m, n, k, A, lda, B, ldb, C, ldc, accumulate);
}
void gemm_tn(i64 m, i64 n, i64 k, const double* A, i64 lda, const double* B,
             i64 ldb, double* C, i64 ldc, bool accumulate) {
  C2F_DISPATCH(gemm_tn, m, n, k, A, lda, B, ldb, C, ldc, accumulate);
}
void csr_dense(i64 rows, const i64* rowptr, const i64* col, const double* val,
               const double* X, i64 d, double* out, bool accumulate) {
  C2F_DISPATCH(csr_dense, rows, rowptr, col, val, X, d, out, accumulate);
}

#undef C2F_DISPATCH

}  // namespace c2f::kernels
