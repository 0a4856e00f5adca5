#pragma once
#include <algorithm>
#include <memory>
#include <tuple>
#include <vector>

#include "c2f/common.hpp"
#include "c2f/kernels.hpp"

namespace c2f {

// CSR matrix built from (row, col, value) triplets sorted by (row, col).
// The transpose is materialized at construction so backward passes through
// sparse products never rebuild it. Immutable after construction.
struct SparseMatrix {
  i64 rows = 0;
  i64 cols = 0;
  std::vector<i64> rowptr;  // rows + 1
  std::vector<i64> col;     // sorted within each row
  std::vector<double> val;

  std::vector<i64> t_rowptr;  // transpose, same layout
  std::vector<i64> t_col;
  std::vector<double> t_val;

  using Triplet = std::tuple<i64, i64, double>;

  static SparseMatrix from_triplets(i64 rows, i64 cols,
                                    std::vector<Triplet> trips) {
    std::sort(trips.begin(), trips.end(),
              [](const Triplet& a, const Triplet& b) {
                return std::tie(std::get<0>(a), std::get<1>(a)) <
                       std::tie(std::get<0>(b), std::get<1>(b));
              });
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.rowptr.assign(rows + 1, 0);
    m.col.reserve(trips.size());
    m.val.reserve(trips.size());
    for (size_t i = 0; i < trips.size(); ++i) {
      auto [r, c, v] = trips[i];
      require(r >= 0 && r < rows && c >= 0 && c < cols,
              "sparse triplet out of range");
      require(i == 0 || std::tie(std::get<0>(trips[i - 1]),
                                 std::get<1>(trips[i - 1])) !=
                            std::tie(r, c),
              "duplicate sparse triplet");
      m.rowptr[r + 1]++;
      m.col.push_back(c);
      m.val.push_back(v);
    }
    for (i64 r = 0; r < rows; ++r) m.rowptr[r + 1] += m.rowptr[r];
    m.build_transpose();
    return m;
  }

  i64 nnz() const { return static_cast<i64>(val.size()); }

  double at(i64 r, i64 c) const {
    const i64 lo = rowptr[r], hi = rowptr[r + 1];
    auto it = std::lower_bound(col.begin() + lo, col.begin() + hi, c);
    if (it != col.begin() + hi && *it == c) return val[it - col.begin()];
    return 0.0;
  }

  // out[rows, d] (+)= this * X[cols, d]
  void matmul(const double* X, i64 d, double* out, bool accumulate) const {
    kernels::csr_dense(rows, rowptr.data(), col.data(), val.data(), X, d, out,
                       accumulate);
  }

  // out[cols, d] (+)= this^T * X[rows, d]
  void matmul_t(const double* X, i64 d, double* out, bool accumulate) const {
    kernels::csr_dense(cols, t_rowptr.data(), t_col.data(), t_val.data(), X, d,
                       out, accumulate);
  }

  std::vector<double> dense() const {
    std::vector<double> out(static_cast<size_t>(rows * cols), 0.0);
    for (i64 r = 0; r < rows; ++r)
      for (i64 p = rowptr[r]; p < rowptr[r + 1]; ++p)
        out[r * cols + col[p]] = val[p];
    return out;
  }

 private:
  void build_transpose() {
    t_rowptr.assign(cols + 1, 0);
    t_col.resize(val.size());
    t_val.resize(val.size());
    for (i64 c : col) t_rowptr[c + 1]++;
    for (i64 c = 0; c < cols; ++c) t_rowptr[c + 1] += t_rowptr[c];
    std::vector<i64> cursor(t_rowptr.begin(), t_rowptr.end() - 1);
    for (i64 r = 0; r < rows; ++r)
      for (i64 p = rowptr[r]; p < rowptr[r + 1]; ++p) {
        const i64 dst = cursor[col[p]]++;
        t_col[dst] = r;
        t_val[dst] = val[p];
      }
  }
};

using SparsePtr = std::shared_ptr<const SparseMatrix>;

}  // namespace c2f
