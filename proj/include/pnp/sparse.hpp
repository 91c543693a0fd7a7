#ifndef PNP_SPARSE_HPP
#define PNP_SPARSE_HPP

#include "pnp/types.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

namespace pnp {

/// Square compressed-row matrix. Column indices are strictly increasing within each row.
class CsrMatrix {
public:
  CsrMatrix() = default;

  /// n x n matrix with no stored entries.
  explicit CsrMatrix(std::size_t n) : n_(n), offsets_(n + 1, 0) {}

  CsrMatrix(std::size_t n, std::vector<std::size_t> offsets, std::vector<std::size_t> cols,
            std::vector<double> values)
      : n_(n), offsets_(std::move(offsets)), cols_(std::move(cols)), values_(std::move(values)) {
    require_size(offsets_.size(), n_ + 1, "CSR offsets");
    require_size(values_.size(), cols_.size(), "CSR values");
    if (offsets_.back() != cols_.size()) throw DimensionError("CSR offsets do not cover column array");
    for (std::size_t i = 0; i < n_; ++i) {
      if (offsets_[i] > offsets_[i + 1]) throw DimensionError("CSR offsets not monotone");
      for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
        if (cols_[p] >= n_) throw DimensionError("CSR column out of range");
        if (p > offsets_[i] && cols_[p] <= cols_[p - 1])
          throw DimensionError("CSR columns not strictly increasing");
      }
    }
  }

  static CsrMatrix identity(std::size_t n) {
    std::vector<std::size_t> off(n + 1), cols(n);
    for (std::size_t i = 0; i <= n; ++i) off[i] = i;
    for (std::size_t i = 0; i < n; ++i) cols[i] = i;
    return CsrMatrix(n, std::move(off), std::move(cols), std::vector<double>(n, 1.0));
  }

  static CsrMatrix diagonal(std::span<const double> d) {
    CsrMatrix m = identity(d.size());
    std::copy(d.begin(), d.end(), m.values_.begin());
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return cols_.size(); }

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> cols() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::size_t row_begin(std::size_t i) const { return offsets_[i]; }
  std::size_t row_end(std::size_t i) const { return offsets_[i + 1]; }
  std::size_t col(std::size_t p) const { return cols_[p]; }
  double value(std::size_t p) const { return values_[p]; }

  /// Position of (i, j) in the value array, or npos when not stored.
  std::size_t find(std::size_t i, std::size_t j) const {
    auto first = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    auto last = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
    auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? static_cast<std::size_t>(it - cols_.begin()) : npos;
  }

  double operator()(std::size_t i, std::size_t j) const {
    const std::size_t p = find(i, j);
    return p == npos ? 0.0 : values_[p];
  }

  double& at_stored(std::size_t i, std::size_t j) {
    const std::size_t p = find(i, j);
    if (p == npos) throw DimensionError("entry not in sparsity pattern");
    return values_[p];
  }

  Vector diagonal_values() const {
    Vector d(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) d[i] = (*this)(i, i);
    return d;
  }

  Vector row_sums() const {
    Vector s(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) s[i] += values_[p];
    return s;
  }

  Vector column_sums() const {
    Vector s(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) s[cols_[p]] += values_[p];
    return s;
  }

  CsrMatrix transpose() const {
    std::vector<std::size_t> count(n_ + 1, 0);
    for (auto c : cols_) ++count[c + 1];
    for (std::size_t i = 0; i < n_; ++i) count[i + 1] += count[i];
    std::vector<std::size_t> cols(cols_.size());
    std::vector<double> vals(values_.size());
    std::vector<std::size_t> next(count.begin(), count.end() - 1);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
        const std::size_t q = next[cols_[p]]++;
        cols[q] = i;
        vals[q] = values_[p];
      }
    return CsrMatrix(n_, std::move(count), std::move(cols), std::move(vals));
  }

  /// Row-major dense copy, for small diagnostic problems only.
  std::vector<double> to_dense() const {
    std::vector<double> a(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) a[i * n_ + cols_[p]] = values_[p];
    return a;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

/// Accumulates (row, col, value) triplets; duplicates are summed in insertion order
/// so the result is deterministic.
class TripletBuilder {
public:
  explicit TripletBuilder(std::size_t n) : n_(n) {}

  void add(std::size_t i, std::size_t j, double v) { entries_.push_back({i, j, v}); }
  void reserve(std::size_t count) { entries_.reserve(count); }

  CsrMatrix build() const {
    std::vector<std::size_t> order(entries_.size());
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      return std::tie(entries_[a].i, entries_[a].j) < std::tie(entries_[b].i, entries_[b].j);
    });
    std::vector<std::size_t> offsets(n_ + 1, 0), cols;
    std::vector<double> vals;
    for (std::size_t q = 0; q < order.size(); ++q) {
      const Entry& e = entries_[order[q]];
      if (e.i >= n_ || e.j >= n_) throw DimensionError("triplet index out of range");
      if (!cols.empty() && q > 0 && entries_[order[q - 1]].i == e.i && cols.back() == e.j) {
        vals.back() += e.v;
      } else {
        cols.push_back(e.j);
        vals.push_back(e.v);
        ++offsets[e.i + 1];
      }
    }
    for (std::size_t i = 0; i < n_; ++i) offsets[i + 1] += offsets[i];
    return CsrMatrix(n_, std::move(offsets), std::move(cols), std::move(vals));
  }

private:
  struct Entry {
    std::size_t i, j;
    double v;
  };
  std::size_t n_;
  std::vector<Entry> entries_;
};

/// y = A x
inline Vector spmv(const CsrMatrix& a, std::span<const double> x) {
  require_size(x.size(), a.size(), "spmv input");
  Vector y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double s = 0.0;
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) s += a.value(p) * x[a.col(p)];
    y[i] = s;
  }
  return y;
}

/// alpha * A + beta * B on the union pattern.
inline CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
  require_size(b.size(), a.size(), "matrix sum");
  TripletBuilder t(a.size());
  t.reserve(a.nnz() + b.nnz());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) t.add(i, a.col(p), alpha * a.value(p));
    for (std::size_t p = b.row_begin(i); p < b.row_end(i); ++p) t.add(i, b.col(p), beta * b.value(p));
  }
  return t.build();
}

inline double max_abs_difference(const CsrMatrix& a, const CsrMatrix& b) {
  const CsrMatrix d = add(1.0, a, -1.0, b);
  double m = 0.0;
  for (double v : d.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_size(b.size(), a.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vector difference(std::span<const double> a, std::span<const double> b) {
  require_size(b.size(), a.size(), "difference");
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace pnp

#endif  // PNP_SPARSE_HPP
