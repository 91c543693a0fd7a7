#ifndef PNP_MMATRIX_HPP
#define PNP_MMATRIX_HPP

#include "pnp/sparse.hpp"

#include <cmath>
#include <vector>

namespace pnp {

enum class MMatrixViolationKind { positive_offdiagonal, nonpositive_diagonal, negative_column_sum };

struct MMatrixViolation {
  std::size_t row;  ///< equals col for diagonal and column-sum violations
  std::size_t col;
  double value;
  MMatrixViolationKind kind;
};

/// Outcome of the sufficient column M-matrix test.
///
/// A passing verdict means: nonpositive off-diagonals, positive diagonal, every column
/// sum nonnegative and at least one column sum positive. Together with irreducibility
/// (not checked) this makes A a column M-matrix, i.e. A^T is a nonsingular M-matrix.
struct MMatrixReport {
  bool offdiag_sign_ok = true;
  bool diagonal_positive_ok = true;
  bool column_weak_dominance_ok = true;
  bool strict_column_exists = false;
  std::size_t strict_columns = 0;
  std::size_t zero_sum_columns = 0;
  bool irreducibility_checked = false;
  std::vector<MMatrixViolation> violations;

  bool verdict() const {
    return offdiag_sign_ok && diagonal_positive_ok && column_weak_dominance_ok && strict_column_exists;
  }
};

/// Column sums within `rel_tol * |a_jj|` of zero count as zero.
inline MMatrixReport column_mmatrix_check(const CsrMatrix& a, double rel_tol = 1e-12) {
  MMatrixReport r;
  const std::size_t n = a.size();
  Vector colsum(n, 0.0), diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) {
      const std::size_t j = a.col(p);
      const double v = a.value(p);
      colsum[j] += v;
      if (i == j) {
        diag[j] = v;
      } else if (v > 0.0) {
        r.offdiag_sign_ok = false;
        r.violations.push_back({i, j, v, MMatrixViolationKind::positive_offdiagonal});
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(diag[j] > 0.0)) {
      r.diagonal_positive_ok = false;
      r.violations.push_back({j, j, diag[j], MMatrixViolationKind::nonpositive_diagonal});
      continue;
    }
    const double slack = rel_tol * std::abs(diag[j]);
    if (colsum[j] < -slack) {
      r.column_weak_dominance_ok = false;
      r.violations.push_back({j, j, colsum[j], MMatrixViolationKind::negative_column_sum});
    } else if (colsum[j] > slack) {
      ++r.strict_columns;
    } else {
      ++r.zero_sum_columns;
    }
  }
  r.strict_column_exists = r.strict_columns > 0;
  return r;
}

}  // namespace pnp

#endif  // PNP_MMATRIX_HPP
