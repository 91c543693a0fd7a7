#ifndef PNP_QUADRATURE_HPP
#define PNP_QUADRATURE_HPP

#include "pnp/types.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace pnp {

/// Quadrature on a tetrahedron in barycentric coordinates; weights sum to one, so
/// integral_K f ~= |K| * sum_q w_q f(x_q).
struct TetRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [0, 1].
inline void gauss_legendre_unit(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= m; ++k) {
        const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (m == 1) p0 = 1.0;
      dp = m * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

/// One-point centroid rule, exact for degree 1.
inline TetRule centroid_rule() { return {{{0.25, 0.25, 0.25, 0.25}}, {1.0}}; }

/// Symmetric four-point rule, exact for degree 2.
inline TetRule four_point_rule() {
  const double a = 0.5854101966249685;
  const double b = 0.1381966011250105;
  return {{{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}}, {0.25, 0.25, 0.25, 0.25}};
}

/// Collapsed (Duffy) tensor Gauss-Legendre rule with m points per direction, exact for
/// polynomials of total degree 2m - 3.
inline TetRule collapsed_gauss_rule(int m) {
  std::vector<double> x, w;
  gauss_legendre_unit(m, x, w);
  TetRule rule;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        const double u = x[i], v = x[j], s = x[k];
        const double px = u;
        const double py = v * (1.0 - u);
        const double pz = s * (1.0 - u) * (1.0 - v);
        rule.points.push_back({1.0 - px - py - pz, px, py, pz});
        rule.weights.push_back(6.0 * w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
      }
  return rule;
}

/// Rule exact for at least the given polynomial degree.
inline TetRule tet_rule_for_degree(int degree) {
  if (degree <= 1) return centroid_rule();
  if (degree == 2) return four_point_rule();
  return collapsed_gauss_rule((degree + 4) / 2);
}

inline Vec3 map_point(const std::array<Vec3, 4>& x, const std::array<double, 4>& lambda) {
  Vec3 p{0.0, 0.0, 0.0};
  for (int m = 0; m < 4; ++m)
    for (int d = 0; d < 3; ++d) p[d] += lambda[m] * x[m][d];
  return p;
}

}  // namespace pnp

#endif  // PNP_QUADRATURE_HPP
