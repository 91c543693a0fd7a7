#ifndef PNP_MANUFACTURED_HPP
#define PNP_MANUFACTURED_HPP

#include "pnp/assembly.hpp"
#include "pnp/mesh.hpp"
#include "pnp/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <span>

/** @file pnp/manufactured.hpp
    @brief Closed-form semiconductor drift-diffusion benchmark on [-1/2, 1/2]^3.

    -Lap u - (p - n) = F1
    dp/dt - div(grad p + c p grad u) = F2
    dn/dt - div(grad n - c n grad u) = F3

    with u = (1 - e^{-t}) C, p = 3 pi^2 sin(t) (1 + C/2), n = 3 pi^2 sin(2t) (1 - C/2)
    and C = cos(pi x) cos(pi y) cos(pi z).
*/

namespace pnp {

enum class Field { u, p, n };

inline std::string_view to_string(Field f) {
  switch (f) {
    case Field::u: return "u";
    case Field::p: return "p";
    case Field::n: return "n";
  }
  return "?";
}

struct FieldValue {
  double value;
  Vec3 gradient;
  double time_derivative;
};

struct SourceValues {
  double f1, f2, f3;
};

class ManufacturedSolution {
public:
  static constexpr double kDefaultDrift = 0.179;

  explicit ManufacturedSolution(double drift = kDefaultDrift) : c_(drift) {}

  double drift() const noexcept { return c_; }

  static Vec3 domain_lo() { return {-0.5, -0.5, -0.5}; }
  static Vec3 domain_hi() { return {0.5, 0.5, 0.5}; }

  FieldValue eval(Field f, const Vec3& x, double t) const {
    const Shape s = shape(x);
    switch (f) {
      case Field::u: {
        const double a = 1.0 - std::exp(-t);
        return {a * s.c, a * s.grad, std::exp(-t) * s.c};
      }
      case Field::p: {
        const double b = kAmp * std::sin(t);
        return {b * (1.0 + 0.5 * s.c), 0.5 * b * s.grad, kAmp * std::cos(t) * (1.0 + 0.5 * s.c)};
      }
      case Field::n: {
        const double d = kAmp * std::sin(2.0 * t);
        return {d * (1.0 - 0.5 * s.c), -0.5 * d * s.grad, 2.0 * kAmp * std::cos(2.0 * t) * (1.0 - 0.5 * s.c)};
      }
    }
    return {};
  }

  double value(Field f, const Vec3& x, double t) const { return eval(f, x, t).value; }

  /// Right-hand sides, derived by hand using Lap C = -3 pi^2 C.
  SourceValues sources(const Vec3& x, double t) const {
    const Shape s = shape(x);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double a = 1.0 - std::exp(-t);
    const double b = kAmp * std::sin(t), db = kAmp * std::cos(t);
    const double d = kAmp * std::sin(2.0 * t), dd = 2.0 * kAmp * std::cos(2.0 * t);
    const double g2 = dot(s.grad, s.grad);
    const double p = b * (1.0 + 0.5 * s.c);
    const double n = d * (1.0 - 0.5 * s.c);
    const double lap_u = -3.0 * pi2 * a * s.c;

    SourceValues out{};
    out.f1 = -lap_u - (p - n);
    // div(p grad u) = grad p . grad u + p Lap u
    out.f2 = db * (1.0 + 0.5 * s.c) + 1.5 * pi2 * b * s.c - c_ * (0.5 * a * b * g2 + p * lap_u);
    out.f3 = dd * (1.0 - 0.5 * s.c) - 1.5 * pi2 * d * s.c + c_ * (-0.5 * a * d * g2 + n * lap_u);
    return out;
  }

  ScalarField field(Field f) const {
    return [self = *this, f](const Vec3& x, double t) { return self.value(f, x, t); };
  }
  ScalarField poisson_source() const {
    return [self = *this](const Vec3& x, double t) { return self.sources(x, t).f1; };
  }
  ScalarField species_source(int species) const {
    if (species == 0) return [self = *this](const Vec3& x, double t) { return self.sources(x, t).f2; };
    return [self = *this](const Vec3& x, double t) { return self.sources(x, t).f3; };
  }

  /// Nodal interpolant of `f` at time t.
  Vector interpolate(const TetMesh& mesh, Field f, double t) const {
    Vector v(mesh.num_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = value(f, mesh.nodes()[i], t);
    return v;
  }

  /// Scheme settings of the benchmark: Poisson coupling (+1, -1), drift (+c, -c).
  SchemeConfig scheme_config(Scheme scheme) const {
    SchemeConfig cfg;
    cfg.scheme = scheme;
    cfg.charges = {1.0, -1.0};
    cfg.drift = {c_, -c_};
    return cfg;
  }

private:
  static constexpr double kAmp = 3.0 * std::numbers::pi * std::numbers::pi;

  struct Shape {
    double c;
    Vec3 grad;
  };

  static Shape shape(const Vec3& x) {
    const double pi = std::numbers::pi;
    const double cx = std::cos(pi * x[0]), cy = std::cos(pi * x[1]), cz = std::cos(pi * x[2]);
    const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]), sz = std::sin(pi * x[2]);
    return {cx * cy * cz, {-pi * sx * cy * cz, -pi * cx * sy * cz, -pi * cx * cy * sz}};
  }

  double c_;
};

struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// ||u_h - u||_{L2} and |u_h - u|_{H1} for the P1 function with nodal values `dofs`,
/// integrated per element with a rule exact to `degree`.
template <class Exact>
ErrorNorms error_norms(const TetMesh& mesh, std::span<const double> dofs, const Exact& exact, int degree = 4) {
  require_size(dofs.size(), mesh.num_nodes(), "dof vector");
  const TetRule rule = tet_rule_for_degree(degree);
  double l2 = 0.0, h1 = 0.0;
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto x = mesh.vertices(k);
    const Tet& t = mesh.tets()[k];
    const double vol = mesh.geometry(k).volume;
    const Vec3 gh = detail::element_gradient(mesh, k, dofs);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& lam = rule.points[q];
      double uh = 0.0;
      for (int m = 0; m < 4; ++m) uh += lam[m] * dofs[t[m]];
      const FieldValue e = exact(map_point(x, lam));
      const Vec3 dg = gh - e.gradient;
      l2 += rule.weights[q] * vol * (uh - e.value) * (uh - e.value);
      h1 += rule.weights[q] * vol * dot(dg, dg);
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

inline ErrorNorms error_norms(const TetMesh& mesh, std::span<const double> dofs, const ManufacturedSolution& ms,
                              Field f, double t, int degree = 4) {
  return error_norms(mesh, dofs, [&](const Vec3& x) { return ms.eval(f, x, t); }, degree);
}

}  // namespace pnp

#endif  // PNP_MANUFACTURED_HPP
