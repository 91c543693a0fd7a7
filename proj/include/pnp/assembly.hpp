#ifndef PNP_ASSEMBLY_HPP
#define PNP_ASSEMBLY_HPP

#include "pnp/mesh.hpp"
#include "pnp/quadrature.hpp"
#include "pnp/sparse.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

/** @file pnp/assembly.hpp
    @brief P1 assembly of the Poisson and Nernst-Planck operators.

    Three discretizations of the Nernst-Planck flux -(grad p + c p grad phi) are
    provided: standard Galerkin, streamline-upwind Petrov-Galerkin and the
    edge-averaged (exponentially fitted) scheme. All matrices are returned before
    boundary treatment; apply_dirichlet() constrains them afterwards.
*/

namespace pnp {

/// f(x, t)
using ScalarField = std::function<double(const Vec3&, double)>;

enum class Scheme { fem, supg, eafe };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::fem: return "fem";
    case Scheme::supg: return "supg";
    case Scheme::eafe: return "eafe";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "fem") return Scheme::fem;
  if (s == "supg") return Scheme::supg;
  if (s == "eafe") return Scheme::eafe;
  throw ConfigError("unknown scheme '" + std::string(s) + "' (expected fem, supg or eafe)");
}

/// Discretization settings shared by both species.
///
/// `charges` couple the concentrations into the Poisson source; `drift` multiplies
/// p grad(phi) in the Nernst-Planck flux. The two coincide for the textbook model but
/// are kept apart because drift-diffusion benchmarks often scale them differently.
struct SchemeConfig {
  Scheme scheme = Scheme::eafe;
  std::array<double, 2> charges{1.0, -1.0};
  std::array<double, 2> drift{1.0, -1.0};
  double supg_scale = 1.0;
  int quadrature_order = 2;  ///< polynomial exactness of the source-term rule
  bool lumped_mass = true;

  void validate() const {
    for (double c : drift)
      if (!std::isfinite(c)) throw ConfigError("drift coefficients must be finite");
    for (double z : charges)
      if (!std::isfinite(z)) throw ConfigError("charges must be finite");
    if (!(supg_scale > 0.0)) throw ConfigError("supg_scale must be positive");
    if (quadrature_order < 1) throw ConfigError("quadrature_order must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// exponential-fitting kernels

/// B(t) = t / (e^t - 1), B(0) = 1.
inline double bernoulli(double t) {
  const double a = std::abs(t);
  if (a <= 1e-3) {
    const double t2 = t * t;
    return 1.0 - 0.5 * t + t2 * (1.0 / 12.0 - t2 * (1.0 / 720.0 - t2 / 30240.0));
  }
  if (t > 0.0) return t * std::exp(-t) / -std::expm1(-t);
  return t / std::expm1(t);
}

/// Inverse mean of e^s over an edge on which s varies linearly from a to b:
/// [ integral_0^1 e^{a + (b-a) s} ds ]^{-1} = (b - a) / (e^b - e^a) = e^{-a} B(b - a).
inline double edge_harmonic_average(double a, double b) { return std::exp(-a) * bernoulli(b - a); }

// ---------------------------------------------------------------------------
// pattern-based element accumulation

namespace detail {

inline CsrMatrix pattern_matrix(const TetMesh& mesh, std::vector<double> values) {
  return CsrMatrix(mesh.num_nodes(), mesh.pattern_offsets(), mesh.pattern_cols(), std::move(values));
}

inline std::vector<double> zero_values(const TetMesh& mesh) {
  return std::vector<double>(mesh.pattern_cols().size(), 0.0);
}

inline Vec3 element_gradient(const TetMesh& mesh, std::size_t k, std::span<const double> u) {
  const auto& g = mesh.geometry(k);
  const Tet& t = mesh.tets()[k];
  Vec3 grad{0.0, 0.0, 0.0};
  for (int m = 0; m < 4; ++m) grad = grad + u[t[m]] * g.grad_lambda[m];
  return grad;
}

}  // namespace detail

/// Gradient of the P1 interpolant of `u` on tet k.
inline Vec3 element_gradient(const TetMesh& mesh, std::size_t k, std::span<const double> u) {
  require_size(u.size(), mesh.num_nodes(), "nodal vector");
  return detail::element_gradient(mesh, k, u);
}

// ---------------------------------------------------------------------------
// basic operators

/// Stiffness matrix A_L = (grad Psi^T, grad Psi).
inline CsrMatrix assemble_stiffness(const TetMesh& mesh) {
  auto vals = detail::zero_values(mesh);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto& g = mesh.geometry(k);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) vals[mesh.slot(k, a, b)] += g.volume * dot(g.grad_lambda[a], g.grad_lambda[b]);
  }
  return detail::pattern_matrix(mesh, std::move(vals));
}

/// |Omega_k| = total volume of the tets incident to node k.
inline Vector patch_volumes(const TetMesh& mesh) {
  Vector v(mesh.num_nodes(), 0.0);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k)
    for (auto node : mesh.tets()[k]) v[node] += mesh.geometry(k).volume;
  return v;
}

/// Vertex-lumped mass, M_kk = |Omega_k| / 4, returned as its diagonal.
inline Vector lumped_mass_diagonal(const TetMesh& mesh) {
  Vector d = patch_volumes(mesh);
  for (double& x : d) x *= 0.25;
  return d;
}

inline CsrMatrix assemble_lumped_mass(const TetMesh& mesh) {
  const Vector d = lumped_mass_diagonal(mesh);
  return CsrMatrix::diagonal(d);
}

/// Consistent P1 mass matrix, |K|/20 (1 + delta_ij) per element.
inline CsrMatrix assemble_consistent_mass(const TetMesh& mesh) {
  auto vals = detail::zero_values(mesh);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const double v = mesh.geometry(k).volume;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) vals[mesh.slot(k, a, b)] += v / 20.0 * (a == b ? 2.0 : 1.0);
  }
  return detail::pattern_matrix(mesh, std::move(vals));
}

/// C(Phi)_ij = (psi_j grad phi_h, grad psi_i). Columns sum to zero.
inline CsrMatrix assemble_convection(const TetMesh& mesh, std::span<const double> phi) {
  require_size(phi.size(), mesh.num_nodes(), "potential");
  auto vals = detail::zero_values(mesh);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto& g = mesh.geometry(k);
    const Vec3 gphi = detail::element_gradient(mesh, k, phi);
    for (int a = 0; a < 4; ++a) {
      const double w = 0.25 * g.volume * dot(gphi, g.grad_lambda[a]);
      for (int b = 0; b < 4; ++b) vals[mesh.slot(k, a, b)] += w;
    }
  }
  return detail::pattern_matrix(mesh, std::move(vals));
}

/// Load vector (g(., t), psi_k) with a rule exact to `degree`.
inline Vector assemble_load(const TetMesh& mesh, const ScalarField& g, double t, int degree = 2) {
  const TetRule rule = tet_rule_for_degree(degree);
  Vector f(mesh.num_nodes(), 0.0);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto x = mesh.vertices(k);
    const double vol = mesh.geometry(k).volume;
    const Tet& t4 = mesh.tets()[k];
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double gv = g(map_point(x, rule.points[q]), t) * rule.weights[q] * vol;
      for (int m = 0; m < 4; ++m) f[t4[m]] += gv * rule.points[q][m];
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Nernst-Planck operators

/// One species' assembled transport system.
///
/// `matrix` = T + tau * transport (+ history for SUPG), where T is the time mass.
/// `history` multiplies p^n on the right-hand side; it is empty except for SUPG, whose
/// streamline-weighted time derivative couples both levels.
struct AssembledNP {
  CsrMatrix transport;  ///< tau-free operator A~ (before boundary treatment)
  CsrMatrix matrix;
  std::optional<CsrMatrix> history;
  Vector rhs;
  int species = 0;
};

namespace detail {

inline CsrMatrix time_mass(const TetMesh& mesh, bool lumped) {
  return lumped ? assemble_lumped_mass(mesh) : assemble_consistent_mass(mesh);
}

inline void check_np_inputs(const TetMesh& mesh, std::span<const double> phi, double tau) {
  require_size(phi.size(), mesh.num_nodes(), "potential");
  if (!(tau > 0.0)) throw ConfigError("time step must be positive");
}

inline AssembledNP finish_np(const TetMesh& mesh, CsrMatrix transport, double tau, bool lumped, int species) {
  AssembledNP out;
  out.matrix = add(1.0, time_mass(mesh, lumped), tau, transport);
  out.transport = std::move(transport);
  out.rhs.assign(mesh.num_nodes(), 0.0);
  out.species = species;
  return out;
}

/// SUPG element parameter C_K and Peclet number P_K for drift velocity `vel`.
struct SupgParameter {
  double peclet;
  double ck;
};

inline SupgParameter supg_parameter(double h, double speed, double scale) {
  const double pk = 0.5 * h * speed;
  const double ck = pk >= 1.0 ? scale * h / (2.0 * speed) : 0.25 * scale * h * h;
  return {pk, ck};
}

}  // namespace detail

/// Element SUPG parameter C_K for element diameter h and drift speed |c grad phi|.
inline double supg_ck(double h, double speed, double scale) { return detail::supg_parameter(h, speed, scale).ck; }

/// Galerkin: M + tau (A_L + c C(Phi)).
inline AssembledNP assemble_np_fem(const TetMesh& mesh, std::span<const double> phi, double drift, double tau,
                                   int species = 0, bool lumped = true) {
  detail::check_np_inputs(mesh, phi, tau);
  CsrMatrix transport = add(1.0, assemble_stiffness(mesh), drift, assemble_convection(mesh, phi));
  return detail::finish_np(mesh, std::move(transport), tau, lumped, species);
}

/// Streamline-diffusion matrix and time-derivative block of the SUPG scheme.
struct SupgBlocks {
  CsrMatrix streamline;  ///< sum_K c^2 C_K (grad phi . grad psi_j)(grad phi . grad psi_i)
  CsrMatrix time;        ///< sum_K (psi_j, -c C_K grad phi . grad psi_i)_K
};

inline SupgBlocks assemble_supg_blocks(const TetMesh& mesh, std::span<const double> phi, double drift,
                                       double scale) {
  require_size(phi.size(), mesh.num_nodes(), "potential");
  auto sv = detail::zero_values(mesh);
  auto tv = detail::zero_values(mesh);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto& g = mesh.geometry(k);
    const Vec3 vel = drift * detail::element_gradient(mesh, k, phi);
    const double speed = norm(vel);
    if (speed == 0.0) continue;
    const double ck = detail::supg_parameter(g.diameter, speed, scale).ck;
    std::array<double, 4> stream{};
    for (int a = 0; a < 4; ++a) stream[a] = dot(vel, g.grad_lambda[a]);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        sv[mesh.slot(k, a, b)] += ck * g.volume * stream[a] * stream[b];
        tv[mesh.slot(k, a, b)] -= ck * stream[a] * 0.25 * g.volume;
      }
  }
  return {detail::pattern_matrix(mesh, std::move(sv)), detail::pattern_matrix(mesh, std::move(tv))};
}

/// Streamline-weighted source (F, -c C_K grad phi . grad psi_i)_K.
inline Vector assemble_supg_load(const TetMesh& mesh, std::span<const double> phi, double drift, double scale,
                                 const ScalarField& source, double t, int degree = 2) {
  require_size(phi.size(), mesh.num_nodes(), "potential");
  const TetRule rule = tet_rule_for_degree(degree);
  Vector f(mesh.num_nodes(), 0.0);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto& g = mesh.geometry(k);
    const Vec3 vel = drift * detail::element_gradient(mesh, k, phi);
    const double speed = norm(vel);
    if (speed == 0.0) continue;
    const double ck = detail::supg_parameter(g.diameter, speed, scale).ck;
    const auto x = mesh.vertices(k);
    double integral = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q)
      integral += rule.weights[q] * source(map_point(x, rule.points[q]), t);
    integral *= g.volume;
    const Tet& t4 = mesh.tets()[k];
    for (int a = 0; a < 4; ++a) f[t4[a]] -= ck * dot(vel, g.grad_lambda[a]) * integral;
  }
  return f;
}

/// SUPG: Galerkin matrix + tau * streamline diffusion + time-derivative block.
/// The time block is also returned as `history` so the caller can add history * p^n.
inline AssembledNP assemble_np_supg(const TetMesh& mesh, std::span<const double> phi, double drift, double tau,
                                    double scale, int species = 0, bool lumped = true) {
  detail::check_np_inputs(mesh, phi, tau);
  if (!(scale > 0.0)) throw ConfigError("supg_scale must be positive");
  SupgBlocks blocks = assemble_supg_blocks(mesh, phi, drift, scale);
  CsrMatrix transport = add(1.0, add(1.0, assemble_stiffness(mesh), drift, assemble_convection(mesh, phi)), 1.0,
                            blocks.streamline);
  AssembledNP out = detail::finish_np(mesh, std::move(transport), tau, lumped, species);
  out.matrix = add(1.0, out.matrix, 1.0, blocks.time);
  out.history = std::move(blocks.time);
  return out;
}

/// Edge-averaged operator: per element and edge (nu, mu) with s = c phi,
///   a_{nu mu} = -omega_E alpha_E e^{s_mu} = -omega_E B(s_nu - s_mu),
/// diagonals chosen so every column sums to zero. Phi = 0 gives A_L.
inline CsrMatrix assemble_eafe_operator(const TetMesh& mesh, std::span<const double> phi, double drift) {
  require_size(phi.size(), mesh.num_nodes(), "potential");
  auto vals = detail::zero_values(mesh);
  for (std::size_t k = 0; k < mesh.num_tets(); ++k) {
    const auto& g = mesh.geometry(k);
    const Tet& t = mesh.tets()[k];
    for (int e = 0; e < 6; ++e) {
      const auto [a, b] = kLocalEdges[e];
      const double sa = drift * phi[t[a]];
      const double sb = drift * phi[t[b]];
      const double wa = g.omega[e] * bernoulli(sb - sa);  // omega alpha e^{s_a}
      const double wb = g.omega[e] * bernoulli(sa - sb);  // omega alpha e^{s_b}
      vals[mesh.slot(k, a, a)] += wa;
      vals[mesh.slot(k, b, a)] -= wa;
      vals[mesh.slot(k, b, b)] += wb;
      vals[mesh.slot(k, a, b)] -= wb;
    }
  }
  return detail::pattern_matrix(mesh, std::move(vals));
}

inline AssembledNP assemble_np_eafe(const TetMesh& mesh, std::span<const double> phi, double drift, double tau,
                                    int species = 0, bool lumped = true) {
  detail::check_np_inputs(mesh, phi, tau);
  return detail::finish_np(mesh, assemble_eafe_operator(mesh, phi, drift), tau, lumped, species);
}

// ---------------------------------------------------------------------------
// scheme dispatch and right-hand sides

/// Data for the right-hand side of one species' transport system at t^{n+1}.
struct NpRhsInputs {
  std::span<const double> base;    ///< tau G^{n+1} + M P^n
  std::span<const double> p_prev;  ///< P^n
  const ScalarField* source = nullptr;
  double t = 0.0;
};

/// Assembles the transport system of `species` for the configured scheme and fills
/// its right-hand side (before boundary treatment).
inline AssembledNP assemble_np_system(const TetMesh& mesh, const SchemeConfig& cfg, std::span<const double> phi,
                                      int species, double tau, const NpRhsInputs& in) {
  const double c = cfg.drift.at(static_cast<std::size_t>(species));
  AssembledNP out;
  switch (cfg.scheme) {
    case Scheme::fem: out = assemble_np_fem(mesh, phi, c, tau, species, cfg.lumped_mass); break;
    case Scheme::supg: out = assemble_np_supg(mesh, phi, c, tau, cfg.supg_scale, species, cfg.lumped_mass); break;
    case Scheme::eafe: out = assemble_np_eafe(mesh, phi, c, tau, species, cfg.lumped_mass); break;
  }
  require_size(in.base.size(), mesh.num_nodes(), "transport base rhs");
  out.rhs.assign(in.base.begin(), in.base.end());
  if (out.history) {
    const Vector hp = spmv(*out.history, in.p_prev);
    for (std::size_t i = 0; i < hp.size(); ++i) out.rhs[i] += hp[i];
    if (in.source) {
      const Vector sl = assemble_supg_load(mesh, phi, c, cfg.supg_scale, *in.source, in.t, cfg.quadrature_order);
      for (std::size_t i = 0; i < sl.size(); ++i) out.rhs[i] += tau * sl[i];
    }
  }
  return out;
}

/// Imposes u_i = values_i on constrained nodes: constrained rows become identity rows,
/// constrained columns are eliminated into the right-hand side. Symmetry is preserved.
inline void apply_dirichlet(CsrMatrix& a, Vector& b, const std::vector<bool>& constrained,
                            std::span<const double> values) {
  const std::size_t n = a.size();
  require_size(b.size(), n, "rhs");
  require_size(constrained.size(), n, "constraint flags");
  require_size(values.size(), n, "boundary values");
  TripletBuilder t(n);
  t.reserve(a.nnz());
  for (std::size_t i = 0; i < n; ++i) {
    if (constrained[i]) {
      t.add(i, i, 1.0);
      b[i] = values[i];
      continue;
    }
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) {
      const std::size_t j = a.col(p);
      if (constrained[j]) {
        b[i] -= a.value(p) * values[j];
      } else {
        t.add(i, j, a.value(p));
      }
    }
  }
  a = t.build();
}

/// Boundary-treated copy of `a` with zero boundary data, for diagnostics.
inline CsrMatrix constrained_copy(const CsrMatrix& a, const std::vector<bool>& constrained) {
  CsrMatrix c = a;
  Vector b(a.size(), 0.0), zeros(a.size(), 0.0);
  apply_dirichlet(c, b, constrained, zeros);
  return c;
}

}  // namespace pnp

#endif  // PNP_ASSEMBLY_HPP
