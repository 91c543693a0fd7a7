#ifndef PNP_TIMESTEPPER_HPP
#define PNP_TIMESTEPPER_HPP

#include "pnp/gummel.hpp"
#include "pnp/mmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace pnp {

/// Positivity-floor constants of one step.
struct BoundConstants {
  double c_j = 0.0;      ///< sum of all entries of F^J
  Vector c_k;            ///< 4 C_J / |Omega_k|
  double tau_star = 0.0; ///< C_p min|Omega_k| / (4 ||G^{J+1}||_inf), +inf if G^{J+1} = 0
};

/// `f_j` stacks the transport right-hand sides of both species; `patch_volumes` holds
/// |Omega_k| for the same nodes; `g_next` stacks the next-level load vectors.
inline BoundConstants bound_constants(std::span<const double> f_j, std::span<const double> patch_volumes,
                                      std::span<const double> g_next, double c_p) {
  if (!(c_p > 0.0)) throw ConfigError("positivity floor C_p must be positive");
  if (patch_volumes.empty()) throw DimensionError("bound_constants needs at least one node");
  BoundConstants b;
  for (double v : f_j) b.c_j += v;
  double min_vol = std::numeric_limits<double>::infinity();
  b.c_k.reserve(patch_volumes.size());
  for (double v : patch_volumes) {
    if (!(v > 0.0)) throw DimensionError("patch volumes must be positive");
    b.c_k.push_back(4.0 * b.c_j / v);
    min_vol = std::min(min_vol, v);
  }
  const double gmax = norm_inf(g_next);
  b.tau_star = gmax == 0.0 ? std::numeric_limits<double>::infinity() : c_p * min_vol / (4.0 * gmax);
  return b;
}

struct TransientConfig {
  double final_time = 0.25;
  double tau = 1.0 / 256.0;
  /// Initial state; boundary entries are overwritten from the boundary providers at each new level.
  State initial;
  ScalarField g_u, g_p, g_n;          ///< Dirichlet data; empty means zero
  ScalarField f, f1, f2;              ///< sources; empty means zero
  bool diagnostics = true;
  GummelOptions gummel{};

  std::size_t steps() const {
    if (!(tau > 0.0) || !(final_time > 0.0) || tau > final_time * (1.0 + 1e-12))
      throw ConfigError("time grid requires 0 < tau <= T");
    return static_cast<std::size_t>(std::ceil(final_time / tau - 1e-9));
  }
};

struct DiagnosticsRecord {
  std::size_t step = 0;
  double t = 0.0;
  std::array<double, 2> min_conc{};  ///< over interior DOFs
  std::array<double, 2> max_conc{};
  double c_j = 0.0;
  double c_k_min = 0.0;
  double c_k_max = 0.0;
  Vector c_k;
  double tau_star = 0.0;
  double c_p = 0.0;
  std::array<bool, 2> mmatrix_ok{};
  std::array<std::size_t, 2> strict_columns{};
  bool mmatrix() const { return mmatrix_ok[0] && mmatrix_ok[1]; }
};

struct TransientResult {
  State state;
  std::vector<GummelReport> reports;
  std::vector<DiagnosticsRecord> diagnostics;
  std::optional<std::size_t> failed_step;  ///< 1-based step whose Gummel solve did not converge
  bool ok() const { return !failed_step; }
};

namespace detail {

inline Vector sample(const TetMesh& mesh, const ScalarField& g, double t) {
  Vector v(mesh.num_nodes(), 0.0);
  if (!g) return v;
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = g(mesh.nodes()[k], t);
  return v;
}

inline Vector load_or_zero(const TetMesh& mesh, const ScalarField& g, double t, int degree) {
  return g ? assemble_load(mesh, g, t, degree) : Vector(mesh.num_nodes(), 0.0);
}

inline Vector interior_of(std::span<const double> v, const std::vector<bool>& boundary) {
  Vector out;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!boundary[k]) out.push_back(v[k]);
  return out;
}

inline CsrMatrix interior_block(const CsrMatrix& a, const std::vector<bool>& boundary) {
  std::vector<std::size_t> map(a.size(), CsrMatrix::npos);
  std::size_t m = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!boundary[k]) map[k] = m++;
  TripletBuilder t(m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (boundary[i]) continue;
    for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p)
      if (!boundary[a.col(p)]) t.add(map[i], map[a.col(p)], a.value(p));
  }
  return t.build();
}

}  // namespace detail

/// Transport right-hand side tau G^{n+1} + M P^n.
inline Vector transport_base_rhs(std::span<const double> load_next, std::span<const double> lumped_mass,
                                 std::span<const double> conc_prev, double tau) {
  require_size(lumped_mass.size(), load_next.size(), "lumped mass");
  require_size(conc_prev.size(), load_next.size(), "previous concentration");
  Vector f(load_next.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = tau * load_next[k] + lumped_mass[k] * conc_prev[k];
  return f;
}

/// Backward-Euler time loop with one Gummel solve per step.
inline TransientResult run_transient(const TetMesh& mesh, const SchemeConfig& scheme, const TransientConfig& cfg) {
  scheme.validate();
  const std::size_t steps = cfg.steps();
  const std::size_t n = mesh.num_nodes();
  require_size(cfg.initial.size(), n, "initial state");
  const auto& boundary = mesh.boundary();
  const CsrMatrix stiffness = assemble_stiffness(mesh);
  const Vector mass = lumped_mass_diagonal(mesh);
  const Vector patch = patch_volumes(mesh);
  const Vector patch_int = detail::interior_of(patch, boundary);
  const int q = scheme.quadrature_order;

  TransientResult out;
  out.state = cfg.initial;
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t_next = static_cast<double>(step) * cfg.tau;
    State bc{detail::sample(mesh, cfg.g_u, t_next),
             {detail::sample(mesh, cfg.g_p, t_next), detail::sample(mesh, cfg.g_n, t_next)},
             t_next};
    std::array<Vector, 2> load{detail::load_or_zero(mesh, cfg.f1, t_next, q),
                               detail::load_or_zero(mesh, cfg.f2, t_next, q)};
    std::array<Vector, 2> base{transport_base_rhs(load[0], mass, out.state.conc[0], cfg.tau),
                               transport_base_rhs(load[1], mass, out.state.conc[1], cfg.tau)};
    std::array<const ScalarField*, 2> sources{cfg.f1 ? &cfg.f1 : nullptr, cfg.f2 ? &cfg.f2 : nullptr};

    DiagnosticsRecord diag;
    if (cfg.diagnostics) {
      Vector f_int, g_int, c_floor;
      for (int i = 0; i < 2; ++i) {
        const Vector fi = detail::interior_of(base[i], boundary);
        const Vector gi = detail::interior_of(load[i], boundary);
        const Vector ci = detail::interior_of(out.state.conc[i], boundary);
        f_int.insert(f_int.end(), fi.begin(), fi.end());
        g_int.insert(g_int.end(), gi.begin(), gi.end());
        c_floor.insert(c_floor.end(), ci.begin(), ci.end());
      }
      diag.c_p = 1e-12;
      if (!c_floor.empty()) diag.c_p = std::max(*std::min_element(c_floor.begin(), c_floor.end()), 1e-12);
      if (!patch_int.empty()) {
        BoundConstants bcst = bound_constants(f_int, patch_int, g_int, diag.c_p);
        diag.c_j = bcst.c_j;
        diag.tau_star = bcst.tau_star;
        diag.c_k_min = *std::min_element(bcst.c_k.begin(), bcst.c_k.end());
        diag.c_k_max = *std::max_element(bcst.c_k.begin(), bcst.c_k.end());
        diag.c_k = std::move(bcst.c_k);
      }
    }

    GummelProblem prob(mesh, scheme, cfg.tau, t_next, stiffness, mass,
                       detail::load_or_zero(mesh, cfg.f, t_next, q), std::move(base), out.state.conc, bc,
                       sources);
    State start = out.state;
    start.t = t_next;
    GummelResult gr = gummel_solve(prob, start, cfg.gummel);
    out.reports.push_back(gr.report);

    if (cfg.diagnostics) {
      diag.step = step;
      diag.t = t_next;
      for (int i = 0; i < 2; ++i) {
        const Vector ci = detail::interior_of(gr.state.conc[i], boundary);
        diag.min_conc[i] = ci.empty() ? 0.0 : *std::min_element(ci.begin(), ci.end());
        diag.max_conc[i] = ci.empty() ? 0.0 : *std::max_element(ci.begin(), ci.end());
        const MMatrixReport mr = column_mmatrix_check(detail::interior_block(gr.transport_matrices[i], boundary));
        diag.mmatrix_ok[i] = mr.verdict();
        diag.strict_columns[i] = mr.strict_columns;
      }
      out.diagnostics.push_back(std::move(diag));
    }
    out.state = std::move(gr.state);
    if (!gr.report.converged) {
      out.failed_step = step;
      break;
    }
  }
  return out;
}

}  // namespace pnp

#endif  // PNP_TIMESTEPPER_HPP
