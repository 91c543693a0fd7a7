#ifndef PNP_GUMMEL_HPP
#define PNP_GUMMEL_HPP

#include "pnp/assembly.hpp"
#include "pnp/solvers.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

/** @file pnp/gummel.hpp
    @brief Decoupled fixed-point (Gummel) iteration for one backward-Euler step.

    Each sweep solves the Poisson equation with the concentrations of the previous
    sweep, then both transport equations with the new potential:

      A_L Phi^{l+1}                    = G_Phi + sum_i z_i M P_i^l
      (M + tau A~_i(Phi^{l+1})) P_i^{l+1} = tau G_i + M P_i^n
*/

namespace pnp {

/// Potential and concentrations at one time level.
struct State {
  Vector phi;
  std::array<Vector, 2> conc;
  double t = 0.0;

  static State zeros(std::size_t n, double t = 0.0) { return {Vector(n, 0.0), {Vector(n, 0.0), Vector(n, 0.0)}, t}; }
  std::size_t size() const { return phi.size(); }
};

/// Increments of one sweep, as Euclidean norms of the DOF vectors and as max norms.
struct GummelIncrement {
  std::array<double, 3> l2{};   ///< (P1, P2, Phi)
  std::array<double, 3> max{};  ///< (P1, P2, Phi)
  double combined_l2() const { return l2[0] + l2[1] + l2[2]; }
  double conc_max() const { return std::max(max[0], max[1]); }
};

struct GummelReport {
  int iterations = 0;
  std::vector<GummelIncrement> increments;
  /// alpha^(l) = ||P^{l+1} - P^l||_inf / ||P^l - P^{l-1}||_inf, l >= 1
  std::vector<double> ratios;
  double alpha_bar = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int linear_iterations = 0;
};

// Linear solves start from zero and run to 1e-12: a warm start that already meets the
// residual test returns a zero increment, which shows up as a spurious alpha = 0.
struct GummelOptions {
  double tolerance = 1e-6;
  int max_iterations = 500;
  SolverOptions linear{1e-12};
};

/// Everything that is fixed during the sweeps of one time step t^n -> t^{n+1}.
class GummelProblem {
public:
  GummelProblem(const TetMesh& mesh, SchemeConfig cfg, double tau, double t_next, const CsrMatrix& stiffness,
                Vector lumped_mass, Vector poisson_load, std::array<Vector, 2> transport_base,
                std::array<Vector, 2> conc_prev, State boundary_values,
                std::array<const ScalarField*, 2> sources = {nullptr, nullptr})
      : mesh_(mesh), cfg_(std::move(cfg)), tau_(tau), t_next_(t_next), mass_(std::move(lumped_mass)),
        poisson_load_(std::move(poisson_load)), base_(std::move(transport_base)), prev_(std::move(conc_prev)),
        bc_(std::move(boundary_values)), sources_(sources) {
    cfg_.validate();
    if (!(tau_ > 0.0)) throw ConfigError("time step must be positive");
    const std::size_t n = mesh.num_nodes();
    require_size(mass_.size(), n, "lumped mass");
    require_size(poisson_load_.size(), n, "Poisson load");
    require_size(bc_.size(), n, "boundary values");
    for (int i = 0; i < 2; ++i) {
      require_size(base_[i].size(), n, "transport rhs");
      require_size(prev_[i].size(), n, "previous concentration");
      require_size(bc_.conc[i].size(), n, "boundary values");
    }
    poisson_ = stiffness;
    poisson_lift_.assign(n, 0.0);
    apply_dirichlet(poisson_, poisson_lift_, mesh.boundary(), bc_.phi);
  }

  const TetMesh& mesh() const { return mesh_; }
  const SchemeConfig& scheme() const { return cfg_; }
  double tau() const { return tau_; }
  double t_next() const { return t_next_; }
  const Vector& lumped_mass() const { return mass_; }
  const CsrMatrix& constrained_poisson() const { return poisson_; }

  /// Poisson right-hand side G_Phi + sum_i z_i M P_i (before boundary treatment).
  Vector poisson_rhs(const State& iterate) const {
    Vector b = poisson_load_;
    for (int i = 0; i < 2; ++i) {
      const double z = cfg_.charges[i];
      for (std::size_t k = 0; k < b.size(); ++k) b[k] += z * mass_[k] * iterate.conc[i][k];
    }
    return b;
  }

  /// Constrained Poisson system solve for the given concentrations.
  Vector solve_poisson(const State& iterate, const SolverOptions& opt, int* iterations = nullptr) const {
    Vector b = poisson_rhs(iterate);
    const auto& bnd = mesh_.boundary();
    for (std::size_t k = 0; k < b.size(); ++k) b[k] = bnd[k] ? bc_.phi[k] : b[k] + poisson_lift_[k];
    SolveResult r = solve_spd(poisson_, b, opt);
    if (iterations) *iterations += r.iterations;
    return std::move(r.x);
  }

  /// Constrained transport system of species i for potential phi.
  AssembledNP transport_system(std::span<const double> phi, int species) const {
    NpRhsInputs in{base_[species], prev_[species], sources_[species], t_next_};
    AssembledNP sys = assemble_np_system(mesh_, cfg_, phi, species, tau_, in);
    apply_dirichlet(sys.matrix, sys.rhs, mesh_.boundary(), bc_.conc[species]);
    return sys;
  }

private:
  const TetMesh& mesh_;
  SchemeConfig cfg_;
  double tau_;
  double t_next_;
  Vector mass_;
  Vector poisson_load_;
  std::array<Vector, 2> base_;
  std::array<Vector, 2> prev_;
  State bc_;
  std::array<const ScalarField*, 2> sources_;
  CsrMatrix poisson_;
  Vector poisson_lift_;
};

/// One sweep: Poisson with the current concentrations, then transport with the new potential.
/// When `final_matrices` is given, the constrained transport matrices are stored there.
inline State gummel_step(const GummelProblem& prob, const State& iterate, const SolverOptions& opt = {},
                         int* linear_iterations = nullptr, std::array<CsrMatrix, 2>* final_matrices = nullptr) {
  require_size(iterate.size(), prob.mesh().num_nodes(), "Gummel iterate");
  State next;
  next.t = prob.t_next();
  next.phi = prob.solve_poisson(iterate, opt, linear_iterations);
  for (int i = 0; i < 2; ++i) {
    AssembledNP sys = prob.transport_system(next.phi, i);
    SolveResult r = solve_general(sys.matrix, sys.rhs, opt);
    if (linear_iterations) *linear_iterations += r.iterations;
    next.conc[i] = std::move(r.x);
    if (final_matrices) (*final_matrices)[i] = std::move(sys.matrix);
  }
  return next;
}

struct GummelResult {
  State state;
  GummelReport report;
  std::array<CsrMatrix, 2> transport_matrices;  ///< constrained, from the last sweep
};

/// Sweeps from `start` until ||dP1||_2 + ||dP2||_2 + ||dPhi||_2 <= tolerance.
/// Hitting the iteration cap yields converged = false rather than an exception.
inline GummelResult gummel_solve(const GummelProblem& prob, const State& start, const GummelOptions& opt = {}) {
  if (!(opt.tolerance > 0.0)) throw ConfigError("Gummel tolerance must be positive");
  if (opt.max_iterations < 1) throw ConfigError("Gummel iteration cap must be at least 1");
  GummelResult res;
  State current = start;
  for (int l = 0; l < opt.max_iterations; ++l) {
    State next;
    try {
      next = gummel_step(prob, current, opt.linear, &res.report.linear_iterations, &res.transport_matrices);
    } catch (const SolverError& e) {
      throw SolverError("Gummel sweep " + std::to_string(l + 1) + ": " + e.what(), e.residual(), e.iterations());
    }
    GummelIncrement inc;
    for (int i = 0; i < 2; ++i) {
      const Vector d = difference(next.conc[i], current.conc[i]);
      inc.l2[i] = norm2(d);
      inc.max[i] = norm_inf(d);
    }
    const Vector dphi = difference(next.phi, current.phi);
    inc.l2[2] = norm2(dphi);
    inc.max[2] = norm_inf(dphi);

    if (!res.report.increments.empty()) {
      const double prev = res.report.increments.back().conc_max();
      if (prev > 0.0) res.report.ratios.push_back(inc.conc_max() / prev);
    }
    res.report.increments.push_back(inc);
    res.report.iterations = l + 1;
    current = std::move(next);
    if (inc.combined_l2() <= opt.tolerance) {
      res.report.converged = true;
      break;
    }
  }
  if (!res.report.ratios.empty())
    res.report.alpha_bar = std::accumulate(res.report.ratios.begin(), res.report.ratios.end(), 0.0) /
                           static_cast<double>(res.report.ratios.size());
  res.state = std::move(current);
  return res;
}

struct ContractionSummary {
  double alpha_bar = std::numeric_limits<double>::quiet_NaN();  ///< mean of per-step alpha_bar
  double max_ratio = 0.0;
  std::size_t steps_used = 0;
};

/// Time average of the per-step mean contraction factors. Steps without ratios are skipped.
inline ContractionSummary contraction_stats(std::span<const GummelReport> reports) {
  if (reports.empty()) throw ConfigError("contraction_stats needs at least one report");
  ContractionSummary s;
  double sum = 0.0;
  for (const auto& r : reports) {
    for (double a : r.ratios) s.max_ratio = std::max(s.max_ratio, a);
    if (r.ratios.empty()) continue;
    sum += r.alpha_bar;
    ++s.steps_used;
  }
  if (s.steps_used > 0) s.alpha_bar = sum / static_cast<double>(s.steps_used);
  return s;
}

/// Ratio alpha_bar(2 tau) / alpha_bar(tau) for paired runs.
inline double contraction_rate(double alpha_bar_coarse, double alpha_bar_fine) {
  if (!(alpha_bar_fine > 0.0)) throw ConfigError("contraction rate needs a positive fine-step alpha_bar");
  return alpha_bar_coarse / alpha_bar_fine;
}

}  // namespace pnp

#endif  // PNP_GUMMEL_HPP
