#ifndef PNP_STUDIES_HPP
#define PNP_STUDIES_HPP

#include "pnp/io.hpp"
#include "pnp/manufactured.hpp"
#include "pnp/timestepper.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

// Study drivers behind the command-line tool. Everything here runs the manufactured
// benchmark on a Kuhn box mesh and reduces the results to CSV tables.

namespace pnp {

enum class TauRule { h2, two_h2, four_h2, value };

struct RunConfig {
  Scheme scheme = Scheme::eafe;
  std::size_t n = 8;
  TauRule tau_rule = TauRule::h2;
  double tau_value = 0.0;  // used when tau_rule == value
  double T = 0.25;
  double eps = 1e-6;
  int max_iter = 500;
  double supg_scale = 1.0;
  double linear_tol = 1e-12;
  std::string out = ".";
  std::vector<std::size_t> sizes{4, 8, 16};
  std::vector<double> multipliers{4.0, 2.0, 1.0};
  double stretch_x = 1.0;  // audit: box length along x
  double perturb = 0.0;    // audit: interior jitter, fraction of the node spacing
  std::uint64_t seed = 1;

  double h(std::size_t subdivisions) const { return 1.0 / static_cast<double>(subdivisions); }

  double resolve_tau(std::size_t subdivisions) const {
    const double hh = h(subdivisions) * h(subdivisions);
    switch (tau_rule) {
      case TauRule::h2: return hh;
      case TauRule::two_h2: return 2.0 * hh;
      case TauRule::four_h2: return 4.0 * hh;
      case TauRule::value: return tau_value;
    }
    return tau_value;
  }

  void validate() const {
    if (n < 1) throw ConfigError("n must be at least 1");
    if (tau_rule == TauRule::value && !(tau_value > 0.0)) throw ConfigError("tau must be positive");
    if (!(T > 0.0)) throw ConfigError("T must be positive");
    if (resolve_tau(n) > T * (1.0 + 1e-12)) throw ConfigError("tau must not exceed T");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (!(supg_scale > 0.0)) throw ConfigError("supg_scale must be positive");
    if (!(linear_tol > 0.0)) throw ConfigError("linear_tol must be positive");
    if (!(stretch_x > 0.0)) throw ConfigError("stretch_x must be positive");
    if (perturb < 0.0 || perturb >= 0.5) throw ConfigError("perturb must lie in [0, 0.5)");
    for (auto s : sizes)
      if (s < 1) throw ConfigError("mesh sizes must be positive");
    for (double m : multipliers)
      if (!(m > 0.0)) throw ConfigError("tau multipliers must be positive");
  }

  /// Canonical key=value text of every field; this is what the config hash covers.
  std::string canonical() const {
    std::ostringstream os;
    os << "scheme=" << to_string(scheme) << '\n' << "n=" << n << '\n' << "tau=" << tau_text() << '\n';
    os << "T=" << format_double(T) << '\n' << "eps=" << format_double(eps) << '\n';
    os << "max_iter=" << max_iter << '\n' << "supg_scale=" << format_double(supg_scale) << '\n';
    os << "linear_tol=" << format_double(linear_tol) << '\n';
    os << "sizes=";
    for (std::size_t i = 0; i < sizes.size(); ++i) os << (i ? "," : "") << sizes[i];
    os << "\nmultipliers=";
    for (std::size_t i = 0; i < multipliers.size(); ++i) os << (i ? "," : "") << format_double(multipliers[i]);
    os << "\nstretch_x=" << format_double(stretch_x) << "\nperturb=" << format_double(perturb);
    os << "\nseed=" << seed << '\n';
    return os.str();
  }

  std::string tau_text() const {
    switch (tau_rule) {
      case TauRule::h2: return "h2";
      case TauRule::two_h2: return "2h2";
      case TauRule::four_h2: return "4h2";
      case TauRule::value: return format_double(tau_value);
    }
    return "?";
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view v) {
  std::vector<T> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_number<T>(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty list for " + std::string(key));
  return out;
}

}  // namespace detail

inline void set_tau(RunConfig& cfg, std::string_view v) {
  if (v == "h2") cfg.tau_rule = TauRule::h2;
  else if (v == "2h2") cfg.tau_rule = TauRule::two_h2;
  else if (v == "4h2") cfg.tau_rule = TauRule::four_h2;
  else {
    cfg.tau_rule = TauRule::value;
    cfg.tau_value = detail::parse_number<double>("tau", v);
  }
}

/// Applies one key=value pair.
inline void set_option(RunConfig& cfg, std::string_view key, std::string_view v) {
  using detail::parse_list;
  using detail::parse_number;
  if (key == "scheme") cfg.scheme = parse_scheme(v);
  else if (key == "n") cfg.n = parse_number<std::size_t>(key, v);
  else if (key == "tau") set_tau(cfg, v);
  else if (key == "T") cfg.T = parse_number<double>(key, v);
  else if (key == "eps") cfg.eps = parse_number<double>(key, v);
  else if (key == "max_iter") cfg.max_iter = parse_number<int>(key, v);
  else if (key == "supg_scale") cfg.supg_scale = parse_number<double>(key, v);
  else if (key == "linear_tol") cfg.linear_tol = parse_number<double>(key, v);
  else if (key == "out") cfg.out = std::string(v);
  else if (key == "sizes") cfg.sizes = parse_list<std::size_t>(key, v);
  else if (key == "multipliers") cfg.multipliers = parse_list<double>(key, v);
  else if (key == "stretch_x") cfg.stretch_x = parse_number<double>(key, v);
  else if (key == "perturb") cfg.perturb = parse_number<double>(key, v);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, v);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Flat key=value text, '#' starts a comment.
inline RunConfig parse_config(std::string_view text, RunConfig cfg = {}) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    set_option(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

// ---- single runs ---------------------------------------------------------------

struct ExampleRun {
  TransientResult result;
  ErrorNorms u, p, n;
  double h = 0.0;
  double tau = 0.0;
  std::optional<std::string> error;  // solver failure message
  bool ok() const { return !error && result.ok(); }
};

inline TransientConfig manufactured_transient(const TetMesh& mesh, const ManufacturedSolution& ms, double T,
                                              double tau, double eps, int max_iter, double linear_tol) {
  TransientConfig tc;
  tc.final_time = T;
  tc.tau = tau;
  tc.initial = State::zeros(mesh.num_nodes());
  tc.initial.phi = ms.interpolate(mesh, Field::u, 0.0);
  tc.g_u = ms.field(Field::u);
  tc.g_p = ms.field(Field::p);
  tc.g_n = ms.field(Field::n);
  tc.f = ms.poisson_source();
  tc.f1 = ms.species_source(0);
  tc.f2 = ms.species_source(1);
  tc.gummel.tolerance = eps;
  tc.gummel.max_iterations = max_iter;
  tc.gummel.linear.tol = linear_tol;
  return tc;
}

inline SchemeConfig study_scheme(const RunConfig& cfg, Scheme s, const ManufacturedSolution& ms) {
  SchemeConfig sc = ms.scheme_config(s);
  sc.supg_scale = cfg.supg_scale;
  return sc;
}

/// One transient run of the benchmark on the unit box with n subdivisions.
inline ExampleRun run_example(const RunConfig& cfg, Scheme scheme, std::size_t n, double tau) {
  const ManufacturedSolution ms;
  const TetMesh mesh = build_box_mesh(n, ms.domain_lo(), ms.domain_hi());
  ExampleRun run;
  run.h = cfg.h(n);
  run.tau = tau;
  const TransientConfig tc = manufactured_transient(mesh, ms, cfg.T, tau, cfg.eps, cfg.max_iter, cfg.linear_tol);
  try {
    run.result = run_transient(mesh, study_scheme(cfg, scheme, ms), tc);
  } catch (const SolverError& e) {
    run.error = e.what();
    return run;
  }
  const State& s = run.result.state;
  run.u = error_norms(mesh, s.phi, ms, Field::u, s.t);
  run.p = error_norms(mesh, s.conc[0], ms, Field::p, s.t);
  run.n = error_norms(mesh, s.conc[1], ms, Field::n, s.t);
  return run;
}

// ---- studies ---------------------------------------------------------------------

struct StudyOutput {
  CsvTable table;
  bool all_converged = true;
  std::string csv(const RunConfig& cfg) const { return table.str(cfg.canonical()); }
};

inline double observed_rate(double coarse, double fine, double h_coarse, double h_fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(coarse / fine) / std::log(h_coarse / h_fine);
}

/// One run per mesh size for cfg.scheme; rates are log(e_H/e_h)/log(H/h) against the previous row.
inline StudyOutput run_convergence_study(const RunConfig& cfg, const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw ConfigError("convergence study needs at least 2 mesh sizes");
  StudyOutput out{CsvTable({"scheme", "h", "tau", "L2_u", "H1_u", "L2_p", "H1_p", "L2_n", "H1_n", "rate_L2_u",
                            "rate_H1_u", "rate_L2_p", "rate_H1_p", "rate_L2_n", "rate_H1_n", "status"})};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::optional<ExampleRun> prev;
  for (std::size_t n : sizes) {
    ExampleRun run = run_example(cfg, cfg.scheme, n, cfg.resolve_tau(n));
    std::vector<CsvTable::Cell> row{std::string(to_string(cfg.scheme)), run.h, run.tau};
    const bool ok = run.ok();
    const std::array<double, 6> e = ok ? std::array<double, 6>{run.u.l2, run.u.h1_semi, run.p.l2, run.p.h1_semi,
                                                                run.n.l2, run.n.h1_semi}
                                       : std::array<double, 6>{nan, nan, nan, nan, nan, nan};
    for (double v : e) row.emplace_back(v);
    std::array<double, 6> pe{nan, nan, nan, nan, nan, nan};
    if (prev && prev->ok())
      pe = {prev->u.l2, prev->u.h1_semi, prev->p.l2, prev->p.h1_semi, prev->n.l2, prev->n.h1_semi};
    for (int i = 0; i < 6; ++i) row.emplace_back(prev ? observed_rate(pe[i], e[i], prev->h, run.h) : nan);
    row.emplace_back(std::string(ok ? "ok" : "failed"));
    out.table.add_row(std::move(row));
    out.all_converged = out.all_converged && ok;
    prev = std::move(run);
  }
  return out;
}

/// fem, supg and eafe on the cfg.n mesh for tau = m h^2, m in `multipliers`.
inline StudyOutput run_contraction_study(const RunConfig& cfg, const std::vector<double>& multipliers) {
  if (multipliers.empty()) throw ConfigError("contraction study needs at least one tau multiplier");
  for (double m : multipliers)
    if (!(m > 0.0)) throw ConfigError("tau multipliers must be positive");
  StudyOutput out{CsvTable({"scheme", "tau", "alpha_bar", "rate", "max_ratio", "max_iterations", "status"})};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double hh = cfg.h(cfg.n) * cfg.h(cfg.n);
  for (Scheme s : {Scheme::fem, Scheme::supg, Scheme::eafe}) {
    double prev_alpha = nan;
    for (double m : multipliers) {
      const double tau = m * hh;
      ExampleRun run = run_example(cfg, s, cfg.n, tau);
      double alpha = nan, max_ratio = nan;
      long long max_it = 0;
      if (!run.result.reports.empty()) {
        const ContractionSummary cs = contraction_stats(run.result.reports);
        alpha = cs.alpha_bar;
        max_ratio = cs.max_ratio;
        for (const auto& r : run.result.reports) max_it = std::max<long long>(max_it, r.iterations);
      }
      const double rate = std::isnan(prev_alpha) || !(alpha > 0.0) ? nan : prev_alpha / alpha;
      out.table.add_row({std::string(to_string(s)), tau, alpha, rate, max_ratio, max_it,
                         std::string(run.ok() ? "ok" : "failed")});
      out.all_converged = out.all_converged && run.ok();
      prev_alpha = alpha;
    }
  }
  return out;
}

/// Mesh used by the audit: the benchmark box, optionally stretched along x and jittered.
inline TetMesh audit_mesh(const RunConfig& cfg) {
  const ManufacturedSolution ms;
  Vec3 lo = ms.domain_lo(), hi = ms.domain_hi();
  lo[0] *= cfg.stretch_x;
  hi[0] *= cfg.stretch_x;
  TetMesh mesh = build_box_mesh(cfg.n, lo, hi);
  if (cfg.perturb > 0.0) mesh = perturb_interior(mesh, cfg.perturb, cfg.seed);
  return mesh;
}

/// Per step and species: omega census of the mesh, M-matrix verdict of the final
/// transport matrix (interior block) and the tau_* diagnostic.
inline StudyOutput run_mmatrix_audit(const RunConfig& cfg) {
  cfg.validate();
  const ManufacturedSolution ms;
  const TetMesh mesh = audit_mesh(cfg);
  const MeshQualityReport q = mesh_quality_report(mesh);
  std::size_t negative = 0;
  for (const auto& v : q.violations)
    if (v.omega < 0.0) ++negative;
  StudyOutput out{CsvTable({"step", "t", "species", "omega_positive_fraction", "omega_negative", "mmatrix_ok",
                            "strict_columns", "tau_star", "status"})};
  const TransientConfig tc =
      manufactured_transient(mesh, ms, cfg.T, cfg.resolve_tau(cfg.n), cfg.eps, cfg.max_iter, cfg.linear_tol);
  TransientResult res;
  try {
    res = run_transient(mesh, study_scheme(cfg, cfg.scheme, ms), tc);
  } catch (const SolverError&) {
    out.all_converged = false;
    return out;
  }
  for (std::size_t k = 0; k < res.diagnostics.size(); ++k) {
    const auto& d = res.diagnostics[k];
    const bool ok = !(res.failed_step && *res.failed_step == d.step);
    for (int i = 0; i < 2; ++i)
      out.table.add_row({static_cast<long long>(d.step), d.t, static_cast<long long>(i + 1), q.positive_fraction,
                         static_cast<long long>(negative), static_cast<long long>(d.mmatrix_ok[i]),
                         static_cast<long long>(d.strict_columns[i]), d.tau_star,
                         std::string(ok ? "ok" : "failed")});
  }
  out.all_converged = res.ok();
  return out;
}

/// History of a single transient run: one row per step.
inline StudyOutput run_history(const RunConfig& cfg) {
  cfg.validate();
  const ManufacturedSolution ms;
  const TetMesh mesh = build_box_mesh(cfg.n, ms.domain_lo(), ms.domain_hi());
  StudyOutput out{CsvTable({"step", "t", "gummel_iterations", "alpha_bar", "min_p1", "min_p2", "C_J", "tau_star",
                            "mmatrix_ok"})};
  const TransientConfig tc =
      manufactured_transient(mesh, ms, cfg.T, cfg.resolve_tau(cfg.n), cfg.eps, cfg.max_iter, cfg.linear_tol);
  TransientResult res;
  try {
    res = run_transient(mesh, study_scheme(cfg, cfg.scheme, ms), tc);
  } catch (const SolverError&) {
    out.all_converged = false;
    return out;
  }
  for (std::size_t k = 0; k < res.diagnostics.size(); ++k) {
    const auto& d = res.diagnostics[k];
    const auto& r = res.reports[k];
    out.table.add_row({static_cast<long long>(d.step), d.t, static_cast<long long>(r.iterations), r.alpha_bar,
                       d.min_conc[0], d.min_conc[1], d.c_j, d.tau_star, static_cast<long long>(d.mmatrix())});
  }
  out.all_converged = res.ok();
  return out;
}

}  // namespace pnp

#endif  // PNP_STUDIES_HPP
