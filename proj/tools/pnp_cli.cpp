// pnp_cli: study drivers for the drift-diffusion benchmark.
//
//   pnp_cli converge --scheme eafe --config study.cfg --out results
//   pnp_cli contract --n 16
//   pnp_cli audit --n 4 --tau h2
//   pnp_cli run --n 8 --T 0.25
//   pnp_cli mesh --n 4
//
// Exit codes: 0 ok, 2 config error, 3 solver non-convergence, 4 I/O error.

#include "pnp/studies.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;
constexpr int kIoError = 4;

struct Flags {
  std::string config;
  std::optional<std::string> scheme, tau, out, sizes, multipliers;
  std::optional<std::size_t> n;
  std::optional<double> T, eps;
};

pnp::RunConfig resolve(const Flags& f) {
  pnp::RunConfig cfg;
  if (!f.config.empty()) cfg = pnp::parse_config(pnp::read_text_file(f.config));
  if (f.scheme) pnp::set_option(cfg, "scheme", *f.scheme);
  if (f.n) cfg.n = *f.n;
  if (f.tau) pnp::set_tau(cfg, *f.tau);
  if (f.T) cfg.T = *f.T;
  if (f.eps) cfg.eps = *f.eps;
  if (f.out) cfg.out = *f.out;
  if (f.sizes) pnp::set_option(cfg, "sizes", *f.sizes);
  if (f.multipliers) pnp::set_option(cfg, "multipliers", *f.multipliers);
  cfg.validate();
  return cfg;
}

int emit(const pnp::RunConfig& cfg, const pnp::StudyOutput& s, const char* name) {
  const auto path = std::filesystem::path(cfg.out) / name;
  pnp::write_text_file(path, s.csv(cfg));
  std::cout << path.string() << '\n';
  if (!s.all_converged) {
    std::cerr << "pnp_cli: at least one run did not converge (partial table written)\n";
    return kSolverError;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite element drift-diffusion solver: convergence, contraction and M-matrix studies"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--scheme", f.scheme, "fem | supg | eafe");
  app.add_option("--n", f.n, "subdivisions per axis (h = 1/n)");
  app.add_option("--tau", f.tau, "time step: h2 | 2h2 | 4h2 | <value>");
  app.add_option("--T", f.T, "final time");
  app.add_option("--eps", f.eps, "Gummel tolerance");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--sizes", f.sizes, "comma separated mesh sizes (converge)");
  app.add_option("--multipliers", f.multipliers, "comma separated tau/h^2 multipliers (contract)");

  auto* converge = app.add_subcommand("converge", "h-convergence of errors at t = T, writes errors.csv");
  auto* contract = app.add_subcommand("contract", "Gummel contraction factors for all schemes, writes contraction.csv");
  auto* audit = app.add_subcommand("audit", "omega census and M-matrix verdicts per step, writes audit.csv");
  auto* run = app.add_subcommand("run", "single transient run, writes history.csv");
  auto* mesh = app.add_subcommand("mesh", "dump the box mesh, writes mesh.txt");
  for (auto* sub : {converge, contract, audit, run, mesh}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    const pnp::RunConfig cfg = resolve(f);
    if (*converge) return emit(cfg, pnp::run_convergence_study(cfg, cfg.sizes), "errors.csv");
    if (*contract) return emit(cfg, pnp::run_contraction_study(cfg, cfg.multipliers), "contraction.csv");
    if (*audit) return emit(cfg, pnp::run_mmatrix_audit(cfg), "audit.csv");
    if (*run) return emit(cfg, pnp::run_history(cfg), "history.csv");
    if (*mesh) {
      const auto path = std::filesystem::path(cfg.out) / "mesh.txt";
      pnp::write_text_file(path, pnp::mesh_text(pnp::audit_mesh(cfg)));
      std::cout << path.string() << '\n';
      return 0;
    }
  } catch (const pnp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const pnp::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const pnp::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolverError;
  } catch (const pnp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return 0;
}
