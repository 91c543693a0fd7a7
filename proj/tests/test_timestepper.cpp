#include "pnp/manufactured.hpp"
#include "pnp/studies.hpp"
#include "pnp/timestepper.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace pnp;

TEST(BoundConstants, Examples) {
  const Vector ones(8, 1.0), vols(8, 0.5), g(8, 0.0);
  const BoundConstants b = bound_constants(ones, vols, g, 0.1);
  EXPECT_EQ(b.c_j, 8.0);
  for (double ck : b.c_k) EXPECT_EQ(ck, 64.0);
  EXPECT_TRUE(std::isinf(b.tau_star));

  const Vector gv{0.0, -4.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  Vector v2 = vols;
  v2[3] = 0.25;
  EXPECT_NEAR(bound_constants(ones, v2, gv, 0.2).tau_star, 0.2 * 0.25 / 16.0, 1e-17);

  EXPECT_THROW(bound_constants(ones, Vector(8, 0.0), g, 0.1), DimensionError);
  EXPECT_THROW(bound_constants(ones, vols, g, 0.0), ConfigError);
}

TEST(TransientConfig, StepCount) {
  TransientConfig c;
  c.final_time = 0.25;
  c.tau = 1.0 / 64.0;
  EXPECT_EQ(c.steps(), 16u);
  c.tau = 0.1;
  EXPECT_EQ(c.steps(), 3u);
  c.tau = 0.0;
  EXPECT_THROW(c.steps(), ConfigError);
  c.tau = 0.5;
  EXPECT_THROW(c.steps(), ConfigError);
}

TEST(TransientBase, ExactBookkeeping) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector g(20), m(20), p(20);
  for (std::size_t i = 0; i < 20; ++i) {
    g[i] = u(rng);
    m[i] = 1.0 + u(rng) * 0.5;
    p[i] = u(rng);
  }
  const double tau = 0.0123;
  const Vector f = transport_base_rhs(g, m, p, tau);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(f[i], tau * g[i] + m[i] * p[i]);
}

TEST(RunTransient, ZeroDataStaysZero) {
  const TetMesh mesh = build_box_mesh(3, {0, 0, 0}, {1, 1, 1});
  TransientConfig c;
  c.final_time = 0.1;
  c.tau = 0.025;
  c.initial = State::zeros(mesh.num_nodes());
  for (Scheme s : {Scheme::fem, Scheme::supg, Scheme::eafe}) {
    SchemeConfig sc;
    sc.scheme = s;
    const TransientResult r = run_transient(mesh, sc, c);
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.reports.size(), 4u);
    for (const auto& rep : r.reports) EXPECT_LE(rep.iterations, 1);
    EXPECT_EQ(norm_inf(r.state.conc[0]), 0.0);
    EXPECT_EQ(norm_inf(r.state.phi), 0.0);
    EXPECT_NEAR(r.state.t, 0.1, 1e-15);
    for (const auto& d : r.diagnostics) EXPECT_TRUE(std::isinf(d.tau_star));
  }
}

TEST(RunTransient, ManufacturedEafeH8) {
  const ManufacturedSolution ms;
  const TetMesh mesh = build_box_mesh(8, ms.domain_lo(), ms.domain_hi());
  const double tau = 1.0 / 64.0;
  const TransientConfig c = manufactured_transient(mesh, ms, 0.25, tau, 1e-6, 500, 1e-12);
  const TransientResult r = run_transient(mesh, ms.scheme_config(Scheme::eafe), c);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.reports.size(), 16u);
  ASSERT_EQ(r.diagnostics.size(), 16u);
  const double delta = 1e-8;
  for (const auto& d : r.diagnostics) {
    // exact p, n are nonnegative for t > 0 and bounded by 4.5 pi^2
    for (int i = 0; i < 2; ++i) {
      EXPECT_GE(d.min_conc[i], -delta);
      EXPECT_LE(d.max_conc[i], 4.5 * M_PI * M_PI * 1.05);
    }
    EXPECT_TRUE(d.mmatrix());
    EXPECT_GT(d.c_j, 0.0);
    for (double ck : d.c_k) EXPECT_GT(ck, 0.0);
  }
  for (const auto& rep : r.reports) EXPECT_TRUE(rep.converged);
}

TEST(RunTransient, DiagnosticsMatchDefinitions) {
  const ManufacturedSolution ms;
  const TetMesh mesh = build_box_mesh(4, ms.domain_lo(), ms.domain_hi());
  const TransientConfig c = manufactured_transient(mesh, ms, 0.125, 1.0 / 16.0, 1e-6, 500, 1e-12);
  const TransientResult r = run_transient(mesh, ms.scheme_config(Scheme::fem), c);
  ASSERT_TRUE(r.ok());
  // step 1 from zero state: F = tau G, so C_J = tau * sum of interior loads
  const Vector g1 = assemble_load(mesh, ms.species_source(0), 1.0 / 16.0);
  const Vector g2 = assemble_load(mesh, ms.species_source(1), 1.0 / 16.0);
  const Vector patch = patch_volumes(mesh);
  double cj = 0.0, gmax = 0.0, vmin = INFINITY;
  for (std::size_t k = 0; k < mesh.num_nodes(); ++k) {
    if (mesh.is_boundary(k)) continue;
    cj += (g1[k] + g2[k]) / 16.0;
    gmax = std::max({gmax, std::abs(g1[k]), std::abs(g2[k])});
    vmin = std::min(vmin, patch[k]);
  }
  const DiagnosticsRecord& d = r.diagnostics[0];
  EXPECT_NEAR(d.c_j, cj, 1e-12 * std::abs(cj));
  EXPECT_EQ(d.c_p, 1e-12);  // zero initial data, clamped floor
  EXPECT_NEAR(d.tau_star, 1e-12 * vmin / (4 * gmax), 1e-28);
  EXPECT_NEAR(d.c_k_max, 4 * cj / vmin, 1e-10 * std::abs(cj / vmin));
}

TEST(RunTransient, SingleStepSolvesTransportSystem) {
  // steady data: after one step, P1 solves (M + tau A~) P = F on the interior
  const ManufacturedSolution ms;
  const TetMesh mesh = build_box_mesh(4, ms.domain_lo(), ms.domain_hi());
  const double tau = 0.05;
  TransientConfig c;
  c.final_time = tau;
  c.tau = tau;
  c.initial = State::zeros(mesh.num_nodes());
  c.initial.conc[0] = Vector(mesh.num_nodes(), 1.0);
  c.g_p = [](const Vec3&, double) { return 1.0; };
  c.f1 = [](const Vec3& x, double) { return 1.0 + x[0]; };
  c.f = [](const Vec3& x, double) { return x[1]; };
  c.gummel.tolerance = 1e-10;
  const SchemeConfig sc = ms.scheme_config(Scheme::eafe);
  const TransientResult r = run_transient(mesh, sc, c);
  ASSERT_TRUE(r.ok());
  AssembledNP sys = assemble_np_eafe(mesh, r.state.phi, sc.drift[0], tau);
  Vector rhs = transport_base_rhs(assemble_load(mesh, c.f1, tau), lumped_mass_diagonal(mesh),
                                  Vector(mesh.num_nodes(), 1.0), tau);
  apply_dirichlet(sys.matrix, rhs, mesh.boundary(), Vector(mesh.num_nodes(), 1.0));
  const Vector res = difference(spmv(sys.matrix, r.state.conc[0]), rhs);
  EXPECT_LE(norm2(res), 1e-9 * norm2(rhs));
}

TEST(RunTransient, PoissonConsistencyEachStep) {
  // the accepted potential solves the Poisson system with the previous sweep's
  // concentrations, so against the final ones the residual is bounded by the last increment
  const ManufacturedSolution ms;
  const TetMesh mesh = build_box_mesh(4, ms.domain_lo(), ms.domain_hi());
  const double tau = 1.0 / 16.0;
  const TransientConfig c = manufactured_transient(mesh, ms, tau, tau, 1e-6, 500, 1e-12);
  const TransientResult r = run_transient(mesh, ms.scheme_config(Scheme::eafe), c);
  ASSERT_TRUE(r.ok());
  CsrMatrix a = assemble_stiffness(mesh);
  Vector rhs = assemble_load(mesh, ms.poisson_source(), tau);
  const Vector m = lumped_mass_diagonal(mesh);
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += m[k] * (r.state.conc[0][k] - r.state.conc[1][k]);
  apply_dirichlet(a, rhs, mesh.boundary(), ms.interpolate(mesh, Field::u, tau));
  const double res = norm2(difference(spmv(a, r.state.phi), rhs));
  const auto& last = r.reports.back().increments.back();
  const double mmax = *std::max_element(m.begin(), m.end());
  EXPECT_LE(res, 1e-12 * norm2(rhs) + mmax * (last.l2[0] + last.l2[1]));
}

TEST(RunTransient, PositivityWithHomogeneousData) {
  const TetMesh mesh = build_box_mesh(4, {0, 0, 0}, {1, 1, 1});
  ASSERT_TRUE(mesh_quality_report(mesh).each_tet_has_positive);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  TransientConfig c;
  c.initial = State::zeros(mesh.num_nodes());
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < mesh.num_nodes(); ++k)
      if (!mesh.is_boundary(k)) c.initial.conc[i][k] = u(rng);
  c.tau = 0.01;
  c.final_time = 0.2;
  SchemeConfig sc;
  sc.scheme = Scheme::eafe;
  const TransientResult r = run_transient(mesh, sc, c);
  ASSERT_TRUE(r.ok());
  for (const auto& d : r.diagnostics) {
    EXPECT_TRUE(std::isinf(d.tau_star));
    EXPECT_GT(d.min_conc[0], 0.0);
    EXPECT_GT(d.min_conc[1], 0.0);
    EXPECT_TRUE(d.mmatrix());
  }
}

TEST(RunTransient, NonConvergenceAbortsWithStepIndex) {
  const ManufacturedSolution ms;
  const TetMesh mesh = build_box_mesh(3, ms.domain_lo(), ms.domain_hi());
  TransientConfig c = manufactured_transient(mesh, ms, 0.25, 1.0 / 16.0, 1e-14, 2, 1e-12);
  const TransientResult r = run_transient(mesh, ms.scheme_config(Scheme::eafe), c);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(*r.failed_step, 1u);
  EXPECT_EQ(r.reports.size(), 1u);
  EXPECT_FALSE(r.reports[0].converged);
}
