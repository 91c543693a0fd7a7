#include "oracle/oracle.hpp"
#include "pnp/assembly.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pnp;

namespace {

double max_diff(const CsrMatrix& a, const oracle::Dense& d) {
  double m = 0.0;
  const auto dense = a.to_dense();
  for (std::size_t i = 0; i < dense.size(); ++i) m = std::max(m, std::abs(dense[i] - d.a[i]));
  return m;
}

Vector random_phi(const TetMesh& mesh, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-amp, amp);
  Vector v(mesh.num_nodes());
  for (double& x : v) x = u(rng);
  return v;
}

TetMesh two_tets() {
  std::vector<Vec3> x{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  return TetMesh(std::move(x), {Tet{0, 1, 2, 3}, Tet{1, 2, 3, 4}});
}

TetMesh reference_tet() { return TetMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {Tet{0, 1, 2, 3}}); }

}  // namespace

TEST(Stiffness, RowSumsZeroAndSymmetric) {
  const TetMesh mesh = perturb_interior(build_box_mesh(3, {0, 0, 0}, {1, 1, 1}), 0.2, 1);
  const CsrMatrix a = assemble_stiffness(mesh);
  for (double s : a.row_sums()) EXPECT_NEAR(s, 0.0, 1e-13);
  EXPECT_EQ(max_abs_difference(a, a.transpose()), 0.0);
}

TEST(Stiffness, MatchesOracle) {
  const TetMesh mesh = build_box_mesh(2, {0, 0, 0}, {1, 1, 1});
  EXPECT_LE(max_diff(assemble_stiffness(mesh), oracle::stiffness(mesh)), 1e-13);
}

TEST(Stiffness, DirichletRowsBecomeIdentity) {
  const TetMesh mesh = build_box_mesh(2, {0, 0, 0}, {1, 1, 1});
  CsrMatrix a = assemble_stiffness(mesh);
  Vector b(mesh.num_nodes(), 1.0), g(mesh.num_nodes(), 3.0);
  apply_dirichlet(a, b, mesh.boundary(), g);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!mesh.is_boundary(i)) continue;
    EXPECT_EQ(a.row_end(i) - a.row_begin(i), 1u);
    EXPECT_EQ(a(i, i), 1.0);
    EXPECT_EQ(b[i], 3.0);
  }
  EXPECT_EQ(max_abs_difference(a, a.transpose()), 0.0);
}

TEST(LumpedMass, Examples) {
  const Vec3 lo{-0.5, -0.5, -0.5}, hi{0.5, 1.0, 0.5};
  const TetMesh mesh = build_box_mesh(3, lo, hi);
  const Vector m = lumped_mass_diagonal(mesh);
  double s = 0.0;
  for (double v : m) {
    EXPECT_GT(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 1.5, 1e-13);
  EXPECT_LE(max_diff(assemble_lumped_mass(mesh), oracle::lumped_mass(mesh)), 1e-13);

  // both ends of the main diagonal are shared by all six tets
  const TetMesh cube = build_box_mesh(1, {0, 0, 0}, {1, 1, 1});
  const Vector mc = lumped_mass_diagonal(cube);
  EXPECT_NEAR(mc[0], 0.25, 1e-15);
  EXPECT_NEAR(mc[7], 0.25, 1e-15);

  const TetMesh one = reference_tet();
  for (double v : lumped_mass_diagonal(one)) EXPECT_NEAR(v, 1.0 / 24.0, 1e-16);
}

TEST(ConsistentMass, MatchesOracle) {
  const TetMesh mesh = two_tets();
  EXPECT_LE(max_diff(assemble_consistent_mass(mesh), oracle::consistent_mass(mesh)), 1e-14);
}

TEST(Convection, ZeroPotentialAndColumnSums) {
  const TetMesh mesh = build_box_mesh(3, {0, 0, 0}, {1, 1, 1});
  const CsrMatrix c0 = assemble_convection(mesh, Vector(mesh.num_nodes(), 0.0));
  for (double v : c0.values()) EXPECT_EQ(v, 0.0);
  std::mt19937_64 rng(3);
  const CsrMatrix c = assemble_convection(mesh, random_phi(mesh, rng, 2.0));
  for (double s : c.column_sums()) EXPECT_NEAR(s, 0.0, 1e-13);
  EXPECT_THROW(assemble_convection(mesh, Vector(3, 0.0)), DimensionError);
}

TEST(Convection, LinearPotentialOnSingleTet) {
  const TetMesh mesh = reference_tet();
  Vector phi(4);
  for (int i = 0; i < 4; ++i) phi[i] = mesh.nodes()[i][0];
  EXPECT_LE(max_diff(assemble_convection(mesh, phi), oracle::convection(mesh, phi)), 1e-13);
}

TEST(Load, Examples) {
  const TetMesh mesh = build_box_mesh(2, {0, 0, 0}, {1, 1, 1});
  const Vector one = assemble_load(mesh, [](const Vec3&, double) { return 1.0; }, 0.0);
  const Vector m = lumped_mass_diagonal(mesh);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(one[i], m[i], 1e-15);
  for (double v : assemble_load(mesh, [](const Vec3&, double) { return 0.0; }, 0.0)) EXPECT_EQ(v, 0.0);

  // int_K x lambda_k over the reference tet: 1/60 at vertex (1,0,0), 1/120 elsewhere
  const Vector fx = assemble_load(reference_tet(), [](const Vec3& x, double) { return x[0]; }, 0.0);
  EXPECT_NEAR(fx[0], 1.0 / 120.0, 1e-15);
  EXPECT_NEAR(fx[1], 1.0 / 60.0, 1e-15);
  EXPECT_NEAR(fx[2], 1.0 / 120.0, 1e-15);
  EXPECT_NEAR(fx[3], 1.0 / 120.0, 1e-15);
}

TEST(Load, HigherDegreeMatchesOracle) {
  const TetMesh mesh = perturb_interior(build_box_mesh(2, {0, 0, 0}, {1, 1, 1}), 0.2, 4);
  auto g = [](const Vec3& x) { return x[0] * x[0] * x[1] - 3.0 * x[2] * x[2] * x[2] + x[1] * x[2]; };
  const Vector ref = oracle::load(mesh, g);
  const Vector f = assemble_load(mesh, [&](const Vec3& x, double) { return g(x); }, 0.0, 4);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], ref[i], 1e-14);
}

TEST(Bernoulli, Values) {
  EXPECT_EQ(bernoulli(0.0), 1.0);
  EXPECT_NEAR(bernoulli(1.0), 1.0 / (std::exp(1.0) - 1.0), 1e-15);
  EXPECT_NEAR(bernoulli(1.0), 0.5819767068693265, 1e-15);
  for (double t : {1e-8, 1.0, 50.0}) EXPECT_NEAR(bernoulli(-t) - bernoulli(t), t, 1e-14 * std::max(1.0, t));
  // series branch against the closed form where the latter is still accurate
  for (double t : {-1e-3, -3e-4, 2e-4, 1e-3}) EXPECT_NEAR(bernoulli(t), t / std::expm1(t), 1e-15);
  double prev = bernoulli(-60.0);
  for (double t = -60.0; t <= 60.0; t += 0.37) {
    const double b = bernoulli(t);
    EXPECT_GT(b, 0.0);
    EXPECT_LE(b, prev);
    prev = b;
  }
  EXPECT_GT(bernoulli(700.0), 0.0);
  EXPECT_TRUE(std::isfinite(bernoulli(-700.0)));
}

TEST(EdgeAverage, Identities) {
  EXPECT_EQ(edge_harmonic_average(0.0, 0.0), 1.0);
  EXPECT_NEAR(edge_harmonic_average(0.7, 0.7), std::exp(-0.7), 1e-15);
  std::vector<double> x, w;
  oracle::gauss_legendre(64, x, w);
  double mean = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) mean += w[q] * std::exp(x[q]);
  EXPECT_NEAR(edge_harmonic_average(0.0, 1.0), 1.0 / mean, 1e-12);
  EXPECT_NEAR(edge_harmonic_average(0.0, 1.0), 0.5819767068693265, 1e-12);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng);
    const double al = edge_harmonic_average(a, b);
    EXPECT_GT(al, 0.0);
    EXPECT_NEAR(al, edge_harmonic_average(b, a), 1e-13 * al);
    EXPECT_NEAR(al * std::exp(b) - al * std::exp(a), b - a, 1e-12 * std::max(1.0, std::abs(b - a)));
  }
}

TEST(NpFem, Examples) {
  const TetMesh mesh = build_box_mesh(2, {0, 0, 0}, {1, 1, 1});
  const double tau = 0.03;
  const Vector zero(mesh.num_nodes(), 0.0);
  const AssembledNP s0 = assemble_np_fem(mesh, zero, 0.5, tau);
  const oracle::Dense ref0 = oracle::combine(1.0, oracle::lumped_mass(mesh), tau, oracle::stiffness(mesh));
  EXPECT_LE(max_diff(s0.matrix, ref0), 1e-14);
  for (double v : s0.rhs) EXPECT_EQ(v, 0.0);

  const AssembledNP tiny = assemble_np_fem(mesh, zero, 0.5, 1e-300);
  EXPECT_LE(max_diff(tiny.matrix, oracle::lumped_mass(mesh)), 1e-15);

  std::mt19937_64 rng(8);
  const Vector phi = random_phi(mesh, rng, 1.0);
  const double c = -0.7;
  const AssembledNP s = assemble_np_fem(mesh, phi, c, tau);
  const oracle::Dense tr = oracle::combine(1.0, oracle::stiffness(mesh), c, oracle::convection(mesh, phi));
  EXPECT_LE(max_diff(s.matrix, oracle::combine(1.0, oracle::lumped_mass(mesh), tau, tr)), 1e-13);
  EXPECT_THROW(assemble_np_fem(mesh, phi, c, 0.0), ConfigError);
}

TEST(NpSupg, ZeroPotentialEqualsFem) {
  const TetMesh mesh = build_box_mesh(2, {0, 0, 0}, {1, 1, 1});
  const Vector zero(mesh.num_nodes(), 0.0);
  const AssembledNP s = assemble_np_supg(mesh, zero, 1.0, 0.1, 1.0);
  const AssembledNP f = assemble_np_fem(mesh, zero, 1.0, 0.1);
  EXPECT_EQ(max_abs_difference(s.matrix, f.matrix), 0.0);
}

TEST(NpSupg, ParameterAtPecletOne) {
  const double h = 0.25, speed = 2.0 / h;  // P_K = h speed / 2 = 1
  EXPECT_NEAR(supg_ck(h, speed, 1.0), h / (2.0 * speed), 1e-16);
  EXPECT_NEAR(h / (2.0 * speed), h * h / 4.0, 1e-16);
  EXPECT_NEAR(supg_ck(h, speed * (1 - 1e-12), 1.0), h * h / 4.0, 1e-16);
  EXPECT_NEAR(supg_ck(h, 100.0, 0.5), 0.5 * h / 200.0, 1e-16);
  EXPECT_NEAR(supg_ck(h, 1.0, 0.5), 0.5 * h * h / 4.0, 1e-16);
}

TEST(NpSupg, BlocksMatchOracleOnTwoTets) {
  const TetMesh mesh = two_tets();
  // manufactured-like potential, scaled so one element is in each Peclet branch
  for (double c : {0.179, 40.0}) {
    Vector phi(mesh.num_nodes());
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const auto& x = mesh.nodes()[i];
      phi[i] = std::cos(x[0]) * std::cos(2 * x[1]) * std::cos(x[2]);
    }
    const SupgBlocks b = assemble_supg_blocks(mesh, phi, c, 1.3);
    EXPECT_LE(max_diff(b.streamline, oracle::supg_streamline(mesh, phi, c, 1.3)), 1e-12);
    EXPECT_LE(max_diff(b.time, oracle::supg_time(mesh, phi, c, 1.3)), 1e-12);

    const double tau = 0.02;
    const AssembledNP s = assemble_np_supg(mesh, phi, c, tau, 1.3);
    oracle::Dense tr = oracle::combine(1.0, oracle::stiffness(mesh), c, oracle::convection(mesh, phi));
    tr = oracle::combine(1.0, tr, 1.0, oracle::supg_streamline(mesh, phi, c, 1.3));
    oracle::Dense ref = oracle::combine(1.0, oracle::lumped_mass(mesh), tau, tr);
    ref = oracle::combine(1.0, ref, 1.0, oracle::supg_time(mesh, phi, c, 1.3));
    EXPECT_LE(max_diff(s.matrix, ref), 1e-12);
  }
}

TEST(NpEafe, ZeroPotentialIsStiffness) {
  const TetMesh mesh = perturb_interior(build_box_mesh(3, {0, 0, 0}, {1, 1, 1}), 0.15, 2);
  const CsrMatrix e = assemble_eafe_operator(mesh, Vector(mesh.num_nodes(), 0.0), 1.0);
  EXPECT_LE(max_abs_difference(e, assemble_stiffness(mesh)), 1e-14);
}

TEST(NpEafe, ColumnSumsZeroAndOracle) {
  const TetMesh mesh = two_tets();
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector phi = random_phi(mesh, rng, 3.0);
    const CsrMatrix e = assemble_eafe_operator(mesh, phi, 1.0);
    for (double s : e.column_sums()) EXPECT_NEAR(s, 0.0, 1e-13);
    EXPECT_LE(max_diff(e, oracle::eafe(mesh, phi, 1.0)), 1e-10);
  }
}

TEST(NpSystem, SupgRightHandSide) {
  const TetMesh mesh = build_box_mesh(2, {0, 0, 0}, {1, 1, 1});
  SchemeConfig cfg;
  cfg.scheme = Scheme::supg;
  std::mt19937_64 rng(12);
  const Vector phi = random_phi(mesh, rng, 1.0);
  const Vector base = random_phi(mesh, rng, 1.0), prev = random_phi(mesh, rng, 1.0);
  const ScalarField src = [](const Vec3& x, double t) { return 1.0 + x[0] * t; };
  const AssembledNP s = assemble_np_system(mesh, cfg, phi, 0, 0.1, {base, prev, &src, 0.5});
  const Vector hp = spmv(assemble_supg_blocks(mesh, phi, 1.0, 1.0).time, prev);
  const Vector sl = assemble_supg_load(mesh, phi, 1.0, 1.0, src, 0.5);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(s.rhs[i], base[i] + hp[i] + 0.1 * sl[i], 1e-14);

  cfg.scheme = Scheme::eafe;
  const AssembledNP e = assemble_np_system(mesh, cfg, phi, 1, 0.1, {base, prev, &src, 0.5});
  EXPECT_EQ(e.rhs, base);
  EXPECT_EQ(e.species, 1);
}

TEST(SchemeConfig, ParseAndValidate) {
  EXPECT_EQ(parse_scheme("supg"), Scheme::supg);
  EXPECT_THROW(parse_scheme("upwind"), ConfigError);
  SchemeConfig c;
  c.supg_scale = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.supg_scale = 1.0;
  c.drift[0] = INFINITY;
  EXPECT_THROW(c.validate(), ConfigError);
}
