#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tcrom/couette.hpp"

using namespace tcrom;

TEST_CASE("infinite relaxation time freezes the dumbbells", "[couette]") {
  Rng rng(1);
  DumbbellEnsemble e = equilibrium_ensemble(3, 50, rng);
  const DumbbellEnsemble before = e;
  const std::vector<double> shear(3, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 10; ++s) dumbbell_step(e, shear, inf, 0.01, rng);
  for (int j = 0; j < e.k(); ++j) REQUIRE(e.ry[j] == before.ry[j]);
  for (std::size_t i = 0; i < e.rx.size(); ++i)
    REQUIRE(e.rx.data()[i] == before.rx.data()[i]);
}

TEST_CASE("initially every node holds the identical ensemble", "[couette]") {
  Rng rng(3);
  const DumbbellEnsemble e = equilibrium_ensemble(5, 40, rng);
  for (int i = 1; i < e.n_nodes(); ++i)
    for (int j = 0; j < e.k(); ++j) REQUIRE(e.rx(i, j) == e.rx(0, j));
}

TEST_CASE("dumbbell statistics reach the closed-form stationary moments", "[couette]") {
  // Ornstein-Uhlenbeck stationary state: Var(r_y) = 1 and, under constant
  // shear g, E[r_x r_y] = We * g (here We = 1, g = 1).
  const int k = 20000;
  Rng rng(7);
  DumbbellEnsemble e = equilibrium_ensemble(2, k, rng);
  const std::vector<double> shear{0.0, 1.0};
  for (int s = 0; s < 3000; ++s) dumbbell_step(e, shear, 1.0, 0.01, rng);

  double vy = 0.0;
  for (int j = 0; j < k; ++j) vy += e.ry[j] * e.ry[j];
  vy /= k;
  REQUIRE(vy == Catch::Approx(1.0).margin(0.05));

  double c0 = 0.0, c1 = 0.0;
  for (int j = 0; j < k; ++j) {
    c0 += e.rx(0, j) * e.ry[j];
    c1 += e.rx(1, j) * e.ry[j];
  }
  c0 /= k;
  c1 /= k;
  REQUIRE(c0 == Catch::Approx(0.0).margin(0.05));
  REQUIRE(c1 == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("stress and energy follow the ensemble-average expressions", "[couette]") {
  DumbbellEnsemble e;
  e.ry = {3.0};
  e.rx = Matrix(2, 1);
  e.rx(0, 0) = 2.0;
  e.rx(1, 0) = 0.0;

  const auto tau = shear_stress(e, 2.0, 0.5);
  REQUIRE(tau[0] == Catch::Approx(0.25 * 6.0));  // (eps/We) mean(rx ry)
  REQUIRE(tau[1] == 0.0);

  const auto en = elastic_energy(e, 2.0, 0.5);
  // (eps/2We)(mean(rx^2+ry^2) - 2): node 0: (4+9-2)/8 = 1.375, node 1: (9-2)/8.
  REQUIRE(en[0] == Catch::Approx(0.125 * 11.0));
  REQUIRE(en[1] == Catch::Approx(0.125 * 7.0));

  const double inf = std::numeric_limits<double>::infinity();
  REQUIRE(shear_stress(e, inf, 0.5)[0] == 0.0);
  REQUIRE(elastic_energy(e, inf, 0.5)[0] == 0.0);
}

TEST_CASE("shear rates use centered interior and one-sided wall stencils", "[couette]") {
  const std::vector<double> v{0.0, 0.1, 0.4};
  const auto g = shear_rates(v, 1.0, 0.5);
  REQUIRE(g.size() == 4);
  REQUIRE(g[0] == Catch::Approx(0.2));
  REQUIRE(g[1] == Catch::Approx(0.4));
  REQUIRE(g[2] == Catch::Approx(0.9));
  REQUIRE(g[3] == Catch::Approx(1.2));
}

TEST_CASE("momentum update is local to the stress stencil", "[couette]") {
  const int n = 12;
  const double dy = 1.0 / n;
  std::vector<double> v(n, 0.0), tau(n + 1, 0.0);
  tau[6] = 1.0;
  // Diffusion number (1-eps) dt/(Re dy^2) = 0.36: one substep.
  const int subs = macro_momentum_step(v, tau, 1.0, 0.5, dy, 0.0025, 0.0);
  REQUIRE(subs == 1);
  for (int i = 1; i < n; ++i) {
    if (i == 5 || i == 7)
      REQUIRE(v[i] != 0.0);
    else
      REQUIRE(v[i] == 0.0);
  }
  REQUIRE(v[5] == Catch::Approx(-v[7]));
}

TEST_CASE("momentum substepping enforces the diffusion stability limit", "[couette]") {
  const int n = 100;
  const double dy = 0.01;
  std::vector<double> v(n, 0.0), tau(n + 1, 0.0);
  // Default generator numbers: (1-0.9)*(1/150)/(0.1*1e-4) = 66.7 -> 134 substeps.
  const int subs = macro_momentum_step(v, tau, 0.1, 0.9, dy, 1.0 / 150.0, 1.0);
  REQUIRE(subs == 134);
  for (double x : v) REQUIRE(std::isfinite(x));
}

TEST_CASE("with constant stress the velocity relaxes to the linear profile", "[couette]") {
  const int n = 20;
  const double dy = 0.05, lid = 1.0;
  std::vector<double> v(n, 0.0);
  const std::vector<double> tau(n + 1, 0.3);  // constant stress: zero divergence
  for (int s = 0; s < 5000; ++s) macro_momentum_step(v, tau, 1.0, 0.9, dy, 0.01, lid);
  for (int i = 0; i < n; ++i) REQUIRE(v[i] == Catch::Approx(lid * i / n).margin(1e-6));
}

TEST_CASE("a quiescent box with frozen dumbbells stays put", "[couette]") {
  CouetteParams p;
  p.nodes = 10;
  p.dumbbells = 20;
  p.lid_velocity = 0.0;
  p.weissenberg = std::numeric_limits<double>::infinity();
  p.horizon = 0.1;
  p.dt = 0.01;
  const Trajectory t = generate_couette(p);
  REQUIRE(t.n_snapshots() == 10);
  for (int i = 0; i < t.n_snapshots(); ++i)
    for (int j = 0; j < t.dim(); ++j) REQUIRE(t.snapshots(i, j) == 0.0);
}

TEST_CASE("generation is deterministic in the seed", "[couette]") {
  CouetteParams p;
  p.nodes = 12;
  p.dumbbells = 300;
  p.horizon = 0.1;
  p.dt = 0.01;
  p.seed = 17;
  const Trajectory a = generate_couette(p);
  const Trajectory b = generate_couette(p);
  for (std::size_t i = 0; i < a.snapshots.size(); ++i)
    REQUIRE(a.snapshots.data()[i] == b.snapshots.data()[i]);
  p.seed = 18;
  const Trajectory c = generate_couette(p);
  bool differs = false;
  for (std::size_t i = 0; i < a.snapshots.size() && !differs; ++i)
    differs = a.snapshots.data()[i] != c.snapshots.data()[i];
  REQUIRE(differs);
}

TEST_CASE("the default dataset has the documented shape and sane physics", "[couette]") {
  CouetteParams p;  // defaults: 100 nodes, K = 10^4, T = 1, dt = 1/150
  const Trajectory t = generate_couette(p);
  REQUIRE(t.dim() == 400);
  REQUIRE(t.n_snapshots() == 150);
  REQUIRE(t.blocks.size() == 4);
  REQUIRE(t.blocks[0].name == "q");
  REQUIRE(t.blocks[1].name == "v");
  REQUIRE(t.blocks[2].name == "e");
  REQUIRE(t.blocks[3].name == "tau");
  for (const Block& b : t.blocks) REQUIRE(b.width == 100);

  const int vo = t.block_offset(1);
  for (int s = 0; s < t.n_snapshots(); ++s)
    for (int i = 0; i < 100; ++i) {
      const double v = t.snapshots(s, vo + i);
      REQUIRE(v > -0.05);
      REQUIRE(v < 1.05);
    }
  // The wall node never moves and the fluid near the lid is dragged along.
  REQUIRE(t.snapshots(149, vo) == 0.0);
  REQUIRE(t.snapshots(149, vo + 99) > 0.5);
  // Displacement accumulates near the lid.
  REQUIRE(t.snapshots(149, 99) > t.snapshots(75, 99));
}
