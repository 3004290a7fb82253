#pragma once

#include <cmath>
#include <vector>

#include "tcrom/rng.hpp"
#include "tcrom/trajectory.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Synthetic multi-block dataset in the shape of a structural simulation
// export: per-node displacement (3), velocity (3) and stress (6) blocks.
// The fields ride on a handful of smooth temporal drivers (damped
// oscillations, a relaxation, and one quadratic mixing term) with smooth
// spatial profiles, so each block has a small intrinsic dimension that a
// sparse autoencoder should recover, while raw per-block scales differ by
// orders of magnitude to exercise normalization.
// ---------------------------------------------------------------------------

struct SyntheticParams {
  int nodes = 50;
  int n_snapshots = 200;
  double dt = 0.005;
  int q_width = 3, v_width = 3, s_width = 6;  // per-node widths
  std::uint64_t seed = 0;

  void validate() const {
    if (nodes < 2) throw ValidationError("synthetic: nodes must be >= 2");
    if (n_snapshots < 2) throw ValidationError("synthetic: need at least 2 snapshots");
    if (!(dt > 0)) throw ValidationError("synthetic: dt must be positive");
    if (q_width < 1 || v_width < 1 || s_width < 1)
      throw ValidationError("synthetic: per-node widths must be >= 1");
  }
};

inline Trajectory make_synthetic(const SyntheticParams& p) {
  p.validate();
  const int n = p.nodes;

  Trajectory t;
  t.blocks = {{"q", p.q_width * n}, {"v", p.v_width * n}, {"sigma", p.s_width * n}};
  t.dt = p.dt;
  t.seed = p.seed;
  t.nodes = n;
  t.meta = {{"generator", "synthetic"},
            {"nodes", p.nodes},
            {"layout", {{"q", p.q_width}, {"v", p.v_width}, {"sigma", p.s_width}}}};
  const int dim = t.blocks[0].width + t.blocks[1].width + t.blocks[2].width;
  t.snapshots = Matrix(p.n_snapshots, dim);

  // Temporal drivers.
  const double tau1 = 0.35, om1 = 2.0 * M_PI * 1.3;
  const double tau2 = 0.25;
  const double tau3 = 0.18, om2 = 2.0 * M_PI * 2.1;
  const int n_drivers = 7;
  auto drivers = [&](double time, double* u) {
    const double e1 = std::exp(-time / tau1);
    const double e3 = std::exp(-time / tau3);
    u[0] = e1 * std::sin(om1 * time);
    u[1] = e1 * std::cos(om1 * time);
    u[2] = 1.0 - std::exp(-time / tau2);
    u[3] = e3 * std::sin(om2 * time);
    u[4] = e3 * std::cos(om2 * time);
    u[5] = u[0] * u[2];
    u[6] = e1 * e1;  // = u1^2 + u2^2
  };

  // Smooth spatial profiles.
  auto shape = [&](int m, double y) {
    switch (m % 4) {
      case 0: return std::sin(M_PI * y);
      case 1: return y * y;
      case 2: return std::cos(0.5 * M_PI * y);
      default: return 4.0 * y * (1.0 - y);
    }
  };

  // Which drivers each block may use, and raw physical scales.
  const std::vector<std::vector<int>> block_drivers = {
      {0, 1, 2, 5}, {0, 1, 3, 4}, {2, 3, 4, 6}};
  const double block_scale[3] = {0.02, 0.3, 5.0};
  const int per_node[3] = {p.q_width, p.v_width, p.s_width};

  // Fixed random mixing coefficients per component.
  Rng rng(p.seed);
  std::vector<std::vector<std::vector<double>>> coeff(3);
  for (int b = 0; b < 3; ++b) {
    coeff[b].resize(per_node[b]);
    for (int c = 0; c < per_node[b]; ++c) {
      coeff[b][c].assign(n_drivers, 0.0);
      for (int m : block_drivers[b]) coeff[b][c][m] = rng.uniform(-1.0, 1.0);
    }
  }

  std::vector<double> u(n_drivers);
  for (int snap = 0; snap < p.n_snapshots; ++snap) {
    drivers(snap * p.dt, u.data());
    double* row = t.snapshots.row_ptr(snap);
    int col = 0;
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < per_node[b]; ++c) {
        for (int i = 0; i < n; ++i) {
          const double y = double(i) / (n - 1);
          double val = 0.0;
          for (int m : block_drivers[b]) val += coeff[b][c][m] * shape(m, y) * u[m];
          row[col + c * n + i] = block_scale[b] * val;
        }
      }
      col += per_node[b] * n;
    }
  }
  t.check();
  return t;
}

}  // namespace tcrom
