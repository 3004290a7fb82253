#pragma once

#include <cmath>
#include <iostream>
#include <vector>

#include "tcrom/matrix.hpp"
#include "tcrom/rng.hpp"
#include "tcrom/trajectory.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Startup of plane Couette flow of an Oldroyd-B fluid, solved micro-macro:
// a finite-difference momentum equation for v(y,t) coupled to Brownian
// dumbbell ensembles that deliver the polymer shear stress.
//
// Grid: nodes i = 0..N at y_i = i*dy, dy = H/N.  The wall (i=0, v=0) and the
// interior carry the recorded state; the lid node (i=N, v=V) only hosts
// dumbbells so the stress divergence is available next to the lid.
//
// In plane Couette flow the wall-normal dumbbell component decouples from the
// shear rate, so a single r_y ensemble serves every node, and all nodes see
// the same Brownian increments; node-to-node differences enter only through
// the local shear history.  This keeps the sampled stress field spatially
// smooth instead of burying it under per-node Monte Carlo noise.
// ---------------------------------------------------------------------------

struct CouetteParams {
  int nodes = 100;              // N: state nodes (grid has N+1 including the lid)
  double height = 1.0;          // H
  int dumbbells = 10000;        // K per node
  double weissenberg = 1.0;     // We
  double reynolds = 0.1;        // Re
  double viscosity_ratio = 0.9; // polymer fraction of total viscosity
  double lid_velocity = 1.0;    // V
  double horizon = 1.0;         // T
  double dt = 1.0 / 150.0;      // macro step
  int micro_substeps = 4;       // dumbbell SDE substeps per macro step
  std::uint64_t seed = 0;

  int n_snapshots() const { return (int)std::lround(horizon / dt); }

  void validate() const {
    if (nodes < 3) throw ValidationError("couette: nodes must be >= 3");
    if (!(height > 0)) throw ValidationError("couette: height must be positive");
    if (dumbbells < 1) throw ValidationError("couette: dumbbells must be >= 1");
    if (!(weissenberg > 0)) throw ValidationError("couette: We must be positive");
    if (!(reynolds > 0)) throw ValidationError("couette: Re must be positive");
    if (!(viscosity_ratio >= 0 && viscosity_ratio < 1))
      throw ValidationError("couette: viscosity ratio must be in [0,1)");
    if (!(dt > 0)) throw ValidationError("couette: dt must be positive");
    if (micro_substeps < 1) throw ValidationError("couette: micro_substeps must be >= 1");
    if (n_snapshots() < 2) throw ValidationError("couette: horizon shorter than one step");
  }
};

/// Dumbbell configurations: one shared wall-normal component r_y (size K) and
/// a per-node streamwise component r_x (rows = grid nodes, cols = K).
struct DumbbellEnsemble {
  std::vector<double> ry;
  Matrix rx;

  int n_nodes() const { return rx.rows(); }
  int k() const { return rx.cols(); }
};

/// Equilibrium draw: r ~ N(0, I).  The initial r_x is also shared across
/// nodes, so at t=0 every node holds the identical ensemble.
inline DumbbellEnsemble equilibrium_ensemble(int grid_nodes, int k, Rng& rng) {
  DumbbellEnsemble e;
  e.ry.resize(k);
  for (int j = 0; j < k; ++j) e.ry[j] = rng.normal();
  std::vector<double> rx0(k);
  for (int j = 0; j < k; ++j) rx0[j] = rng.normal();
  e.rx = Matrix(grid_nodes, k);
  for (int i = 0; i < grid_nodes; ++i)
    std::memcpy(e.rx.row_ptr(i), rx0.data(), sizeof(double) * k);
  return e;
}

/// One Euler-Maruyama step of the dumbbell SDE:
///   dr_x = (shear * r_y - r_x / (2 We)) dt + sqrt(dt / We) dV
///   dr_y = (      - r_y / (2 We)) dt + sqrt(dt / We) dW
/// dW and dV are drawn once (K values each) and shared across nodes.
inline void dumbbell_step(DumbbellEnsemble& e, const std::vector<double>& shear,
                          double we, double dt, Rng& rng) {
  const int k = e.k();
  if ((int)shear.size() != e.n_nodes())
    throw ValidationError("dumbbell_step: shear size does not match node count");
  static thread_local std::vector<double> dw, dv;
  dw.resize(k);
  dv.resize(k);
  for (int j = 0; j < k; ++j) dw[j] = rng.normal();
  for (int j = 0; j < k; ++j) dv[j] = rng.normal();

  const double relax = std::isinf(we) ? 0.0 : dt / (2.0 * we);
  const double noise = std::isinf(we) ? 0.0 : std::sqrt(dt / we);

  for (int i = 0; i < e.n_nodes(); ++i) {
    double* rx = e.rx.row_ptr(i);
    const double g = shear[i] * dt;
    for (int j = 0; j < k; ++j)
      rx[j] += g * e.ry[j] - relax * rx[j] + noise * dv[j];
  }
  for (int j = 0; j < k; ++j) e.ry[j] += -relax * e.ry[j] + noise * dw[j];
}

/// Kramers expression for the polymer shear stress at every grid node:
///   tau_i = (eps / We) * mean_k(r_x r_y).
inline std::vector<double> shear_stress(const DumbbellEnsemble& e, double we, double eps) {
  const double f = std::isinf(we) ? 0.0 : eps / (we * e.k());
  std::vector<double> tau(e.n_nodes());
  for (int i = 0; i < e.n_nodes(); ++i) {
    const double* rx = e.rx.row_ptr(i);
    double s = 0.0;
    for (int j = 0; j < e.k(); ++j) s += rx[j] * e.ry[j];
    tau[i] = f * s;
  }
  return tau;
}

/// Elastic energy density relative to equilibrium:
///   e_i = (eps / (2 We)) * (mean_k(r_x^2 + r_y^2) - 2).
inline std::vector<double> elastic_energy(const DumbbellEnsemble& e, double we, double eps) {
  const double f = std::isinf(we) ? 0.0 : eps / (2.0 * we);
  double sy = 0.0;
  for (int j = 0; j < e.k(); ++j) sy += e.ry[j] * e.ry[j];
  std::vector<double> en(e.n_nodes());
  for (int i = 0; i < e.n_nodes(); ++i) {
    const double* rx = e.rx.row_ptr(i);
    double sx = 0.0;
    for (int j = 0; j < e.k(); ++j) sx += rx[j] * rx[j];
    en[i] = f * ((sx + sy) / e.k() - 2.0);
  }
  return en;
}

/// Shear rate dv/dy at every grid node: centered differences inside, one-sided
/// at the wall and the lid.  v holds nodes 0..N-1; the lid value is pinned.
inline std::vector<double> shear_rates(const std::vector<double>& v, double lid_v, double dy) {
  const int n = (int)v.size();  // state nodes; grid has n+1
  std::vector<double> g(n + 1);
  g[0] = (v[1] - v[0]) / dy;
  for (int i = 1; i < n; ++i) {
    const double up = (i + 1 < n) ? v[i + 1] : lid_v;
    g[i] = (up - v[i - 1]) / (2.0 * dy);
  }
  g[n] = (lid_v - v[n - 1]) / dy;
  return g;
}

/// Explicit momentum update
///   dv/dt = (1-eps)/Re * d2v/dy2 + 1/Re * dtau/dy
/// with v=0 at the wall and v=V at the lid.  The diffusion stability limit
/// (1-eps) dt / (Re dy^2) <= 1/2 is enforced by internal substepping; returns
/// the number of substeps taken.
inline int macro_momentum_step(std::vector<double>& v, const std::vector<double>& tau,
                               double re, double eps, double dy, double dt, double lid_v) {
  const int n = (int)v.size();
  if ((int)tau.size() != n + 1)
    throw ValidationError("momentum: need stress at all grid nodes including the lid");
  const double cfl = (1.0 - eps) * dt / (re * dy * dy);
  const int n_sub = std::max(1, (int)std::ceil(cfl / 0.5));
  const double h = dt / n_sub;
  const double cd = (1.0 - eps) / (re * dy * dy);
  const double cs = 1.0 / (re * 2.0 * dy);
  static thread_local std::vector<double> vn;
  vn.resize(n);
  for (int s = 0; s < n_sub; ++s) {
    vn = v;
    for (int i = 1; i < n; ++i) {
      const double up = (i + 1 < n) ? v[i + 1] : lid_v;
      const double lap = up - 2.0 * v[i] + v[i - 1];
      const double dtau = tau[i + 1] - tau[i - 1];
      vn[i] = v[i] + h * (cd * lap + cs * dtau);
    }
    v.swap(vn);
  }
  return n_sub;
}

/// Generate the full trajectory.  Snapshot n holds the state at t = n*dt;
/// row layout is q | v | e | tau with one column per state node.
inline Trajectory generate_couette(const CouetteParams& p) {
  p.validate();
  const int n = p.nodes;
  const double dy = p.height / n;
  const int n_snap = p.n_snapshots();

  Rng rng(p.seed);
  DumbbellEnsemble ens = equilibrium_ensemble(n + 1, p.dumbbells, rng);

  std::vector<double> q(n, 0.0), v(n, 0.0);
  std::vector<double> tau = shear_stress(ens, p.weissenberg, p.viscosity_ratio);
  std::vector<double> en = elastic_energy(ens, p.weissenberg, p.viscosity_ratio);

  Trajectory t;
  t.snapshots = Matrix(n_snap, 4 * n);
  t.blocks = {{"q", n}, {"v", n}, {"e", n}, {"tau", n}};
  t.dt = p.dt;
  t.seed = p.seed;
  t.nodes = n;
  t.meta = {{"generator", "couette"},
            {"nodes", p.nodes},
            {"height", p.height},
            {"dumbbells", p.dumbbells},
            {"weissenberg", p.weissenberg},
            {"reynolds", p.reynolds},
            {"viscosity_ratio", p.viscosity_ratio},
            {"lid_velocity", p.lid_velocity},
            {"horizon", p.horizon},
            {"micro_substeps", p.micro_substeps}};

  const double cfl = (1.0 - p.viscosity_ratio) * p.dt / (p.reynolds * dy * dy);
  if (cfl > 0.5)
    std::cerr << "couette: diffusion number " << cfl
              << " > 0.5, momentum update will substep\n";

  auto record = [&](int snap) {
    double* row = t.snapshots.row_ptr(snap);
    for (int i = 0; i < n; ++i) row[i] = q[i];
    for (int i = 0; i < n; ++i) row[n + i] = v[i];
    for (int i = 0; i < n; ++i) row[2 * n + i] = en[i];
    for (int i = 0; i < n; ++i) row[3 * n + i] = tau[i];
  };
  record(0);

  const double micro_dt = p.dt / p.micro_substeps;
  for (int step = 1; step < n_snap; ++step) {
    const std::vector<double> shear = shear_rates(v, p.lid_velocity, dy);
    for (int i = 0; i < n; ++i) q[i] += p.dt * v[i];
    for (int s = 0; s < p.micro_substeps; ++s)
      dumbbell_step(ens, shear, p.weissenberg, micro_dt, rng);
    tau = shear_stress(ens, p.weissenberg, p.viscosity_ratio);
    en = elastic_energy(ens, p.weissenberg, p.viscosity_ratio);
    macro_momentum_step(v, tau, p.reynolds, p.viscosity_ratio, dy, p.dt, p.lid_velocity);
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(v[i]) || !std::isfinite(tau[i]))
        throw DivergenceError("couette: non-finite state at step " + std::to_string(step));
    record(step);
  }
  return t;
}

}  // namespace tcrom
