#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tcrom/mlp.hpp"
#include "tcrom/sae.hpp"
#include "tcrom/trajectory.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Structure-preserving latent dynamics.  One MLP maps the latent state x to
// the raw output (L-params | M-params | dE | dS) of size d(d+2):
//
//   d(d-1)/2 entries -> skew-symmetric L    (reversible coupling)
//   d(d+1)/2 entries -> lower factor G, M = G G^T is PSD (dissipative coupling)
//   d entries        -> energy gradient dE
//   d entries        -> entropy gradient dS
//
// and the state advances by x' = x + dt (L dE + M dS).  Skewness and
// positive semidefiniteness hold exactly by construction; the degeneracy
// conditions L dS = 0 and M dE = 0 are imposed as penalties, so energy is
// conserved and entropy produced up to the trained residuals.
// ---------------------------------------------------------------------------

inline int skew_param_count(int d) { return d * (d - 1) / 2; }
inline int tri_param_count(int d) { return d * (d + 1) / 2; }
inline int spnn_output_size(int d) { return d * (d + 2); }

/// Strict lower triangle, row-major, mirrored with negated sign.
inline Matrix assemble_skew(const Matrix& p, int d) {
  if (p.cols() != 1 || p.rows() != skew_param_count(d))
    throw ValidationError("assemble_skew: expected " + std::to_string(skew_param_count(d)) +
                          "x1 parameters, got " + shape_str(p));
  Matrix l(d, d);
  int k = 0;
  for (int i = 1; i < d; ++i)
    for (int j = 0; j < i; ++j, ++k) {
      l(i, j) = p(k, 0);
      l(j, i) = -p(k, 0);
    }
  return l;
}

/// Lower triangle including diagonal, row-major; diagonal entries enter as
/// absolute values so the factor is a valid Cholesky-style factor.
inline Matrix assemble_cholf(const Matrix& p, int d) {
  if (p.cols() != 1 || p.rows() != tri_param_count(d))
    throw ValidationError("assemble_cholf: expected " + std::to_string(tri_param_count(d)) +
                          "x1 parameters, got " + shape_str(p));
  Matrix g(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j, ++k) g(i, j) = (i == j) ? std::fabs(p(k, 0)) : p(k, 0);
  return g;
}

inline Matrix assemble_psd(const Matrix& p, int d) {
  const Matrix g = assemble_cholf(p, d);
  return matmul(g, g, false, true);
}

struct GenericOutputs {
  Matrix l, m;    // d x d
  Matrix de, ds;  // d x 1
};

struct SpnnConfig {
  int hidden_layers = 5;
  int width = 24;           // 0 = automatic from latent dimension
  double lr = 1e-5;
  double lambda_d = 1e3;    // data-term weight
  double lambda_r = 1e-5;   // L2 weight penalty
  long epochs = 60000;
  long patience = 2000;
  double min_improve = 1e-10;
  std::uint64_t seed = 0;

  int resolve_width(int d) const { return width > 0 ? width : std::max(24, 22 * d); }

  void validate() const {
    if (hidden_layers < 1) throw ValidationError("spnn: need at least one hidden layer");
    if (width < 0) throw ValidationError("spnn: width must be >= 0");
    if (!(lr > 0)) throw ValidationError("spnn: lr must be positive");
    if (lambda_d < 0 || lambda_r < 0)
      throw ValidationError("spnn: penalty weights must be >= 0");
    if (epochs < 1) throw ValidationError("spnn: epochs must be >= 1");
  }

  std::vector<int> sizes(int d) const {
    std::vector<int> s{d};
    for (int i = 0; i < hidden_layers; ++i) s.push_back(resolve_width(d));
    s.push_back(spnn_output_size(d));
    return s;
  }
  std::vector<Activation> activations() const {
    std::vector<Activation> a(hidden_layers + 1, Activation::relu);
    a.back() = Activation::linear;
    return a;
  }
};

struct SpnnModel {
  MlpParams net;
  int dim = 0;
  double dt = 0.0;
  double lambda_d = 0.0, lambda_r = 0.0;
  std::uint64_t seed = 0;
};

/// Split the raw network output (one column) into assembled operators.
inline GenericOutputs split_raw(const Matrix& raw, int d) {
  const int nl = skew_param_count(d), nm = tri_param_count(d);
  if (raw.cols() != 1 || raw.rows() != spnn_output_size(d))
    throw ValidationError("spnn: raw output has shape " + shape_str(raw) + ", expected " +
                          std::to_string(spnn_output_size(d)) + "x1");
  Matrix lp(nl, 1), mp(nm, 1), de(d, 1), ds(d, 1);
  for (int i = 0; i < nl; ++i) lp(i, 0) = raw(i, 0);
  for (int i = 0; i < nm; ++i) mp(i, 0) = raw(nl + i, 0);
  for (int i = 0; i < d; ++i) de(i, 0) = raw(nl + nm + i, 0);
  for (int i = 0; i < d; ++i) ds(i, 0) = raw(nl + nm + d + i, 0);
  GenericOutputs out;
  out.l = assemble_skew(lp, d);
  out.m = assemble_psd(mp, d);
  out.de = std::move(de);
  out.ds = std::move(ds);
  return out;
}

inline GenericOutputs spnn_eval(const SpnnModel& m, const Matrix& x) {
  if (x.cols() != 1 || x.rows() != m.dim)
    throw ValidationError("spnn_eval: state must be " + std::to_string(m.dim) + "x1");
  return split_raw(mlp_forward(m.net, x), m.dim);
}

/// Forward-Euler step x + dt (L dE + M dS).
inline Matrix integrate_step(const Matrix& x, const GenericOutputs& g, double dt) {
  Matrix rhs = matmul(g.l, g.de);
  matmul_into(rhs, g.m, g.ds, false, false, true);
  Matrix out = x;
  for (int i = 0; i < out.rows(); ++i) out(i, 0) += dt * rhs(i, 0);
  return out;
}

struct ThermoAudit {
  double dedt = 0;  // dE/dt along the flow; ~0 when degeneracy holds
  double dsdt = 0;  // dS/dt along the flow; >= 0 when degeneracy holds
  double r_l = 0;   // ||L dS||, reversible degeneracy residual
  double r_m = 0;   // ||M dE||, dissipative degeneracy residual
};

inline ThermoAudit thermo_audit(const GenericOutputs& g) {
  Matrix rhs = matmul(g.l, g.de);
  matmul_into(rhs, g.m, g.ds, false, false, true);
  ThermoAudit a;
  a.dedt = dot(g.de, rhs);
  a.dsdt = dot(g.ds, rhs);
  a.r_l = frob_norm(matmul(g.l, g.ds));
  a.r_m = frob_norm(matmul(g.m, g.de));
  return a;
}

struct SpnnLoss {
  double total = 0, data = 0, degeneracy = 0, weight_reg = 0;
};

/// Reference (tape-free) loss over transition pairs given as columns:
/// mean over pairs of lambda_d ||x_next - step(x)||^2 + ||L dS||^2 + ||M dE||^2,
/// plus lambda_r * sum of squared weights.
inline SpnnLoss spnn_loss(const SpnnModel& m, const Matrix& xn, const Matrix& xn1) {
  check_same_shape(xn, xn1, "spnn_loss");
  SpnnLoss out;
  const int b = xn.cols();
  for (int j = 0; j < b; ++j) {
    Matrix x(m.dim, 1), x1(m.dim, 1);
    for (int i = 0; i < m.dim; ++i) {
      x(i, 0) = xn(i, j);
      x1(i, 0) = xn1(i, j);
    }
    const GenericOutputs g = spnn_eval(m, x);
    const Matrix pred = integrate_step(x, g, m.dt);
    for (int i = 0; i < m.dim; ++i) {
      const double d = x1(i, 0) - pred(i, 0);
      out.data += d * d;
    }
    const Matrix lds = matmul(g.l, g.ds);
    const Matrix mde = matmul(g.m, g.de);
    out.degeneracy += dot(lds, lds) + dot(mde, mde);
  }
  out.data /= b;
  out.degeneracy /= b;
  out.weight_reg = l2_penalty(m.net);
  out.total = m.lambda_d * out.data + out.degeneracy + m.lambda_r * out.weight_reg;
  return out;
}

struct SpnnTrainResult {
  SpnnModel model;
  std::vector<std::array<double, 4>> history;  // epoch, total, data, degeneracy
  long best_epoch = 0;
};

/// Train on latent transition pairs.  `codes` holds the encoded trajectory
/// (one column per snapshot); the split indexes transitions n -> n+1.
inline SpnnTrainResult train_spnn(const Matrix& codes, double dt, const SplitIndex& idx,
                                  const SpnnConfig& cfg) {
  cfg.validate();
  const int d = codes.rows();
  if (d < 2) throw ValidationError("spnn: latent dimension must be >= 2");
  const int b = (int)idx.train.size();
  if (b < 1) throw ValidationError("spnn: empty training split");
  for (int j : idx.train)
    if (j < 0 || j + 1 >= codes.cols())
      throw ValidationError("spnn: transition index out of range");

  Matrix xn(d, b), xn1(d, b);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < d; ++i) {
      xn(i, j) = codes(i, idx.train[j]);
      xn1(i, j) = codes(i, idx.train[j] + 1);
    }

  MlpParams net = mlp_init(cfg.sizes(d), cfg.activations(), cfg.seed);

  Tape tape;
  const int txn = tape.input("xn", d, b);
  const int txn1 = tape.input("xn1", d, b);
  const TapeMlp tnet = mlp_on_tape(tape, net, txn, "net");
  const int nl = skew_param_count(d), nm = tri_param_count(d);

  int data_acc = -1, degen_acc = -1;
  for (int j = 0; j < b; ++j) {
    const int lp = tape.slice(tnet.out, 0, j, nl, 1);
    const int mp = tape.slice(tnet.out, nl, j, nm, 1);
    const int de = tape.slice(tnet.out, nl + nm, j, d, 1);
    const int ds = tape.slice(tnet.out, nl + nm + d, j, d, 1);
    const int l = tape.assemble_skew(lp, d);
    const int g = tape.assemble_cholf(mp, d);
    const int m = tape.matmul(g, g, false, true);
    const int rhs = tape.add(tape.matmul(l, de), tape.matmul(m, ds));
    const int pred = tape.add(tape.slice(txn, 0, j, d, 1), tape.scale(rhs, dt));
    const int data_j = tape.sumsq(tape.sub(tape.slice(txn1, 0, j, d, 1), pred));
    const int degen_j = tape.add(tape.sumsq(tape.matmul(l, ds)),
                                 tape.sumsq(tape.matmul(m, de)));
    data_acc = data_acc < 0 ? data_j : tape.add(data_acc, data_j);
    degen_acc = degen_acc < 0 ? degen_j : tape.add(degen_acc, degen_j);
  }
  const int fit = tape.scale(
      tape.add(tape.scale(data_acc, cfg.lambda_d), degen_acc), 1.0 / b);
  const int loss = tape.add(fit, tape.scale(l2_on_tape(tape, tnet), cfg.lambda_r));
  tape.set_input(txn, xn);
  tape.set_input(txn1, xn1);

  Adam opt(AdamConfig{cfg.lr});
  SpnnTrainResult res;
  double best = std::numeric_limits<double>::infinity();
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    tape.forward();
    const double total = tape.scalar(loss);
    if (!std::isfinite(total))
      throw DivergenceError("spnn: loss diverged at epoch " + std::to_string(epoch));
    res.history.push_back({(double)epoch, total, tape.scalar(data_acc) / b,
                           tape.scalar(degen_acc) / b});
    if (total < best - cfg.min_improve) {
      best = total;
      res.best_epoch = epoch;
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
    tape.backward(loss);
    adam_step_tape(tape, opt);
  }

  mlp_from_tape(tape, tnet, net);
  res.model.net = std::move(net);
  res.model.dim = d;
  res.model.dt = dt;
  res.model.lambda_d = cfg.lambda_d;
  res.model.lambda_r = cfg.lambda_r;
  res.model.seed = cfg.seed;
  return res;
}

// ---------------------------------------------------------------------------
// Latent rollout and decoded evaluation.
// ---------------------------------------------------------------------------

struct RolloutReport {
  Matrix latent;                    // n_snapshots x d
  Matrix decoded;                   // n_snapshots x D
  std::vector<ThermoAudit> audit;   // per snapshot (empty for models without one)
  std::vector<std::pair<std::string, double>> mse;  // per variable block, all snapshots
  double dt = 0.0;
};

/// Integrate the latent dynamics from the encoded initial snapshot across the
/// full trajectory horizon, auditing the thermodynamic structure at each state.
inline RolloutReport rollout_spnn(const SaeSet& sae, const SpnnModel& m,
                                  const Trajectory& t) {
  const int n = t.n_snapshots();
  Matrix z0(t.dim(), 1);
  for (int i = 0; i < t.dim(); ++i) z0(i, 0) = t.snapshots(0, i);
  Matrix x = encode_active(sae, t, z0);
  if (x.rows() != m.dim)
    throw ValidationError("rollout: encoder yields " + std::to_string(x.rows()) +
                          " active latents but the model expects " + std::to_string(m.dim));

  RolloutReport rep;
  rep.dt = t.dt;
  rep.latent = Matrix(n, m.dim);
  rep.audit.resize(n);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < m.dim; ++i) {
      if (!std::isfinite(x(i, 0)))
        throw DivergenceError("rollout: non-finite latent state at step " + std::to_string(s));
      rep.latent(s, i) = x(i, 0);
    }
    const GenericOutputs g = spnn_eval(m, x);
    rep.audit[s] = thermo_audit(g);
    if (s + 1 < n) x = integrate_step(x, g, t.dt);
  }
  rep.decoded = transpose(decode_active(sae, t, transpose(rep.latent)));
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  rep.mse = block_mse(t, rep.decoded, all);
  return rep;
}

}  // namespace tcrom
