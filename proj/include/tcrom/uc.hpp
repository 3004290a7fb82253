#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "tcrom/mlp.hpp"
#include "tcrom/spnn.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Unconstrained baseline: a plain MLP that maps the latent state directly to
// the next latent state, with no imposed structure.  Sized for rough
// parameter parity with the structure-preserving model.
// ---------------------------------------------------------------------------

struct UcConfig {
  int hidden_layers = 5;
  int width = 25;  // 0 = automatic from latent dimension
  double lr = 1e-5;
  double lambda_r = 1e-5;
  long epochs = 60000;
  long patience = 2000;
  double min_improve = 1e-10;
  bool residual = false;  // ablation: predict the increment instead of the state
  std::uint64_t seed = 0;

  int resolve_width(int d) const { return width > 0 ? width : std::max(25, 5 * d); }

  void validate() const {
    if (hidden_layers < 1) throw ValidationError("uc: need at least one hidden layer");
    if (width < 0) throw ValidationError("uc: width must be >= 0");
    if (!(lr > 0)) throw ValidationError("uc: lr must be positive");
    if (lambda_r < 0) throw ValidationError("uc: lambda_r must be >= 0");
    if (epochs < 1) throw ValidationError("uc: epochs must be >= 1");
  }

  std::vector<int> sizes(int d) const {
    std::vector<int> s{d};
    for (int i = 0; i < hidden_layers; ++i) s.push_back(resolve_width(d));
    s.push_back(d);
    return s;
  }
  std::vector<Activation> activations() const {
    std::vector<Activation> a(hidden_layers + 1, Activation::relu);
    a.back() = Activation::linear;
    return a;
  }
};

struct UcModel {
  MlpParams net;
  int dim = 0;
  double dt = 0.0;
  bool residual = false;
  std::uint64_t seed = 0;
};

inline Matrix uc_step(const UcModel& m, const Matrix& x) {
  if (x.rows() != m.dim) throw ValidationError("uc_step: state dimension mismatch");
  Matrix next = mlp_forward(m.net, x);
  if (m.residual)
    for (std::size_t i = 0; i < next.size(); ++i) next.data()[i] += x.data()[i];
  return next;
}

struct UcTrainResult {
  UcModel model;
  std::vector<std::array<double, 3>> history;  // epoch, total, data
  long best_epoch = 0;
};

inline UcTrainResult train_uc(const Matrix& codes, double dt, const SplitIndex& idx,
                              const UcConfig& cfg) {
  cfg.validate();
  const int d = codes.rows();
  if (d < 1) throw ValidationError("uc: latent dimension must be >= 1");
  const int b = (int)idx.train.size();
  if (b < 1) throw ValidationError("uc: empty training split");
  for (int j : idx.train)
    if (j < 0 || j + 1 >= codes.cols())
      throw ValidationError("uc: transition index out of range");

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
  const int pred = cfg.residual ? tape.add(txn, tnet.out) : tnet.out;
  const int data = tape.scale(tape.sumsq(tape.sub(txn1, pred)), 1.0 / b);
  const int loss = tape.add(data, tape.scale(l2_on_tape(tape, tnet), cfg.lambda_r));
  tape.set_input(txn, xn);
  tape.set_input(txn1, xn1);

  Adam opt(AdamConfig{cfg.lr});
  UcTrainResult res;
  double best = std::numeric_limits<double>::infinity();
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    tape.forward();
    const double total = tape.scalar(loss);
    if (!std::isfinite(total))
      throw DivergenceError("uc: loss diverged at epoch " + std::to_string(epoch));
    res.history.push_back({(double)epoch, total, tape.scalar(data)});
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
  res.model.residual = cfg.residual;
  res.model.seed = cfg.seed;
  return res;
}

/// Latent rollout with the direct next-state map (no thermodynamic audit).
inline RolloutReport rollout_uc(const SaeSet& sae, const UcModel& m, const Trajectory& t) {
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
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < m.dim; ++i) {
      if (!std::isfinite(x(i, 0)))
        throw DivergenceError("rollout: non-finite latent state at step " + std::to_string(s));
      rep.latent(s, i) = x(i, 0);
    }
    if (s + 1 < n) x = uc_step(m, x);
  }
  rep.decoded = transpose(decode_active(sae, t, transpose(rep.latent)));
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  rep.mse = block_mse(t, rep.decoded, all);
  return rep;
}

}  // namespace tcrom
