#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tcrom/mlp.hpp"
#include "tcrom/trajectory.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Sparse autoencoder.  A wide bottleneck is trained with an L1 penalty on the
// code; latent directions the data does not need collapse toward zero and are
// masked off afterwards, which is how the intrinsic dimensionality is found.
// ---------------------------------------------------------------------------

struct SaeConfig {
  int bottleneck = 10;
  std::vector<int> hidden = {160, 160};  // encoder hidden widths, decoder mirrors
  double lr = 1e-4;
  double lambda_r = 1e-4;     // L1 weight on the code
  long epochs = 20000;
  long patience = 1000;       // early stop after this many epochs without improvement
  double min_improve = 1e-9;
  double active_threshold = 0.01;  // relative to the largest latent amplitude
  std::uint64_t seed = 0;

  void validate() const {
    if (bottleneck < 1) throw ValidationError("sae: bottleneck must be >= 1");
    if (hidden.empty()) throw ValidationError("sae: need at least one hidden layer");
    for (int h : hidden)
      if (h < 1) throw ValidationError("sae: hidden widths must be >= 1");
    if (!(lr > 0)) throw ValidationError("sae: lr must be positive");
    if (lambda_r < 0) throw ValidationError("sae: lambda_r must be >= 0");
    if (epochs < 1) throw ValidationError("sae: epochs must be >= 1");
    if (!(active_threshold > 0 && active_threshold < 1))
      throw ValidationError("sae: active threshold must be in (0,1)");
  }

  // Viewed end to end the autoencoder is ReLU throughout except for its very
  // first and very last affine maps.  In particular the bottleneck itself is
  // a ReLU layer: codes are non-negative, and a unit whose pre-activation
  // goes negative over the whole dataset emits exactly zero — the mechanism
  // that turns the L1 penalty into hard-zero latents instead of merely small
  // ones.
  std::vector<int> encoder_sizes(int dim) const {
    std::vector<int> s{dim};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(bottleneck);
    return s;
  }
  std::vector<int> decoder_sizes(int dim) const {
    std::vector<int> s{bottleneck};
    s.insert(s.end(), hidden.rbegin(), hidden.rend());
    s.push_back(dim);
    return s;
  }
  std::vector<Activation> encoder_activations() const {
    std::vector<Activation> a(hidden.size() + 1, Activation::relu);
    a.front() = Activation::linear;
    return a;
  }
  std::vector<Activation> decoder_activations() const {
    std::vector<Activation> a(hidden.size() + 1, Activation::relu);
    a.back() = Activation::linear;
    return a;
  }
};

struct SaeModel {
  MlpParams encoder, decoder;
  std::vector<std::uint8_t> active;  // mask over bottleneck entries
  double lambda_r = 0.0;
  std::uint64_t seed = 0;

  int dim() const { return encoder.input_size(); }
  int bottleneck() const { return encoder.output_size(); }
  int n_active() const {
    int n = 0;
    for (auto a : active) n += a != 0;
    return n;
  }
};

/// Code for (columns of) z.
inline Matrix encode(const SaeModel& m, const Matrix& z) {
  return mlp_forward(m.encoder, z);
}

inline Matrix decode(const SaeModel& m, const Matrix& code) {
  return mlp_forward(m.decoder, code);
}

/// Code restricted to active entries (row i kept iff active[i]).
inline Matrix encode_active(const SaeModel& m, const Matrix& z) {
  if ((int)m.active.size() != m.bottleneck())
    throw ValidationError("sae: model has no active mask; run detect_active first");
  const Matrix full = encode(m, z);
  Matrix out(m.n_active(), z.cols());
  int r = 0;
  for (int i = 0; i < full.rows(); ++i)
    if (m.active[i])
      std::memcpy(out.row_ptr(r++), full.row_ptr(i), sizeof(double) * full.cols());
  return out;
}

/// Decode from an active-only code; masked entries are zero-filled.
inline Matrix decode_active(const SaeModel& m, const Matrix& x) {
  if ((int)m.active.size() != m.bottleneck())
    throw ValidationError("sae: model has no active mask; run detect_active first");
  if (x.rows() != m.n_active())
    throw ValidationError("sae: active code has " + std::to_string(x.rows()) +
                          " rows, mask implies " + std::to_string(m.n_active()));
  Matrix full(m.bottleneck(), x.cols());
  int r = 0;
  for (int i = 0; i < full.rows(); ++i)
    if (m.active[i])
      std::memcpy(full.row_ptr(i), x.row_ptr(r++), sizeof(double) * x.cols());
  return decode(m, full);
}

struct SaeLoss {
  double total = 0, reconstruction = 0, sparsity = 0;
};

/// Mean squared reconstruction error (over every matrix entry) plus the
/// batch-mean L1 code penalty; total is exactly
/// reconstruction + lambda_r * sparsity.  The reconstruction term is averaged
/// over the state dimension as well as the batch so that lambda_r keeps the
/// same meaning whether the state has 4 components or 40k.
inline SaeLoss sae_loss(const SaeModel& m, const Matrix& z, double lambda_r) {
  const Matrix code = encode(m, z);
  const Matrix rec = decode(m, code);
  SaeLoss out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z.data()[i] - rec.data()[i];
    out.reconstruction += d * d;
  }
  for (std::size_t i = 0; i < code.size(); ++i) out.sparsity += std::fabs(code.data()[i]);
  out.reconstruction /= (double)z.size();
  out.sparsity /= z.cols();
  out.total = out.reconstruction + lambda_r * out.sparsity;
  return out;
}

/// Mark latents whose peak activation over the trajectory exceeds
/// `threshold` relative to the strongest latent.
inline std::vector<std::uint8_t> detect_active(const SaeModel& m, const Trajectory& t,
                                               double threshold = 0.01) {
  const Matrix codes = encode(m, transpose(t.snapshots));
  std::vector<double> peak(codes.rows(), 0.0);
  for (int i = 0; i < codes.rows(); ++i)
    for (int j = 0; j < codes.cols(); ++j)
      peak[i] = std::max(peak[i], std::fabs(codes(i, j)));
  const double top = *std::max_element(peak.begin(), peak.end());
  if (top <= 0.0)
    throw ValidationError("sae: all latents are exactly zero; lower lambda_r");
  std::vector<std::uint8_t> mask(codes.rows(), 0);
  int n = 0;
  for (int i = 0; i < codes.rows(); ++i) {
    mask[i] = peak[i] >= threshold * top ? 1 : 0;
    n += mask[i];
  }
  if (n == 0) throw ValidationError("sae: no latent above threshold; lower lambda_r");
  return mask;
}

struct SaeTrainResult {
  SaeModel model;
  std::vector<std::array<double, 4>> history;  // epoch, total, reconstruction, sparsity
  long best_epoch = 0;
};

/// Full-batch Adam training on the train split.  The tape is built once and
/// re-evaluated every epoch.
inline SaeTrainResult train_sae(const Trajectory& t, const SplitIndex& idx,
                                const SaeConfig& cfg) {
  cfg.validate();
  t.check();
  const int dim = t.dim();
  const int batch = (int)idx.train.size();
  if (batch < 1) throw ValidationError("sae: empty training split");

  Matrix ztr(dim, batch);
  for (int j = 0; j < batch; ++j) {
    const double* row = t.snapshots.row_ptr(idx.train[j]);
    for (int i = 0; i < dim; ++i) ztr(i, j) = row[i];
  }

  MlpParams enc = mlp_init(cfg.encoder_sizes(dim), cfg.encoder_activations(), cfg.seed);
  MlpParams dec = mlp_init(cfg.decoder_sizes(dim), cfg.decoder_activations(), cfg.seed + 1);

  Tape tape;
  const int z = tape.input("z", dim, batch);
  const TapeMlp tenc = mlp_on_tape(tape, enc, z, "enc");
  const TapeMlp tdec = mlp_on_tape(tape, dec, tenc.out, "dec");
  const int rec_ss = tape.sumsq(tape.sub(z, tdec.out));
  const int code_l1 = tape.l1(tenc.out);
  const int loss = tape.add(tape.scale(rec_ss, 1.0 / ((double)batch * dim)),
                            tape.scale(code_l1, cfg.lambda_r / batch));
  tape.set_input(z, ztr);

  Adam opt(AdamConfig{cfg.lr});
  SaeTrainResult res;
  double best = std::numeric_limits<double>::infinity();
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    tape.forward();
    const double total = tape.scalar(loss);
    if (!std::isfinite(total))
      throw DivergenceError("sae: loss diverged at epoch " + std::to_string(epoch));
    res.history.push_back({(double)epoch, total, tape.scalar(rec_ss) / (batch * dim),
                           tape.scalar(code_l1) / batch});
    if (total < best - cfg.min_improve) {
      best = total;
      res.best_epoch = epoch;
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
    tape.backward(loss);
    adam_step_tape(tape, opt);
  }

  mlp_from_tape(tape, tenc, enc);
  mlp_from_tape(tape, tdec, dec);
  res.model.encoder = std::move(enc);
  res.model.decoder = std::move(dec);
  res.model.lambda_r = cfg.lambda_r;
  res.model.seed = cfg.seed;
  res.model.active = detect_active(res.model, t, cfg.active_threshold);
  return res;
}

/// Per-variable reconstruction MSE on the given rows (plain round trip, no
/// masking: dropped latents contribute their actual near-zero values).
inline std::vector<std::pair<std::string, double>> test_sae(
    const SaeModel& m, const Trajectory& t, const std::vector<int>& rows) {
  const Matrix rec = decode(m, encode(m, transpose(t.snapshots)));
  return block_mse(t, transpose(rec), rows);
}

// ---------------------------------------------------------------------------
// A trajectory-level autoencoder: either one SAE over the whole state or one
// per variable block; active codes concatenate in block order.
// ---------------------------------------------------------------------------

struct SaeSet {
  bool per_block = false;
  std::vector<SaeModel> models;

  int n_active() const {
    int n = 0;
    for (const SaeModel& m : models) n += m.n_active();
    return n;
  }
};

/// Slice one block of snapshots (columns of z) out of full-state columns.
inline Matrix block_slice_cols(const Trajectory& t, const Matrix& zcols, std::size_t b) {
  const int off = t.block_offset(b), w = t.blocks[b].width;
  Matrix out(w, zcols.cols());
  for (int i = 0; i < w; ++i)
    std::memcpy(out.row_ptr(i), zcols.row_ptr(off + i), sizeof(double) * zcols.cols());
  return out;
}

inline Matrix encode_active(const SaeSet& s, const Trajectory& t, const Matrix& zcols) {
  if (!s.per_block) return encode_active(s.models[0], zcols);
  Matrix out(s.n_active(), zcols.cols());
  int r = 0;
  for (std::size_t b = 0; b < s.models.size(); ++b) {
    const Matrix x = encode_active(s.models[b], block_slice_cols(t, zcols, b));
    for (int i = 0; i < x.rows(); ++i)
      std::memcpy(out.row_ptr(r++), x.row_ptr(i), sizeof(double) * x.cols());
  }
  return out;
}

inline Matrix decode_active(const SaeSet& s, const Trajectory& t, const Matrix& x) {
  if (!s.per_block) return decode_active(s.models[0], x);
  Matrix out(t.dim(), x.cols());
  int r = 0;
  for (std::size_t b = 0; b < s.models.size(); ++b) {
    const SaeModel& m = s.models[b];
    Matrix part(m.n_active(), x.cols());
    for (int i = 0; i < part.rows(); ++i)
      std::memcpy(part.row_ptr(i), x.row_ptr(r++), sizeof(double) * x.cols());
    const Matrix dec = decode_active(m, part);
    const int off = t.block_offset(b);
    for (int i = 0; i < dec.rows(); ++i)
      std::memcpy(out.row_ptr(off + i), dec.row_ptr(i), sizeof(double) * dec.cols());
  }
  return out;
}

/// Per-variable test MSE for the set (full, unmasked round trip per model).
inline std::vector<std::pair<std::string, double>> test_sae(
    const SaeSet& s, const Trajectory& t, const std::vector<int>& rows) {
  if (!s.per_block) return test_sae(s.models[0], t, rows);
  Matrix approx(t.n_snapshots(), t.dim());
  const Matrix zcols = transpose(t.snapshots);
  for (std::size_t b = 0; b < s.models.size(); ++b) {
    const Matrix rec = decode(s.models[b], encode(s.models[b], block_slice_cols(t, zcols, b)));
    const int off = t.block_offset(b);
    for (int i = 0; i < rec.rows(); ++i)
      for (int j = 0; j < rec.cols(); ++j) approx(j, off + i) = rec(i, j);
  }
  return block_mse(t, approx, rows);
}

}  // namespace tcrom
