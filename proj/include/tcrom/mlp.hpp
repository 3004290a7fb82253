#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tcrom/autodiff.hpp"
#include "tcrom/matrix.hpp"
#include "tcrom/rng.hpp"

namespace tcrom {

enum class Activation { relu, linear };

inline const char* activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "linear";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  throw ValidationError("unknown activation '" + s + "'");
}

struct Layer {
  Matrix w;  // out x in
  Matrix b;  // out x 1
  Activation act = Activation::linear;
};

struct MlpParams {
  std::vector<Layer> layers;

  int input_size() const { return layers.empty() ? 0 : layers.front().w.cols(); }
  int output_size() const { return layers.empty() ? 0 : layers.back().w.rows(); }

  std::vector<int> sizes() const {
    std::vector<int> s;
    if (layers.empty()) return s;
    s.push_back(layers.front().w.cols());
    for (const Layer& l : layers) s.push_back(l.w.rows());
    return s;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
  }
};

/// Kaiming-normal initialization: W_ij ~ N(0, 2/fan_in), biases zero.
/// Fill order is fixed (layer by layer, row-major), so a seed pins every bit.
inline MlpParams mlp_init(const std::vector<int>& sizes,
                          const std::vector<Activation>& acts, std::uint64_t seed) {
  if (sizes.size() < 2) throw ValidationError("mlp_init: need at least input and output sizes");
  if (acts.size() != sizes.size() - 1)
    throw ValidationError("mlp_init: " + std::to_string(sizes.size() - 1) +
                          " layers but " + std::to_string(acts.size()) + " activations");
  for (int s : sizes)
    if (s < 1) throw ValidationError("mlp_init: layer sizes must be positive");

  Rng rng(seed);
  MlpParams p;
  p.layers.resize(sizes.size() - 1);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const int fan_in = sizes[l], fan_out = sizes[l + 1];
    Layer& layer = p.layers[l];
    layer.w = Matrix(fan_out, fan_in);
    layer.b = Matrix(fan_out, 1);
    layer.act = acts[l];
    const double stddev = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < layer.w.size(); ++i)
      layer.w.data()[i] = rng.normal(0.0, stddev);
  }
  return p;
}

/// Forward pass; x may be a batch (one column per sample).
inline Matrix mlp_forward(const MlpParams& p, const Matrix& x) {
  if (p.layers.empty()) throw ValidationError("mlp_forward: empty network");
  if (x.rows() != p.input_size())
    throw ValidationError("mlp_forward: input is " + shape_str(x) + ", expected " +
                          std::to_string(p.input_size()) + " rows");
  Matrix h = x;
  Matrix z;
  for (const Layer& l : p.layers) {
    matmul_into(z, l.w, h);
    for (int i = 0; i < z.rows(); ++i) {
      const double bi = l.b(i, 0);
      double* row = z.row_ptr(i);
      if (l.act == Activation::relu)
        for (int j = 0; j < z.cols(); ++j) row[j] = std::max(row[j] + bi, 0.0);
      else
        for (int j = 0; j < z.cols(); ++j) row[j] += bi;
    }
    h = z;
  }
  return h;
}

/// Sum of squared weights; biases are deliberately left unpenalized.
inline double l2_penalty(const MlpParams& p) {
  double s = 0.0;
  for (const Layer& l : p.layers)
    for (std::size_t i = 0; i < l.w.size(); ++i) s += l.w.data()[i] * l.w.data()[i];
  return s;
}

// ---------------------------------------------------------------------------
// Adam optimizer over an arbitrary flat list of (value, gradient) matrices.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  /// Update one parameter matrix in place.  Slot identifies the per-parameter
  /// moment buffers; call step_begin() once per optimization step.
  void update(int slot, Matrix& value, const Matrix& grad, const std::string& name = "") {
    if ((int)m_.size() <= slot) {
      m_.resize(slot + 1);
      v_.resize(slot + 1);
    }
    if (m_[slot].empty()) {
      m_[slot] = Matrix(value.rows(), value.cols());
      v_[slot] = Matrix(value.rows(), value.cols());
    }
    if (!value.same_shape(grad))
      throw ValidationError("adam: gradient shape " + shape_str(grad) +
                            " does not match parameter " + shape_str(value));
    Matrix& m = m_[slot];
    Matrix& v = v_[slot];
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, (double)t_);
    const double bc2 = 1.0 - std::pow(b2, (double)t_);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad.data()[i];
      if (!std::isfinite(g))
        throw DivergenceError("adam: non-finite gradient in parameter " +
                              (name.empty() ? "slot " + std::to_string(slot) : "'" + name + "'"));
      m.data()[i] = b1 * m.data()[i] + (1.0 - b1) * g;
      v.data()[i] = b2 * v.data()[i] + (1.0 - b2) * g * g;
      const double mhat = m.data()[i] / bc1;
      const double vhat = v.data()[i] / bc2;
      value.data()[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }

  void step_begin() { ++t_; }
  long step() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// ---------------------------------------------------------------------------
// Bridge: mount an MLP on a tape.  Parameter nodes are initialized from (and
// conceptually own) the weights during training; read them back afterwards.
// ---------------------------------------------------------------------------

struct TapeMlp {
  std::vector<int> weights;  // param node ids, one per layer
  std::vector<int> biases;
  int out = -1;              // output node id
};

inline TapeMlp mlp_on_tape(Tape& t, const MlpParams& p, int x,
                           const std::string& prefix) {
  if (p.layers.empty()) throw ValidationError("mlp_on_tape: empty network");
  TapeMlp m;
  int h = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const Layer& layer = p.layers[l];
    const int w = t.param(prefix + ".w" + std::to_string(l), layer.w);
    const int b = t.param(prefix + ".b" + std::to_string(l), layer.b);
    m.weights.push_back(w);
    m.biases.push_back(b);
    h = t.add_bias(t.matmul(w, h), b);
    if (layer.act == Activation::relu) h = t.relu(h);
  }
  m.out = h;
  return m;
}

/// Copy trained values back from tape parameter nodes.
inline void mlp_from_tape(Tape& t, const TapeMlp& m, MlpParams& p) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    p.layers[l].w = t.value(m.weights[l]);
    p.layers[l].b = t.value(m.biases[l]);
  }
}

/// Tape subgraph for the summed squared weights of a mounted MLP.
inline int l2_on_tape(Tape& t, const TapeMlp& m) {
  int acc = -1;
  for (int w : m.weights) {
    const int s = t.sumsq(w);
    acc = acc < 0 ? s : t.add(acc, s);
  }
  return acc;
}

/// One Adam step over every parameter registered on the tape (call after
/// backward()).
inline void adam_step_tape(Tape& t, Adam& opt) {
  opt.step_begin();
  const std::vector<int>& ps = t.params();
  for (std::size_t i = 0; i < ps.size(); ++i)
    opt.update((int)i, t.param_value(ps[i]), t.grad(ps[i]), t.name(ps[i]));
}

}  // namespace tcrom
