#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tcrom/mlp.hpp"
#include "tcrom/pod.hpp"
#include "tcrom/sae.hpp"
#include "tcrom/spnn.hpp"
#include "tcrom/trajectory.hpp"
#include "tcrom/uc.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Model checkpoints share one container: a single JSON header line (format
// version, kind, layer sizes, activation tags, hyperparameters, seed, block
// table) followed by the named float64 matrices back to back, little-endian,
// weights then biases layer by layer.
// ---------------------------------------------------------------------------

struct Checkpoint {
  json header;
  std::map<std::string, Matrix> blocks;

  const Matrix& block(const std::string& name) const {
    auto it = blocks.find(name);
    if (it == blocks.end())
      throw ValidationError("checkpoint: missing block '" + name + "'");
    return it->second;
  }
};

inline void write_checkpoint(const std::string& path, const std::string& kind,
                             const json& meta,
                             const std::vector<std::pair<std::string, const Matrix*>>& blocks) {
  json h;
  h["format"] = "checkpoint";
  h["version"] = 1;
  h["kind"] = kind;
  h["meta"] = meta;
  h["blocks"] = json::array();
  for (const auto& [name, m] : blocks)
    h["blocks"].push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});

  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  os << h.dump() << '\n';
  for (const auto& [name, m] : blocks) detail::write_f64(os, m->data(), m->size());
  if (!os) throw ValidationError("write failed for '" + path + "'");
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path + "'");
  Checkpoint c;
  c.header = detail::read_header_line(is, path);
  if (c.header.value("format", "") != "checkpoint")
    throw ValidationError("'" + path + "': not a checkpoint file");
  for (const json& b : c.header.at("blocks")) {
    const std::string name = b.at("name").get<std::string>();
    Matrix m(b.at("rows").get<int>(), b.at("cols").get<int>());
    detail::read_f64(is, m.data(), m.size());
    c.blocks[name] = std::move(m);
  }
  return c;
}

/// Peek at the kind without reading payloads.
inline std::string checkpoint_kind(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path + "'");
  const json h = detail::read_header_line(is, path);
  if (h.value("format", "") != "checkpoint")
    throw ValidationError("'" + path + "': not a checkpoint file");
  return h.value("kind", "");
}

// --- MLP <-> blocks ---------------------------------------------------------

namespace detail {

inline json mlp_meta(const MlpParams& p) {
  json m;
  m["sizes"] = p.sizes();
  m["activations"] = json::array();
  for (const Layer& l : p.layers) m["activations"].push_back(activation_name(l.act));
  return m;
}

inline void mlp_blocks(const MlpParams& p, const std::string& prefix,
                       std::vector<std::pair<std::string, const Matrix*>>& out) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    out.emplace_back(prefix + ".w" + std::to_string(l), &p.layers[l].w);
    out.emplace_back(prefix + ".b" + std::to_string(l), &p.layers[l].b);
  }
}

inline MlpParams mlp_load(const Checkpoint& c, const json& meta, const std::string& prefix) {
  MlpParams p;
  const auto sizes = meta.at("sizes").get<std::vector<int>>();
  const auto acts = meta.at("activations").get<std::vector<std::string>>();
  if (sizes.size() != acts.size() + 1)
    throw ValidationError("checkpoint: inconsistent layer metadata under '" + prefix + "'");
  for (std::size_t l = 0; l < acts.size(); ++l) {
    Layer layer;
    layer.w = c.block(prefix + ".w" + std::to_string(l));
    layer.b = c.block(prefix + ".b" + std::to_string(l));
    layer.act = activation_from_name(acts[l]);
    if (layer.w.rows() != sizes[l + 1] || layer.w.cols() != sizes[l])
      throw ValidationError("checkpoint: block '" + prefix + ".w" + std::to_string(l) +
                            "' shape does not match layer sizes");
    if (layer.b.rows() != sizes[l + 1] || layer.b.cols() != 1)
      throw ValidationError("checkpoint: block '" + prefix + ".b" + std::to_string(l) +
                            "' shape does not match layer sizes");
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace detail

// --- autoencoder set ---------------------------------------------------------

inline void save_sae(const std::string& path, const SaeSet& s) {
  json meta;
  meta["per_block"] = s.per_block;
  meta["models"] = json::array();
  std::vector<std::pair<std::string, const Matrix*>> blocks;
  for (std::size_t i = 0; i < s.models.size(); ++i) {
    const SaeModel& m = s.models[i];
    json jm;
    jm["encoder"] = detail::mlp_meta(m.encoder);
    jm["decoder"] = detail::mlp_meta(m.decoder);
    jm["active"] = std::vector<int>(m.active.begin(), m.active.end());
    jm["lambda_r"] = m.lambda_r;
    jm["seed"] = m.seed;
    meta["models"].push_back(jm);
    const std::string prefix = "m" + std::to_string(i);
    detail::mlp_blocks(m.encoder, prefix + ".enc", blocks);
    detail::mlp_blocks(m.decoder, prefix + ".dec", blocks);
  }
  write_checkpoint(path, "sae", meta, blocks);
}

inline SaeSet load_sae(const std::string& path) {
  const Checkpoint c = read_checkpoint(path);
  if (c.header.value("kind", "") != "sae")
    throw ValidationError("'" + path + "': expected an autoencoder checkpoint");
  const json& meta = c.header.at("meta");
  SaeSet s;
  s.per_block = meta.at("per_block").get<bool>();
  const json& models = meta.at("models");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string prefix = "m" + std::to_string(i);
    SaeModel m;
    m.encoder = detail::mlp_load(c, models[i].at("encoder"), prefix + ".enc");
    m.decoder = detail::mlp_load(c, models[i].at("decoder"), prefix + ".dec");
    const auto act = models[i].at("active").get<std::vector<int>>();
    m.active.assign(act.begin(), act.end());
    m.lambda_r = models[i].value("lambda_r", 0.0);
    m.seed = models[i].value("seed", 0ull);
    if ((int)m.active.size() != m.bottleneck())
      throw ValidationError("'" + path + "': active mask does not match bottleneck");
    s.models.push_back(std::move(m));
  }
  if (s.models.empty()) throw ValidationError("'" + path + "': checkpoint holds no models");
  return s;
}

// --- dynamics models ----------------------------------------------------------

inline void save_spnn(const std::string& path, const SpnnModel& m) {
  json meta;
  meta["net"] = detail::mlp_meta(m.net);
  meta["dim"] = m.dim;
  meta["dt"] = m.dt;
  meta["lambda_d"] = m.lambda_d;
  meta["lambda_r"] = m.lambda_r;
  meta["seed"] = m.seed;
  std::vector<std::pair<std::string, const Matrix*>> blocks;
  detail::mlp_blocks(m.net, "net", blocks);
  write_checkpoint(path, "spnn", meta, blocks);
}

inline SpnnModel load_spnn(const std::string& path) {
  const Checkpoint c = read_checkpoint(path);
  if (c.header.value("kind", "") != "spnn")
    throw ValidationError("'" + path + "': expected a structure-preserving checkpoint");
  const json& meta = c.header.at("meta");
  SpnnModel m;
  m.net = detail::mlp_load(c, meta.at("net"), "net");
  m.dim = meta.at("dim").get<int>();
  m.dt = meta.at("dt").get<double>();
  m.lambda_d = meta.value("lambda_d", 0.0);
  m.lambda_r = meta.value("lambda_r", 0.0);
  m.seed = meta.value("seed", 0ull);
  if (m.net.output_size() != spnn_output_size(m.dim))
    throw ValidationError("'" + path + "': network output does not match dimension");
  return m;
}

inline void save_uc(const std::string& path, const UcModel& m) {
  json meta;
  meta["net"] = detail::mlp_meta(m.net);
  meta["dim"] = m.dim;
  meta["dt"] = m.dt;
  meta["residual"] = m.residual;
  meta["seed"] = m.seed;
  std::vector<std::pair<std::string, const Matrix*>> blocks;
  detail::mlp_blocks(m.net, "net", blocks);
  write_checkpoint(path, "uc", meta, blocks);
}

inline UcModel load_uc(const std::string& path) {
  const Checkpoint c = read_checkpoint(path);
  if (c.header.value("kind", "") != "uc")
    throw ValidationError("'" + path + "': expected an unconstrained-model checkpoint");
  const json& meta = c.header.at("meta");
  UcModel m;
  m.net = detail::mlp_load(c, meta.at("net"), "net");
  m.dim = meta.at("dim").get<int>();
  m.dt = meta.at("dt").get<double>();
  m.residual = meta.value("residual", false);
  m.seed = meta.value("seed", 0ull);
  if (m.net.output_size() != m.dim || m.net.input_size() != m.dim)
    throw ValidationError("'" + path + "': network shape does not match dimension");
  return m;
}

// --- linear basis ---------------------------------------------------------------

inline void save_pod(const std::string& path, const PodSet& s) {
  json meta;
  meta["per_block"] = s.per_block;
  meta["parts"] = json::array();
  std::vector<std::pair<std::string, const Matrix*>> blocks;
  for (std::size_t i = 0; i < s.parts.size(); ++i) {
    meta["parts"].push_back({{"singular_values", s.parts[i].singular_values}});
    const std::string prefix = "p" + std::to_string(i);
    blocks.emplace_back(prefix + ".mean", &s.parts[i].mean);
    blocks.emplace_back(prefix + ".modes", &s.parts[i].modes);
  }
  write_checkpoint(path, "pod", meta, blocks);
}

inline PodSet load_pod(const std::string& path) {
  const Checkpoint c = read_checkpoint(path);
  if (c.header.value("kind", "") != "pod")
    throw ValidationError("'" + path + "': expected a linear-basis checkpoint");
  const json& meta = c.header.at("meta");
  PodSet s;
  s.per_block = meta.at("per_block").get<bool>();
  const json& parts = meta.at("parts");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string prefix = "p" + std::to_string(i);
    PodBasis b;
    b.mean = c.block(prefix + ".mean");
    b.modes = c.block(prefix + ".modes");
    b.singular_values = parts[i].at("singular_values").get<std::vector<double>>();
    s.parts.push_back(std::move(b));
  }
  if (s.parts.empty()) throw ValidationError("'" + path + "': checkpoint holds no basis");
  return s;
}

}  // namespace tcrom
