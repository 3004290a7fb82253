#pragma once

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcrom/matrix.hpp"
#include "tcrom/rng.hpp"

namespace tcrom {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Raw little-endian float64 payload I/O (byte-swapped on big-endian hosts).
// ---------------------------------------------------------------------------

namespace detail {

inline void bswap_doubles(double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t u;
    std::memcpy(&u, p + i, 8);
    u = __builtin_bswap64(u);
    std::memcpy(p + i, &u, 8);
  }
}

inline void write_f64(std::ostream& os, const double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::big) {
    std::vector<double> tmp(p, p + n);
    bswap_doubles(tmp.data(), n);
    os.write(reinterpret_cast<const char*>(tmp.data()), std::streamsize(8 * n));
  } else {
    os.write(reinterpret_cast<const char*>(p), std::streamsize(8 * n));
  }
}

inline void read_f64(std::istream& is, double* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), std::streamsize(8 * n));
  if ((std::size_t)is.gcount() != 8 * n)
    throw ValidationError("payload truncated: expected " + std::to_string(8 * n) +
                          " bytes, got " + std::to_string(is.gcount()));
  if constexpr (std::endian::native == std::endian::big) bswap_doubles(p, n);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trajectory: N_T snapshots (rows) of a D-dimensional state split into named
// variable blocks, e.g. q|v|e|tau with 100 columns each.
// ---------------------------------------------------------------------------

struct Block {
  std::string name;
  int width = 0;  // total columns in the state vector
};

struct Normalization {
  std::vector<double> shift, scale;  // one pair per block; empty = identity
  bool active() const { return !shift.empty(); }
};

struct Trajectory {
  Matrix snapshots;           // n_snapshots x dim, row = state at one instant
  std::vector<Block> blocks;  // widths sum to dim
  Normalization norm;         // mapping applied to raw data, if any
  double dt = 1.0;
  std::uint64_t seed = 0;
  int nodes = 0;              // spatial nodes per block (0 = not applicable)
  json meta;                  // free-form provenance (generator parameters)

  int dim() const { return snapshots.cols(); }
  int n_snapshots() const { return snapshots.rows(); }

  int block_offset(std::size_t b) const {
    int off = 0;
    for (std::size_t i = 0; i < b; ++i) off += blocks[i].width;
    return off;
  }

  int block_index(const std::string& name) const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i].name == name) return (int)i;
    throw ValidationError("trajectory: no block named '" + name + "'");
  }

  void check() const {
    int total = 0;
    for (const Block& b : blocks) {
      if (b.width < 1) throw ValidationError("trajectory: block '" + b.name + "' has width < 1");
      total += b.width;
    }
    if (total != dim())
      throw ValidationError("trajectory: block widths sum to " + std::to_string(total) +
                            " but dim is " + std::to_string(dim()));
    if (norm.active() && (norm.shift.size() != blocks.size() ||
                          norm.scale.size() != blocks.size()))
      throw ValidationError("trajectory: normalization entries do not match blocks");
  }
};

/// Per-block z-score using statistics pooled over the whole block and all
/// snapshots.  Constant blocks normalize to zero (scale 1).  Repeated calls
/// compose, so stored shift/scale always map back to the original raw data.
inline Normalization normalize(Trajectory& t) {
  t.check();
  const int n = t.n_snapshots();
  Normalization step;
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    const int off = t.block_offset(b), w = t.blocks[b].width;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = t.snapshots.row_ptr(i) + off;
      for (int j = 0; j < w; ++j) mean += row[j];
    }
    mean /= double(n) * w;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = t.snapshots.row_ptr(i) + off;
      for (int j = 0; j < w; ++j) var += (row[j] - mean) * (row[j] - mean);
    }
    var /= double(n) * w;
    double sd = std::sqrt(var);
    if (sd < 1e-12) sd = 1.0;
    step.shift.push_back(mean);
    step.scale.push_back(sd);
    for (int i = 0; i < n; ++i) {
      double* row = t.snapshots.row_ptr(i) + off;
      for (int j = 0; j < w; ++j) row[j] = (row[j] - mean) / sd;
    }
  }
  if (!t.norm.active()) {
    t.norm = step;
  } else {
    for (std::size_t b = 0; b < t.blocks.size(); ++b) {
      t.norm.shift[b] += t.norm.scale[b] * step.shift[b];
      t.norm.scale[b] *= step.scale[b];
    }
  }
  return step;
}

inline void denormalize(Trajectory& t) {
  if (!t.norm.active()) return;
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    const int off = t.block_offset(b), w = t.blocks[b].width;
    for (int i = 0; i < t.n_snapshots(); ++i) {
      double* row = t.snapshots.row_ptr(i) + off;
      for (int j = 0; j < w; ++j) row[j] = t.norm.shift[b] + t.norm.scale[b] * row[j];
    }
  }
  t.norm = Normalization{};
}

// ---------------------------------------------------------------------------
// Train/test split over item indices (snapshots or transitions).
// ---------------------------------------------------------------------------

struct SplitIndex {
  std::vector<int> train, test;
  std::uint64_t seed = 0;
};

inline SplitIndex split(int n_items, double fraction, std::uint64_t seed) {
  if (n_items < 2)
    throw ValidationError("split: need at least 2 items, got " + std::to_string(n_items));
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("split: fraction must be in (0,1)");
  int n_train = (int)std::lround(fraction * n_items);
  n_train = std::max(1, std::min(n_items - 1, n_train));

  std::vector<int> idx(n_items);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = n_items - 1; i > 0; --i)
    std::swap(idx[i], idx[(int)rng.below((std::uint64_t)i + 1)]);

  SplitIndex s;
  s.seed = seed;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.test.assign(idx.begin() + n_train, idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

/// Gather a subset of rows into a new matrix.
inline Matrix rows_subset(const Matrix& m, const std::vector<int>& rows) {
  Matrix out((int)rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows())
      throw ValidationError("rows_subset: row index out of range");
    std::memcpy(out.row_ptr((int)i), m.row_ptr(rows[i]), sizeof(double) * m.cols());
  }
  return out;
}

/// Mean squared error per variable block between trajectory snapshots and an
/// approximation, averaged over the given rows and each block's columns.
inline std::vector<std::pair<std::string, double>> block_mse(
    const Trajectory& t, const Matrix& approx, const std::vector<int>& rows) {
  if (approx.cols() != t.dim())
    throw ValidationError("block_mse: approximation has wrong state dimension");
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    const int off = t.block_offset(b), w = t.blocks[b].width;
    double acc = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double* gt = t.snapshots.row_ptr(rows[r]) + off;
      const double* ap = approx.row_ptr(rows[r]) + off;
      for (int j = 0; j < w; ++j) {
        const double d = gt[j] - ap[j];
        acc += d * d;
      }
    }
    out.emplace_back(t.blocks[b].name, acc / (double(rows.size()) * w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// File format: one line of JSON metadata, '\n', then the snapshot matrix as
// raw little-endian float64, row-major.
// ---------------------------------------------------------------------------

inline json trajectory_header(const Trajectory& t) {
  json h;
  h["format"] = "trajectory";
  h["version"] = 1;
  h["dim"] = t.dim();
  h["n_snapshots"] = t.n_snapshots();
  h["dt"] = t.dt;
  h["seed"] = t.seed;
  h["nodes"] = t.nodes;
  h["blocks"] = json::array();
  for (const Block& b : t.blocks) h["blocks"].push_back({{"name", b.name}, {"width", b.width}});
  if (t.norm.active()) {
    h["normalization"] = {{"shift", t.norm.shift}, {"scale", t.norm.scale}};
  } else {
    h["normalization"] = nullptr;
  }
  h["meta"] = t.meta.is_null() ? json::object() : t.meta;
  return h;
}

inline void write_trajectory(const std::string& path, const Trajectory& t) {
  t.check();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  os << trajectory_header(t).dump() << '\n';
  detail::write_f64(os, t.snapshots.data(), t.snapshots.size());
  if (!os) throw ValidationError("write failed for '" + path + "'");
}

namespace detail {

inline json read_header_line(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line) || line.empty() || line.front() != '{')
    throw ValidationError("'" + path + "': missing JSON header line");
  json h = json::parse(line, nullptr, false);
  if (h.is_discarded()) throw ValidationError("'" + path + "': malformed JSON header");
  return h;
}

inline void apply_trajectory_header(Trajectory& t, const json& h, const std::string& path) {
  if (h.value("format", "") != "trajectory")
    throw ValidationError("'" + path + "': not a trajectory file");
  t.dt = h.at("dt").get<double>();
  t.seed = h.at("seed").get<std::uint64_t>();
  t.nodes = h.value("nodes", 0);
  t.blocks.clear();
  for (const json& b : h.at("blocks"))
    t.blocks.push_back({b.at("name").get<std::string>(), b.at("width").get<int>()});
  if (h.contains("normalization") && !h["normalization"].is_null()) {
    t.norm.shift = h["normalization"].at("shift").get<std::vector<double>>();
    t.norm.scale = h["normalization"].at("scale").get<std::vector<double>>();
  }
  t.meta = h.value("meta", json::object());
}

}  // namespace detail

/// Header-only scan: validates metadata and payload size without reading the
/// snapshot matrix (cheap even for multi-gigabyte files).
struct TrajectoryInfo {
  json header;
  int dim = 0;
  int n_snapshots = 0;
  std::uint64_t payload_bytes = 0;
};

inline TrajectoryInfo scan_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path + "'");
  TrajectoryInfo info;
  info.header = detail::read_header_line(is, path);
  if (info.header.value("format", "") != "trajectory")
    throw ValidationError("'" + path + "': not a trajectory file");
  info.dim = info.header.at("dim").get<int>();
  info.n_snapshots = info.header.at("n_snapshots").get<int>();
  if (info.dim < 1 || info.n_snapshots < 1)
    throw ValidationError("'" + path + "': non-positive dimensions in header");
  const std::uint64_t header_bytes = (std::uint64_t)is.tellg();
  const std::uint64_t file_bytes = (std::uint64_t)std::filesystem::file_size(path);
  info.payload_bytes = file_bytes - header_bytes;
  const std::uint64_t expected = 8ull * info.dim * info.n_snapshots;
  if (info.payload_bytes != expected)
    throw ValidationError("'" + path + "': payload is " + std::to_string(info.payload_bytes) +
                          " bytes, header implies " + std::to_string(expected));
  return info;
}

inline Trajectory read_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path + "'");
  const json h = detail::read_header_line(is, path);
  Trajectory t;
  detail::apply_trajectory_header(t, h, path);
  const int dim = h.at("dim").get<int>();
  const int n = h.at("n_snapshots").get<int>();
  if (dim < 1 || n < 1) throw ValidationError("'" + path + "': non-positive dimensions");
  t.snapshots = Matrix(n, dim);
  detail::read_f64(is, t.snapshots.data(), t.snapshots.size());
  t.check();
  return t;
}

// ---------------------------------------------------------------------------
// CSV ingestion for externally produced trajectories.  Layout gives per-node
// widths, e.g. {q:3, v:3, sigma:6} with nodes=N -> blocks of 3N|3N|6N columns.
// ---------------------------------------------------------------------------

struct LayoutEntry {
  std::string name;
  int per_node_width = 0;
};

/// Parse "q:3,v:3,sigma:6".
inline std::vector<LayoutEntry> parse_layout(const std::string& s) {
  std::vector<LayoutEntry> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= item.size())
      throw ValidationError("layout: malformed entry '" + item + "' (want name:width)");
    LayoutEntry e;
    e.name = item.substr(0, colon);
    try {
      e.per_node_width = std::stoi(item.substr(colon + 1));
    } catch (...) {
      throw ValidationError("layout: bad width in '" + item + "'");
    }
    if (e.per_node_width < 1) throw ValidationError("layout: width must be >= 1 in '" + item + "'");
    out.push_back(e);
  }
  if (out.empty()) throw ValidationError("layout: empty specification");
  return out;
}

inline Trajectory ingest_csv(const std::string& path, const std::vector<LayoutEntry>& layout,
                             int nodes, double dt) {
  if (nodes < 1) throw ValidationError("ingest: nodes must be >= 1");
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open '" + path + "'");

  int dim = 0;
  Trajectory t;
  for (const LayoutEntry& e : layout) {
    t.blocks.push_back({e.name, e.per_node_width * nodes});
    dim += e.per_node_width * nodes;
  }
  t.nodes = nodes;
  t.dt = dt;

  std::vector<double> values;
  std::string line;
  int row = 0, data_rows = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> rowvals;
    int col = 0;
    bool header_row = false;
    while (std::getline(ls, cell, ',')) {
      ++col;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      while (end && *end == ' ') ++end;
      if (end == cell.c_str() || (end && *end != '\0')) {
        if (row == 1) {
          header_row = true;  // tolerate a single leading header row
          break;
        }
        throw ValidationError("'" + path + "' row " + std::to_string(row) + " column " +
                              std::to_string(col) + ": not a number: '" + cell + "'");
      }
      rowvals.push_back(v);
    }
    if (header_row) continue;
    if ((int)rowvals.size() != dim)
      throw ValidationError("'" + path + "' row " + std::to_string(row) + ": " +
                            std::to_string(rowvals.size()) + " columns, layout implies " +
                            std::to_string(dim));
    values.insert(values.end(), rowvals.begin(), rowvals.end());
    ++data_rows;
  }
  if (data_rows < 1) throw ValidationError("'" + path + "': no data rows");
  t.snapshots = Matrix(data_rows, dim);
  std::memcpy(t.snapshots.data(), values.data(), sizeof(double) * values.size());
  t.check();
  return t;
}

/// Load external data: native trajectory files are self-describing; anything
/// else is treated as CSV and needs a layout declaration.
inline Trajectory ingest_external(const std::string& path,
                                  const std::vector<LayoutEntry>& layout, int nodes,
                                  double dt) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ValidationError("cannot open '" + path + "'");
  const int first = probe.peek();
  probe.close();
  if (first == '{') return read_trajectory(path);
  if (layout.empty())
    throw ValidationError("'" + path + "': CSV input requires a layout declaration");
  return ingest_csv(path, layout, nodes, dt);
}

}  // namespace tcrom
