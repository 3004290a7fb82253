#pragma once

#include <string>
#include <vector>

#include "tcrom/csv.hpp"
#include "tcrom/spnn.hpp"
#include "tcrom/trajectory.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Deterministic CSV emission for metric tables and figure data.
// ---------------------------------------------------------------------------

/// Two-model comparison table: variable,<col_a>,<col_b>.
inline void write_mse_table(const std::string& path, const std::string& col_a,
                            const std::string& col_b,
                            const std::vector<std::pair<std::string, double>>& a,
                            const std::vector<std::pair<std::string, double>>& b) {
  if (a.size() != b.size()) throw ValidationError("mse table: column length mismatch");
  CsvWriter csv(path);
  csv.header({"variable", col_a, col_b});
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first)
      throw ValidationError("mse table: variable order mismatch at row " + std::to_string(i));
    csv.row(a[i].first, {a[i].second, b[i].second});
  }
}

/// Single-model table: variable,<col>.
inline void write_mse_column(const std::string& path, const std::string& col,
                             const std::vector<std::pair<std::string, double>>& a) {
  CsvWriter csv(path);
  csv.header({"variable", col});
  for (const auto& [name, v] : a) csv.row(name, {v});
}

/// Latent path plus thermodynamic audit: t,x1..xd,dEdt,dSdt,rL,rM.
inline void write_rollout_csv(const std::string& path, const RolloutReport& rep) {
  CsvWriter csv(path);
  std::vector<std::string> head{"t"};
  for (int i = 0; i < rep.latent.cols(); ++i) head.push_back("x" + std::to_string(i + 1));
  head.insert(head.end(), {"dEdt", "dSdt", "rL", "rM"});
  csv.header(head);
  for (int s = 0; s < rep.latent.rows(); ++s) {
    std::vector<double> row{s * rep.dt};
    for (int i = 0; i < rep.latent.cols(); ++i) row.push_back(rep.latent(s, i));
    if (!rep.audit.empty()) {
      row.insert(row.end(), {rep.audit[s].dedt, rep.audit[s].dsdt, rep.audit[s].r_l,
                             rep.audit[s].r_m});
    } else {
      row.insert(row.end(), {0.0, 0.0, 0.0, 0.0});
    }
    csv.row(row);
  }
}

/// Encoded ground-truth latents next to the integrated ones.
inline void write_latent_paths(const std::string& path, double dt, const Matrix& encoded,
                               const Matrix& integrated) {
  if (encoded.rows() != integrated.rows() || encoded.cols() != integrated.cols())
    throw ValidationError("latent paths: shape mismatch");
  CsvWriter csv(path);
  std::vector<std::string> head{"t"};
  for (int i = 0; i < encoded.cols(); ++i) head.push_back("x" + std::to_string(i + 1) + "_data");
  for (int i = 0; i < encoded.cols(); ++i) head.push_back("x" + std::to_string(i + 1) + "_model");
  csv.header(head);
  for (int s = 0; s < encoded.rows(); ++s) {
    std::vector<double> row{s * dt};
    for (int i = 0; i < encoded.cols(); ++i) row.push_back(encoded(s, i));
    for (int i = 0; i < encoded.cols(); ++i) row.push_back(integrated(s, i));
    csv.row(row);
  }
}

/// Energy/entropy rates along the rollout.
inline void write_thermo_rates(const std::string& path, const RolloutReport& rep) {
  CsvWriter csv(path);
  csv.header({"t", "dEdt", "dSdt"});
  for (std::size_t s = 0; s < rep.audit.size(); ++s)
    csv.row({s * rep.dt, rep.audit[s].dedt, rep.audit[s].dsdt});
}

/// Ground truth vs decoded rollout at selected nodes of every variable block.
inline void write_nodal_traces(const std::string& path, const Trajectory& t,
                               const Matrix& decoded, const std::vector<int>& nodes) {
  if (decoded.rows() != t.n_snapshots() || decoded.cols() != t.dim())
    throw ValidationError("nodal traces: decoded shape mismatch");
  CsvWriter csv(path);
  std::vector<std::string> head{"t"};
  for (const Block& b : t.blocks)
    for (int node : nodes) {
      if (node < 0 || node >= b.width)
        throw ValidationError("nodal traces: node " + std::to_string(node) +
                              " outside block '" + b.name + "'");
      head.push_back(b.name + std::to_string(node) + "_gt");
      head.push_back(b.name + std::to_string(node) + "_model");
    }
  csv.header(head);
  for (int s = 0; s < t.n_snapshots(); ++s) {
    std::vector<double> row{s * t.dt};
    for (std::size_t b = 0; b < t.blocks.size(); ++b) {
      const int off = t.block_offset(b);
      for (int node : nodes) {
        row.push_back(t.snapshots(s, off + node));
        row.push_back(decoded(s, off + node));
      }
    }
    csv.row(row);
  }
}

/// Loss history rows (first column epoch).
template <std::size_t N>
inline void write_history(const std::string& path, const std::vector<std::string>& head,
                          const std::vector<std::array<double, N>>& hist) {
  CsvWriter csv(path);
  csv.header(head);
  for (const auto& h : hist) csv.row(std::vector<double>(h.begin(), h.end()));
}

}  // namespace tcrom
