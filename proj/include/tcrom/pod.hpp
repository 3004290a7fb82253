#pragma once

#include <iostream>
#include <vector>

#include "tcrom/matrix.hpp"
#include "tcrom/trajectory.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Proper orthogonal decomposition baseline: best linear subspace of the
// mean-centered training snapshots, via thin SVD.
// ---------------------------------------------------------------------------

struct PodBasis {
  Matrix mean;                         // D x 1
  Matrix modes;                        // D x d, orthonormal columns
  std::vector<double> singular_values; // full spectrum, descending

  int dim() const { return modes.rows(); }
  int n_modes() const { return modes.cols(); }
};

/// Fit from training snapshots given as rows (n_train x D).  If the data has
/// fewer than d significant directions the basis keeps what exists.
inline PodBasis pod_fit(const Matrix& rows, int d) {
  if (rows.rows() < 1) throw ValidationError("pod: no training snapshots");
  if (d < 1) throw ValidationError("pod: d must be >= 1");
  const int n = rows.rows(), dim = rows.cols();

  PodBasis basis;
  basis.mean = Matrix(dim, 1);
  for (int i = 0; i < n; ++i) {
    const double* row = rows.row_ptr(i);
    for (int j = 0; j < dim; ++j) basis.mean(j, 0) += row[j];
  }
  for (int j = 0; j < dim; ++j) basis.mean(j, 0) /= n;

  Matrix centered(dim, n);  // columns = snapshots
  for (int i = 0; i < n; ++i) {
    const double* row = rows.row_ptr(i);
    for (int j = 0; j < dim; ++j) centered(j, i) = row[j] - basis.mean(j, 0);
  }

  const Svd svd = svd_thin(centered);
  int usable = 0;
  const double cut = svd.s.empty() ? 0.0 : 1e-12 * svd.s[0];
  for (double s : svd.s)
    if (s > cut && s > 0.0) ++usable;
  const int k = std::min(d, usable);
  if (k < d)
    std::cerr << "pod: requested " << d << " modes but data supports " << k << "\n";
  if (k < 1) throw ValidationError("pod: training data has no variance");

  basis.modes = Matrix(dim, k);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < k; ++j) basis.modes(i, j) = svd.u(i, j);
  basis.singular_values = svd.s;
  return basis;
}

/// Coefficients of (columns of) z in the basis: x = U^T (z - mean).
inline Matrix pod_project(const PodBasis& b, const Matrix& z) {
  if (z.rows() != b.dim())
    throw ValidationError("pod_project: state dimension mismatch");
  Matrix centered = z;
  for (int i = 0; i < z.rows(); ++i) {
    double* row = centered.row_ptr(i);
    for (int j = 0; j < z.cols(); ++j) row[j] -= b.mean(i, 0);
  }
  return matmul(b.modes, centered, true, false);
}

/// Reconstruction: z = mean + U x.
inline Matrix pod_reconstruct(const PodBasis& b, const Matrix& x) {
  if (x.rows() != b.n_modes())
    throw ValidationError("pod_reconstruct: coefficient dimension mismatch");
  Matrix z = matmul(b.modes, x);
  for (int i = 0; i < z.rows(); ++i) {
    double* row = z.row_ptr(i);
    for (int j = 0; j < z.cols(); ++j) row[j] += b.mean(i, 0);
  }
  return z;
}

// ---------------------------------------------------------------------------
// Whole-state or per-block POD over a trajectory.
// ---------------------------------------------------------------------------

struct PodSet {
  bool per_block = false;
  std::vector<PodBasis> parts;  // one entry, or one per trajectory block
};

inline PodSet pod_fit_trajectory(const Trajectory& t, const std::vector<int>& train,
                                 const std::vector<int>& dims, bool per_block) {
  const Matrix rows = rows_subset(t.snapshots, train);
  PodSet set;
  set.per_block = per_block;
  if (!per_block) {
    if (dims.size() != 1) throw ValidationError("pod: whole-state fit takes one d");
    set.parts.push_back(pod_fit(rows, dims[0]));
    return set;
  }
  if (dims.size() != t.blocks.size())
    throw ValidationError("pod: need one d per block");
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    const int off = t.block_offset(b), w = t.blocks[b].width;
    Matrix sub(rows.rows(), w);
    for (int i = 0; i < rows.rows(); ++i)
      std::memcpy(sub.row_ptr(i), rows.row_ptr(i) + off, sizeof(double) * w);
    set.parts.push_back(pod_fit(sub, dims[(int)b]));
  }
  return set;
}

/// Round-trip every snapshot row through the basis; rows not in `rows` are
/// copied untouched only if requested via subset evaluation by the caller.
inline Matrix pod_roundtrip_rows(const PodSet& set, const Trajectory& t) {
  const int n = t.n_snapshots();
  Matrix out(n, t.dim());
  if (!set.per_block) {
    Matrix z = transpose(t.snapshots);
    Matrix rec = pod_reconstruct(set.parts[0], pod_project(set.parts[0], z));
    return transpose(rec);
  }
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    const int off = t.block_offset(b), w = t.blocks[b].width;
    Matrix z(w, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < w; ++j) z(j, i) = t.snapshots(i, off + j);
    Matrix rec = pod_reconstruct(set.parts[b], pod_project(set.parts[b], z));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < w; ++j) out(i, off + j) = rec(j, i);
  }
  return out;
}

/// Per-variable test MSE of the POD round trip.
inline std::vector<std::pair<std::string, double>> pod_eval(
    const PodSet& set, const Trajectory& t, const std::vector<int>& test_rows) {
  return block_mse(t, pod_roundtrip_rows(set, t), test_rows);
}

}  // namespace tcrom
