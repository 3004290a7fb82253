#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "tcrom/error.hpp"

namespace tcrom {

/// Dense row-major matrix of doubles.  Column vectors are n x 1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw ValidationError("Matrix: negative shape");
  }
  Matrix(int rows, int cols, std::initializer_list<double> v) : Matrix(rows, cols) {
    if ((int)v.size() != rows * cols)
      throw ValidationError("Matrix: initializer size mismatch");
    std::copy(v.begin(), v.end(), data_.begin());
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix column(const std::vector<double>& v) {
    Matrix m((int)v.size(), 1);
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) { return data_[std::size_t(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[std::size_t(i) * cols_ + j]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(int i) { return data_.data() + std::size_t(i) * cols_; }
  const double* row_ptr(int i) const { return data_.data() + std::size_t(i) * cols_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  std::vector<double> to_vector() const { return data_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline bool all_finite(const Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Elementwise helpers
// ---------------------------------------------------------------------------

inline void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw ValidationError(std::string(op) + ": shape mismatch " + shape_str(a) +
                          " vs " + shape_str(b));
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "operator+");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "operator-");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline double dot(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

inline double frob_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Matrix multiplication.  C = op(A) * op(B) with optional accumulation into C.
// Loop orders are chosen so the innermost loop always walks contiguous memory;
// gcc vectorizes all three kernels.  (A^T * B^T is not needed anywhere and is
// rejected rather than supported badly.)
// ---------------------------------------------------------------------------

inline void matmul_into(Matrix& c, const Matrix& a, const Matrix& b,
                        bool ta = false, bool tb = false, bool accumulate = false) {
  if (ta && tb) throw ValidationError("matmul: A^T*B^T unsupported");
  const int m = ta ? a.cols() : a.rows();
  const int k = ta ? a.rows() : a.cols();
  const int kb = tb ? b.cols() : b.rows();
  const int n = tb ? b.rows() : b.cols();
  if (k != kb)
    throw ValidationError("matmul: inner dimensions incompatible " + shape_str(a) +
                          (ta ? "^T" : "") + " * " + shape_str(b) + (tb ? "^T" : ""));
  if (c.rows() != m || c.cols() != n) c = Matrix(m, n);
  else if (!accumulate) c.zero();

  if (!ta && !tb) {
    for (int i = 0; i < m; ++i) {
      double* crow = c.row_ptr(i);
      const double* arow = a.row_ptr(i);
      for (int l = 0; l < k; ++l) {
        const double av = arow[l];
        const double* brow = b.row_ptr(l);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!ta && tb) {
    // Materialize B^T once so the inner loop is a contiguous saxpy instead of
    // a scalar dot-product reduction (which gcc won't vectorize without FP
    // reassociation).  The per-entry summation order over l is unchanged.
    static thread_local std::vector<double> scratch;
    scratch.resize((std::size_t)k * n);
    for (int j = 0; j < n; ++j) {
      const double* brow = b.row_ptr(j);
      for (int l = 0; l < k; ++l) scratch[(std::size_t)l * n + j] = brow[l];
    }
    for (int i = 0; i < m; ++i) {
      double* crow = c.row_ptr(i);
      const double* arow = a.row_ptr(i);
      for (int l = 0; l < k; ++l) {
        const double av = arow[l];
        const double* srow = scratch.data() + (std::size_t)l * n;
        for (int j = 0; j < n; ++j) crow[j] += av * srow[j];
      }
    }
  } else {  // ta && !tb
    for (int l = 0; l < k; ++l) {
      const double* arow = a.row_ptr(l);
      const double* brow = b.row_ptr(l);
      for (int i = 0; i < m; ++i) {
        const double av = arow[i];
        double* crow = c.row_ptr(i);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b, bool ta = false, bool tb = false) {
  Matrix c;
  matmul_into(c, a, b, ta, tb);
  return c;
}

// ---------------------------------------------------------------------------
// Thin SVD via one-sided Jacobi rotations: X = U * diag(s) * V^T with
// orthonormal U (m x r), V (n x r), r = min(m,n), s descending.
// Robust for the moderate sizes used here (snapshot matrices up to ~600 cols).
// ---------------------------------------------------------------------------

struct Svd {
  Matrix u;                    // m x r
  std::vector<double> s;       // r, descending, >= 0
  Matrix vt;                   // r x n
};

namespace detail {

// One-sided Jacobi on W (m x n, m >= n): returns column norms in s and
// accumulates right rotations into V (n x n).
inline void one_sided_jacobi(Matrix& w, Matrix& v, std::vector<double>& s,
                             double tol, int max_sweeps) {
  const int m = w.rows(), n = w.cols();
  v = Matrix::identity(n);
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          alpha += wp * wp;
          beta += wq * wq;
          gamma += wp * wq;
        }
        if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (int i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = cs * wp - sn * wq;
          w(i, q) = sn * wp + cs * wq;
        }
        for (int i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = cs * vp - sn * vq;
          v(i, q) = sn * vp + cs * vq;
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == max_sweeps)
    throw Error("svd: no convergence after " + std::to_string(max_sweeps) + " sweeps");
  s.resize(n);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += w(i, j) * w(i, j);
    s[j] = std::sqrt(acc);
  }
}

}  // namespace detail

inline Svd svd_thin(const Matrix& x, double tol = 1e-12, int max_sweeps = 60) {
  if (x.rows() == 0 || x.cols() == 0) throw ValidationError("svd: empty matrix");
  const bool flipped = x.rows() < x.cols();
  Matrix w = flipped ? transpose(x) : x;
  const int m = w.rows(), n = w.cols();

  Matrix v;
  std::vector<double> s;
  detail::one_sided_jacobi(w, v, s, tol, max_sweeps);

  // Sort singular values descending (stable on ties).
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return s[a] > s[b]; });

  Matrix u(m, n), vs(n, n);
  std::vector<double> ss(n);
  const double smax = s.empty() ? 0.0 : s[order[0]];
  int next_fill = 0;  // deterministic completion for (near-)zero columns
  for (int j = 0; j < n; ++j) {
    const int src = order[j];
    ss[j] = s[src];
    for (int i = 0; i < n; ++i) vs(i, j) = v(i, src);
    if (s[src] > smax * 1e-300 && s[src] > 0.0) {
      const double inv = 1.0 / s[src];
      for (int i = 0; i < m; ++i) u(i, j) = w(i, src) * inv;
    } else {
      // Zero singular value: complete U with a unit vector orthogonal to the
      // columns already placed (Gram-Schmidt over canonical basis vectors).
      for (; next_fill < m; ++next_fill) {
        std::vector<double> cand(m, 0.0);
        cand[next_fill] = 1.0;
        for (int jj = 0; jj < j; ++jj) {
          double proj = 0.0;
          for (int i = 0; i < m; ++i) proj += cand[i] * u(i, jj);
          for (int i = 0; i < m; ++i) cand[i] -= proj * u(i, jj);
        }
        double nrm = 0.0;
        for (int i = 0; i < m; ++i) nrm += cand[i] * cand[i];
        nrm = std::sqrt(nrm);
        if (nrm > 0.5) {
          for (int i = 0; i < m; ++i) u(i, j) = cand[i] / nrm;
          ++next_fill;
          break;
        }
      }
    }
  }

  Svd out;
  if (!flipped) {
    out.u = std::move(u);
    out.s = std::move(ss);
    out.vt = transpose(vs);
  } else {
    out.u = std::move(vs);
    out.s = std::move(ss);
    out.vt = transpose(u);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symmetric eigenvalues via cyclic two-sided Jacobi.  Used to certify
// positive semidefiniteness; accuracy is near machine precision for the
// small matrices involved.
// ---------------------------------------------------------------------------

inline std::vector<double> eig_sym(const Matrix& a, double sym_tol = 1e-12,
                                   int max_sweeps = 100) {
  if (a.rows() != a.cols()) throw ValidationError("eig_sym: matrix not square");
  const int n = a.rows();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(a(i, j) - a(j, i)) > sym_tol)
        throw ValidationError("eig_sym: matrix not symmetric at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
  Matrix w = a;
  // Symmetrize exactly so rotations stay consistent.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (w(i, j) + w(j, i));
      w(i, j) = w(j, i) = v;
    }
  const double scale = std::max(1.0, frob_norm(w));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * w(i, j) * w(i, j);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(w(p, q)) <= 1e-18 * scale) continue;
        const double theta = (w(q, q) - w(p, p)) / (2.0 * w(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < n; ++i) {
          const double wip = w(i, p), wiq = w(i, q);
          w(i, p) = c * wip - s * wiq;
          w(i, q) = s * wip + c * wiq;
        }
        for (int i = 0; i < n; ++i) {
          const double wpi = w(p, i), wqi = w(q, i);
          w(p, i) = c * wpi - s * wqi;
          w(q, i) = s * wpi + c * wqi;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = w(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double eig_sym_min(const Matrix& a) { return eig_sym(a).front(); }

}  // namespace tcrom
