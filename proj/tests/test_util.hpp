#pragma once

#include <functional>

#include "tcrom/matrix.hpp"
#include "tcrom/rng.hpp"

namespace testutil {

using tcrom::Matrix;

/// Triple-loop reference product (independent of the library kernel).
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
      c(i, j) = s;
    }
  return c;
}

inline Matrix random_matrix(int rows, int cols, tcrom::Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

inline Matrix naive_relu(const Matrix& a) {
  Matrix r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = std::max(r.data()[i], 0.0);
  return r;
}

/// Central finite difference of f with respect to one entry of m.
inline double fd_scalar(Matrix& m, std::size_t flat, const std::function<double()>& f,
                        double h = 1e-5) {
  const double save = m.data()[flat];
  m.data()[flat] = save + h;
  const double up = f();
  m.data()[flat] = save - h;
  const double down = f();
  m.data()[flat] = save;
  return (up - down) / (2.0 * h);
}

/// Gradient agreement: |g - ref| <= max(rel*|ref|, floor).
inline bool grad_close(double g, double ref, double rel = 1e-5, double floor = 1e-7) {
  return std::fabs(g - ref) <= std::max(rel * std::fabs(ref), floor);
}

}  // namespace testutil
