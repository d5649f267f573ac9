#include "vcae/matrix.hpp"

#include <cmath>
#include <string>

#include "vcae/error.hpp"

namespace vcae {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  // i-k-j loop order keeps the inner accesses contiguous for row-major data.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.data().data() + i * a.cols();
    double* crow = c.data().data() + i * c.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data().data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      t(j, i) = a(i, j);
    }
  }
  return t;
}

void row_times_matrix(std::span<const double> x, const Matrix& a, std::span<double> y) {
  if (x.size() != a.rows() || y.size() != a.cols()) {
    throw ShapeError("row_times_matrix: vector length " + std::to_string(x.size()) +
                     " vs matrix " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    const double* arow = a.data().data() + k * a.cols();
    for (std::size_t j = 0; j < a.cols(); ++j) {
      y[j] += xk * arow[j];
    }
  }
}

}  // namespace vcae
