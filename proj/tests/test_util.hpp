#pragma once

#include <Eigen/Dense>

#include "nsfm/linalg.hpp"
#include "nsfm/rng.hpp"

namespace nsfm::test {

inline RealMatrix random_real(std::size_t rows, std::size_t cols, Random& rng) {
  RealMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

inline ComplexMatrix random_complex(std::size_t rows, std::size_t cols,
                                    Random& rng) {
  ComplexMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(i, j) = Complex(rng.gaussian(), rng.gaussian());
  return m;
}

inline RealVector random_vector(std::size_t n, Random& rng) {
  RealVector v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

inline Eigen::MatrixXd to_eigen(const RealMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline Eigen::MatrixXcd to_eigen(const ComplexMatrix& m) {
  Eigen::MatrixXcd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline Eigen::VectorXd to_eigen(const RealVector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

// Relative Frobenius distance ||a - b|| / max(1, ||b||).
inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace nsfm::test
