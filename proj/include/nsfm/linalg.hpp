#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "nsfm/errors.hpp"

namespace nsfm {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// Largest element count any constructed matrix may reach (kron, products).
inline constexpr std::size_t kMaxMatrixElements = std::size_t{1} << 28;

// Dense real vector in double precision.
class RealVector {
 public:
  RealVector() = default;
  explicit RealVector(std::size_t n, double value = 0.0) : data_(n, value) {}
  explicit RealVector(std::vector<double> data) : data_(std::move(data)) {}
  RealVector(std::initializer_list<double> values) : data_(values) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  operator std::span<const double>() const { return data_; }
  operator std::span<double>() { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  const std::vector<double>& values() const { return data_; }

  RealVector& operator+=(const RealVector& other);
  RealVector& operator-=(const RealVector& other);
  RealVector& operator*=(double s);

  friend bool operator==(const RealVector&, const RealVector&) = default;

 private:
  std::vector<double> data_;
};

RealVector operator+(RealVector a, const RealVector& b);
RealVector operator-(RealVector a, const RealVector& b);
RealVector operator*(double s, RealVector v);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
double norm(std::span<const double> v);
double max_abs(std::span<const double> v);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T value = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), value) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw SizingError("matrix data length does not match rows x cols");
    }
  }
  // Row-by-row literal, e.g. {{1, 0}, {0, 1}}.
  Matrix(std::initializer_list<std::initializer_list<T>> rows);

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      m(i, i) = T{1};
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  const std::vector<T>& values() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  static std::size_t checked_size(std::size_t rows, std::size_t cols) {
    if (cols != 0 && rows > kMaxMatrixElements / cols) {
      throw SizingError("matrix dimensions exceed the element cap");
    }
    return rows * cols;
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
Matrix<T>::Matrix(std::initializer_list<std::initializer_list<T>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw SizingError("ragged matrix literal");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;

RealMatrix transpose(const RealMatrix& a);
ComplexMatrix transpose(const ComplexMatrix& a);
ComplexMatrix adjoint(const ComplexMatrix& a);
ComplexMatrix conjugate(const ComplexMatrix& a);

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b);
ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b);
// a * b^T without materializing the transpose.
RealMatrix multiply_transposed(const RealMatrix& a, const RealMatrix& b);

RealVector multiply(const RealMatrix& a, std::span<const double> x);
// out = a * x; out must have a.rows() entries.
void multiply_into(const RealMatrix& a, std::span<const double> x,
                   std::span<double> out);
ComplexVector multiply(const ComplexMatrix& a, std::span<const Complex> x);

RealMatrix subtract(const RealMatrix& a, const RealMatrix& b);
double frobenius_norm(const RealMatrix& a);
double frobenius_norm(const ComplexMatrix& a);
double max_abs_diff(const RealMatrix& a, const RealMatrix& b);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

// Kronecker product; entry (i*b.rows()+k, j*b.cols()+l) = a(i,j)*b(k,l).
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b,
                   std::size_t max_elements = kMaxMatrixElements);
RealMatrix kron(const RealMatrix& a, const RealMatrix& b,
                std::size_t max_elements = kMaxMatrixElements);

// Unitary DFT matrix, F(j,k) = exp(-2*pi*i*j*k/n) / sqrt(n).
ComplexMatrix dft_matrix(std::size_t n);

// Sylvester Hadamard matrix of order n (a power of two) scaled by 1/sqrt(n).
RealMatrix hadamard(std::size_t n);

ComplexMatrix to_complex(const RealMatrix& a);

// [[Re a, -Im a], [Im a, Re a]].
RealMatrix realify(const ComplexMatrix& a);

// [Re v; Im v] and its inverse.
RealVector complex_to_real_vec(std::span<const Complex> v);
ComplexVector real_to_complex_vec(std::span<const double> v);

// Column-major stacking, matching vec(BXC) = (C^T kron B) vec(X).
ComplexVector vec(const ComplexMatrix& a);
ComplexMatrix unvec(std::span<const Complex> v, std::size_t rows,
                    std::size_t cols);

// Cholesky factor of a symmetric positive definite matrix. Construction fails
// with RankError when a pivot drops below `kPivotTolerance` times the largest
// diagonal entry.
class CholeskyFactor {
 public:
  static constexpr double kPivotTolerance = 1e-10;

  explicit CholeskyFactor(const RealMatrix& spd);

  std::size_t dim() const { return lower_.rows(); }

  void solve_in_place(std::span<double> rhs) const;
  RealVector solve(std::span<const double> rhs) const;
  // Solves spd * X = B column by column.
  RealMatrix solve(const RealMatrix& b) const;

 private:
  RealMatrix lower_;
};

// Moore-Penrose pseudo-inverse of a wide full-row-rank matrix,
// A^T (A A^T)^{-1}. Retries once with diagonal jitter
// 1e-12 * trace(A A^T) / rows before reporting RankError.
RealMatrix pinv_wide(const RealMatrix& a);

}  // namespace nsfm
