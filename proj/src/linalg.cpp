#include "nsfm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nsfm {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw SizingError(std::string(what) + ": length mismatch (" +
                      std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

template <typename T>
Matrix<T> multiply_impl(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw SizingError("multiply: inner dimensions differ");
  }
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* ci = c.data() + i * c.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{}) {
        continue;
      }
      const T* bk = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) {
        ci[j] += aik * bk[j];
      }
    }
  }
  return c;
}

template <typename T>
Matrix<T> kron_impl(const Matrix<T>& a, const Matrix<T>& b,
                    std::size_t max_elements) {
  if (a.empty() || b.empty()) {
    throw SizingError("kron: empty operand");
  }
  const std::size_t rows = a.rows() * b.rows();
  const std::size_t cols = a.cols() * b.cols();
  if (rows / b.rows() != a.rows() || cols / b.cols() != a.cols() ||
      (cols != 0 && rows > max_elements / cols)) {
    throw SizingError("kron: result exceeds the element cap");
  }
  Matrix<T> out(rows, cols);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const T aij = a(i, j);
      for (std::size_t k = 0; k < b.rows(); ++k) {
        for (std::size_t l = 0; l < b.cols(); ++l) {
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
      }
    }
  }
  return out;
}

template <typename T>
double max_abs_diff_impl(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw SizingError("max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

}  // namespace

RealVector& RealVector::operator+=(const RealVector& other) {
  require_same_length(size(), other.size(), "RealVector +=");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] += other.data_[i];
  }
  return *this;
}

RealVector& RealVector::operator-=(const RealVector& other) {
  require_same_length(size(), other.size(), "RealVector -=");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] -= other.data_[i];
  }
  return *this;
}

RealVector& RealVector::operator*=(double s) {
  for (double& x : data_) {
    x *= s;
  }
  return *this;
}

RealVector operator+(RealVector a, const RealVector& b) { return a += b; }
RealVector operator-(RealVector a, const RealVector& b) { return a -= b; }
RealVector operator*(double s, RealVector v) { return v *= s; }

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

double squared_norm(std::span<const double> v) { return dot(v, v); }
double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) {
    m = std::max(m, std::abs(x));
  }
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

RealMatrix transpose(const RealMatrix& a) {
  RealMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      t(j, i) = a(i, j);
    }
  }
  return t;
}

ComplexMatrix transpose(const ComplexMatrix& a) {
  ComplexMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      t(j, i) = a(i, j);
    }
  }
  return t;
}

ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      t(j, i) = std::conj(a(i, j));
    }
  }
  return t;
}

ComplexMatrix conjugate(const ComplexMatrix& a) {
  ComplexMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.data()[i] = std::conj(c.data()[i]);
  }
  return c;
}

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
  return multiply_impl(a, b);
}

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
  return multiply_impl(a, b);
}

RealMatrix multiply_transposed(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.cols()) {
    throw SizingError("multiply_transposed: column counts differ");
  }
  RealMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ai.size(); ++k) {
        s += ai[k] * bj[k];
      }
      c(i, j) = s;
    }
  }
  return c;
}

void multiply_into(const RealMatrix& a, std::span<const double> x,
                   std::span<double> out) {
  require_same_length(a.cols(), x.size(), "matrix-vector product");
  require_same_length(a.rows(), out.size(), "matrix-vector product output");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * a.cols();
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      s += ai[k] * x[k];
    }
    out[i] = s;
  }
}

RealVector multiply(const RealMatrix& a, std::span<const double> x) {
  RealVector out(a.rows());
  multiply_into(a, x, out);
  return out;
}

ComplexVector multiply(const ComplexMatrix& a, std::span<const Complex> x) {
  require_same_length(a.cols(), x.size(), "matrix-vector product");
  ComplexVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Complex s{};
    for (std::size_t k = 0; k < a.cols(); ++k) {
      s += a(i, k) * x[k];
    }
    out[i] = s;
  }
  return out;
}

RealMatrix subtract(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw SizingError("subtract: shape mismatch");
  }
  RealMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.data()[i] -= b.data()[i];
  }
  return c;
}

double frobenius_norm(const RealMatrix& a) {
  return norm(std::span<const double>(a.data(), a.size()));
}

double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const Complex& z : a.values()) {
    s += std::norm(z);
  }
  return std::sqrt(s);
}

double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
  return max_abs_diff_impl(a, b);
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return max_abs_diff_impl(a, b);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b,
                   std::size_t max_elements) {
  return kron_impl(a, b, max_elements);
}

RealMatrix kron(const RealMatrix& a, const RealMatrix& b,
                std::size_t max_elements) {
  return kron_impl(a, b, max_elements);
}

ComplexMatrix dft_matrix(std::size_t n) {
  if (n == 0) {
    throw SizingError("dft_matrix: order must be at least 1");
  }
  ComplexMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      // Reduce the exponent mod n so large orders keep full accuracy.
      const auto e = static_cast<double>((j * k) % n);
      const double angle = -2.0 * std::numbers::pi * e / static_cast<double>(n);
      f(j, k) = std::polar(scale, angle);
    }
  }
  return f;
}

RealMatrix hadamard(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw UnsupportedOrderError("hadamard: order " + std::to_string(n) +
                      " is not a power of two");
  }
  RealMatrix h(n, n);
  h(0, 0) = 1.0;
  for (std::size_t m = 1; m < n; m *= 2) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double v = h(i, j);
        h(i, j + m) = v;
        h(i + m, j) = v;
        h(i + m, j + m) = -v;
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < h.size(); ++i) {
    h.data()[i] *= scale;
  }
  return h;
}

ComplexMatrix to_complex(const RealMatrix& a) {
  ComplexMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.data()[i] = a.data()[i];
  }
  return c;
}

RealMatrix realify(const ComplexMatrix& a) {
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  RealMatrix out(2 * r, 2 * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double re = a(i, j).real();
      const double im = a(i, j).imag();
      out(i, j) = re;
      out(i, j + c) = -im;
      out(i + r, j) = im;
      out(i + r, j + c) = re;
    }
  }
  return out;
}

RealVector complex_to_real_vec(std::span<const Complex> v) {
  RealVector out(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i].real();
    out[i + v.size()] = v[i].imag();
  }
  return out;
}

ComplexVector real_to_complex_vec(std::span<const double> v) {
  if (v.size() % 2 != 0) {
    throw FormatError("real_to_complex_vec: odd length " +
                      std::to_string(v.size()));
  }
  const std::size_t n = v.size() / 2;
  ComplexVector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {v[i], v[i + n]};
  }
  return out;
}

ComplexVector vec(const ComplexMatrix& a) {
  ComplexVector out(a.size());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      out[j * a.rows() + i] = a(i, j);
    }
  }
  return out;
}

ComplexMatrix unvec(std::span<const Complex> v, std::size_t rows,
                    std::size_t cols) {
  if (v.size() != rows * cols) {
    throw SizingError("unvec: length does not match rows x cols");
  }
  ComplexMatrix a(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      a(i, j) = v[j * rows + i];
    }
  }
  return a;
}

CholeskyFactor::CholeskyFactor(const RealMatrix& spd) {
  if (spd.rows() != spd.cols() || spd.empty()) {
    throw SizingError("cholesky: matrix must be square and non-empty");
  }
  const std::size_t n = spd.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_diag = std::max(max_diag, spd(i, i));
  }
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) {
    throw RankError("cholesky: matrix has no positive diagonal");
  }
  const double floor = kPivotTolerance * max_diag;
  lower_ = RealMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    const double* lj = lower_.data() + j * n;
    for (std::size_t k = 0; k < j; ++k) {
      d -= lj[k] * lj[k];
    }
    if (!(d > floor) || !std::isfinite(d)) {
      throw RankError("cholesky: pivot " + std::to_string(j) +
                      " is not positive");
    }
    const double ljj = std::sqrt(d);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double* li = lower_.data() + i * n;
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) {
        s -= li[k] * lj[k];
      }
      lower_(i, j) = s / ljj;
    }
  }
}

void CholeskyFactor::solve_in_place(std::span<double> rhs) const {
  const std::size_t n = dim();
  require_same_length(n, rhs.size(), "cholesky solve");
  for (std::size_t i = 0; i < n; ++i) {
    const double* li = lower_.data() + i * n;
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) {
      s -= li[k] * rhs[k];
    }
    rhs[i] = s / li[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = rhs[ii];
    for (std::size_t k = ii + 1; k < n; ++k) {
      s -= lower_(k, ii) * rhs[k];
    }
    rhs[ii] = s / lower_(ii, ii);
  }
}

RealVector CholeskyFactor::solve(std::span<const double> rhs) const {
  RealVector x(std::vector<double>(rhs.begin(), rhs.end()));
  solve_in_place(x);
  return x;
}

RealMatrix CholeskyFactor::solve(const RealMatrix& b) const {
  if (b.rows() != dim()) {
    throw SizingError("cholesky solve: row count mismatch");
  }
  // Work on B^T so every right-hand side is contiguous.
  RealMatrix bt = transpose(b);
  for (std::size_t j = 0; j < bt.rows(); ++j) {
    solve_in_place(bt.row(j));
  }
  return transpose(bt);
}

RealMatrix pinv_wide(const RealMatrix& a) {
  if (a.empty()) {
    throw SizingError("pinv_wide: empty matrix");
  }
  if (a.rows() > a.cols()) {
    throw SizingError("pinv_wide: matrix must have rows <= cols");
  }
  RealMatrix gram = multiply_transposed(a, a);
  const auto factor = [&]() -> CholeskyFactor {
    try {
      return CholeskyFactor(gram);
    } catch (const RankError&) {
      double trace = 0.0;
      for (std::size_t i = 0; i < gram.rows(); ++i) {
        trace += gram(i, i);
      }
      const double jitter = 1e-12 * trace / static_cast<double>(gram.rows());
      for (std::size_t i = 0; i < gram.rows(); ++i) {
        gram(i, i) += jitter;
      }
      try {
        return CholeskyFactor(gram);
      } catch (const RankError& e) {
        throw RankError(std::string("pinv_wide: A A^T is singular: ") +
                        e.what());
      }
    }
  }();
  // A^+ = A^T G^{-1}; the rows of (A^+)^T = G^{-1} A are the solves of G x = a_col.
  RealMatrix solved = factor.solve(a);
  return transpose(solved);
}

}  // namespace nsfm
