#include "nsfm/baselines.hpp"

#include <cmath>

namespace nsfm {

RealVector ls_estimate(const MeasurementModel& model,
                       std::span<const double> y) {
  return model.apply_pinv(y);
}

LmmseStats lmmse_fit(std::span<const RealVector> train) {
  if (train.size() < 2) {
    throw SizingError("lmmse_fit: need at least two training vectors");
  }
  const std::size_t n = train.front().size();
  const std::size_t count = train.size();
  LmmseStats stats{RealVector(n), RealMatrix(n, n)};
  for (const auto& v : train) {
    if (v.size() != n) {
      throw SizingError("lmmse_fit: training vectors differ in length");
    }
    stats.mean += v;
  }
  stats.mean *= 1.0 / static_cast<double>(count);

  RealMatrix centered(count, n);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      centered(s, i) = train[s][i] - stats.mean[i];
    }
  }
  const RealMatrix ct = transpose(centered);
  stats.covariance = multiply_transposed(ct, ct);
  const double scale = 1.0 / static_cast<double>(count - 1);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      stats.covariance(i, j) *= scale;
    }
    trace += stats.covariance(i, i);
  }
  // Symmetrize against rounding in the product.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (stats.covariance(i, j) + stats.covariance(j, i));
      stats.covariance(i, j) = avg;
      stats.covariance(j, i) = avg;
    }
  }
  const double jitter = kLmmseRegularization * trace / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    stats.covariance(i, i) += jitter;
  }
  return stats;
}

LmmseEstimator::LmmseEstimator(const LmmseStats& stats,
                               const MeasurementModel& model) {
  const std::size_t n = model.n_dim();
  if (stats.mean.size() != n || stats.covariance.rows() != n ||
      stats.covariance.cols() != n) {
    throw SizingError("lmmse: statistics do not match the model dimension");
  }
  const RealMatrix& a = model.a();
  const RealMatrix cat = multiply_transposed(stats.covariance, a);  // C A^T
  RealMatrix inner = multiply(a, cat);
  const double s2 = model.sigma_n() * model.sigma_n();
  for (std::size_t i = 0; i < inner.rows(); ++i) {
    inner(i, i) += s2;
  }
  const CholeskyFactor chol(inner);
  // G = C A^T S^{-1} = (S^{-1} A C)^T since S and C are symmetric.
  gain_ = transpose(chol.solve(transpose(cat)));
  const RealVector a_mu = multiply(a, stats.mean);
  offset_ = stats.mean;
  offset_ -= multiply(gain_, a_mu);
}

RealVector LmmseEstimator::estimate(std::span<const double> y) const {
  if (y.size() != gain_.cols()) {
    throw SizingError("lmmse: observation has length " +
                      std::to_string(y.size()) + ", expected " +
                      std::to_string(gain_.cols()));
  }
  RealVector h = multiply(gain_, y);
  h += offset_;
  return h;
}

RealVector lmmse_estimate(const LmmseStats& stats,
                          const MeasurementModel& model,
                          std::span<const double> y) {
  return LmmseEstimator(stats, model).estimate(y);
}

double nmse_linear(std::span<const double> h_hat, std::span<const double> h) {
  if (h_hat.size() != h.size()) {
    throw SizingError("nmse: length mismatch");
  }
  const double ref = squared_norm(h);
  if (!(ref > 0.0)) {
    throw DomainError("nmse: ground truth has zero norm");
  }
  double err = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = h_hat[i] - h[i];
    err += d * d;
  }
  return err / ref;
}

double nmse_db(std::span<const double> h_hat, std::span<const double> h) {
  return 10.0 * std::log10(nmse_linear(h_hat, h));
}

}  // namespace nsfm
