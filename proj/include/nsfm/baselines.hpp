#pragma once

#include <span>

#include "nsfm/linalg.hpp"
#include "nsfm/measurement.hpp"

namespace nsfm {

// Minimum-norm least squares, A^+ y.
RealVector ls_estimate(const MeasurementModel& model, std::span<const double> y);

struct LmmseStats {
  RealVector mean;
  RealMatrix covariance;  // regularized sample covariance
};

inline constexpr double kLmmseRegularization = 1e-6;

// Sample mean and unbiased sample covariance plus 1e-6 * mean(diag) on the
// diagonal. Needs at least two vectors.
LmmseStats lmmse_fit(std::span<const RealVector> train);

// mu + C A^T (A C A^T + sigma^2 I)^{-1} (y - A mu). Rebuilds the gain on each
// call; use LmmseEstimator for repeated estimates under one model.
RealVector lmmse_estimate(const LmmseStats& stats,
                          const MeasurementModel& model,
                          std::span<const double> y);

class LmmseEstimator {
 public:
  LmmseEstimator(const LmmseStats& stats, const MeasurementModel& model);

  RealVector estimate(std::span<const double> y) const;
  const RealMatrix& gain() const { return gain_; }

 private:
  RealMatrix gain_;   // N x M
  RealVector offset_;  // mu - gain A mu
};

// ||h_hat - h||^2 / ||h||^2 and its decibel value.
double nmse_linear(std::span<const double> h_hat, std::span<const double> h);
double nmse_db(std::span<const double> h_hat, std::span<const double> h);

}  // namespace nsfm
