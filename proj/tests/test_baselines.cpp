#include <gtest/gtest.h>

#include <cmath>

#include "nsfm/baselines.hpp"
#include "nsfm/errors.hpp"
#include "test_util.hpp"

using namespace nsfm;
using nsfm::test::random_real;
using nsfm::test::random_vector;
using nsfm::test::to_eigen;

namespace {

RealVector from_eigen(const Eigen::VectorXd& v) {
  return RealVector(std::vector<double>(v.data(), v.data() + v.size()));
}

RealMatrix from_eigen(const Eigen::MatrixXd& m) {
  RealMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

}  // namespace

TEST(Ls, RecoversRangeComponent) {
  const auto model = MeasurementModel::build(4, 8, 3, 10.0);
  Random rng(1);
  const auto h = random_vector(model.n_dim(), rng);
  const auto y = model.apply(h);
  const auto ls = ls_estimate(model, y);
  EXPECT_LT(max_abs_diff(ls, model.range_project(h)), 1e-12);
  EXPECT_LT(max_abs_diff(model.apply(ls), y), 1e-12);
  // Minimum norm: nothing in the null space.
  EXPECT_LT(max_abs(model.null_project(ls)), 1e-12);
}

TEST(Ls, ExactWithFullPilots) {
  const auto model = MeasurementModel::build(4, 4, 4, 10.0);
  Random rng(2);
  const auto h = random_vector(model.n_dim(), rng);
  EXPECT_LT(max_abs_diff(ls_estimate(model, model.apply(h)), h), 1e-12);
}

TEST(Ls, NoiseFloorWithFullPilots) {
  // With np = nt, A is orthogonal and the LS error is A^T n, whose expected
  // squared norm is sigma^2 * 2 nr nt.
  const auto model = MeasurementModel::build(4, 4, 4, 10.0);
  Random rng(3);
  const auto h = random_vector(model.n_dim(), rng);
  const int draws = 10000;
  double total = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto est = ls_estimate(model, model.observe(h, rng));
    total += squared_norm(est - h);
  }
  const double expected = model.sigma_n() * model.sigma_n() * 2.0 * 4 * 4;
  EXPECT_NEAR(total / draws / expected, 1.0, 0.05);
}

TEST(LmmseFit, MatchesSampleMoments) {
  Random rng(4);
  std::vector<RealVector> train;
  for (int i = 0; i < 50; ++i) train.push_back(random_vector(6, rng));
  const auto stats = lmmse_fit(train);

  Eigen::MatrixXd x(6, 50);
  for (int i = 0; i < 50; ++i) x.col(i) = to_eigen(train[i]);
  const Eigen::VectorXd mu = x.rowwise().mean();
  const Eigen::MatrixXd centered = x.colwise() - mu;
  Eigen::MatrixXd cov = centered * centered.transpose() / 49.0;
  const double reg = kLmmseRegularization * cov.trace() / 6.0;
  cov.diagonal().array() += reg;

  EXPECT_LT((to_eigen(stats.mean) - mu).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((to_eigen(stats.covariance) - cov).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      EXPECT_EQ(stats.covariance(i, j), stats.covariance(j, i));
}

TEST(LmmseFit, Errors) {
  std::vector<RealVector> one{RealVector{1.0, 2.0}};
  EXPECT_THROW(lmmse_fit(one), SizingError);
  std::vector<RealVector> ragged{RealVector{1.0, 2.0}, RealVector{1.0}};
  EXPECT_THROW(lmmse_fit(ragged), SizingError);
}

TEST(Lmmse, ZeroCovarianceReturnsMean) {
  const auto model = MeasurementModel::build(4, 4, 2, 10.0);
  Random rng(5);
  LmmseStats stats{random_vector(model.n_dim(), rng),
                   RealMatrix(model.n_dim(), model.n_dim())};
  const auto y = random_vector(model.m(), rng);
  EXPECT_LT(max_abs_diff(lmmse_estimate(stats, model, y), stats.mean), 1e-12);
}

TEST(Lmmse, HighNoiseReturnsMean) {
  const auto model = MeasurementModel::build(4, 4, 2, -200.0);
  Random rng(6);
  LmmseStats stats;
  stats.mean = random_vector(model.n_dim(), rng);
  const auto l = random_real(model.n_dim(), model.n_dim(), rng);
  stats.covariance = multiply_transposed(l, l);
  const auto y = random_vector(model.m(), rng);
  EXPECT_LT(max_abs_diff(lmmse_estimate(stats, model, y), stats.mean), 1e-6);
}

TEST(Lmmse, GainMatchesDirectFormula) {
  const auto model = MeasurementModel::build(4, 8, 3, 5.0);
  Random rng(7);
  const auto l = to_eigen(random_real(model.n_dim(), model.n_dim(), rng));
  const Eigen::MatrixXd c = l * l.transpose() / double(model.n_dim());
  LmmseStats stats{random_vector(model.n_dim(), rng), from_eigen(c)};
  const Eigen::MatrixXd a = to_eigen(model.a());
  const double s2 = model.sigma_n() * model.sigma_n();
  const Eigen::MatrixXd s =
      a * c * a.transpose() + s2 * Eigen::MatrixXd::Identity(a.rows(), a.rows());
  const Eigen::MatrixXd g = c * a.transpose() * s.inverse();
  const LmmseEstimator est(stats, model);
  EXPECT_LT((to_eigen(est.gain()) - g).cwiseAbs().maxCoeff(), 1e-9);

  const auto y = random_vector(model.m(), rng);
  const Eigen::VectorXd mu = to_eigen(stats.mean);
  const Eigen::VectorXd expected = mu + g * (to_eigen(y) - a * mu);
  EXPECT_LT(max_abs_diff(est.estimate(y), from_eigen(Eigen::VectorXd(expected))), 1e-9);
  EXPECT_LT(max_abs_diff(lmmse_estimate(stats, model, y), est.estimate(y)), 1e-12);
}

TEST(Lmmse, GaussianPriorMatchesMmseTrace) {
  const auto model = MeasurementModel::build(4, 4, 2, 5.0);
  const std::size_t n = model.n_dim();
  Random rng(8);
  const Eigen::MatrixXd l = to_eigen(random_real(n, n, rng)) / std::sqrt(double(n));
  const Eigen::MatrixXd c = l * l.transpose();
  LmmseStats stats{random_vector(n, rng), from_eigen(c)};
  const Eigen::MatrixXd a = to_eigen(model.a());
  const double s2 = model.sigma_n() * model.sigma_n();
  const Eigen::MatrixXd s =
      a * c * a.transpose() + s2 * Eigen::MatrixXd::Identity(a.rows(), a.rows());
  const double mmse =
      (c - c * a.transpose() * s.ldlt().solve(a * c)).trace();

  const LmmseEstimator est(stats, model);
  const Eigen::VectorXd mu = to_eigen(stats.mean);
  double total = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.gaussian();
    const auto h = from_eigen(Eigen::VectorXd(mu + l * z));
    total += squared_norm(est.estimate(model.observe(h, rng)) - h);
  }
  EXPECT_NEAR(total / trials / mmse, 1.0, 0.05);
}

TEST(Lmmse, SizeErrors) {
  const auto model = MeasurementModel::build(4, 4, 2, 10.0);
  LmmseStats stats{RealVector(3), RealMatrix(3, 3)};
  EXPECT_THROW(LmmseEstimator(stats, model), SizingError);
  LmmseStats ok{RealVector(model.n_dim()), RealMatrix(model.n_dim(), model.n_dim())};
  EXPECT_THROW(lmmse_estimate(ok, model, RealVector(2)), SizingError);
}

TEST(Nmse, Values) {
  const RealVector h{3.0, 4.0};
  EXPECT_EQ(nmse_linear(h, h), 0.0);
  EXPECT_DOUBLE_EQ(nmse_linear(RealVector{0.0, 0.0}, h), 1.0);
  EXPECT_DOUBLE_EQ(nmse_linear(RealVector{3.0, 3.0}, h), 1.0 / 25.0);
  EXPECT_NEAR(nmse_db(RealVector{3.0, 3.0}, h), 10.0 * std::log10(0.04), 1e-12);
  EXPECT_EQ(nmse_db(h, h), -std::numeric_limits<double>::infinity());
}

TEST(Nmse, Errors) {
  EXPECT_THROW(nmse_linear(RealVector{1.0}, RealVector{0.0}), DomainError);
  EXPECT_THROW(nmse_linear(RealVector{1.0}, RealVector{1.0, 2.0}), SizingError);
}
