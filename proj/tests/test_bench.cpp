#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "nsfm/bench.hpp"
#include "nsfm/errors.hpp"
#include "test_util.hpp"

using namespace nsfm;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.channel.nr = 4;
  c.channel.nt = 4;
  c.samples = 200;
  c.np = 2;
  c.np_list = {1, 2, 3, 4};
  c.snr_list = {0, 10, 20};
  c.hidden = {16};
  c.time_embed_dim = 8;
  c.trials = 40;
  c.estimator.schedule.steps = 4;
  c.budgets_ms = {0.001, 2.0};
  return c;
}

struct Fixture {
  ExperimentConfig cfg = small_config();
  ChannelDataset ds = make_dataset(cfg);
  AngularBasis basis = AngularBasis::dft(cfg.channel.nr, cfg.channel.nt);
  std::vector<RealVector> train = angular_real(ds.train(), basis);
  std::vector<RealVector> test = angular_real(ds.test(), basis);
  LmmseStats stats = lmmse_fit(train);
  VelocityNet net = make_network(cfg);

  SweepInputs inputs() const { return {net, test, stats}; }
};

std::vector<std::string> csv_lines(const SweepResult& r) {
  std::ostringstream out;
  write_sweep_csv(r, out);
  std::vector<std::string> lines;
  std::istringstream in(out.str());
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(StepsFromBudget, TableValues) {
  EXPECT_EQ(steps_from_budget(3.0, 2.58, 0.132), 3u);
  EXPECT_EQ(steps_from_budget(30.0, 1.83, 0.142), 198u);
  EXPECT_EQ(steps_from_budget(2.0, 2.58, 0.132), 0u);
  EXPECT_EQ(steps_from_budget(2.58, 2.58, 0.132), 0u);
}

TEST(StepsFromBudget, Monotone) {
  std::size_t prev = 0;
  for (double b = 0.0; b < 50.0; b += 0.37) {
    const std::size_t k = steps_from_budget(b, 2.0, 0.3);
    EXPECT_GE(k, prev);
    prev = k;
  }
  prev = steps_from_budget(20.0, 2.0, 0.01);
  for (double s = 0.02; s < 5.0; s += 0.05) {
    const std::size_t k = steps_from_budget(20.0, 2.0, s);
    EXPECT_LE(k, prev);
    prev = k;
  }
}

TEST(StepsFromBudget, NonPositiveStep) {
  EXPECT_THROW(steps_from_budget(3.0, 1.0, 0.0), ConfigError);
  EXPECT_THROW(steps_from_budget(3.0, 1.0, -1.0), ConfigError);
}

TEST(Latency, PositiveAndFinite) {
  Fixture f;
  const auto model = MeasurementModel::build(4, 4, 2, 10.0);
  const auto p = measure_latency(f.net, model, 2, 10);
  EXPECT_GT(p.per_step_ms, 0.0);
  EXPECT_TRUE(std::isfinite(p.per_step_ms));
  EXPECT_GT(p.preprocess_ms, 0.0);
  EXPECT_FALSE(p.environment.empty());
  EXPECT_THROW(measure_latency(f.net, model, 0, 9), ConfigError);
}

TEST(Latency, DoublingStepsDoublesTime) {
  const auto model = MeasurementModel::build(16, 8, 5, 10.0);
  VelocityNet net(model.n_dim(), {256, 256}, 32);
  Random rng(3);
  net.init_uniform(rng);
  const RealVector y(model.m());
  EstimatorConfig base;
  base.schedule.steps = 30;
  EstimatorConfig twice = base;
  twice.schedule.steps = 60;
  NullSpaceFlowEstimator short_run(net, model, base);
  NullSpaceFlowEstimator long_run(net, model, twice);
  auto time_ms = [&](NullSpaceFlowEstimator& est, int rep) {
    Random init(rep);
    const auto start = std::chrono::steady_clock::now();
    est.estimate(y, init);
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  time_ms(short_run, 0);
  time_ms(long_run, 0);
  // Interleaved so slow drifts in machine load hit both equally.
  std::vector<double> a, b;
  for (int rep = 0; rep < 15; ++rep) {
    a.push_back(time_ms(short_run, rep));
    b.push_back(time_ms(long_run, rep));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double ratio = b[7] / a[7];
  EXPECT_GE(ratio, 1.7);
  EXPECT_LE(ratio, 2.3);
}

TEST(Sweep, SnrShapeAndSigma) {
  Fixture f;
  const auto r = run_sweep_snr(f.cfg, f.inputs());
  EXPECT_EQ(r.axis, "snr_db");
  EXPECT_EQ(r.rows.size(), f.cfg.snr_list.size() * 3);
  for (double snr : f.cfg.snr_list) {
    for (const char* m : {kMethodNsfm, kMethodLs, kMethodLmmse}) {
      const auto& row = r.row(snr, m);
      EXPECT_EQ(row.sigma_n, sigma_from_snr(snr, f.cfg.channel.nt));
      EXPECT_EQ(row.trials, f.cfg.trials);
      EXPECT_TRUE(std::isfinite(row.mean_nmse_db));
      EXPECT_GE(row.stderr_db, 0.0);
    }
    EXPECT_EQ(r.row(snr, kMethodNsfm).k_steps, f.cfg.estimator.schedule.steps);
  }
  EXPECT_THROW(r.row(123.0, kMethodLs), Error);
}

TEST(Sweep, BaselinesImproveWithSnr) {
  Fixture f;
  f.cfg.trials = 200;
  const auto r = run_sweep_snr(f.cfg, f.inputs());
  for (const char* m : {kMethodLs, kMethodLmmse}) {
    for (std::size_t i = 1; i < f.cfg.snr_list.size(); ++i) {
      EXPECT_LE(r.row(f.cfg.snr_list[i], m).mean_nmse_db,
                r.row(f.cfg.snr_list[i - 1], m).mean_nmse_db + 0.5)
          << m;
    }
  }
}

TEST(Sweep, DensityAxisAndNoiseFloor) {
  Fixture f;
  f.cfg.snr_db = 40.0;
  f.cfg.trials = 200;
  const auto r = run_sweep_density(f.cfg, f.inputs());
  EXPECT_EQ(r.axis, "pilot_density");
  EXPECT_EQ(r.axis_values, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
  // At full density LS only sees noise, so each trial's NMSE has mean
  // 2 sigma^2 nr nt / ||h||^2; the sweep averages these per trial.
  const double sigma = sigma_from_snr(40.0, 4);
  double expected = 0.0;
  for (std::size_t t = 0; t < f.cfg.trials; ++t)
    expected += 2.0 * sigma * sigma * 16.0 / squared_norm(f.test[t % f.test.size()]);
  const double floor_db = 10.0 * std::log10(expected / double(f.cfg.trials));
  const auto& ls = r.row(1.0, kMethodLs);
  EXPECT_LE(ls.mean_nmse_db, -25.0);
  EXPECT_NEAR(ls.mean_nmse_db, floor_db, 0.5);
}

TEST(Sweep, BudgetRowsAndNoEstimate) {
  Fixture f;
  const LatencyProfile profile{"nsfm", 0.5, 0.1, "fixed"};
  const auto r = run_sweep_budget(f.cfg, f.inputs(), profile);
  EXPECT_EQ(r.axis, "budget_ms");
  for (double b : f.cfg.budgets_ms) {
    EXPECT_EQ(r.row(b, kMethodNsfm).k_steps, steps_from_budget(b, 0.5, 0.1));
  }
  EXPECT_FALSE(r.row(0.001, kMethodNsfm).has_estimate);
  EXPECT_TRUE(r.row(0.001, kMethodLs).has_estimate);
  EXPECT_TRUE(r.row(2.0, kMethodNsfm).has_estimate);

  const auto lines = csv_lines(r);
  ASSERT_EQ(lines.size(), 1 + r.rows.size());
  EXPECT_EQ(lines[0],
            "axis_value,method,mean_nmse_db,stderr_db,trials,k_steps,sigma_n,wall_ms");
  EXPECT_EQ(lines[1].rfind("0.001,nsfm,nan,nan,", 0), 0u) << lines[1];
  for (const auto& line : lines)
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7) << line;
}

TEST(Sweep, Deterministic) {
  Fixture f;
  const auto a = run_sweep_snr(f.cfg, f.inputs());
  const auto b = run_sweep_snr(f.cfg, f.inputs());
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].method, b.rows[i].method);
    EXPECT_EQ(a.rows[i].mean_nmse_db, b.rows[i].mean_nmse_db);
    EXPECT_EQ(a.rows[i].stderr_db, b.rows[i].stderr_db);
  }
}

TEST(Sweep, EvaluatePointRepeatable) {
  Fixture f;
  f.cfg.trials = 5;
  const auto model = MeasurementModel::build(4, 4, 2, 10.0);
  const auto a = evaluate_point(f.cfg, f.inputs(), model, 3, 10.0, 0);
  const auto b = evaluate_point(f.cfg, f.inputs(), model, 3, 10.0, 0);
  const auto other = evaluate_point(f.cfg, f.inputs(), model, 3, 10.0, 1);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].method, kMethodNsfm);
  EXPECT_EQ(a[1].method, kMethodLs);
  EXPECT_EQ(a[2].method, kMethodLmmse);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].mean_nmse_db, b[i].mean_nmse_db);
  // A different axis index draws different noise.
  EXPECT_NE(a[1].mean_nmse_db, other[1].mean_nmse_db);
}

TEST(Sweep, EmptyTestSet) {
  Fixture f;
  const std::vector<RealVector> none;
  const SweepInputs in{f.net, none, f.stats};
  const auto model = MeasurementModel::build(4, 4, 2, 10.0);
  EXPECT_THROW(evaluate_point(f.cfg, in, model, 3, 10.0, 0), SizingError);
}
