#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nsfm/linalg.hpp"
#include "nsfm/measurement.hpp"
#include "nsfm/rng.hpp"
#include "nsfm/velocity_net.hpp"

namespace nsfm {

enum class ScheduleKind { uniform, power_law };

struct ScheduleConfig {
  std::size_t steps = 50;
  double rho = 1.5;
  ScheduleKind kind = ScheduleKind::power_law;

  void validate() const;
};

// t_k = (k / K)^rho for k = 0..K, with t_0 = 0 and t_K = 1 exactly. The
// uniform kind ignores rho.
std::vector<double> make_schedule(const ScheduleConfig& cfg);

// h + v(h, t_k) (t_next - t_k). `step` only labels a NumericError.
RealVector euler_predict(const VelocityNet& net, std::span<const double> h,
                         double t_k, double t_next, std::size_t step = 0);

// min(1, (1 - t_next) / sigma_n).
double guidance_factor(double t_next, double sigma_n);

// h_pred - eta A^+ (A h_pred - y).
RealVector correct(const MeasurementModel& model,
                   std::span<const double> h_pred, std::span<const double> y,
                   double eta);

enum class CorrectionMode { hard, adaptive };

struct EstimatorConfig {
  ScheduleConfig schedule;
  CorrectionMode correction = CorrectionMode::adaptive;
  // One extra eta = 1 correction after the last step.
  bool final_hard_projection = false;
  std::uint64_t seed = 0;
};

// Null-space flow-matching estimator. Buffers are sized at construction so
// estimate() does not allocate inside the step loop.
class NullSpaceFlowEstimator {
 public:
  // Called after the correction of step k (1-based) with t_k and the state.
  using StepObserver =
      std::function<void(std::size_t k, double t, std::span<const double> h)>;

  NullSpaceFlowEstimator(const VelocityNet& net, const MeasurementModel& model,
                         EstimatorConfig config);

  const EstimatorConfig& config() const { return config_; }
  const std::vector<double>& schedule() const { return schedule_; }

  // Draws h0 ~ N(0, I) from rng and runs the K predict/correct steps.
  RealVector estimate(std::span<const double> y, Random& rng,
                      const StepObserver& observer = {});
  // Same loop from a given initial state.
  RealVector estimate_from(std::span<const double> y,
                           std::span<const double> h0,
                           const StepObserver& observer = {});

  // One predict/correct iteration on the internal state from t_k to t_next.
  // Exposed for latency measurement together with reset().
  void reset(std::span<const double> h);
  std::span<const double> state() const { return h_; }
  void step(std::span<const double> y, double t_k, double t_next,
            std::size_t index);

 private:
  void project(std::span<const double> y, double eta);

  const VelocityNet& net_;
  const MeasurementModel& model_;
  EstimatorConfig config_;
  std::vector<double> schedule_;
  RealVector h_;
  RealVector v_;
  RealVector residual_;
  RealVector delta_;
  ForwardWorkspace ws_;
};

RealVector estimate(const VelocityNet& net, const MeasurementModel& model,
                    std::span<const double> y, const EstimatorConfig& config,
                    Random& rng);

}  // namespace nsfm
