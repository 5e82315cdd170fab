#include "nsfm/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace nsfm {

namespace {

void check_finite(std::span<const double> v, std::size_t step,
                  const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(what) + ": non-finite state at step " +
                             std::to_string(step),
                         step);
    }
  }
}

}  // namespace

void ScheduleConfig::validate() const {
  if (steps < 1) {
    throw ConfigError("schedule: steps must be at least 1");
  }
  if (kind == ScheduleKind::power_law && !(rho >= 1.0)) {
    throw ConfigError("schedule: rho must be >= 1 (got " + std::to_string(rho) +
                      ")");
  }
}

std::vector<double> make_schedule(const ScheduleConfig& cfg) {
  cfg.validate();
  const std::size_t k_max = cfg.steps;
  std::vector<double> t(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(k_max);
    t[k] = cfg.kind == ScheduleKind::uniform ? u : std::pow(u, cfg.rho);
  }
  t.front() = 0.0;
  t.back() = 1.0;
  return t;
}

RealVector euler_predict(const VelocityNet& net, std::span<const double> h,
                         double t_k, double t_next, std::size_t step) {
  if (!(t_k >= 0.0 && t_next <= 1.0 && t_next >= t_k)) {
    throw DomainError("euler_predict: need 0 <= t_k <= t_next <= 1");
  }
  RealVector v = net.forward(h, t_k);
  const double dt = t_next - t_k;
  RealVector out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    out[i] = h[i] + dt * v[i];
  }
  check_finite(out, step, "euler_predict");
  return out;
}

double guidance_factor(double t_next, double sigma_n) {
  if (!(sigma_n > 0.0)) {
    throw ConfigError("guidance_factor: sigma_n must be positive");
  }
  if (!(t_next >= 0.0 && t_next <= 1.0)) {
    throw DomainError("guidance_factor: t outside [0, 1]");
  }
  return std::min(1.0, (1.0 - t_next) / sigma_n);
}

RealVector correct(const MeasurementModel& model,
                   std::span<const double> h_pred, std::span<const double> y,
                   double eta) {
  if (y.size() != model.m()) {
    throw SizingError("correct: observation has length " +
                      std::to_string(y.size()) + ", expected " +
                      std::to_string(model.m()));
  }
  RealVector r = model.apply(h_pred);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] -= y[i];
  }
  const RealVector d = model.apply_pinv(r);
  RealVector out(h_pred.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = h_pred[i] - eta * d[i];
  }
  return out;
}

NullSpaceFlowEstimator::NullSpaceFlowEstimator(const VelocityNet& net,
                                               const MeasurementModel& model,
                                               EstimatorConfig config)
    : net_(net),
      model_(model),
      config_(config),
      schedule_(make_schedule(config.schedule)),
      h_(model.n_dim()),
      v_(model.n_dim()),
      residual_(model.m()),
      delta_(model.n_dim()),
      ws_(net.make_workspace()) {
  if (net.input_dim() != model.n_dim()) {
    throw SizingError("estimator: network width " +
                      std::to_string(net.input_dim()) +
                      " does not match the channel dimension " +
                      std::to_string(model.n_dim()));
  }
}

void NullSpaceFlowEstimator::project(std::span<const double> y, double eta) {
  multiply_into(model_.a(), h_, residual_);
  for (std::size_t i = 0; i < residual_.size(); ++i) {
    residual_[i] -= y[i];
  }
  multiply_into(model_.a_pinv(), residual_, delta_);
  for (std::size_t i = 0; i < h_.size(); ++i) {
    h_[i] -= eta * delta_[i];
  }
}

void NullSpaceFlowEstimator::reset(std::span<const double> h) {
  if (h.size() != h_.size()) {
    throw SizingError("estimator: state has the wrong length");
  }
  std::copy(h.begin(), h.end(), h_.begin());
}

void NullSpaceFlowEstimator::step(std::span<const double> y, double t_k,
                                  double t_next, std::size_t index) {
  net_.forward(h_, t_k, v_, ws_);
  const double dt = t_next - t_k;
  for (std::size_t i = 0; i < h_.size(); ++i) {
    h_[i] += dt * v_[i];
  }
  const double eta = config_.correction == CorrectionMode::hard
                         ? 1.0
                         : guidance_factor(t_next, model_.sigma_n());
  if (eta > 0.0) {
    project(y, eta);
  }
  check_finite(h_, index, "estimate");
}

RealVector NullSpaceFlowEstimator::estimate_from(std::span<const double> y,
                                                 std::span<const double> h0,
                                                 const StepObserver& observer) {
  if (y.size() != model_.m()) {
    throw SizingError("estimate: observation has length " +
                      std::to_string(y.size()) + ", expected " +
                      std::to_string(model_.m()));
  }
  reset(h0);
  const std::size_t k_max = schedule_.size() - 1;
  for (std::size_t k = 0; k < k_max; ++k) {
    step(y, schedule_[k], schedule_[k + 1], k + 1);
    if (observer) {
      observer(k + 1, schedule_[k + 1], h_);
    }
  }
  if (config_.final_hard_projection) {
    project(y, 1.0);
  }
  return h_;
}

RealVector NullSpaceFlowEstimator::estimate(std::span<const double> y,
                                            Random& rng,
                                            const StepObserver& observer) {
  RealVector h0(model_.n_dim());
  for (std::size_t i = 0; i < h0.size(); ++i) {
    h0[i] = rng.gaussian();
  }
  return estimate_from(y, h0, observer);
}

RealVector estimate(const VelocityNet& net, const MeasurementModel& model,
                    std::span<const double> y, const EstimatorConfig& config,
                    Random& rng) {
  NullSpaceFlowEstimator est(net, model, config);
  return est.estimate(y, rng);
}

}  // namespace nsfm
