#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nsfm/baselines.hpp"
#include "nsfm/channel.hpp"
#include "nsfm/config.hpp"
#include "nsfm/estimator.hpp"
#include "nsfm/flow_matching.hpp"
#include "nsfm/measurement.hpp"
#include "nsfm/velocity_net.hpp"

namespace nsfm {

struct ExperimentConfig {
  // [dataset]
  ClusterChannelConfig channel;
  std::size_t samples = 5000;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 7;

  // [measurement]
  std::size_t np = 5;
  std::vector<std::size_t> np_list = {2, 4, 6, 8};
  double snr_db = 10.0;
  std::vector<double> snr_list = {0, 5, 10, 15, 20};

  // [network]
  std::vector<std::size_t> hidden = {512, 512, 512};
  std::size_t time_embed_dim = 32;
  std::uint64_t init_seed = 11;

  // [train]
  TrainConfig train;
  bool augment = false;

  // [estimator]
  EstimatorConfig estimator;

  // [bench]
  std::size_t trials = 200;
  std::uint64_t seed = 2024;
  std::vector<double> budgets_ms = {1, 2, 3, 5, 10, 20, 50};
  std::size_t latency_warmup = 5;
  std::size_t latency_reps = 30;

  void validate() const;

  // Every key is optional; unknown keys and malformed values raise ConfigError.
  static ExperimentConfig from_ini(const IniDocument& doc);
  static ExperimentConfig load(const std::filesystem::path& path);
  // Full echo in the same format, readable by from_ini.
  std::string to_ini() const;
};

// max(0, floor((budget - preprocess) / per_step)).
std::size_t steps_from_budget(double budget_ms, double preprocess_ms,
                              double per_step_ms);

struct LatencyProfile {
  std::string method = "nsfm";
  double preprocess_ms = 0.0;
  double per_step_ms = 0.0;
  std::string environment;
};

// Medians over `reps` timings after `warmup` untimed runs: preprocess is the
// construction of the measurement model (including A^+); per step is one
// predict/correct iteration.
LatencyProfile measure_latency(const VelocityNet& net,
                               const MeasurementModel& model,
                               std::size_t warmup, std::size_t reps);

// Normalized dataset generated from the config and split into train/test.
ChannelDataset make_dataset(const ExperimentConfig& cfg);
// Re-applies the configured split to a dataset loaded from disk.
ChannelDataset split_for_experiment(ChannelDataset ds,
                                    const ExperimentConfig& cfg);

VelocityNet make_network(const ExperimentConfig& cfg);
TrainConfig training_config(const ExperimentConfig& cfg);
TrainResult train_prior(VelocityNet& net, const ChannelDataset& ds,
                        const ExperimentConfig& cfg,
                        const EpochCallback& on_epoch = {});

struct SweepRow {
  double axis_value = 0.0;
  std::string method;
  bool has_estimate = true;  // false for budgets that allow no step
  double mean_nmse_db = 0.0;
  double stderr_db = 0.0;
  std::size_t trials = 0;
  std::size_t k_steps = 0;
  double sigma_n = 0.0;
  double wall_ms = 0.0;
};

struct SweepResult {
  std::string axis;
  std::vector<double> axis_values;
  std::vector<SweepRow> rows;

  const SweepRow& row(double axis_value, const std::string& method) const;
};

// Everything a sweep evaluates against. Test vectors are realified angular
// channels; trial i uses test vector i mod count.
struct SweepInputs {
  const VelocityNet& net;
  std::span<const RealVector> test;
  const LmmseStats& lmmse;
};

inline constexpr const char* kMethodNsfm = "nsfm";
inline constexpr const char* kMethodLs = "ls";
inline constexpr const char* kMethodLmmse = "lmmse";

// Per-point results for NSFM, LS and LMMSE on shared noise draws.
// mean_nmse_db is 10 log10 of the mean linear NMSE over trials.
SweepResult run_sweep_snr(const ExperimentConfig& cfg, const SweepInputs& in);
SweepResult run_sweep_density(const ExperimentConfig& cfg,
                              const SweepInputs& in);
SweepResult run_sweep_budget(const ExperimentConfig& cfg, const SweepInputs& in,
                             const LatencyProfile& profile);

// One evaluation point; exposed for the estimate subcommand and tests.
std::vector<SweepRow> evaluate_point(const ExperimentConfig& cfg,
                                     const SweepInputs& in,
                                     const MeasurementModel& model,
                                     std::size_t k_steps, double axis_value,
                                     std::uint64_t axis_index);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
void write_sweep_csv(const SweepResult& result,
                     const std::filesystem::path& path);

}  // namespace nsfm
