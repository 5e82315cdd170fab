#include "nsfm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

namespace nsfm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i ? ", " : "") << values[i];
  }
  return out.str();
}

// Streams for per-trial randomness; tags spell short ASCII words.
constexpr std::uint64_t kNoiseTag = 0x6e6f6973;  // "nois"
constexpr std::uint64_t kInitTag = 0x696e6974;   // "init"

struct Accumulator {
  std::vector<double> nmse;
  double wall_ms = 0.0;

  SweepRow finish(double axis_value, const std::string& method,
                  std::size_t k_steps, double sigma_n) const {
    SweepRow row;
    row.axis_value = axis_value;
    row.method = method;
    row.trials = nmse.size();
    row.k_steps = k_steps;
    row.sigma_n = sigma_n;
    row.wall_ms = wall_ms;
    double mean = 0.0;
    for (double x : nmse) mean += x;
    mean /= static_cast<double>(nmse.size());
    double var = 0.0;
    for (double x : nmse) var += (x - mean) * (x - mean);
    var /= nmse.size() > 1 ? static_cast<double>(nmse.size() - 1) : 1.0;
    row.mean_nmse_db = 10.0 * std::log10(mean);
    // Delta method for the standard error of 10 log10(mean).
    row.stderr_db = 10.0 / std::log(10.0) *
                    std::sqrt(var / static_cast<double>(nmse.size())) / mean;
    return row;
  }
};

}  // namespace

void ExperimentConfig::validate() const {
  channel.validate();
  if (samples < 2) {
    throw ConfigError("config: need at least two samples");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("config: train_fraction must lie in (0, 1)");
  }
  auto check_np = [&](std::size_t p) {
    try {
      PilotConfig{channel.nt, p}.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  };
  check_np(np);
  if (np_list.empty() || snr_list.empty() || budgets_ms.empty()) {
    throw ConfigError("config: np_list, snr_list and budgets_ms must be non-empty");
  }
  for (std::size_t p : np_list) check_np(p);
  if (hidden.empty() ||
      std::find(hidden.begin(), hidden.end(), std::size_t{0}) != hidden.end()) {
    throw ConfigError("config: hidden widths must be non-empty and positive");
  }
  if (time_embed_dim == 0 || time_embed_dim % 2 != 0) {
    throw ConfigError("config: time_embed_dim must be even and positive");
  }
  train.validate();
  estimator.schedule.validate();
  if (trials < 1) {
    throw ConfigError("config: trials must be at least 1");
  }
  if (latency_reps < 10) {
    throw ConfigError("config: latency_reps must be at least 10");
  }
}

ExperimentConfig ExperimentConfig::from_ini(const IniDocument& doc) {
  ExperimentConfig c;
  auto& ch = c.channel;
  ch.nr = doc.get_count("dataset", "nr", ch.nr);
  ch.nt = doc.get_count("dataset", "nt", ch.nt);
  ch.num_clusters = doc.get_count("dataset", "clusters", ch.num_clusters);
  ch.rays_per_cluster = doc.get_count("dataset", "rays", ch.rays_per_cluster);
  ch.angular_spread_deg =
      doc.get_double("dataset", "spread_deg", ch.angular_spread_deg);
  ch.seed = doc.get_u64("dataset", "seed", ch.seed);
  c.samples = doc.get_count("dataset", "samples", c.samples);
  c.train_fraction = doc.get_double("dataset", "train_fraction", c.train_fraction);
  c.split_seed = doc.get_u64("dataset", "split_seed", c.split_seed);

  c.np = doc.get_count("measurement", "np", c.np);
  c.np_list = doc.get_counts("measurement", "np_list", c.np_list);
  c.snr_db = doc.get_double("measurement", "snr_db", c.snr_db);
  c.snr_list = doc.get_doubles("measurement", "snr_list", c.snr_list);

  c.hidden = doc.get_counts("network", "hidden", c.hidden);
  c.time_embed_dim = doc.get_count("network", "time_embed_dim", c.time_embed_dim);
  c.init_seed = doc.get_u64("network", "init_seed", c.init_seed);

  auto& t = c.train;
  t.adam.learning_rate = doc.get_double("train", "learning_rate", t.adam.learning_rate);
  t.adam.beta1 = doc.get_double("train", "beta1", t.adam.beta1);
  t.adam.beta2 = doc.get_double("train", "beta2", t.adam.beta2);
  t.adam.epsilon = doc.get_double("train", "epsilon", t.adam.epsilon);
  t.batch_size = doc.get_count("train", "batch_size", t.batch_size);
  t.epochs = doc.get_count("train", "epochs", t.epochs);
  t.seed = doc.get_u64("train", "seed", t.seed);
  t.threads = doc.get_count("train", "threads", t.threads);
  t.final_lr_fraction =
      doc.get_double("train", "final_lr_fraction", t.final_lr_fraction);
  c.augment = doc.get_bool("train", "augment", c.augment);

  auto& e = c.estimator;
  e.schedule.steps = doc.get_count("estimator", "steps", e.schedule.steps);
  e.schedule.rho = doc.get_double("estimator", "rho", e.schedule.rho);
  const std::string kind = doc.get_string("estimator", "schedule", "power_law");
  if (kind == "power_law") {
    e.schedule.kind = ScheduleKind::power_law;
  } else if (kind == "uniform") {
    e.schedule.kind = ScheduleKind::uniform;
  } else {
    throw ConfigError("config: [estimator] schedule must be power_law or uniform");
  }
  const std::string mode = doc.get_string("estimator", "correction", "adaptive");
  if (mode == "adaptive") {
    e.correction = CorrectionMode::adaptive;
  } else if (mode == "hard") {
    e.correction = CorrectionMode::hard;
  } else {
    throw ConfigError("config: [estimator] correction must be adaptive or hard");
  }
  e.final_hard_projection =
      doc.get_bool("estimator", "final_hard_projection", e.final_hard_projection);
  e.seed = doc.get_u64("estimator", "seed", e.seed);

  c.trials = doc.get_count("bench", "trials", c.trials);
  c.seed = doc.get_u64("bench", "seed", c.seed);
  c.budgets_ms = doc.get_doubles("bench", "budgets_ms", c.budgets_ms);
  c.latency_warmup = doc.get_count("bench", "latency_warmup", c.latency_warmup);
  c.latency_reps = doc.get_count("bench", "latency_reps", c.latency_reps);

  doc.check_all_consumed();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_ini(IniDocument::load(path));
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream o;
  o << std::setprecision(17) << std::boolalpha;
  o << "[dataset]\n"
    << "nr = " << channel.nr << "\n"
    << "nt = " << channel.nt << "\n"
    << "clusters = " << channel.num_clusters << "\n"
    << "rays = " << channel.rays_per_cluster << "\n"
    << "spread_deg = " << channel.angular_spread_deg << "\n"
    << "seed = " << channel.seed << "\n"
    << "samples = " << samples << "\n"
    << "train_fraction = " << train_fraction << "\n"
    << "split_seed = " << split_seed << "\n\n";
  o << "[measurement]\n"
    << "np = " << np << "\n"
    << "np_list = " << join(np_list) << "\n"
    << "snr_db = " << snr_db << "\n"
    << "snr_list = " << join(snr_list) << "\n\n";
  o << "[network]\n"
    << "hidden = " << join(hidden) << "\n"
    << "time_embed_dim = " << time_embed_dim << "\n"
    << "init_seed = " << init_seed << "\n\n";
  o << "[train]\n"
    << "learning_rate = " << train.adam.learning_rate << "\n"
    << "beta1 = " << train.adam.beta1 << "\n"
    << "beta2 = " << train.adam.beta2 << "\n"
    << "epsilon = " << train.adam.epsilon << "\n"
    << "batch_size = " << train.batch_size << "\n"
    << "epochs = " << train.epochs << "\n"
    << "seed = " << train.seed << "\n"
    << "threads = " << train.threads << "\n"
    << "final_lr_fraction = " << train.final_lr_fraction << "\n"
    << "augment = " << augment << "\n\n";
  o << "[estimator]\n"
    << "steps = " << estimator.schedule.steps << "\n"
    << "rho = " << estimator.schedule.rho << "\n"
    << "schedule = "
    << (estimator.schedule.kind == ScheduleKind::uniform ? "uniform" : "power_law")
    << "\n"
    << "correction = "
    << (estimator.correction == CorrectionMode::hard ? "hard" : "adaptive") << "\n"
    << "final_hard_projection = " << estimator.final_hard_projection << "\n"
    << "seed = " << estimator.seed << "\n\n";
  o << "[bench]\n"
    << "trials = " << trials << "\n"
    << "seed = " << seed << "\n"
    << "budgets_ms = " << join(budgets_ms) << "\n"
    << "latency_warmup = " << latency_warmup << "\n"
    << "latency_reps = " << latency_reps << "\n";
  return o.str();
}

std::size_t steps_from_budget(double budget_ms, double preprocess_ms,
                              double per_step_ms) {
  if (!(per_step_ms > 0.0)) {
    throw ConfigError("steps_from_budget: per-step latency must be positive");
  }
  const double k = std::floor((budget_ms - preprocess_ms) / per_step_ms);
  return k > 0.0 ? static_cast<std::size_t>(k) : 0;
}

LatencyProfile measure_latency(const VelocityNet& net,
                               const MeasurementModel& model,
                               std::size_t warmup, std::size_t reps) {
  if (reps < 10) {
    throw ConfigError("measure_latency: need at least 10 repetitions");
  }
  LatencyProfile profile;
  std::vector<double> pre;
  for (std::size_t i = 0; i < warmup + reps; ++i) {
    const auto start = Clock::now();
    const MeasurementModel m = MeasurementModel::build(
        model.nr(), model.nt(), model.np(), model.snr_db());
    const double ms = elapsed_ms(start);
    if (m.m() != model.m()) {
      throw Error("measure_latency: rebuilt model differs in shape");
    }
    if (i >= warmup) pre.push_back(ms);
  }

  EstimatorConfig cfg;
  cfg.schedule.steps = 1;
  NullSpaceFlowEstimator est(net, model, cfg);
  const RealVector y(model.m());
  RealVector h0(model.n_dim());
  Random rng(0, {kInitTag});
  for (double& v : h0) v = rng.gaussian();
  std::vector<double> step;
  for (std::size_t i = 0; i < warmup + reps; ++i) {
    est.reset(h0);
    const auto start = Clock::now();
    est.step(y, 0.5, 0.52, 1);
    const double ms = elapsed_ms(start);
    if (i >= warmup) step.push_back(ms);
  }
  profile.preprocess_ms = median(std::move(pre));
  profile.per_step_ms = median(std::move(step));
  std::ostringstream env;
  env << "single thread, steady_clock, hardware threads "
      << std::thread::hardware_concurrency() << ", "
#if defined(__clang__)
      << "clang " << __clang_version__;
#elif defined(__GNUC__)
      << "gcc " << __VERSION__;
#else
      << "unknown compiler";
#endif
  profile.environment = env.str();
  return profile;
}

ChannelDataset make_dataset(const ExperimentConfig& cfg) {
  return split_for_experiment(
      normalize_dataset(generate_dataset(cfg.channel, cfg.samples)), cfg);
}

ChannelDataset split_for_experiment(ChannelDataset ds,
                                    const ExperimentConfig& cfg) {
  return split_dataset(std::move(ds), cfg.train_fraction, cfg.split_seed);
}

VelocityNet make_network(const ExperimentConfig& cfg) {
  VelocityNet net(2 * cfg.channel.nr * cfg.channel.nt, cfg.hidden,
                  cfg.time_embed_dim);
  Random rng(cfg.init_seed, {0x6e657477 /* "netw" */});
  net.init_uniform(rng);
  return net;
}

TrainConfig training_config(const ExperimentConfig& cfg) {
  TrainConfig t = cfg.train;
  if (cfg.augment) {
    t.augmentation.maps =
        channel_symmetry_maps(AngularBasis::dft(cfg.channel.nr, cfg.channel.nt));
    t.augmentation.random_phase = true;
  }
  return t;
}

TrainResult train_prior(VelocityNet& net, const ChannelDataset& ds,
                        const ExperimentConfig& cfg,
                        const EpochCallback& on_epoch) {
  const auto basis = AngularBasis::dft(cfg.channel.nr, cfg.channel.nt);
  const std::vector<RealVector> data = angular_real(ds.train(), basis);
  return train(net, data, training_config(cfg), on_epoch);
}

const SweepRow& SweepResult::row(double axis_value,
                                 const std::string& method) const {
  for (const auto& r : rows) {
    if (r.axis_value == axis_value && r.method == method) {
      return r;
    }
  }
  throw Error("sweep: no row for " + method + " at " +
              std::to_string(axis_value));
}

std::vector<SweepRow> evaluate_point(const ExperimentConfig& cfg,
                                     const SweepInputs& in,
                                     const MeasurementModel& model,
                                     std::size_t k_steps, double axis_value,
                                     std::uint64_t axis_index) {
  if (in.test.empty()) {
    throw SizingError("sweep: empty test set");
  }
  Accumulator nsfm;
  Accumulator ls;
  Accumulator lmmse;
  const auto start = Clock::now();
  const LmmseEstimator lmmse_est(in.lmmse, model);
  lmmse.wall_ms += elapsed_ms(start);

  std::optional<NullSpaceFlowEstimator> est;
  if (k_steps > 0) {
    EstimatorConfig ecfg = cfg.estimator;
    ecfg.schedule.steps = k_steps;
    est.emplace(in.net, model, ecfg);
  }
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    const RealVector& h = in.test[trial % in.test.size()];
    Random noise(cfg.seed, {kNoiseTag, axis_index, trial});
    const RealVector y = model.observe(h, noise);

    auto t0 = Clock::now();
    ls.nmse.push_back(nmse_linear(ls_estimate(model, y), h));
    ls.wall_ms += elapsed_ms(t0);

    t0 = Clock::now();
    lmmse.nmse.push_back(nmse_linear(lmmse_est.estimate(y), h));
    lmmse.wall_ms += elapsed_ms(t0);

    if (est) {
      Random init(cfg.seed, {kInitTag, cfg.estimator.seed, axis_index, trial});
      t0 = Clock::now();
      nsfm.nmse.push_back(nmse_linear(est->estimate(y, init), h));
      nsfm.wall_ms += elapsed_ms(t0);
    }
  }

  std::vector<SweepRow> rows;
  if (est) {
    rows.push_back(nsfm.finish(axis_value, kMethodNsfm, k_steps, model.sigma_n()));
  } else {
    SweepRow none;
    none.axis_value = axis_value;
    none.method = kMethodNsfm;
    none.has_estimate = false;
    none.mean_nmse_db = std::numeric_limits<double>::quiet_NaN();
    none.stderr_db = std::numeric_limits<double>::quiet_NaN();
    none.sigma_n = model.sigma_n();
    rows.push_back(none);
  }
  rows.push_back(ls.finish(axis_value, kMethodLs, 0, model.sigma_n()));
  rows.push_back(lmmse.finish(axis_value, kMethodLmmse, 0, model.sigma_n()));
  return rows;
}

SweepResult run_sweep_snr(const ExperimentConfig& cfg, const SweepInputs& in) {
  SweepResult result{"snr_db", cfg.snr_list, {}};
  const MeasurementModel base = MeasurementModel::build(
      cfg.channel.nr, cfg.channel.nt, cfg.np, cfg.snr_list.front());
  for (std::size_t i = 0; i < cfg.snr_list.size(); ++i) {
    const MeasurementModel model = base.with_snr(cfg.snr_list[i]);
    auto rows = evaluate_point(cfg, in, model, cfg.estimator.schedule.steps,
                               cfg.snr_list[i], i);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

SweepResult run_sweep_density(const ExperimentConfig& cfg,
                              const SweepInputs& in) {
  SweepResult result{"pilot_density", {}, {}};
  for (std::size_t i = 0; i < cfg.np_list.size(); ++i) {
    const std::size_t p = cfg.np_list[i];
    const double alpha =
        static_cast<double>(p) / static_cast<double>(cfg.channel.nt);
    result.axis_values.push_back(alpha);
    const MeasurementModel model =
        MeasurementModel::build(cfg.channel.nr, cfg.channel.nt, p, cfg.snr_db);
    auto rows = evaluate_point(cfg, in, model, cfg.estimator.schedule.steps,
                               alpha, i);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

SweepResult run_sweep_budget(const ExperimentConfig& cfg, const SweepInputs& in,
                             const LatencyProfile& profile) {
  SweepResult result{"budget_ms", cfg.budgets_ms, {}};
  const MeasurementModel model =
      MeasurementModel::build(cfg.channel.nr, cfg.channel.nt, cfg.np, cfg.snr_db);
  for (std::size_t i = 0; i < cfg.budgets_ms.size(); ++i) {
    const std::size_t k = steps_from_budget(
        cfg.budgets_ms[i], profile.preprocess_ms, profile.per_step_ms);
    auto rows = evaluate_point(cfg, in, model, k, cfg.budgets_ms[i], i);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "axis_value,method,mean_nmse_db,stderr_db,trials,k_steps,sigma_n,"
         "wall_ms\n";
  out << std::setprecision(10);
  for (const auto& r : result.rows) {
    out << r.axis_value << ',' << r.method << ',';
    if (r.has_estimate) {
      out << r.mean_nmse_db << ',' << r.stderr_db;
    } else {
      out << "nan,nan";
    }
    out << ',' << r.trials << ',' << r.k_steps << ',' << r.sigma_n << ','
        << r.wall_ms << '\n';
  }
}

void write_sweep_csv(const SweepResult& result,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_sweep_csv(result, out);
  if (!out) {
    throw Error("write to " + path.string() + " failed");
  }
}

}  // namespace nsfm
