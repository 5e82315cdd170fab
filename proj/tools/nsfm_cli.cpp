// Command-line driver: dataset generation, prior training, the NMSE sweeps
// and latency measurement.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nsfm/baselines.hpp"
#include "nsfm/bench.hpp"
#include "nsfm/channel.hpp"
#include "nsfm/checkpoint.hpp"
#include "nsfm/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::string data;
  std::string checkpoint;
  std::optional<double> rho;
  std::optional<std::size_t> k;
  std::optional<std::size_t> trials;
  std::optional<std::string> correction;
  bool final_hard = false;

  // estimate
  std::optional<double> snr;
  std::optional<std::size_t> np;

  // bench-budget
  std::optional<double> preprocess_ms;
  std::optional<double> per_step_ms;

  bool quiet = false;
};

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

fs::path data_path(const Options& o) {
  return o.data.empty() ? fs::path(o.out) / "dataset.nsfm" : fs::path(o.data);
}

fs::path checkpoint_path(const Options& o) {
  return o.checkpoint.empty() ? fs::path(o.out) / "prior.nsck"
                              : fs::path(o.checkpoint);
}

nsfm::ExperimentConfig load_config(const Options& o) {
  nsfm::ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = nsfm::ExperimentConfig::load(o.config);
  }
  if (o.rho) cfg.estimator.schedule.rho = *o.rho;
  if (o.k) cfg.estimator.schedule.steps = *o.k;
  if (o.trials) cfg.trials = *o.trials;
  if (o.correction) {
    if (*o.correction == "hard") {
      cfg.estimator.correction = nsfm::CorrectionMode::hard;
    } else if (*o.correction == "adaptive") {
      cfg.estimator.correction = nsfm::CorrectionMode::adaptive;
    } else {
      throw nsfm::ConfigError("--correction must be hard or adaptive");
    }
  }
  if (o.final_hard) cfg.estimator.final_hard_projection = true;
  cfg.validate();
  return cfg;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

json seeds_of(const nsfm::ExperimentConfig& cfg) {
  return {{"dataset", cfg.channel.seed},   {"split", cfg.split_seed},
          {"init", cfg.init_seed},         {"train", cfg.train.seed},
          {"estimator", cfg.estimator.seed}, {"bench", cfg.seed}};
}

class Run {
 public:
  Run(std::string command, const nsfm::ExperimentConfig& cfg)
      : command_(std::move(command)),
        start_(std::chrono::steady_clock::now()) {
    manifest_["command"] = command_;
    manifest_["version"] = NSFM_VERSION;
    manifest_["started_utc"] = utc_now();
    manifest_["config"] = cfg.to_ini();
    manifest_["seeds"] = seeds_of(cfg);
  }

  json& operator[](const char* key) { return manifest_[key]; }

  void output(const fs::path& p) { manifest_["outputs"].push_back(p.string()); }

  void finish(const fs::path& dir) {
    manifest_["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    const fs::path path = dir / (command_ + ".manifest.json");
    std::ofstream out(path);
    out << manifest_.dump(2) << "\n";
    if (!out) {
      throw nsfm::Error("cannot write manifest " + path.string());
    }
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  json manifest_;
};

json profile_json(const nsfm::LatencyProfile& p) {
  return {{"method", p.method},
          {"preprocess_ms", p.preprocess_ms},
          {"per_step_ms", p.per_step_ms},
          {"environment", p.environment}};
}

// Dataset split per config plus the prior, checked for a matching hash.
struct Loaded {
  nsfm::ChannelDataset ds;
  nsfm::Checkpoint ck;
  std::vector<nsfm::RealVector> test;
  nsfm::LmmseStats lmmse;
};

Loaded load_inputs(const Options& o, const nsfm::ExperimentConfig& cfg) {
  Loaded in;
  const fs::path dpath = data_path(o);
  const fs::path cpath = checkpoint_path(o);
  if (!fs::exists(dpath)) {
    throw nsfm::ConfigError("dataset not found: " + dpath.string() +
                            " (run gen-data first or pass --data)");
  }
  if (!fs::exists(cpath)) {
    throw nsfm::ConfigError("checkpoint not found: " + cpath.string() +
                            " (run train first or pass --checkpoint)");
  }
  nsfm::ChannelDataset full = nsfm::load_dataset(dpath);
  const std::uint64_t hash = nsfm::dataset_hash(full);
  in.ck = nsfm::load_checkpoint(cpath);
  if (in.ck.meta.dataset_hash != hash) {
    throw nsfm::Error("checkpoint " + cpath.string() +
                      " was trained on a different dataset (hash " +
                      hex64(in.ck.meta.dataset_hash) + ", dataset " +
                      hex64(hash) + ")");
  }
  if (full.samples.empty() || full.samples.front().h.rows() != cfg.channel.nr ||
      full.samples.front().h.cols() != cfg.channel.nt) {
    throw nsfm::ConfigError("dataset dimensions do not match the config");
  }
  in.ds = nsfm::split_for_experiment(std::move(full), cfg);
  const auto basis = nsfm::AngularBasis::dft(cfg.channel.nr, cfg.channel.nt);
  in.test = nsfm::angular_real(in.ds.test(), basis);
  in.lmmse = nsfm::lmmse_fit(nsfm::angular_real(in.ds.train(), basis));
  return in;
}

void print_sweep(const nsfm::SweepResult& r) {
  std::cout << std::left << std::setw(12) << r.axis << std::setw(8) << "method"
            << std::right << std::setw(12) << "nmse_db" << std::setw(10)
            << "stderr" << std::setw(8) << "K" << "\n";
  for (const auto& row : r.rows) {
    std::cout << std::left << std::setw(12) << row.axis_value << std::setw(8)
              << row.method << std::right << std::fixed
              << std::setprecision(3) << std::setw(12) << row.mean_nmse_db
              << std::setw(10) << row.stderr_db << std::setw(8) << row.k_steps
              << "\n";
    std::cout.unsetf(std::ios::fixed);
  }
}

json sweep_json(const nsfm::SweepResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"axis_value", row.axis_value}, {"method", row.method},
              {"trials", row.trials},         {"k_steps", row.k_steps},
              {"sigma_n", row.sigma_n},       {"wall_ms", row.wall_ms}};
    if (row.has_estimate) {
      j["mean_nmse_db"] = row.mean_nmse_db;
      j["stderr_db"] = row.stderr_db;
    } else {
      j["mean_nmse_db"] = nullptr;
      j["stderr_db"] = nullptr;
    }
    rows.push_back(j);
  }
  return rows;
}

int cmd_gen_data(const Options& o) {
  const auto cfg = load_config(o);
  Run run("gen-data", cfg);
  const fs::path dir = out_dir(o);
  const auto ds = nsfm::normalize_dataset(
      nsfm::generate_dataset(cfg.channel, cfg.samples));
  const fs::path path = o.data.empty() ? dir / "dataset.nsfm" : fs::path(o.data);
  nsfm::save_dataset(ds, path);
  run.output(path);
  run["dataset_hash"] = hex64(nsfm::dataset_hash(ds));
  run["mean_entry_power"] = nsfm::mean_entry_power(ds.samples);
  run.finish(dir);
  if (!o.quiet) {
    std::cout << "wrote " << ds.samples.size() << " samples to " << path << "\n";
  }
  return 0;
}

int cmd_train(const Options& o) {
  const auto cfg = load_config(o);
  Run run("train", cfg);
  const fs::path dir = out_dir(o);
  const fs::path dpath = data_path(o);
  if (!fs::exists(dpath)) {
    throw nsfm::ConfigError("dataset not found: " + dpath.string());
  }
  nsfm::ChannelDataset full = nsfm::load_dataset(dpath);
  const std::uint64_t hash = nsfm::dataset_hash(full);
  const auto ds = nsfm::split_for_experiment(std::move(full), cfg);

  nsfm::VelocityNet net = nsfm::make_network(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = nsfm::train_prior(
      net, ds, cfg, [&](std::size_t epoch, double loss) {
        if (!o.quiet) {
          const double s = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
          std::ostringstream secs;
          secs << std::fixed << std::setprecision(1) << s;
          std::cout << "epoch " << epoch + 1 << "/" << cfg.train.epochs
                    << " loss " << loss << " (" << secs.str() << " s)"
                    << std::endl;
        }
      });

  const fs::path cpath = checkpoint_path(o);
  nsfm::save_checkpoint(net, {hash, cfg.train.seed}, cpath);
  run.output(cpath);
  const fs::path loss_path = dir / "train_loss.csv";
  {
    std::ofstream out(loss_path);
    out << "epoch,loss\n" << std::setprecision(10);
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
      out << e + 1 << ',' << result.epoch_losses[e] << '\n';
    }
  }
  run.output(loss_path);
  run["dataset_hash"] = hex64(hash);
  run["train_count"] = ds.train_count;
  run["epochs"] = result.epoch_losses.size();
  run["steps"] = result.steps;
  run["final_loss"] = result.epoch_losses.back();
  run["parameters"] = net.parameter_count();
  run.finish(dir);
  return 0;
}

int cmd_estimate(const Options& o) {
  auto cfg = load_config(o);
  if (o.np) cfg.np = *o.np;
  if (o.snr) cfg.snr_db = *o.snr;
  if (!o.trials) cfg.trials = 1;
  cfg.validate();
  Run run("estimate", cfg);
  const fs::path dir = out_dir(o);
  const Loaded in = load_inputs(o, cfg);
  const auto model = nsfm::MeasurementModel::build(cfg.channel.nr, cfg.channel.nt,
                                                   cfg.np, cfg.snr_db);
  const nsfm::SweepInputs inputs{in.ck.net, in.test, in.lmmse};
  const auto rows = nsfm::evaluate_point(cfg, inputs, model,
                                         cfg.estimator.schedule.steps, cfg.snr_db, 0);
  std::cout << std::setprecision(6) << rows.front().mean_nmse_db << "\n";
  nsfm::SweepResult r{"snr_db", {cfg.snr_db}, rows};
  run["rows"] = sweep_json(r);
  run.finish(dir);
  return 0;
}

int run_sweep(const Options& o, const std::string& command) {
  const auto cfg = load_config(o);
  Run run(command, cfg);
  const fs::path dir = out_dir(o);
  const Loaded in = load_inputs(o, cfg);
  const nsfm::SweepInputs inputs{in.ck.net, in.test, in.lmmse};
  nsfm::SweepResult result;
  if (command == "bench-snr") {
    result = nsfm::run_sweep_snr(cfg, inputs);
  } else if (command == "bench-density") {
    result = nsfm::run_sweep_density(cfg, inputs);
  } else {
    nsfm::LatencyProfile profile;
    if (o.preprocess_ms && o.per_step_ms) {
      profile.preprocess_ms = *o.preprocess_ms;
      profile.per_step_ms = *o.per_step_ms;
      profile.environment = "supplied on the command line";
    } else if (o.preprocess_ms || o.per_step_ms) {
      throw nsfm::ConfigError(
          "--preprocess-ms and --per-step-ms must be given together");
    } else {
      const auto model = nsfm::MeasurementModel::build(
          cfg.channel.nr, cfg.channel.nt, cfg.np, cfg.snr_db);
      profile = nsfm::measure_latency(in.ck.net, model, cfg.latency_warmup,
                                      cfg.latency_reps);
    }
    run["latency_profile"] = profile_json(profile);
    result = nsfm::run_sweep_budget(cfg, inputs, profile);
  }
  const std::string stem = command.substr(std::string("bench-").size());
  const fs::path csv = dir / ("results_" + stem + ".csv");
  nsfm::write_sweep_csv(result, csv);
  run.output(csv);
  run["rows"] = sweep_json(result);
  run.finish(dir);
  if (!o.quiet) {
    print_sweep(result);
  }
  return 0;
}

int cmd_measure_latency(const Options& o) {
  const auto cfg = load_config(o);
  Run run("measure-latency", cfg);
  const fs::path dir = out_dir(o);
  const fs::path cpath = checkpoint_path(o);
  if (!fs::exists(cpath)) {
    throw nsfm::ConfigError("checkpoint not found: " + cpath.string());
  }
  const auto ck = nsfm::load_checkpoint(cpath);
  const auto model = nsfm::MeasurementModel::build(cfg.channel.nr, cfg.channel.nt,
                                                   cfg.np, cfg.snr_db);
  const auto profile =
      nsfm::measure_latency(ck.net, model, cfg.latency_warmup, cfg.latency_reps);
  run["latency_profile"] = profile_json(profile);
  run.finish(dir);
  std::cout << "preprocess_ms " << profile.preprocess_ms << "\n"
            << "per_step_ms " << profile.per_step_ms << "\n"
            << "environment " << profile.environment << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Null-space flow-matching channel estimation"};
  app.set_version_flag("--version", std::string(NSFM_VERSION));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", o.config, "Experiment config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--out,-o", o.out, "Output directory");
    sub->add_flag("--quiet,-q", o.quiet, "Suppress progress output");
  };
  auto inputs = [&](CLI::App* sub) {
    sub->add_option("--data,-d", o.data,
                    "Dataset file (default <out>/dataset.nsfm)");
    sub->add_option("--checkpoint", o.checkpoint,
                    "Prior checkpoint (default <out>/prior.nsck)");
  };
  auto estimator = [&](CLI::App* sub) {
    sub->add_option("--rho", o.rho, "Power-law schedule index");
    sub->add_option("--k", o.k, "Inference steps");
    sub->add_option("--trials", o.trials, "Trials per point");
    sub->add_option("--correction", o.correction, "adaptive or hard");
    sub->add_flag("--final-hard", o.final_hard,
                  "Apply a final exact projection onto the observation");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a normalized dataset");
  common(gen);
  gen->add_option("--data,-d", o.data, "Output file (default <out>/dataset.nsfm)");

  auto* train = app.add_subcommand("train", "Train the flow-matching prior");
  common(train);
  inputs(train);

  auto* est = app.add_subcommand("estimate", "Mean NMSE (dB) at one operating point");
  common(est);
  inputs(est);
  estimator(est);
  est->add_option("--snr", o.snr, "SNR in dB (default from config)");
  est->add_option("--np", o.np, "Pilot count (default from config)");

  auto* snr = app.add_subcommand("bench-snr", "NMSE versus SNR");
  auto* dens = app.add_subcommand("bench-density", "NMSE versus pilot density");
  auto* budget = app.add_subcommand("bench-budget", "NMSE versus latency budget");
  for (auto* sub : {snr, dens, budget}) {
    common(sub);
    inputs(sub);
    estimator(sub);
  }
  budget->add_option("--preprocess-ms", o.preprocess_ms,
                     "Use this preprocess latency instead of measuring");
  budget->add_option("--per-step-ms", o.per_step_ms,
                     "Use this per-step latency instead of measuring");

  auto* lat = app.add_subcommand("measure-latency", "Time preprocessing and one step");
  common(lat);
  inputs(lat);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o);
    if (train->parsed()) return cmd_train(o);
    if (est->parsed()) return cmd_estimate(o);
    if (snr->parsed()) return run_sweep(o, "bench-snr");
    if (dens->parsed()) return run_sweep(o, "bench-density");
    if (budget->parsed()) return run_sweep(o, "bench-budget");
    if (lat->parsed()) return cmd_measure_latency(o);
  } catch (const nsfm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
