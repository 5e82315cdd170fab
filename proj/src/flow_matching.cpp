#include "nsfm/flow_matching.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

namespace nsfm {

namespace {

constexpr double kDivergenceLoss = 1e6;

struct BatchView {
  const Eigen::MatrixXf& h0;
  const Eigen::MatrixXf& h1;
  std::span<const float> t;
};

// Sum over columns [begin, end) of per-sample losses; gradients of
// (sum / total_batch) accumulate into grads.
double chunk_loss_grad(const VelocityNet& net, const BatchView& batch,
                       Eigen::Index begin, Eigen::Index end, float total_batch,
                       NetGradients& grads, std::ptrdiff_t& bad_column) {
  const Eigen::Index cols = end - begin;
  Eigen::MatrixXf h0 = batch.h0.middleCols(begin, cols);
  Eigen::MatrixXf h1 = batch.h1.middleCols(begin, cols);
  Eigen::MatrixXf state(h0.rows(), cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const float t = batch.t[static_cast<std::size_t>(begin + c)];
    state.col(c) = (1.0f - t) * h0.col(c) + t * h1.col(c);
  }
  BatchCache cache;
  Eigen::MatrixXf out = net.forward_batch(
      state, batch.t.subspan(static_cast<std::size_t>(begin),
                             static_cast<std::size_t>(cols)),
      &cache);
  Eigen::MatrixXf diff = out - (h1 - h0);
  double loss = 0.0;
  bad_column = -1;
  for (Eigen::Index c = 0; c < cols; ++c) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < diff.rows(); ++r) {
      const double d = diff(r, c);
      s += d * d;
    }
    if (!std::isfinite(s) && bad_column < 0) {
      bad_column = begin + c;
    }
    loss += s;
  }
  net.backward_batch(cache, diff * (2.0f / total_batch), grads);
  return loss;
}

// Loss and gradient over the whole batch, optionally split across threads.
// Per-worker gradients are combined by a pairwise tree in worker order.
double batch_loss_grad(const VelocityNet& net, const BatchView& batch,
                       std::size_t threads, NetGradients& grads,
                       std::ptrdiff_t& bad_column) {
  const Eigen::Index total = batch.h0.cols();
  const auto total_f = static_cast<float>(total);
  threads = std::max<std::size_t>(1, std::min<std::size_t>(threads, total));
  if (threads == 1) {
    grads.set_zero();
    return chunk_loss_grad(net, batch, 0, total, total_f, grads, bad_column) /
           static_cast<double>(total);
  }
  std::vector<NetGradients> partial(threads, net.zero_gradients());
  std::vector<double> losses(threads, 0.0);
  std::vector<std::ptrdiff_t> bad(threads, -1);
  std::vector<std::thread> workers;
  const Eigen::Index chunk = (total + static_cast<Eigen::Index>(threads) - 1) /
                             static_cast<Eigen::Index>(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    const Eigen::Index begin = static_cast<Eigen::Index>(w) * chunk;
    const Eigen::Index end = std::min(total, begin + chunk);
    if (begin >= end) {
      continue;
    }
    workers.emplace_back([&, w, begin, end] {
      losses[w] = chunk_loss_grad(net, batch, begin, end, total_f, partial[w],
                                  bad[w]);
    });
  }
  for (auto& t : workers) {
    t.join();
  }
  for (std::size_t stride = 1; stride < threads; stride *= 2) {
    for (std::size_t w = 0; w + stride < threads; w += 2 * stride) {
      partial[w] += partial[w + stride];
      losses[w] += losses[w + stride];
    }
  }
  bad_column = -1;
  for (std::ptrdiff_t b : bad) {
    if (b >= 0) {
      bad_column = b;
      break;
    }
  }
  grads = std::move(partial[0]);
  return losses[0] / static_cast<double>(total);
}

void apply_augmentation(const Augmentation& aug, Random& rng,
                        std::span<float> column, std::vector<double>& scratch) {
  if (!aug.maps.empty()) {
    const RealMatrix& map = aug.maps[rng.below(aug.maps.size())];
    scratch.assign(column.begin(), column.end());
    for (std::size_t i = 0; i < column.size(); ++i) {
      const auto row = map.row(i);
      double s = 0.0;
      for (std::size_t k = 0; k < row.size(); ++k) {
        s += row[k] * scratch[k];
      }
      column[i] = static_cast<float>(s);
    }
  }
  if (aug.random_phase) {
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const auto c = static_cast<float>(std::cos(phi));
    const auto s = static_cast<float>(std::sin(phi));
    const std::size_t half = column.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const float re = column[i];
      const float im = column[i + half];
      column[i] = c * re - s * im;
      column[i + half] = s * re + c * im;
    }
  }
}

}  // namespace

RealVector interpolate(std::span<const double> h0, std::span<const double> h1,
                       double t) {
  if (h0.size() != h1.size()) {
    throw SizingError("interpolate: endpoint lengths differ");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("interpolate: t outside [0, 1]");
  }
  RealVector out(h0.size());
  for (std::size_t i = 0; i < h0.size(); ++i) {
    out[i] = (1.0 - t) * h0[i] + t * h1[i];
  }
  return out;
}

LossAndGrad fm_loss_and_grad(const VelocityNet& net,
                             std::span<const FlowSample> batch) {
  if (batch.empty()) {
    throw SizingError("fm_loss_and_grad: empty batch");
  }
  const auto n = static_cast<Eigen::Index>(net.input_dim());
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXf h0(n, b);
  Eigen::MatrixXf h1(n, b);
  std::vector<float> t(batch.size());
  for (Eigen::Index c = 0; c < b; ++c) {
    const FlowSample& s = batch[static_cast<std::size_t>(c)];
    if (s.h0.size() != net.input_dim() || s.h1.size() != net.input_dim()) {
      throw SizingError("fm_loss_and_grad: sample " + std::to_string(c) +
                        " has the wrong length");
    }
    if (!(s.t >= 0.0 && s.t <= 1.0)) {
      throw DomainError("fm_loss_and_grad: t outside [0, 1]");
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      h0(r, c) = static_cast<float>(s.h0[static_cast<std::size_t>(r)]);
      h1(r, c) = static_cast<float>(s.h1[static_cast<std::size_t>(r)]);
    }
    t[static_cast<std::size_t>(c)] = static_cast<float>(s.t);
  }
  LossAndGrad result{0.0, net.zero_gradients()};
  std::ptrdiff_t bad = -1;
  result.loss =
      batch_loss_grad(net, BatchView{h0, h1, t}, 1, result.grad, bad);
  if (bad >= 0) {
    throw NumericError("fm_loss_and_grad: non-finite loss",
                       static_cast<std::size_t>(bad));
  }
  return result;
}

AdamOptimizer::AdamOptimizer(const VelocityNet& net, AdamConfig config)
    : config_(config), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void AdamOptimizer::step(VelocityNet& net, const NetGradients& grads) {
  ++t_;
  const auto b1 = static_cast<float>(config_.beta1);
  const auto b2 = static_cast<float>(config_.beta2);
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const auto step = static_cast<float>(config_.learning_rate * std::sqrt(c2) / c1);
  const auto eps = static_cast<float>(config_.epsilon * std::sqrt(c2));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
    param.array() -= step * m.array() / (v.array().sqrt() + eps);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, m_.weight[l], v_.weight[l], grads.weight[l]);
    update(layers[l].bias, m_.bias[l], v_.bias[l], grads.bias[l]);
  }
}

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0)) {
    throw ConfigError("train: learning_rate must be positive");
  }
  if (batch_size < 1 || epochs < 1) {
    throw ConfigError("train: batch_size and epochs must be at least 1");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 &&
        adam.beta2 < 1.0)) {
    throw ConfigError("train: moment decay rates must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) {
    throw ConfigError("train: epsilon must be positive");
  }
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    throw ConfigError("train: final_lr_fraction must lie in (0, 1]");
  }
  if (threads < 1) {
    throw ConfigError("train: threads must be at least 1");
  }
}

TrainResult train(VelocityNet& net, std::span<const RealVector> data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) {
    throw SizingError("train: empty training set");
  }
  const std::size_t n = net.input_dim();
  for (const auto& v : data) {
    if (v.size() != n) {
      throw SizingError("train: data vector length differs from the network");
    }
  }
  for (const auto& map : config.augmentation.maps) {
    if (map.rows() != n || map.cols() != n) {
      throw SizingError("train: augmentation map has the wrong shape");
    }
  }
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXf all(rows, static_cast<Eigen::Index>(data.size()));
  for (std::size_t c = 0; c < data.size(); ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      all(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<float>(data[c][r]);
    }
  }

  AdamOptimizer optimizer(net, config.adam);
  const double base_lr = config.adam.learning_rate;
  const std::size_t batches_per_epoch =
      (data.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches_per_epoch * config.epochs;

  TrainResult result;
  NetGradients grads = net.zero_gradients();
  std::vector<std::size_t> order(data.size());
  std::vector<double> scratch;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Random shuffle(config.seed, {0x65706f63ull /* "epoc" */, epoch});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size, ++step) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      const auto cols = static_cast<Eigen::Index>(count);
      Random rng(config.seed, {0x62617463ull /* "batc" */, step});
      Eigen::MatrixXf h1(rows, cols);
      Eigen::MatrixXf h0(rows, cols);
      std::vector<float> t(count);
      for (std::size_t c = 0; c < count; ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        h1.col(col) = all.col(static_cast<Eigen::Index>(order[start + c]));
        if (!config.augmentation.empty()) {
          apply_augmentation(config.augmentation, rng,
                             std::span<float>(h1.col(col).data(), n), scratch);
        }
      }
      for (std::size_t c = 0; c < count; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
          h0(r, static_cast<Eigen::Index>(c)) = static_cast<float>(rng.gaussian());
        }
      }
      for (std::size_t c = 0; c < count; ++c) {
        t[c] = static_cast<float>(rng.uniform());
      }

      std::ptrdiff_t bad = -1;
      const double loss = batch_loss_grad(net, BatchView{h0, h1, t},
                                          config.threads, grads, bad);
      if (bad >= 0 || !std::isfinite(loss) || loss > kDivergenceLoss) {
        throw TrainingDivergenceError(
            "train: loss " + std::to_string(loss) + " diverged", epoch, step);
      }
      if (config.final_lr_fraction < 1.0) {
        const double progress =
            static_cast<double>(step) / static_cast<double>(total_steps);
        const double f = config.final_lr_fraction;
        optimizer.set_learning_rate(
            base_lr *
            (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress))));
      }
      optimizer.step(net, grads);
      epoch_loss += loss * static_cast<double>(count);
    }
    epoch_loss /= static_cast<double>(order.size());
    result.epoch_losses.push_back(epoch_loss);
    if (on_epoch) {
      on_epoch(epoch, epoch_loss);
    }
  }
  result.steps = step;
  return result;
}

RealVector sample(const VelocityNet& net, std::size_t steps, Random& rng) {
  if (steps < 1) {
    throw ConfigError("sample: steps must be at least 1");
  }
  const std::size_t n = net.input_dim();
  RealVector h(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = rng.gaussian();
  }
  ForwardWorkspace ws = net.make_workspace();
  RealVector v(n);
  const double dt = 1.0 / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    net.forward(h, static_cast<double>(k) * dt, v, ws);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] += dt * v[i];
    }
    if (!std::isfinite(squared_norm(h))) {
      throw NumericError("sample: non-finite state", k);
    }
  }
  return h;
}

}  // namespace nsfm
