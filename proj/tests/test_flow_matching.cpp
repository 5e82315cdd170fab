#include <gtest/gtest.h>

#include <cmath>

#include "nsfm/channel.hpp"
#include "nsfm/flow_matching.hpp"
#include "test_util.hpp"

using namespace nsfm;
using nsfm::test::random_vector;

namespace {

// Network whose output is the constant c: all weights zero, output bias c.
VelocityNet constant_net(const RealVector& c, std::size_t hidden = 4) {
  VelocityNet net(c.size(), {hidden}, 4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    net.layers().back().bias[static_cast<Eigen::Index>(i)] = static_cast<float>(c[i]);
  }
  return net;
}

std::vector<FlowSample> random_batch(std::size_t n, std::size_t count, Random& rng) {
  std::vector<FlowSample> batch;
  for (std::size_t i = 0; i < count; ++i) {
    batch.push_back({random_vector(n, rng), random_vector(n, rng), rng.uniform()});
  }
  return batch;
}

double loss_only(const VelocityNet& net, const std::vector<FlowSample>& batch) {
  return fm_loss_and_grad(net, batch).loss;
}

}  // namespace

TEST(Interpolate, EndpointsSymmetryLinearity) {
  Random rng(1);
  const auto a = random_vector(5, rng);
  const auto b = random_vector(5, rng);
  EXPECT_EQ(interpolate(a, b, 0.0), a);
  EXPECT_EQ(interpolate(a, b, 1.0), b);
  RealVector neg = a;
  neg *= -1.0;
  EXPECT_EQ(max_abs(interpolate(a, neg, 0.5)), 0.0);
  for (double t : {0.25, 0.75}) {
    const auto v = interpolate(a, b, t);
    for (std::size_t i = 0; i < 5; ++i)
      EXPECT_NEAR(v[i], a[i] + t * (b[i] - a[i]), 1e-15);
  }
  EXPECT_THROW(interpolate(a, RealVector(4), 0.5), SizingError);
  EXPECT_THROW(interpolate(a, b, 1.5), DomainError);
}

TEST(FmLoss, PerfectPredictionIsZero) {
  Random rng(2);
  const auto h0 = random_vector(4, rng);
  const auto h1 = random_vector(4, rng);
  const auto net = constant_net(h1 - h0);
  const std::vector<FlowSample> batch{{h0, h1, 0.3}, {h0, h1, 0.8}};
  EXPECT_LT(loss_only(net, batch), 1e-10);
}

TEST(FmLoss, DegeneratePathIsZero) {
  Random rng(3);
  VelocityNet net(4, {8}, 4);
  const auto h = random_vector(4, rng);
  EXPECT_EQ(loss_only(net, {{h, h, 0.4}}), 0.0);
}

TEST(FmLoss, MatchesDirectEvaluation) {
  Random rng(4);
  VelocityNet net(4, {8}, 4);
  net.init_uniform(rng);
  const auto batch = random_batch(4, 6, rng);
  double direct = 0.0;
  for (const auto& s : batch) {
    std::vector<double> ht(4);
    for (std::size_t i = 0; i < 4; ++i)
      ht[i] = (1.0 - s.t) * static_cast<float>(s.h0[i]) + s.t * static_cast<float>(s.h1[i]);
    const auto v = net.forward(ht, s.t);
    for (std::size_t i = 0; i < 4; ++i) {
      const double d = v[i] - (s.h1[i] - s.h0[i]);
      direct += d * d;
    }
  }
  direct /= 6.0;
  EXPECT_NEAR(loss_only(net, batch), direct, 1e-4 * direct);
}

namespace {

// Double-precision re-implementation of the network and loss from the flat
// parameters, used as an independent oracle.
double reference_loss(const VelocityNet& net, const std::vector<FlowSample>& batch,
                      const std::vector<double>& params) {
  const std::size_t n = net.input_dim();
  double total = 0.0;
  for (const auto& s : batch) {
    const double t = static_cast<float>(s.t);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = (1.0 - t) * static_cast<float>(s.h0[i]) + t * static_cast<float>(s.h1[i]);
    const std::size_t half = net.time_embed_dim() / 2;
    for (std::size_t j = 0; j < half; ++j) {
      const double w = std::pow(1000.0, half > 1 ? double(j) / double(half - 1) : 0.0);
      x.push_back(std::sin(w * t));
    }
    for (std::size_t j = 0; j < half; ++j) {
      const double w = std::pow(1000.0, half > 1 ? double(j) / double(half - 1) : 0.0);
      x.push_back(std::cos(w * t));
    }
    std::size_t off = 0;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      const std::size_t in = net.layers()[l].in_dim();
      const std::size_t out = net.layers()[l].out_dim();
      std::vector<double> y(out);
      for (std::size_t o = 0; o < out; ++o) {
        double acc = params[off + in * out + o];
        for (std::size_t i = 0; i < in; ++i) acc += params[off + o * in + i] * x[i];
        y[o] = l + 1 < net.layers().size() ? acc / (1.0 + std::exp(-acc)) : acc;
      }
      off += in * out + out;
      x = std::move(y);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - (static_cast<float>(s.h1[i]) - static_cast<float>(s.h0[i]));
      total += d * d;
    }
  }
  return total / double(batch.size());
}

struct GradFixture {
  VelocityNet net{4, {8}, 4};
  std::vector<FlowSample> batch;
  std::vector<float> analytic;

  explicit GradFixture(std::uint64_t seed) {
    Random rng(seed);
    net.init_uniform(rng);
    batch = random_batch(4, 8, rng);
    analytic = fm_loss_and_grad(net, batch).grad.flatten();
  }
};

}  // namespace

TEST(FmLoss, GradientMatchesDoubleReference) {
  GradFixture f(5);
  const auto flat = f.net.flat_parameters();
  std::vector<double> p(flat.begin(), flat.end());
  EXPECT_NEAR(reference_loss(f.net, f.batch, p), loss_only(f.net, f.batch), 1e-5);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + 1e-6;
    const double up = reference_loss(f.net, f.batch, p);
    p[i] = orig - 1e-6;
    const double down = reference_loss(f.net, f.batch, p);
    p[i] = orig;
    const double numeric = (up - down) / 2e-6;
    EXPECT_NEAR(f.analytic[i], numeric, 1e-3 * std::abs(numeric) + 1e-5) << i;
  }
}

TEST(FmLoss, GradientMatchesSinglePrecisionDifferences) {
  // Coordinate-wise central differences on the float network, step 1e-3.
  // Float evaluation of a loss near 10 carries about 1e-6 absolute noise, so
  // the difference quotient has a noise floor near 5e-4 on top of the
  // relative tolerance.
  GradFixture f(6);
  const float step = 1e-3f;
  for (std::size_t p = 0; p < f.net.parameter_count(); ++p) {
    const float orig = f.net.parameter(p);
    f.net.set_parameter(p, orig + step);
    const double up = loss_only(f.net, f.batch);
    f.net.set_parameter(p, orig - step);
    const double down = loss_only(f.net, f.batch);
    f.net.set_parameter(p, orig);
    const double numeric = (up - down) / (2.0 * step);
    const double a = f.analytic[p];
    EXPECT_LE(std::abs(numeric - a),
              1e-2 * std::max(std::abs(numeric), std::abs(a)) + 1e-3)
        << "parameter " << p;
  }
}

TEST(FmLoss, GradientDirectionalProbes) {
  // Random +-1 directions through all parameters at step 1e-3 per parameter.
  GradFixture f(7);
  Random rng(8);
  const auto base = f.net.flat_parameters();
  for (int probe = 0; probe < 50; ++probe) {
    std::vector<float> dir(base.size());
    double predicted = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      dir[i] = rng.uniform() < 0.5 ? -1.0f : 1.0f;
      predicted += double(f.analytic[i]) * dir[i];
    }
    auto shifted = [&](float sign) {
      for (std::size_t i = 0; i < base.size(); ++i)
        f.net.set_parameter(i, base[i] + sign * 1e-3f * dir[i]);
      return loss_only(f.net, f.batch);
    };
    const double numeric = (shifted(1.0f) - shifted(-1.0f)) / 2e-3;
    for (std::size_t i = 0; i < base.size(); ++i) f.net.set_parameter(i, base[i]);
    EXPECT_LE(std::abs(numeric - predicted) / std::max(std::abs(numeric), std::abs(predicted)),
              1e-2)
        << "probe " << probe;
  }
}

TEST(FmLoss, NonFiniteReportsBatchIndex) {
  Random rng(6);
  VelocityNet net(4, {8}, 4);
  auto batch = random_batch(4, 5, rng);
  batch[3].h1[2] = std::nan("");
  try {
    fm_loss_and_grad(net, batch);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.index(), 3u);
  }
}

TEST(FmLoss, InputValidation) {
  VelocityNet net(4, {8}, 4);
  EXPECT_THROW(fm_loss_and_grad(net, {}), SizingError);
  std::vector<FlowSample> bad{{RealVector(3), RealVector(4), 0.5}};
  EXPECT_THROW(fm_loss_and_grad(net, bad), SizingError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps) ~ lr sign(g).
  Random rng(7);
  VelocityNet net(4, {8}, 4);
  net.init_uniform(rng);
  const auto batch = random_batch(4, 8, rng);
  const auto lg = fm_loss_and_grad(net, batch);
  const auto before = net.flat_parameters();
  AdamOptimizer opt(net, AdamConfig{});
  opt.step(net, lg.grad);
  EXPECT_EQ(opt.steps_taken(), 1u);
  const auto after = net.flat_parameters();
  const auto g = lg.grad.flatten();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) < 1e-4f) continue;
    EXPECT_NEAR(after[i] - before[i], g[i] > 0 ? -1e-3 : 1e-3, 2e-5) << i;
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.adam.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.adam.beta2 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

namespace {

std::vector<RealVector> desk_data(std::size_t count) {
  ClusterChannelConfig cfg;
  const auto ds = normalize_dataset(generate_dataset(cfg, count));
  return angular_real(ds.samples, AngularBasis::dft(cfg.nr, cfg.nt));
}

}  // namespace

TEST(Train, LossDecreasesOnDeskScaleData) {
  const auto data = desk_data(1000);
  VelocityNet net(256, {128, 128}, 16);
  Random rng(8);
  net.init_uniform(rng);
  TrainConfig cfg;
  cfg.epochs = 15;
  const auto r = train(net, data, cfg);
  ASSERT_EQ(r.epoch_losses.size(), 15u);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 5; ++i) {
    first += r.epoch_losses[i];
    last += r.epoch_losses[10 + i];
  }
  EXPECT_LT(last, first);
  EXPECT_EQ(r.steps, 15u * 8u);
}

TEST(Train, FixedSeedIsReproducible) {
  const auto data = desk_data(200);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  auto run = [&](std::size_t threads) {
    VelocityNet net(256, {32}, 8);
    Random rng(9);
    net.init_uniform(rng);
    TrainConfig c = cfg;
    c.threads = threads;
    train(net, data, c);
    return net.flat_parameters();
  };
  const auto a = run(1);
  const auto b = run(1);
  EXPECT_EQ(a, b);
  // Data-parallel gradients agree up to float reassociation.
  const auto c = run(3);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, double(std::abs(a[i] - c[i])));
  EXPECT_LT(worst, 1e-3);
}

TEST(Train, AugmentationAndCosineRun) {
  const auto data = desk_data(128);
  VelocityNet net(256, {32}, 8);
  Random rng(10);
  net.init_uniform(rng);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.final_lr_fraction = 0.1;
  cfg.augmentation.maps = channel_symmetry_maps(AngularBasis::dft(16, 8));
  cfg.augmentation.random_phase = true;
  const auto r = train(net, data, cfg);
  EXPECT_EQ(r.epoch_losses.size(), 2u);
  for (double l : r.epoch_losses) EXPECT_TRUE(std::isfinite(l));
}

TEST(Train, DivergenceIsReported) {
  std::vector<RealVector> data(4, RealVector(4, 1e4));
  VelocityNet net(4, {8}, 4);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(net, data, cfg), TrainingDivergenceError);
}

TEST(Train, InputValidation) {
  VelocityNet net(4, {8}, 4);
  TrainConfig cfg;
  EXPECT_THROW(train(net, {}, cfg), SizingError);
  std::vector<RealVector> wrong(3, RealVector(5));
  EXPECT_THROW(train(net, wrong, cfg), SizingError);
}

TEST(Sample, ZeroNetworkReturnsInitialDraw) {
  VelocityNet net(6, {8}, 4);
  Random a(11), b(11);
  const auto h = sample(net, 10, a);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(h[i], b.gaussian());
}

TEST(Sample, SingleStepIsOneEulerStep) {
  VelocityNet net(6, {8}, 4);
  Random init(12);
  net.init_uniform(init);
  Random a(13), b(13);
  const auto h = sample(net, 1, a);
  RealVector h0(6);
  for (auto& x : h0) x = b.gaussian();
  const auto v = net.forward(h0, 0.0);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(h[i], h0[i] + v[i], 1e-12);
}

TEST(Sample, ConstantFieldIsStepCountInvariant) {
  Random rng(14);
  const auto c = random_vector(5, rng);
  const auto net = constant_net(c);
  for (std::size_t steps : {1u, 3u, 17u, 100u}) {
    Random a(15), b(15);
    const auto h = sample(net, steps, a);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_NEAR(h[i], b.gaussian() + static_cast<float>(c[i]), 1e-6);
    }
  }
}

TEST(Sample, DeterministicAndValidated) {
  VelocityNet net(6, {8}, 4);
  Random init(16);
  net.init_uniform(init);
  Random a(17), b(17);
  EXPECT_EQ(sample(net, 20, a), sample(net, 20, b));
  EXPECT_THROW(sample(net, 0, a), ConfigError);
}
