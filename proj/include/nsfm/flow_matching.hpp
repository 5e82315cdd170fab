#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nsfm/linalg.hpp"
#include "nsfm/rng.hpp"
#include "nsfm/velocity_net.hpp"

namespace nsfm {

// (1 - t) h0 + t h1.
RealVector interpolate(std::span<const double> h0, std::span<const double> h1,
                       double t);

struct FlowSample {
  RealVector h0;  // reference (Gaussian) draw
  RealVector h1;  // data draw
  double t = 0.0;
};

struct LossAndGrad {
  double loss = 0.0;  // mean over the batch of ||v - (h1 - h0)||^2
  NetGradients grad;
};

// Flow-matching objective on the linear interpolation path and its gradient
// by reverse-mode differentiation. Throws NumericError carrying the batch
// position of the first non-finite per-sample loss.
LossAndGrad fm_loss_and_grad(const VelocityNet& net,
                             std::span<const FlowSample> batch);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const VelocityNet& net, AdamConfig config);

  void step(VelocityNet& net, const NetGradients& grads);
  std::size_t steps_taken() const { return t_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  AdamConfig config_;
  NetGradients m_;
  NetGradients v_;
  std::size_t t_ = 0;
};

// Distribution-preserving maps applied to each training draw of h1; empty
// means none. Each entry is an N x N matrix acting on realified vectors.
struct Augmentation {
  std::vector<RealMatrix> maps;
  bool random_phase = false;

  bool empty() const { return maps.empty() && !random_phase; }
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 128;
  std::size_t epochs = 60;
  std::uint64_t seed = 1;
  // Worker threads per batch. Gradients are reduced in a fixed tree order,
  // so results depend on the thread count only through float rounding.
  std::size_t threads = 1;
  // Cosine decay of the learning rate to this fraction over the run; 1 keeps
  // it constant.
  double final_lr_fraction = 1.0;
  Augmentation augmentation;

  void validate() const;
};

struct TrainResult {
  std::vector<double> epoch_losses;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Trains on realified angular-domain channel vectors. Each step draws a batch
// of data vectors (shuffled per epoch), Gaussian references and per-sample
// t ~ U[0, 1]. Throws TrainingDivergenceError when a batch loss exceeds 1e6
// or is not finite.
TrainResult train(VelocityNet& net, std::span<const RealVector> data,
                  const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Unconditional generation: h0 ~ N(0, I), `steps` uniform Euler steps of
// dh/dt = v(h, t) from t = 0 to 1.
RealVector sample(const VelocityNet& net, std::size_t steps, Random& rng);

}  // namespace nsfm
