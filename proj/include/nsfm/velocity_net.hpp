#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nsfm/linalg.hpp"
#include "nsfm/rng.hpp"

namespace nsfm {

using MatrixXfRow =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sinusoidal features [sin(w_j t)..., cos(w_j t)...] with dim/2 frequencies
// spaced geometrically from 1 to 1000. Requires t in [0, 1] and even dim.
std::vector<double> time_embed(double t, std::size_t dim);
void time_embed_into(double t, std::span<float> out);

struct DenseLayer {
  MatrixXfRow weight;  // out x in
  Eigen::VectorXf bias;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

// Same shapes as the network's layers.
struct NetGradients {
  std::vector<MatrixXfRow> weight;
  std::vector<Eigen::VectorXf> bias;

  void set_zero();
  NetGradients& operator+=(const NetGradients& other);
  NetGradients& operator*=(float s);
  std::vector<float> flatten() const;
};

// Activations kept by forward_batch for the backward pass.
struct BatchCache {
  std::vector<Eigen::MatrixXf> inputs;       // input of each layer
  std::vector<Eigen::MatrixXf> preactivations;  // hidden layers only
};

// Scratch buffers for single-vector inference; reused across steps so the
// estimator loop does not allocate.
struct ForwardWorkspace {
  Eigen::VectorXf input;
  std::vector<Eigen::VectorXf> hidden;
  Eigen::VectorXf output;
};

// Time-conditioned MLP velocity field v(h, t).
//
// Input is [h; time_embed(t)] (width N + E), hidden layers use SiLU, the
// output layer is affine with width N. Parameters are single precision;
// the double-precision interface converts at the boundary.
class VelocityNet {
 public:
  VelocityNet() = default;
  VelocityNet(std::size_t input_dim, std::vector<std::size_t> hidden_dims,
              std::size_t time_embed_dim);
  // Validates the chain of shapes; used by the checkpoint loader.
  VelocityNet(std::vector<DenseLayer> layers, std::size_t time_embed_dim);

  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(Random& rng);
  void zero_output_layer();

  std::size_t input_dim() const { return input_dim_; }
  std::size_t time_embed_dim() const { return time_embed_dim_; }
  std::vector<std::size_t> hidden_dims() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  // Flat view in checkpoint order: per layer, weights row-major, then bias.
  float parameter(std::size_t index) const;
  void set_parameter(std::size_t index, float value);
  std::vector<float> flat_parameters() const;

  RealVector forward(std::span<const double> h, double t) const;
  void forward(std::span<const double> h, double t, std::span<double> out,
               ForwardWorkspace& ws) const;
  ForwardWorkspace make_workspace() const;

  // Columns are samples. states: N x B; returns N x B.
  Eigen::MatrixXf forward_batch(const Eigen::MatrixXf& states,
                                std::span<const float> times,
                                BatchCache* cache = nullptr) const;
  // Accumulates dLoss/dParameters into grads given dLoss/dOutput.
  void backward_batch(const BatchCache& cache, const Eigen::MatrixXf& d_output,
                      NetGradients& grads) const;

  NetGradients zero_gradients() const;

 private:
  void locate(std::size_t index, std::size_t& layer, std::size_t& offset,
              bool& is_bias) const;

  std::size_t input_dim_ = 0;
  std::size_t time_embed_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

}  // namespace nsfm
