#include "nsfm/velocity_net.hpp"

#include <cmath>

namespace nsfm {

namespace {

constexpr double kMaxFrequency = 1000.0;

float silu(float x) { return x / (1.0f + std::exp(-x)); }

float silu_grad(float x) {
  const float s = 1.0f / (1.0f + std::exp(-x));
  return s * (1.0f + x * (1.0f - s));
}

double frequency(std::size_t j, std::size_t half) {
  if (half <= 1) {
    return 1.0;
  }
  return std::pow(kMaxFrequency,
                  static_cast<double>(j) / static_cast<double>(half - 1));
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("time " + std::to_string(t) + " outside [0, 1]");
  }
}

}  // namespace

std::vector<double> time_embed(double t, std::size_t dim) {
  check_time(t);
  if (dim == 0 || dim % 2 != 0) {
    throw ConfigError("time embedding dimension must be even and positive");
  }
  const std::size_t half = dim / 2;
  std::vector<double> out(dim);
  for (std::size_t j = 0; j < half; ++j) {
    const double w = frequency(j, half);
    out[j] = std::sin(w * t);
    out[j + half] = std::cos(w * t);
  }
  return out;
}

void time_embed_into(double t, std::span<float> out) {
  check_time(t);
  const std::size_t half = out.size() / 2;
  for (std::size_t j = 0; j < half; ++j) {
    const double w = frequency(j, half);
    out[j] = static_cast<float>(std::sin(w * t));
    out[j + half] = static_cast<float>(std::cos(w * t));
  }
}

void NetGradients::set_zero() {
  for (auto& w : weight) {
    w.setZero();
  }
  for (auto& b : bias) {
    b.setZero();
  }
}

NetGradients& NetGradients::operator+=(const NetGradients& other) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += other.weight[l];
    bias[l] += other.bias[l];
  }
  return *this;
}

NetGradients& NetGradients::operator*=(float s) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] *= s;
    bias[l] *= s;
  }
  return *this;
}

std::vector<float> NetGradients::flatten() const {
  std::vector<float> flat;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    flat.insert(flat.end(), weight[l].data(), weight[l].data() + weight[l].size());
    flat.insert(flat.end(), bias[l].data(), bias[l].data() + bias[l].size());
  }
  return flat;
}

VelocityNet::VelocityNet(std::size_t input_dim,
                         std::vector<std::size_t> hidden_dims,
                         std::size_t time_embed_dim)
    : input_dim_(input_dim), time_embed_dim_(time_embed_dim) {
  if (input_dim == 0) {
    throw SizingError("velocity net: input dimension must be positive");
  }
  if (time_embed_dim == 0 || time_embed_dim % 2 != 0) {
    throw ConfigError("velocity net: time embedding dimension must be even");
  }
  std::size_t in = input_dim + time_embed_dim;
  hidden_dims.push_back(input_dim);
  for (std::size_t out : hidden_dims) {
    if (out == 0) {
      throw SizingError("velocity net: zero-width layer");
    }
    DenseLayer layer;
    layer.weight = MatrixXfRow::Zero(static_cast<Eigen::Index>(out),
                                     static_cast<Eigen::Index>(in));
    layer.bias = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(out));
    layers_.push_back(std::move(layer));
    in = out;
  }
}

VelocityNet::VelocityNet(std::vector<DenseLayer> layers,
                         std::size_t time_embed_dim)
    : time_embed_dim_(time_embed_dim), layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw SizingError("velocity net: no layers");
  }
  if (time_embed_dim == 0 || time_embed_dim % 2 != 0) {
    throw ConfigError("velocity net: time embedding dimension must be even");
  }
  input_dim_ = layers_.back().out_dim();
  if (layers_.front().in_dim() != input_dim_ + time_embed_dim_) {
    throw SizingError("velocity net: first layer width != N + embedding");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.rows()) {
      throw SizingError("velocity net: bias length mismatch");
    }
    if (l > 0 && layers_[l].in_dim() != layers_[l - 1].out_dim()) {
      throw SizingError("velocity net: layer chain mismatch at layer " +
                        std::to_string(l));
    }
  }
}

void VelocityNet::init_uniform(Random& rng) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = static_cast<float>(rng.uniform(-bound, bound));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      layer.bias[i] = static_cast<float>(rng.uniform(-bound, bound));
    }
  }
}

void VelocityNet::zero_output_layer() {
  layers_.back().weight.setZero();
  layers_.back().bias.setZero();
}

std::vector<std::size_t> VelocityNet::hidden_dims() const {
  std::vector<std::size_t> dims;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    dims.push_back(layers_[l].out_dim());
  }
  return dims;
}

std::size_t VelocityNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

void VelocityNet::locate(std::size_t index, std::size_t& layer,
                         std::size_t& offset, bool& is_bias) const {
  for (layer = 0; layer < layers_.size(); ++layer) {
    const auto w = static_cast<std::size_t>(layers_[layer].weight.size());
    const auto b = static_cast<std::size_t>(layers_[layer].bias.size());
    if (index < w) {
      offset = index;
      is_bias = false;
      return;
    }
    index -= w;
    if (index < b) {
      offset = index;
      is_bias = true;
      return;
    }
    index -= b;
  }
  throw SizingError("velocity net: parameter index out of range");
}

float VelocityNet::parameter(std::size_t index) const {
  std::size_t layer = 0;
  std::size_t offset = 0;
  bool is_bias = false;
  locate(index, layer, offset, is_bias);
  const auto& l = layers_[layer];
  return is_bias ? l.bias[static_cast<Eigen::Index>(offset)]
                 : l.weight.data()[offset];
}

void VelocityNet::set_parameter(std::size_t index, float value) {
  std::size_t layer = 0;
  std::size_t offset = 0;
  bool is_bias = false;
  locate(index, layer, offset, is_bias);
  auto& l = layers_[layer];
  if (is_bias) {
    l.bias[static_cast<Eigen::Index>(offset)] = value;
  } else {
    l.weight.data()[offset] = value;
  }
}

std::vector<float> VelocityNet::flat_parameters() const {
  std::vector<float> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

ForwardWorkspace VelocityNet::make_workspace() const {
  ForwardWorkspace ws;
  ws.input = Eigen::VectorXf::Zero(
      static_cast<Eigen::Index>(input_dim_ + time_embed_dim_));
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    ws.hidden.emplace_back(Eigen::VectorXf::Zero(layers_[l].weight.rows()));
  }
  ws.output = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(input_dim_));
  return ws;
}

void VelocityNet::forward(std::span<const double> h, double t,
                          std::span<double> out, ForwardWorkspace& ws) const {
  if (h.size() != input_dim_ || out.size() != input_dim_) {
    throw SizingError("velocity net: state has length " +
                      std::to_string(h.size()) + ", expected " +
                      std::to_string(input_dim_));
  }
  if (ws.input.size() != static_cast<Eigen::Index>(input_dim_ + time_embed_dim_) ||
      ws.hidden.size() + 1 != layers_.size()) {
    ws = make_workspace();
  }
  for (std::size_t i = 0; i < input_dim_; ++i) {
    ws.input[static_cast<Eigen::Index>(i)] = static_cast<float>(h[i]);
  }
  time_embed_into(t, std::span<float>(ws.input.data() + input_dim_,
                                      time_embed_dim_));
  const Eigen::VectorXf* x = &ws.input;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Eigen::VectorXf& z = ws.hidden[l];
    z.noalias() = layers_[l].weight * *x;
    z += layers_[l].bias;
    z = z.unaryExpr(&silu);
    x = &z;
  }
  ws.output.noalias() = layers_.back().weight * *x;
  ws.output += layers_.back().bias;
  for (std::size_t i = 0; i < input_dim_; ++i) {
    out[i] = static_cast<double>(ws.output[static_cast<Eigen::Index>(i)]);
  }
}

RealVector VelocityNet::forward(std::span<const double> h, double t) const {
  ForwardWorkspace ws = make_workspace();
  RealVector out(input_dim_);
  forward(h, t, out, ws);
  return out;
}

Eigen::MatrixXf VelocityNet::forward_batch(const Eigen::MatrixXf& states,
                                           std::span<const float> times,
                                           BatchCache* cache) const {
  const Eigen::Index batch = states.cols();
  if (states.rows() != static_cast<Eigen::Index>(input_dim_) ||
      times.size() != static_cast<std::size_t>(batch)) {
    throw SizingError("velocity net: batch shape mismatch");
  }
  Eigen::MatrixXf input(static_cast<Eigen::Index>(input_dim_ + time_embed_dim_),
                        batch);
  input.topRows(static_cast<Eigen::Index>(input_dim_)) = states;
  for (Eigen::Index b = 0; b < batch; ++b) {
    time_embed_into(times[static_cast<std::size_t>(b)],
                    std::span<float>(input.col(b).data() + input_dim_,
                                     time_embed_dim_));
  }
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  Eigen::MatrixXf x = std::move(input);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Eigen::MatrixXf z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    Eigen::MatrixXf a = z.unaryExpr(&silu);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preactivations.push_back(std::move(z));
    }
    x = std::move(a);
  }
  Eigen::MatrixXf out = layers_.back().weight * x;
  out.colwise() += layers_.back().bias;
  if (cache) {
    cache->inputs.push_back(std::move(x));
  }
  return out;
}

void VelocityNet::backward_batch(const BatchCache& cache,
                                 const Eigen::MatrixXf& d_output,
                                 NetGradients& grads) const {
  if (cache.inputs.size() != layers_.size()) {
    throw SizingError("velocity net: backward without a matching forward");
  }
  Eigen::MatrixXf delta = d_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads.weight[l].noalias() += delta * cache.inputs[l].transpose();
    grads.bias[l] += delta.rowwise().sum();
    if (l == 0) {
      break;
    }
    Eigen::MatrixXf upstream = layers_[l].weight.transpose() * delta;
    delta = upstream.cwiseProduct(cache.preactivations[l - 1].unaryExpr(&silu_grad));
  }
}

NetGradients VelocityNet::zero_gradients() const {
  NetGradients g;
  for (const auto& l : layers_) {
    g.weight.emplace_back(MatrixXfRow::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.emplace_back(Eigen::VectorXf::Zero(l.bias.size()));
  }
  return g;
}

}  // namespace nsfm
