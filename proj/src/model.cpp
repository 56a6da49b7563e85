#include "dts/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dts/random.hpp"

namespace dts {

Mlp::Mlp(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
  for (const int s : layer_sizes_) {
    if (s < 1) throw std::invalid_argument("layer sizes must be >= 1");
  }
  layers_.reserve(layer_sizes_.size() - 1);
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    layers_.push_back({Matrix::Zero(layer_sizes_[l], layer_sizes_[l + 1]), RowVector::Zero(layer_sizes_[l + 1])});
  }
}

void Mlp::check_input(const Matrix& inputs) const {
  if (layers_.empty()) throw std::logic_error("model has no layers");
  if (inputs.cols() != input_dim()) {
    throw std::invalid_argument("input width " + std::to_string(inputs.cols()) + " does not match model input " +
                                std::to_string(input_dim()));
  }
}

Matrix Mlp::forward(const Matrix& inputs) {
  check_input(inputs);
  Cache cache;
  cache.inputs.reserve(layers_.size());
  Matrix act = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = act * layers_[l].weights;
    z.rowwise() += layers_[l].bias;
    cache.inputs.push_back(std::move(act));
    if (l + 1 == layers_.size()) {
      cache_ = std::move(cache);
      return z;
    }
    act = z.cwiseMax(0.0);
    cache.preactivations.push_back(std::move(z));
  }
  throw std::logic_error("unreachable");
}

Matrix Mlp::predict(const Matrix& inputs) const {
  check_input(inputs);
  Matrix act = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = act * layers_[l].weights;
    z.rowwise() += layers_[l].bias;
    if (l + 1 == layers_.size()) return z;
    act = z.cwiseMax(0.0);
  }
  throw std::logic_error("unreachable");
}

ParameterGrads Mlp::backward(const Matrix& upstream_logit_grad) const {
  if (!cache_) throw std::logic_error("backward() called without a cached forward pass");
  const Eigen::Index batch = cache_->inputs.front().rows();
  if (upstream_logit_grad.rows() != batch || upstream_logit_grad.cols() != num_classes()) {
    throw std::invalid_argument("upstream gradient shape does not match the cached forward pass");
  }
  ParameterGrads grads;
  grads.weights.resize(layers_.size());
  grads.biases.resize(layers_.size());

  Matrix delta = upstream_logit_grad;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads.weights[l].noalias() = cache_->inputs[l].transpose() * delta;
    grads.biases[l] = delta.colwise().sum();
    if (l == 0) break;
    Matrix back = delta * layers_[l].weights.transpose();
    delta = (back.array() * (cache_->preactivations[l - 1].array() > 0.0).cast<double>()).matrix();
  }
  return grads;
}

ParameterGrads Mlp::zero_grads() const {
  ParameterGrads grads;
  for (const auto& layer : layers_) {
    grads.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    grads.biases.push_back(RowVector::Zero(layer.bias.size()));
  }
  return grads;
}

Eigen::Index Mlp::num_parameters() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd flat(num_parameters());
  Eigen::Index at = 0;
  for (const auto& layer : layers_) {
    flat.segment(at, layer.weights.size()) = layer.weights.reshaped<Eigen::RowMajor>();
    at += layer.weights.size();
    flat.segment(at, layer.bias.size()) = layer.bias.transpose();
    at += layer.bias.size();
  }
  return flat;
}

void Mlp::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != num_parameters()) throw std::invalid_argument("parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (auto& layer : layers_) {
    layer.weights = flat.segment(at, layer.weights.size()).reshaped<Eigen::RowMajor>(layer.weights.rows(),
                                                                                     layer.weights.cols());
    at += layer.weights.size();
    layer.bias = flat.segment(at, layer.bias.size()).transpose();
    at += layer.bias.size();
  }
  cache_.reset();
}

Eigen::VectorXd Mlp::flatten(const ParameterGrads& grads) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) n += grads.weights[l].size() + grads.biases[l].size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    flat.segment(at, grads.weights[l].size()) = grads.weights[l].reshaped<Eigen::RowMajor>();
    at += grads.weights[l].size();
    flat.segment(at, grads.biases[l].size()) = grads.biases[l].transpose();
    at += grads.biases[l].size();
  }
  return flat;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.layer_sizes_ != b.layer_sizes_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weights != b.layers_[l].weights || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

Mlp init_model(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  Mlp model(layer_sizes);
  Rng rng(mix_seed(seed, seed_tag::init));
  for (auto& layer : model.layers()) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(layer.weights.rows())));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = normal(rng);
  }
  return model;
}

void sgd_step(Mlp& model, const ParameterGrads& grads, double lr) {
  auto& layers = model.layers();
  if (grads.weights.size() != layers.size() || grads.biases.size() != layers.size()) {
    throw std::invalid_argument("gradient layer count does not match the model");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.weights[l].rows() != layers[l].weights.rows() || grads.weights[l].cols() != layers[l].weights.cols() ||
        grads.biases[l].size() != layers[l].bias.size()) {
      throw std::invalid_argument("gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weights -= lr * grads.weights[l];
    layers[l].bias -= lr * grads.biases[l];
  }
}

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw std::invalid_argument("decay_factor must lie in (0, 1]");
  if (!std::is_sorted(milestones.begin(), milestones.end())) throw std::invalid_argument("milestones must be sorted");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

double SgdConfig::lr_at_epoch(int epoch) const {
  double lr = learning_rate;
  for (const int m : milestones) {
    if (m <= epoch) lr *= decay_factor;
  }
  return lr;
}

int SgdConfig::num_batches(Eigen::Index rows) const {
  return static_cast<int>((rows + batch_size - 1) / batch_size);
}

std::vector<Eigen::Index> epoch_order(Eigen::Index rows, std::uint64_t seed, int epoch) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(mix_seed(mix_seed(seed, seed_tag::shuffle), static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

TrainResult train_supervised(Mlp model, const Dataset& data, const SgdConfig& config) {
  config.validate();
  if (data.dim() != model.input_dim() || data.num_classes() != model.num_classes()) {
    throw std::invalid_argument("dataset shape does not match the model");
  }
  TrainResult result;
  const int batches = config.num_batches(data.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.lr_at_epoch(epoch);
    const auto order = epoch_order(data.size(), config.seed, epoch);
    const std::span<const Eigen::Index> all(order);
    double loss_sum = 0.0;
    for (int b = 0; b < batches; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * static_cast<std::size_t>(config.batch_size);
      const std::size_t count = std::min<std::size_t>(config.batch_size, all.size() - begin);
      const Dataset batch = data.subset(all.subspan(begin, count));
      const Matrix logits = model.forward(batch.features);
      loss_sum += cross_entropy(logits, batch.labels) * static_cast<double>(count);
      sgd_step(model, model.backward(cross_entropy_grad(logits, batch.labels)), lr);
    }
    model.clear_cache();
    const double mean_ce = loss_sum / static_cast<double>(data.size());
    MetricsRecord rec;
    rec.epoch = epoch;
    rec.batch = batches;
    rec.temperature = 1.0;
    rec.student_ce = mean_ce;
    rec.total_loss = mean_ce;
    rec.lr = lr;
    result.metrics.push_back(rec);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace dts
