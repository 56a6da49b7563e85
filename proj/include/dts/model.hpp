#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dts/data.hpp"
#include "dts/metrics.hpp"
#include "dts/numerics.hpp"

namespace dts {

struct DenseLayer {
  Matrix weights;  // fan_in x fan_out
  RowVector bias;  // 1 x fan_out
};

/// Gradient buffers with the same shapes as an Mlp's parameters.
struct ParameterGrads {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
};

/// Fully connected network: ReLU on hidden layers, identity output (logits).
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized parameters for the given layer sizes (input, hidden..., classes).
  explicit Mlp(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_dim() const { return layer_sizes_.front(); }
  int num_classes() const { return layer_sizes_.back(); }
  std::size_t num_layers() const { return layers_.size(); }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Logits for `inputs`, caching intermediate activations for backward().
  Matrix forward(const Matrix& inputs);
  /// Logits without touching the cache.
  Matrix predict(const Matrix& inputs) const;
  /// Backpropagates d(loss)/d(logits) through the cached forward pass.
  /// Throws std::logic_error if no forward pass is cached.
  ParameterGrads backward(const Matrix& upstream_logit_grad) const;
  void clear_cache() { cache_.reset(); }

  ParameterGrads zero_grads() const;
  Eigen::Index num_parameters() const;
  /// All parameters, layer by layer, weights (row-major) then biases.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  static Eigen::VectorXd flatten(const ParameterGrads& grads);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  struct Cache {
    std::vector<Matrix> inputs;          // input to each layer
    std::vector<Matrix> preactivations;  // hidden layers only
  };

  void check_input(const Matrix& inputs) const;

  std::vector<int> layer_sizes_;
  std::vector<DenseLayer> layers_;
  std::optional<Cache> cache_;
};

/// He-normal weights (std = sqrt(2 / fan_in)), zero biases; deterministic in `seed`.
Mlp init_model(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// theta <- theta - lr * grad
void sgd_step(Mlp& model, const ParameterGrads& grads, double lr);

struct SgdConfig {
  double learning_rate = 0.1;
  std::vector<int> milestones;
  double decay_factor = 0.1;
  int epochs = 100;
  int batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
  /// learning_rate * decay_factor^(number of milestones <= epoch)
  double lr_at_epoch(int epoch) const;
  int num_batches(Eigen::Index rows) const;

  friend bool operator==(const SgdConfig&, const SgdConfig&) = default;
};

/// Row order for one epoch; a pure function of (seed, epoch).
std::vector<Eigen::Index> epoch_order(Eigen::Index rows, std::uint64_t seed, int epoch);

struct TrainResult {
  Mlp model;
  std::vector<MetricsRecord> metrics;
};

/// Shuffled mini-batch SGD on cross-entropy with milestone learning-rate decay.
TrainResult train_supervised(Mlp model, const Dataset& data, const SgdConfig& config);

/// Binary checkpoint: "DTSM", u32 version, u32 layer count, u32 sizes, then
/// little-endian f64 parameters layer by layer (weights row-major, then biases).
std::string serialize_checkpoint(const Mlp& model);
Mlp deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const Mlp& model, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

/// Thrown for missing, truncated or foreign checkpoint files.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dts
