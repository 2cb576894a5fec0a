#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pinn/io.hpp"

namespace pinn {

using RowMajorMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected tanh network (x, t) -> u. Hidden layers use tanh, the
/// output layer is affine.
struct ModelSpec {
  std::vector<int> layer_sizes{2, 64, 64, 64, 1};
  std::string activation = "tanh";

  // Throws ConfigError. A spec with no hidden layer is accepted and is a
  // plain affine map of (x, t).
  void validate() const;

  int num_affine_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  Eigen::Index parameter_count() const;

  std::string layer_string() const;  // "2,64,64,64,1"
  static ModelSpec parse_layers(const std::string& text);

  bool operator==(const ModelSpec&) const = default;
};

// Offsets of one affine layer inside the flat parameter vector. Weights are
// stored row-major (n_out x n_in), followed by the n_out biases.
struct LayerLayout {
  Eigen::Index weight_offset;
  Eigen::Index bias_offset;
  int n_in;
  int n_out;
};

std::vector<LayerLayout> layer_layout(const ModelSpec& spec);

/// Flat view of all weights and biases in canonical order.
class ParameterVector {
 public:
  ParameterVector(ModelSpec spec, Eigen::VectorXd entries);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerLayout>& layout() const { return layout_; }
  Eigen::Index size() const { return entries_.size(); }

  const Eigen::VectorXd& entries() const { return entries_; }
  // Mutable access keeps the length fixed.
  Eigen::Map<Eigen::VectorXd> mutable_entries() {
    return {entries_.data(), entries_.size()};
  }

  Eigen::Map<const RowMajorMatrixXd> weights(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  bool operator==(const ParameterVector& o) const {
    return spec_ == o.spec_ && entries_ == o.entries_;
  }

 private:
  ModelSpec spec_;
  std::vector<LayerLayout> layout_;
  Eigen::VectorXd entries_;
};

/// Glorot-uniform weights, zero biases; deterministic per seed.
ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed);

double glorot_bound(int n_in, int n_out);

/// u_theta(x, t) for one point.
double forward(const ParameterVector& params, double x, double t);

// Checkpoint file: "PINNCKPT v1", key=value metadata, then one parameter per line.
struct Checkpoint {
  ParameterVector params;
  std::uint64_t seed = 0;
  io::Metadata metadata;  // everything besides the model spec and seed
};

std::string format_checkpoint(const ParameterVector& params, std::uint64_t seed,
                              const io::Metadata& extra = {});
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const ParameterVector& params,
                     std::uint64_t seed, const io::Metadata& extra = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pinn
