#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pinn/io.hpp"
#include "pinn/model.hpp"
#include "pinn/optim.hpp"
#include "pinn/pde.hpp"
#include "pinn/refsolve.hpp"

namespace pinn {

enum class OptimizerKind { kPdeAware, kAdam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kPdeAware;
  double eta = 1e-3;
  double beta1 = 0.99;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  GradientSource gradient_source = GradientSource::kTotalLoss;
  PerSampleForm per_sample_form = PerSampleForm::kSquaredResidual;
  bool bias_correction = true;  // Adam only

  // Published defaults for each optimizer.
  static OptimizerConfig defaults(OptimizerKind kind);
  PdeAwareHyper pde_aware_hyper() const { return {eta, beta1, beta2, epsilon}; }
  AdamHyper adam_hyper() const { return {eta, beta1, beta2, epsilon}; }
};

struct SamplingConfig {
  int n_int = 10000;
  int n_ic = 1000;
  int n_bc = 1000;
  std::uint64_t seed = 0;
};

struct TrainingConfig {
  int batch_size = 1024;
  long epochs = 10000;
};

struct EvaluationConfig {
  int nx = 401;  // nodes per axis, i.e. 400 cells
  int nt = 401;
  int ref_nx = 0;  // solver grid; 0 picks the per-equation default
  int ref_nt = 0;
  std::string cache_dir = "ref_cache";
};

struct GridSearchConfig {
  long epochs = 0;  // 0 keeps training.epochs
};

/// Everything a run depends on. Serializes to INI sections
/// [pde] [model] [optimizer] [sampling] [training] [evaluation] [grid_search] [output].
struct ExperimentConfig {
  std::string preset = "paper";
  PdeSpec pde = PdeSpec::burgers();
  ModelSpec model;
  OptimizerConfig optimizer;
  SamplingConfig sampling;
  TrainingConfig training;
  EvaluationConfig evaluation;
  GridSearchConfig grid_search;
  std::string output_dir = "runs";

  // Named starting points: paper (full scale), desk, smoke.
  static ExperimentConfig preset_config(const std::string& name);

  void validate() const;  // throws ConfigError
  Grid evaluation_grid() const;
  Grid reference_grid() const;

  std::string to_ini() const;
  // Keys override `base`; unknown sections or keys are errors.
  static ExperimentConfig from_ini(const std::string& text, ExperimentConfig base);
  static ExperimentConfig from_ini(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path, ExperimentConfig base);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Flat "section.key" view of to_ini, for output metadata.
  io::Metadata as_metadata() const;
};

}  // namespace pinn
