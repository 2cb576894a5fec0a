#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pinn/config.hpp"
#include "pinn/metrics.hpp"
#include "pinn/model.hpp"
#include "pinn/pde.hpp"
#include "pinn/refsolve.hpp"

namespace pinn {

/// Outcome of the optimization loop alone, nothing written to disk.
struct TrainingResult {
  ParameterVector params;
  LossHistory history;
  bool diverged = false;
  std::string divergence_message;
  double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(const LossRecord&)>;

/// Reshuffles the interior points every epoch into ceil(N_int / B) batches;
/// IC and BC terms use all of their points at every step. History rows hold
/// the mean squared residual over the interior points visited during the
/// epoch and the step-averaged IC and BC losses.
TrainingResult run_training(const ExperimentConfig& config, const EpochCallback& on_epoch = {});

/// Files and numbers describing one finished (or diverged) run.
struct RunRecord {
  ExperimentConfig config;
  std::string status = "ok";  // ok | diverged
  long epochs_completed = 0;
  LossComponents final_losses;
  std::optional<double> rel_l2;
  double wall_seconds = 0.0;
  std::filesystem::path dir;
  std::filesystem::path history_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path field_path;
  std::optional<std::filesystem::path> error_field_path;
};

struct TrainOptions {
  bool evaluate = true;  // compare against the cached reference at the end
  EpochCallback on_epoch;
};

// <output_dir>/<pde>-<optimizer>-seed<N>
std::filesystem::path run_directory(const ExperimentConfig& config);

/// Trains and writes history.csv, checkpoint.ckpt, field.pinnfield,
/// abs_error.pinnfield and record.txt under run_directory(config). On
/// divergence the partial history and the record are written before a
/// DivergenceError is thrown.
RunRecord train(const ExperimentConfig& config, const TrainOptions& options = {});

void save_run_record(const RunRecord& record);
// Reads <dir>/record.txt; the config is rebuilt from its echo.
RunRecord load_run_record(const std::filesystem::path& dir);

struct GridCell {
  double eta = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double validation_loss = 0.0;  // NaN when the run diverged
  bool diverged = false;
};

struct GridSearchResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  std::filesystem::path csv_path;
};

/// Trains every (eta, beta1, beta2) combination with grid_search.epochs
/// epochs and scores each on a held-out collocation set drawn with seed + 1.
/// Divergent cells are recorded, not fatal.
GridSearchResult grid_search(const ExperimentConfig& config,
                             const std::vector<double>& etas = {1e-3, 1e-4},
                             const std::vector<double>& beta1s = {0.9, 0.99},
                             const std::vector<double>& beta2s = {0.99, 0.999});

/// Path of the cached reference for this config; solves and caches on a miss.
/// Before caching, the solve must agree with a half-resolution solve to
/// Rel-L2 < 1e-2, otherwise a VerificationError is thrown.
std::filesystem::path solve_reference(const ExperimentConfig& config);

// Cache key over equation, scheme, solver grid and evaluation grid.
std::string reference_key(const ExperimentConfig& config);

/// Loads a cached reference and re-checks its stored content hash.
SolutionField load_reference(const std::filesystem::path& path);

struct EvaluationResult {
  double rel_l2 = 0.0;
  double max_abs_error = 0.0;
  std::filesystem::path error_field_path;
};

/// Compares a checkpoint against the reference on the evaluation grid and
/// writes the absolute-error field to `out_dir`. The checkpoint must record
/// the same equation hash as the config.
EvaluationResult evaluate(const std::filesystem::path& checkpoint,
                          const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct ComparisonRow {
  std::string run;
  std::string optimizer;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  std::optional<double> rel_l2;
  double smoothness = 0.0;
  double wall_seconds = 0.0;
};

/// One row per run directory; all runs must share an equation.
std::vector<ComparisonRow> compare(const std::vector<std::filesystem::path>& run_dirs);
std::string format_comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace pinn
