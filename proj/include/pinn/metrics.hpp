#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "pinn/refsolve.hpp"

namespace pinn {

struct LossRecord {
  long epoch = 0;
  double total = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double pde = 0.0;

  bool operator==(const LossRecord&) const = default;
};

/// Per-epoch loss components of one run.
struct LossHistory {
  std::vector<LossRecord> records;
  std::string optimizer;
  std::uint64_t seed = 0;

  // Rejects non-increasing epochs and negative or non-finite components.
  void append(const LossRecord& r);
  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// CSV with header "epoch,total,ic,bc,pde".
std::string format_history_csv(const LossHistory& h);
LossHistory parse_history_csv(const std::string& text);
void save_history(const std::filesystem::path& path, const LossHistory& h);
LossHistory load_history(const std::filesystem::path& path);

/// sqrt(sum (pred - exact)^2 / sum exact^2) over all nodes.
double rel_l2(const SolutionField& pred, const SolutionField& exact);

/// |pred - exact| node by node.
SolutionField abs_error_field(const SolutionField& pred, const SolutionField& exact);

/// Mean |log L(e+1) - log L(e)| of the total loss over the trailing `window`
/// fraction of the records. Needs at least ten records in the window.
double loss_smoothness(const LossHistory& h, double window = 0.5);

struct Alignment {
  double cosine = 0.0;
  double magnitude_ratio = 0.0;  // |a| / |b|
};

Alignment gradient_alignment(const Eigen::Ref<const Eigen::VectorXd>& a,
                             const Eigen::Ref<const Eigen::VectorXd>& b);

enum class ConflictType { kNone, kTypeI, kTypeII };

// Diagnostic thresholds only.
struct ConflictThresholds {
  double aligned_cosine = 0.9;
  double imbalance_ratio = 10.0;
  double opposed_cosine = -0.5;
  double comparable_ratio = 3.0;
};

/// Type I: aligned with very different magnitudes. Type II: opposed with
/// comparable magnitudes.
ConflictType classify_conflict(const Alignment& a, const ConflictThresholds& th = {});
std::string to_string(ConflictType t);

}  // namespace pinn
