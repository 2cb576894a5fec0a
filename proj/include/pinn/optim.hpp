#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "pinn/autodiff.hpp"
#include "pinn/model.hpp"
#include "pinn/pde.hpp"

namespace pinn {

struct AdamHyper {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;  // second raw moment
  long step_count = 0;
  AdamHyper hyper;
  bool bias_correction = true;

  static AdamState zeros(Eigen::Index n, AdamHyper hyper = {}, bool bias_correction = true);
};

/// One Adam update. Advances `state` and returns the parameter delta.
Eigen::VectorXd adam_step(AdamState& state, const Eigen::Ref<const Eigen::VectorXd>& grad);

enum class GradientSource { kPdeOnly, kTotalLoss };
enum class PerSampleForm { kSquaredResidual, kRawResidual };

std::string to_string(GradientSource s);
std::string to_string(PerSampleForm f);
GradientSource parse_gradient_source(const std::string& text);
PerSampleForm parse_per_sample_form(const std::string& text);

struct PdeAwareHyper {
  double eta = 1e-3;
  double beta1 = 0.99;
  double beta2 = 0.99;
  double epsilon = 1e-8;
};

struct PdeAwareState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step_count = 0;
  PdeAwareHyper hyper;
  GradientSource gradient_source = GradientSource::kTotalLoss;
  PerSampleForm per_sample_form = PerSampleForm::kSquaredResidual;

  static PdeAwareState zeros(Eigen::Index n, PdeAwareHyper hyper = {},
                             GradientSource source = GradientSource::kTotalLoss,
                             PerSampleForm form = PerSampleForm::kSquaredResidual);
};

/// Per-sample PDE gradients g_i (one row each) with their batch statistics.
struct PerSampleGradients {
  Eigen::MatrixXd grads;  // B x parameter_count; empty when only moments were kept
  Eigen::VectorXd mean;         // (1/B) sum g_i
  Eigen::VectorXd mean_square;  // (1/B) sum g_i^2, element-wise
  std::optional<Eigen::VectorXd> aux_mean;  // IC + BC loss gradient
  Eigen::Index batch = 0;

  static PerSampleGradients from_rows(Eigen::MatrixXd grads,
                                      std::optional<Eigen::VectorXd> aux_mean = std::nullopt);
  static PerSampleGradients from_moments(Eigen::Index batch, const SampleMoments& moments,
                                         std::optional<Eigen::VectorXd> aux_mean = std::nullopt);
};

/// PDE-aware update: first moment from the batch-mean gradient (plus the
/// IC/BC gradient when the source is the total loss), second moment from the
/// mean of per-sample squared PDE gradients, no bias correction.
Eigen::VectorXd pde_aware_step(PdeAwareState& state, const PerSampleGradients& psg);

struct BatchLosses {
  double pde_sum = 0.0;  // sum of squared interior residuals over the batch
  double ic = 0.0;
  double bc = 0.0;
};

/// g_i for each interior point of the batch; aux_mean is the IC+BC loss
/// gradient over all of their points when the source is the total loss.
PerSampleGradients assemble_per_sample_gradients(const PdeSpec& spec,
                                                 const ParameterVector& params,
                                                 const std::vector<CollocationPoint>& batch,
                                                 const CollocationSet& colloc,
                                                 GradientSource source, PerSampleForm form,
                                                 BatchLosses* losses = nullptr,
                                                 bool keep_samples = true);

/// Gradient of mean_batch(R^2) + L_ic + L_bc, the Adam training signal.
Eigen::VectorXd batch_loss_gradient(const PdeSpec& spec, const ParameterVector& params,
                                    const std::vector<CollocationPoint>& batch,
                                    const CollocationSet& colloc, BatchLosses* losses = nullptr);

}  // namespace pinn
