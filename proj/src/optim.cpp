#include "pinn/optim.hpp"

#include <cmath>

#include "pinn/autodiff.hpp"
#include "pinn/error.hpp"

namespace pinn {

AdamState AdamState::zeros(Eigen::Index n, AdamHyper hyper, bool bias_correction) {
  return AdamState{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0, hyper, bias_correction};
}

Eigen::VectorXd adam_step(AdamState& state, const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (grad.size() != state.m.size()) throw ConfigError("gradient length does not match optimizer state");
  if (!grad.allFinite()) throw DivergenceError("non-finite gradient passed to Adam");
  const auto& h = state.hyper;
  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseAbs2();
  ++state.step_count;
  if (!state.bias_correction)
    return (-h.eta * state.m.array() / (state.v.array().sqrt() + h.epsilon)).matrix();
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step_count));
  const auto m_hat = state.m.array() / c1;
  const auto v_hat = state.v.array() / c2;
  return (-h.eta * m_hat / (v_hat.sqrt() + h.epsilon)).matrix();
}

std::string to_string(GradientSource s) {
  return s == GradientSource::kPdeOnly ? "pde_only" : "total_loss";
}

std::string to_string(PerSampleForm f) {
  return f == PerSampleForm::kSquaredResidual ? "squared_residual" : "raw_residual";
}

GradientSource parse_gradient_source(const std::string& text) {
  if (text == "pde_only") return GradientSource::kPdeOnly;
  if (text == "total_loss") return GradientSource::kTotalLoss;
  throw ConfigError("unknown gradient_source '" + text + "'");
}

PerSampleForm parse_per_sample_form(const std::string& text) {
  if (text == "squared_residual") return PerSampleForm::kSquaredResidual;
  if (text == "raw_residual") return PerSampleForm::kRawResidual;
  throw ConfigError("unknown per_sample_form '" + text + "'");
}

PdeAwareState PdeAwareState::zeros(Eigen::Index n, PdeAwareHyper hyper, GradientSource source,
                                   PerSampleForm form) {
  PdeAwareState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  s.hyper = hyper;
  s.gradient_source = source;
  s.per_sample_form = form;
  return s;
}

PerSampleGradients PerSampleGradients::from_rows(Eigen::MatrixXd grads,
                                                    std::optional<Eigen::VectorXd> aux_mean) {
  if (grads.rows() < 1) throw ConfigError("per-sample gradients need at least one sample");
  SampleMoments moments{Eigen::VectorXd(grads.cols()), Eigen::VectorXd(grads.cols())};
  for (Eigen::Index k = 0; k < grads.cols(); ++k) {
    moments.sum[k] = grads.col(k).sum();
    moments.sum_squares[k] = grads.col(k).squaredNorm();
  }
  PerSampleGradients psg = from_moments(grads.rows(), moments, std::move(aux_mean));
  psg.grads = std::move(grads);
  return psg;
}

PerSampleGradients PerSampleGradients::from_moments(Eigen::Index batch,
                                                    const SampleMoments& moments,
                                                    std::optional<Eigen::VectorXd> aux_mean) {
  if (batch < 1) throw ConfigError("per-sample gradients need at least one sample");
  PerSampleGradients psg;
  const double inv_b = 1.0 / static_cast<double>(batch);
  psg.mean = moments.sum * inv_b;
  psg.mean_square = moments.sum_squares * inv_b;
  psg.aux_mean = std::move(aux_mean);
  psg.batch = batch;
  return psg;
}

Eigen::VectorXd pde_aware_step(PdeAwareState& state, const PerSampleGradients& psg) {
  const Eigen::Index n = state.m.size();
  if (psg.mean.size() != n || psg.mean_square.size() != n)
    throw ConfigError("per-sample gradients do not match optimizer state");
  if (!psg.mean.allFinite() || !psg.mean_square.allFinite())
    throw DivergenceError("non-finite per-sample gradients");
  const auto& h = state.hyper;
  if (state.gradient_source == GradientSource::kTotalLoss) {
    if (!psg.aux_mean) throw ConfigError("total_loss source needs the IC/BC gradient");
    if (psg.aux_mean->size() != n || !psg.aux_mean->allFinite())
      throw DivergenceError("invalid IC/BC gradient");
    state.m = h.beta1 * state.m + (1.0 - h.beta1) * (psg.mean + *psg.aux_mean);
  } else {
    state.m = h.beta1 * state.m + (1.0 - h.beta1) * psg.mean;
  }
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * psg.mean_square;
  ++state.step_count;
  return (-h.eta * state.m.array() / (state.v.array().sqrt() + h.epsilon)).matrix();
}

namespace {

struct InteriorPass {
  Eigen::RowVectorXd xs;
  BatchJets jets;
  Eigen::RowVectorXd residuals;

  InteriorPass(const PdeSpec& spec, const ParameterVector& params,
               const std::vector<CollocationPoint>& batch)
      : xs(xs_of(batch)),
        jets(params, xs, ts_of(batch), spec.interior_request()),
        residuals(interior_residuals(spec, jets, xs)) {}
};

}  // namespace

PerSampleGradients assemble_per_sample_gradients(const PdeSpec& spec,
                                                 const ParameterVector& params,
                                                 const std::vector<CollocationPoint>& batch,
                                                 const CollocationSet& colloc,
                                                 GradientSource source, PerSampleForm form,
                                                 BatchLosses* losses, bool keep_samples) {
  if (batch.empty()) throw ConfigError("empty mini-batch");
  InteriorPass pass(spec, params, batch);
  const auto adj = interior_adjoints(spec, pass.jets, pass.residuals,
                                     form == PerSampleForm::kSquaredResidual,
                                     Eigen::RowVectorXd::Ones(pass.xs.size()));
  std::optional<Eigen::VectorXd> aux;
  const bool need_aux = source == GradientSource::kTotalLoss;
  const auto ic = ic_loss_and_gradient(spec, params, xs_of(colloc.initial), need_aux);
  const auto bc = bc_loss_and_gradient(spec, params, colloc.boundary, need_aux);
  if (need_aux) aux = ic.gradient + bc.gradient;
  if (losses) *losses = BatchLosses{pass.residuals.squaredNorm(), ic.loss, bc.loss};
  if (keep_samples)
    return PerSampleGradients::from_rows(pass.jets.per_sample_gradients(adj), std::move(aux));
  return PerSampleGradients::from_moments(pass.xs.size(), pass.jets.per_sample_moments(adj),
                                          std::move(aux));
}

Eigen::VectorXd batch_loss_gradient(const PdeSpec& spec, const ParameterVector& params,
                                    const std::vector<CollocationPoint>& batch,
                                    const CollocationSet& colloc, BatchLosses* losses) {
  if (batch.empty()) throw ConfigError("empty mini-batch");
  InteriorPass pass(spec, params, batch);
  const double w = 1.0 / static_cast<double>(batch.size());
  const auto adj = interior_adjoints(spec, pass.jets, pass.residuals, true,
                                     Eigen::RowVectorXd::Constant(pass.xs.size(), w));
  const auto ic = ic_loss_and_gradient(spec, params, xs_of(colloc.initial));
  const auto bc = bc_loss_and_gradient(spec, params, colloc.boundary);
  if (losses) *losses = BatchLosses{pass.residuals.squaredNorm(), ic.loss, bc.loss};
  Eigen::VectorXd g = pass.jets.gradient_sum(adj) + ic.gradient + bc.gradient;
  if (!g.allFinite()) throw DivergenceError("non-finite loss gradient");
  return g;
}

}  // namespace pinn
