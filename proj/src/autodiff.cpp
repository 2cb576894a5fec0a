#include "pinn/autodiff.hpp"

#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "pinn/error.hpp"

namespace pinn {

void DerivativeRequest::validate() const {
  if (x_order < 0 || x_order > 3)
    throw ConfigError("x derivative order must be in [0, 3], got " + std::to_string(x_order));
  if (t_order < 0 || t_order > 1)
    throw ConfigError("t derivative order must be in [0, 1], got " + std::to_string(t_order));
}

namespace {

constexpr std::array<Component, kNumComponents> kAllComponents{kValue, kDx, kDxx, kDxxx, kDt};

// Highest tanh derivative the reverse sweep needs.
int tanh_order_needed(const DerivativeRequest& r) {
  const int forward = std::max(r.x_order, r.t_order);
  return std::min(forward + 1, 4);
}


// tanh through the vectorized exponential; absolute error stays at rounding level.
Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& z) {
  const Eigen::ArrayXXd e = (-2.0 * z.abs()).exp();
  return z.sign() * (1.0 - e) / (1.0 + e);
}

#if defined(__GLIBC__)
// Jet tapes allocate many batch-sized temporaries per step. Keeping them on the
// heap instead of fresh mmap'd pages avoids a page-fault storm on every step.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

}  // namespace

BatchJets::BatchJets(const ParameterVector& params,
                     const Eigen::Ref<const Eigen::RowVectorXd>& xs,
                     const Eigen::Ref<const Eigen::RowVectorXd>& ts, DerivativeRequest request)
    : params_(params), request_(request), batch_(xs.size()) {
  request_.validate();
  if (ts.size() != batch_) throw ConfigError("x and t batches differ in length");
  if (!xs.allFinite() || !ts.allFinite()) throw ConfigError("non-finite collocation coordinates");

  const int num_layers = params_.spec().num_affine_layers();
  layers_.resize(static_cast<std::size_t>(num_layers));

  // Samples are rows throughout: activations are batch x width.
  std::array<Eigen::MatrixXd, kNumComponents> act;
  act[kValue].resize(batch_, 2);
  act[kValue].col(0) = xs.transpose();
  act[kValue].col(1) = ts.transpose();
  for (Component c : {kDx, kDxx, kDxxx, kDt}) {
    if (!request_.has(c)) continue;
    act[c] = Eigen::MatrixXd::Zero(batch_, 2);
    if (c == kDx) act[c].col(0).setOnes();
    if (c == kDt) act[c].col(1).setOnes();
  }

  const int order = tanh_order_needed(request_);
  for (int l = 0; l < num_layers; ++l) {
    auto& layer = layers_[static_cast<std::size_t>(l)];
    const auto W = params_.weights(l);
    layer.input = std::move(act);

    std::array<Eigen::MatrixXd, kNumComponents> z;
    for (Component c : kAllComponents) {
      if (!request_.has(c)) continue;
      z[c].noalias() = layer.input[c] * W.transpose();
    }
    z[kValue].rowwise() += params_.bias(l).transpose();

    if (l + 1 == num_layers) {
      for (Component c : kAllComponents)
        if (request_.has(c)) out_[c] = z[c].col(0).transpose();
      break;
    }

    auto& s = layer.tanh_derivs;
    s[0] = fast_tanh(z[kValue].array());
    s[1] = 1.0 - s[0].square();
    if (order >= 2) s[2] = -2.0 * s[0] * s[1];
    if (order >= 3) s[3] = -2.0 * s[1].square() + 4.0 * s[0].square() * s[1];
    if (order >= 4) s[4] = -4.0 * s[1] * s[2] + 8.0 * s[0] * s[1].square() + 4.0 * s[0].square() * s[2];

    act[kValue] = s[0].matrix();
    if (request_.has(kDx)) act[kDx] = (s[1] * z[kDx].array()).matrix();
    if (request_.has(kDxx))
      act[kDxx] = (s[2] * z[kDx].array().square() + s[1] * z[kDxx].array()).matrix();
    if (request_.has(kDxxx)) {
      const auto z1 = z[kDx].array();
      act[kDxxx] = (s[3] * z1.cube() + 3.0 * s[2] * z1 * z[kDxx].array() +
                    s[1] * z[kDxxx].array())
                       .matrix();
    }
    if (request_.has(kDt)) act[kDt] = (s[1] * z[kDt].array()).matrix();
    layer.pre = std::move(z);
  }

  for (Component c : kAllComponents)
    if (request_.has(c) && !out_[c].allFinite())
      throw DivergenceError("non-finite network output (activation overflow)");
}

const Eigen::RowVectorXd& BatchJets::output(Component c) const {
  if (!request_.has(c)) throw ConfigError("derivative component was not requested");
  return out_[c];
}

Jet BatchJets::jet(Eigen::Index i) const {
  Jet j;
  j.u = out_[kValue][i];
  if (request_.has(kDt)) j.du_dt = out_[kDt][i];
  if (request_.has(kDx)) j.du_dx = out_[kDx][i];
  if (request_.has(kDxx)) j.d2u_dx2 = out_[kDxx][i];
  if (request_.has(kDxxx)) j.d3u_dx3 = out_[kDxxx][i];
  return j;
}

OutputAdjoints BatchJets::zero_adjoints() const {
  OutputAdjoints a;
  for (Component c : kAllComponents)
    if (request_.has(c)) a[c] = Eigen::RowVectorXd::Zero(batch_);
  return a;
}

template <typename Visit>
void BatchJets::reverse(const OutputAdjoints& adjoints, Visit&& visit) const {
  std::array<Eigen::MatrixXd, kNumComponents> zbar;
  for (Component c : kAllComponents) {
    if (!request_.has(c)) continue;
    if (adjoints[c].size() == 0) {
      zbar[c] = Eigen::MatrixXd::Zero(batch_, 1);
    } else {
      if (adjoints[c].size() != batch_) throw ConfigError("adjoint length does not match batch");
      zbar[c] = adjoints[c].transpose();
    }
  }

  const int num_layers = static_cast<int>(layers_.size());
  for (int l = num_layers - 1; l >= 0; --l) {
    const auto& layer = layers_[static_cast<std::size_t>(l)];
    visit(l, zbar, layer.input);
    if (l == 0) break;

    const auto W = params_.weights(l);
    std::array<Eigen::ArrayXXd, kNumComponents> abar;
    for (Component c : kAllComponents)
      if (request_.has(c)) abar[c] = (zbar[c] * W).array();

    // Back through tanh of layer l-1.
    const auto& below = layers_[static_cast<std::size_t>(l - 1)];
    const auto& s = below.tanh_derivs;
    const auto& z = below.pre;
    Eigen::ArrayXXd z0bar = abar[kValue] * s[1];
    if (request_.has(kDx)) {
      const auto z1 = z[kDx].array();
      Eigen::ArrayXXd z1bar = abar[kDx] * s[1];
      z0bar += abar[kDx] * s[2] * z1;
      if (request_.has(kDxx)) {
        const auto z2 = z[kDxx].array();
        z1bar += 2.0 * abar[kDxx] * s[2] * z1;
        Eigen::ArrayXXd z2bar = abar[kDxx] * s[1];
        z0bar += abar[kDxx] * (s[3] * z1.square() + s[2] * z2);
        if (request_.has(kDxxx)) {
          const auto z3 = z[kDxxx].array();
          z1bar += abar[kDxxx] * (3.0 * s[3] * z1.square() + 3.0 * s[2] * z2);
          z2bar += 3.0 * abar[kDxxx] * s[2] * z1;
          z0bar += abar[kDxxx] * (s[4] * z1.cube() + 3.0 * s[3] * z1 * z2 + s[2] * z3);
          zbar[kDxxx] = (abar[kDxxx] * s[1]).matrix();
        }
        zbar[kDxx] = z2bar.matrix();
      }
      zbar[kDx] = z1bar.matrix();
    }
    if (request_.has(kDt)) {
      z0bar += abar[kDt] * s[2] * z[kDt].array();
      zbar[kDt] = (abar[kDt] * s[1]).matrix();
    }
    zbar[kValue] = z0bar.matrix();
  }
}

namespace {

// The first layer sees x and t directly, so its curvature inputs are zero.
bool contributes(int layer, Component c) { return !(layer == 0 && (c == kDxx || c == kDxxx)); }

}  // namespace

Eigen::VectorXd BatchJets::gradient_sum(const OutputAdjoints& adjoints) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(params_.size());
  reverse(adjoints, [&](int l, const auto& zbar, const auto& input) {
    const auto& lay = params_.layout()[static_cast<std::size_t>(l)];
    Eigen::Map<RowMajorMatrixXd> gw(g.data() + lay.weight_offset, lay.n_out, lay.n_in);
    for (Component c : kAllComponents) {
      if (!request_.has(c) || !contributes(l, c)) continue;
      gw.noalias() += zbar[c].transpose() * input[c];
    }
    g.segment(lay.bias_offset, lay.n_out) += zbar[kValue].colwise().sum().transpose();
  });
  return g;
}

template <typename Sink>
void BatchJets::per_sample_columns(const OutputAdjoints& adjoints, Sink&& sink) const {
  Eigen::VectorXd col(batch_);
  reverse(adjoints, [&](int l, const auto& zbar, const auto& input) {
    const auto& lay = params_.layout()[static_cast<std::size_t>(l)];
    for (int o = 0; o < lay.n_out; ++o) {
      for (int j = 0; j < lay.n_in; ++j) {
        col.array() = zbar[kValue].col(o).array() * input[kValue].col(j).array();
        for (Component c : {kDx, kDxx, kDxxx, kDt}) {
          if (!request_.has(c) || !contributes(l, c)) continue;
          col.array() += zbar[c].col(o).array() * input[c].col(j).array();
        }
        sink(lay.weight_offset + static_cast<Eigen::Index>(o) * lay.n_in + j, col);
      }
    }
    for (int o = 0; o < lay.n_out; ++o) sink(lay.bias_offset + o, zbar[kValue].col(o));
  });
}

Eigen::MatrixXd BatchJets::per_sample_gradients(const OutputAdjoints& adjoints) const {
  Eigen::MatrixXd G(batch_, params_.size());
  per_sample_columns(adjoints, [&](Eigen::Index k, const auto& col) { G.col(k) = col; });
  return G;
}

SampleMoments BatchJets::per_sample_moments(const OutputAdjoints& adjoints) const {
  SampleMoments m{Eigen::VectorXd(params_.size()), Eigen::VectorXd(params_.size())};
  per_sample_columns(adjoints, [&](Eigen::Index k, const auto& col) {
    m.sum[k] = col.sum();
    m.sum_squares[k] = col.squaredNorm();
  });
  return m;
}

Jet eval_jet(const ParameterVector& params, double x, double t, DerivativeRequest request) {
  Eigen::RowVectorXd xs(1), ts(1);
  xs << x;
  ts << t;
  return BatchJets(params, xs, ts, request).jet(0);
}

}  // namespace pinn
