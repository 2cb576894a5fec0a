#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "pinn/model.hpp"
#include "pinn/taylor.hpp"

namespace pinn {

// Jet components carried through the network.
enum Component : int { kValue = 0, kDx = 1, kDxx = 2, kDxxx = 3, kDt = 4 };
inline constexpr int kNumComponents = 5;

struct DerivativeRequest {
  int x_order = 0;  // 0..3
  int t_order = 0;  // 0..1

  void validate() const;
  bool has(Component c) const {
    if (c == kValue) return true;
    if (c == kDt) return t_order >= 1;
    return x_order >= static_cast<int>(c);
  }
};

/// u and the requested input derivatives at one point. Unrequested orders stay empty.
struct Jet {
  double u = 0.0;
  std::optional<double> du_dt;
  std::optional<double> du_dx;
  std::optional<double> d2u_dx2;
  std::optional<double> d3u_dx3;
};

/// Adjoints (d scalar / d output component) per sample; unused components are empty.
using OutputAdjoints = std::array<Eigen::RowVectorXd, kNumComponents>;

struct SampleMoments {
  Eigen::VectorXd sum;          // sum_i g_i
  Eigen::VectorXd sum_squares;  // sum_i g_i^2, element-wise
};

/// Batched Taylor propagation through the network with a retained tape.
///
/// Every quantity is a matrix with one row per sample. Forward propagates
/// value, x-derivatives up to the requested order and the t-derivative; the
/// reverse sweeps then give parameter gradients of any scalar built from
/// those outputs, including paths that pass through input derivatives.
///
/// The tape references `params`, which must outlive it.
class BatchJets {
 public:
  BatchJets(const ParameterVector& params, const Eigen::Ref<const Eigen::RowVectorXd>& xs,
            const Eigen::Ref<const Eigen::RowVectorXd>& ts, DerivativeRequest request);

  Eigen::Index batch_size() const { return batch_; }
  const DerivativeRequest& request() const { return request_; }
  const ParameterVector& params() const { return params_; }

  // Network output component; throws if it was not requested.
  const Eigen::RowVectorXd& output(Component c) const;

  Jet jet(Eigen::Index sample) const;

  /// Sum over samples of d(adjoint . outputs)/d(params).
  Eigen::VectorXd gradient_sum(const OutputAdjoints& adjoints) const;

  /// One gradient row per sample (batch x parameter_count).
  Eigen::MatrixXd per_sample_gradients(const OutputAdjoints& adjoints) const;

  /// Column sums of per_sample_gradients and of its element-wise square,
  /// without materializing the matrix.
  SampleMoments per_sample_moments(const OutputAdjoints& adjoints) const;

  OutputAdjoints zero_adjoints() const;

 private:
  struct Layer {
    std::array<Eigen::MatrixXd, kNumComponents> input;  // activations feeding this layer
    std::array<Eigen::MatrixXd, kNumComponents> pre;    // affine output (hidden layers)
    std::array<Eigen::ArrayXXd, 5> tanh_derivs;         // s, s', s'', s''', s''''
  };

  template <typename Sink>
  void per_sample_columns(const OutputAdjoints& adjoints, Sink&& sink) const;

  template <typename Visit>
  void reverse(const OutputAdjoints& adjoints, Visit&& visit) const;

  const ParameterVector& params_;
  DerivativeRequest request_;
  Eigen::Index batch_;
  std::vector<Layer> layers_;
  std::array<Eigen::RowVectorXd, kNumComponents> out_;
};

/// u_theta and its requested derivatives at (x, t).
Jet eval_jet(const ParameterVector& params, double x, double t, DerivativeRequest request);

/// Point-by-point evaluation through the generic Taylor arithmetic, in any
/// scalar type. Shares no code with BatchJets; used as an oracle and for
/// extended-precision finite differences.
template <typename Scalar>
Taylor<Scalar> taylor_forward(const ModelSpec& spec,
                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& entries,
                              const Taylor<Scalar>& x, const Taylor<Scalar>& t) {
  const auto layout = layer_layout(spec);
  std::vector<Taylor<Scalar>> act{x, t};
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& lay = layout[l];
    std::vector<Taylor<Scalar>> next(static_cast<std::size_t>(lay.n_out));
    for (int o = 0; o < lay.n_out; ++o) {
      Taylor<Scalar> z = Taylor<Scalar>::constant(entries[lay.bias_offset + o]);
      for (int i = 0; i < lay.n_in; ++i)
        z += act[static_cast<std::size_t>(i)] *
             entries[lay.weight_offset + static_cast<Eigen::Index>(o) * lay.n_in + i];
      next[static_cast<std::size_t>(o)] = (l + 1 < layout.size()) ? tanh(z) : z;
    }
    act = std::move(next);
  }
  return act[0];
}

}  // namespace pinn
