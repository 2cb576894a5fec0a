#pragma once

#include <Eigen/Dense>

#include "pinn/model.hpp"
#include "pinn/pde.hpp"

namespace pinn {

// Per-point scalars whose parameter gradients are available.
enum class ResidualScalar {
  kRawInterior,
  kSquaredInterior,
  kSquaredInitial,
  kSquaredBoundary,
};

/// Value of the chosen scalar at one collocation point.
double residual_scalar(const ParameterVector& params, const CollocationPoint& point,
                       ResidualScalar scalar, const PdeSpec& spec);

/// Exact parameter gradient of the chosen scalar at one point, including the
/// dependence through input derivatives. Throws DivergenceError on non-finite entries.
Eigen::VectorXd scalar_param_grad(const ParameterVector& params, const CollocationPoint& point,
                                  ResidualScalar scalar, const PdeSpec& spec);

/// Same scalar evaluated through the pointwise Taylor path in extended
/// precision, with an arbitrary parameter vector.
long double residual_scalar_extended(const ModelSpec& model,
                                     const Eigen::Matrix<long double, Eigen::Dynamic, 1>& entries,
                                     const CollocationPoint& point, ResidualScalar scalar,
                                     const PdeSpec& spec);

/// Central differences of residual_scalar_extended, one entry per parameter.
Eigen::VectorXd finite_difference_param_grad(const ParameterVector& params,
                                             const CollocationPoint& point, ResidualScalar scalar,
                                             const PdeSpec& spec, double step);

/// Largest relative discrepancy between scalar_param_grad and central finite
/// differences, over entries whose magnitude exceeds `floor`.
double grad_check(const ParameterVector& params, const CollocationPoint& point,
                  ResidualScalar scalar, const PdeSpec& spec, double step, double floor = 1e-8);

}  // namespace pinn
