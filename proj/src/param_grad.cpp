#include "pinn/param_grad.hpp"

#include <algorithm>
#include <cmath>

#include "pinn/autodiff.hpp"
#include "pinn/error.hpp"

namespace pinn {

namespace {

struct Probe {
  Eigen::RowVectorXd xs, ts;
  DerivativeRequest request;
};

Probe probe_for(const CollocationPoint& p, ResidualScalar scalar, const PdeSpec& spec) {
  Probe probe;
  switch (scalar) {
    case ResidualScalar::kRawInterior:
    case ResidualScalar::kSquaredInterior:
      probe.xs = Eigen::RowVectorXd::Constant(1, p.x);
      probe.ts = Eigen::RowVectorXd::Constant(1, p.t);
      probe.request = spec.interior_request();
      break;
    case ResidualScalar::kSquaredInitial:
      probe.xs = Eigen::RowVectorXd::Constant(1, p.x);
      probe.ts = Eigen::RowVectorXd::Zero(1);
      probe.request = {0, 0};
      break;
    case ResidualScalar::kSquaredBoundary:
      if (spec.bc == BoundaryKind::kDirichlet) {
        probe.xs = Eigen::RowVectorXd::Constant(1, p.x);
        probe.ts = Eigen::RowVectorXd::Constant(1, p.t);
        probe.request = {0, 0};
      } else {
        probe.xs.resize(2);
        probe.xs << spec.x_min, spec.x_max;
        probe.ts = Eigen::RowVectorXd::Constant(2, p.t);
        probe.request = {1, 0};
      }
      break;
  }
  return probe;
}

}  // namespace

double residual_scalar(const ParameterVector& params, const CollocationPoint& point,
                       ResidualScalar scalar, const PdeSpec& spec) {
  const Probe probe = probe_for(point, scalar, spec);
  BatchJets jets(params, probe.xs, probe.ts, probe.request);
  switch (scalar) {
    case ResidualScalar::kRawInterior:
      return interior_residuals(spec, jets, probe.xs)[0];
    case ResidualScalar::kSquaredInterior: {
      const double r = interior_residuals(spec, jets, probe.xs)[0];
      return r * r;
    }
    case ResidualScalar::kSquaredInitial: {
      const double r = jets.output(kValue)[0] - spec.ic(point.x);
      return r * r;
    }
    case ResidualScalar::kSquaredBoundary: {
      if (spec.bc == BoundaryKind::kDirichlet) {
        const double r = jets.output(kValue)[0] - spec.bc_value;
        return r * r;
      }
      const double rv = jets.output(kValue)[0] - jets.output(kValue)[1];
      const double rd = jets.output(kDx)[0] - jets.output(kDx)[1];
      return rv * rv + rd * rd;
    }
  }
  return 0.0;
}

Eigen::VectorXd scalar_param_grad(const ParameterVector& params, const CollocationPoint& point,
                                  ResidualScalar scalar, const PdeSpec& spec) {
  const Probe probe = probe_for(point, scalar, spec);
  BatchJets jets(params, probe.xs, probe.ts, probe.request);
  OutputAdjoints a = jets.zero_adjoints();
  switch (scalar) {
    case ResidualScalar::kRawInterior:
    case ResidualScalar::kSquaredInterior: {
      const Eigen::RowVectorXd r = interior_residuals(spec, jets, probe.xs);
      a = interior_adjoints(spec, jets, r, scalar == ResidualScalar::kSquaredInterior,
                            Eigen::RowVectorXd::Ones(1));
      break;
    }
    case ResidualScalar::kSquaredInitial:
      a[kValue][0] = 2.0 * (jets.output(kValue)[0] - spec.ic(point.x));
      break;
    case ResidualScalar::kSquaredBoundary:
      if (spec.bc == BoundaryKind::kDirichlet) {
        a[kValue][0] = 2.0 * (jets.output(kValue)[0] - spec.bc_value);
      } else {
        const double rv = jets.output(kValue)[0] - jets.output(kValue)[1];
        const double rd = jets.output(kDx)[0] - jets.output(kDx)[1];
        a[kValue] << 2.0 * rv, -2.0 * rv;
        a[kDx] << 2.0 * rd, -2.0 * rd;
      }
      break;
  }
  Eigen::VectorXd g = jets.gradient_sum(a);
  if (!g.allFinite()) throw DivergenceError("non-finite parameter gradient");
  return g;
}

long double residual_scalar_extended(const ModelSpec& model,
                                     const Eigen::Matrix<long double, Eigen::Dynamic, 1>& entries,
                                     const CollocationPoint& point, ResidualScalar scalar,
                                     const PdeSpec& spec) {
  using T = Taylor<long double>;
  const auto at = [&](double x, double t) {
    return taylor_forward<long double>(model, entries, T::variable_x(x), T::variable_t(t));
  };
  switch (scalar) {
    case ResidualScalar::kRawInterior:
    case ResidualScalar::kSquaredInterior: {
      const T u = at(point.x, point.t);
      const long double r = interior_residual_value<long double>(
          spec, u.value, u.dt, u.dx, u.dxx, u.dxxx, spec.forcing(point.x));
      return scalar == ResidualScalar::kRawInterior ? r : r * r;
    }
    case ResidualScalar::kSquaredInitial: {
      const long double r = at(point.x, 0.0).value - spec.ic(point.x);
      return r * r;
    }
    case ResidualScalar::kSquaredBoundary: {
      if (spec.bc == BoundaryKind::kDirichlet) {
        const long double r = at(point.x, point.t).value - spec.bc_value;
        return r * r;
      }
      const T lo = at(spec.x_min, point.t);
      const T hi = at(spec.x_max, point.t);
      const long double rv = lo.value - hi.value;
      const long double rd = lo.dx - hi.dx;
      return rv * rv + rd * rd;
    }
  }
  return 0.0L;
}

Eigen::VectorXd finite_difference_param_grad(const ParameterVector& params,
                                             const CollocationPoint& point, ResidualScalar scalar,
                                             const PdeSpec& spec, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("finite-difference step must be positive");
  Eigen::Matrix<long double, Eigen::Dynamic, 1> w = params.entries().cast<long double>();
  Eigen::VectorXd fd(params.size());
  const long double h = step;
  for (Eigen::Index j = 0; j < params.size(); ++j) {
    const long double w0 = w[j];
    w[j] = w0 + h;
    const long double up = residual_scalar_extended(params.spec(), w, point, scalar, spec);
    w[j] = w0 - h;
    const long double down = residual_scalar_extended(params.spec(), w, point, scalar, spec);
    w[j] = w0;
    fd[j] = static_cast<double>((up - down) / (2.0L * h));
  }
  return fd;
}

double grad_check(const ParameterVector& params, const CollocationPoint& point,
                  ResidualScalar scalar, const PdeSpec& spec, double step, double floor) {
  if (!(step > 0.0)) throw ConfigError("grad_check step must be positive");
  const Eigen::VectorXd analytic = scalar_param_grad(params, point, scalar, spec);
  const Eigen::VectorXd fd = finite_difference_param_grad(params, point, scalar, spec, step);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < analytic.size(); ++j) {
    const double scale = std::max(std::abs(analytic[j]), std::abs(fd[j]));
    if (scale <= floor) continue;
    worst = std::max(worst, std::abs(analytic[j] - fd[j]) / scale);
  }
  return worst;
}

}  // namespace pinn
