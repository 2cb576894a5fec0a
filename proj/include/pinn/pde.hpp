#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pinn/autodiff.hpp"
#include "pinn/model.hpp"

namespace pinn {

enum class PdeKind { kBurgers, kAllenCahn, kKdV };
enum class BoundaryKind { kDirichlet, kPeriodic };

std::string to_string(PdeKind kind);
std::string to_string(BoundaryKind kind);
PdeKind parse_pde_kind(const std::string& text);
BoundaryKind parse_boundary_kind(const std::string& text);

// A function of x with a stable identifier used in config files and hashes.
struct NamedFunction {
  std::string id;
  std::function<double(double)> fn;

  double operator()(double x) const { return fn(x); }
};

// zero, one, neg_sin_pi, x2_cos_pi, cos_pi; throws ConfigError otherwise.
NamedFunction named_function(const std::string& id);

struct PdeSpec {
  PdeKind kind = PdeKind::kBurgers;
  double nu = 0.0;   // Burgers viscosity
  double eps = 0.0;  // Allen-Cahn diffusion
  double mu = 0.0;   // KdV dispersion
  NamedFunction forcing = named_function("zero");
  NamedFunction ic = named_function("zero");
  BoundaryKind bc = BoundaryKind::kDirichlet;
  double bc_value = 0.0;  // Dirichlet wall value
  double x_min = -1.0;
  double x_max = 1.0;
  double t_max = 1.0;

  // Benchmark instances.
  static PdeSpec burgers();
  static PdeSpec allen_cahn();
  static PdeSpec kdv();
  static PdeSpec preset(PdeKind kind);

  void validate() const;
  double coefficient() const;  // nu, eps or mu for the active kind
  DerivativeRequest interior_request() const;

  // Canonical "key=value" lines identifying the problem.
  std::string canonical_string() const;
  std::uint64_t hash() const;
};

// Allen-Cahn reaction term.
inline double allen_cahn_reaction(double u) { return 5.0 * (u - u * u * u); }

enum class PointRole { kInterior, kInitial, kBoundary };

struct CollocationPoint {
  double x = 0.0;
  double t = 0.0;
  PointRole role = PointRole::kInterior;
};

struct CollocationSet {
  std::vector<CollocationPoint> interior;
  std::vector<CollocationPoint> initial;
  std::vector<CollocationPoint> boundary;
  std::uint64_t seed = 0;
};

/// Interior residual at x from a jet with the orders the equation needs.
double interior_residual(const PdeSpec& spec, const Jet& jet, double x);

/// The same residual in any scalar type, from plain derivative values.
template <typename S>
S interior_residual_value(const PdeSpec& spec, S u, S ut, S ux, S uxx, S uxxx, S forcing) {
  switch (spec.kind) {
    case PdeKind::kBurgers:
      return ut + u * ux - S(spec.nu) * uxx - forcing;
    case PdeKind::kAllenCahn:
      return ut - S(spec.eps) * uxx - S(5) * (u - u * u * u) - forcing;
    case PdeKind::kKdV:
      return ut + u * ux + S(spec.mu) * uxxx - forcing;
  }
  return S(0);
}

double ic_residual(const PdeSpec& spec, const ParameterVector& params, double x);

enum class Wall { kMin, kMax };

struct BoundaryResidual {
  double value = 0.0;
  std::optional<double> slope;  // periodic only: u_x(x_min) - u_x(x_max)

  double squared() const { return value * value + (slope ? *slope * *slope : 0.0); }
};

BoundaryResidual bc_residual(const PdeSpec& spec, const ParameterVector& params, double t,
                             Wall side);

struct LossComponents {
  double total = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double pde = 0.0;
};

LossComponents total_loss(const PdeSpec& spec, const ParameterVector& params,
                          const CollocationSet& colloc);

CollocationSet sample_collocation(const PdeSpec& spec, int n_int, int n_ic, int n_bc,
                                  std::uint64_t seed);

// Batched residual machinery shared by training and gradient routines.

Eigen::RowVectorXd interior_residuals(const PdeSpec& spec, const BatchJets& jets,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& xs);

/// Adjoints of weight_i * R_i (raw) or weight_i * R_i^2 (squared) with respect to
/// the network outputs.
OutputAdjoints interior_adjoints(const PdeSpec& spec, const BatchJets& jets,
                                 const Eigen::RowVectorXd& residuals, bool squared,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& weights);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

// Mean squared IC residual over `xs` and its parameter gradient.
LossAndGradient ic_loss_and_gradient(const PdeSpec& spec, const ParameterVector& params,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& xs,
                                     bool with_gradient = true);

// Mean squared BC residual over the boundary points and its parameter gradient.
LossAndGradient bc_loss_and_gradient(const PdeSpec& spec, const ParameterVector& params,
                                     const std::vector<CollocationPoint>& boundary,
                                     bool with_gradient = true);

// Coordinates of a point family as row vectors.
Eigen::RowVectorXd xs_of(const std::vector<CollocationPoint>& pts);
Eigen::RowVectorXd ts_of(const std::vector<CollocationPoint>& pts);

}  // namespace pinn
