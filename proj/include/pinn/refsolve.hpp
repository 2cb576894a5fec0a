#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "pinn/io.hpp"
#include "pinn/model.hpp"
#include "pinn/pde.hpp"

namespace pinn {

/// Uniform (x, t) node lattice; nx and nt count nodes, not cells.
struct Grid {
  int nx = 401;
  int nt = 401;
  double x_min = -1.0;
  double x_max = 1.0;
  double t_min = 0.0;
  double t_max = 1.0;

  static Grid for_spec(const PdeSpec& spec, int nx, int nt);
  void validate() const;
  double dx() const { return (x_max - x_min) / (nx - 1); }
  double dt() const { return (t_max - t_min) / (nt - 1); }
  double x(int i) const { return x_min + i * dx(); }
  double t(int k) const { return t_min + k * dt(); }
  bool operator==(const Grid&) const = default;
};

/// u on a grid: values(i, k) is u(x_i, t_k).
struct SolutionField {
  Grid grid;
  Eigen::MatrixXd values;
  io::Metadata metadata;
};

/// Burgers: Strang splitting of Crank-Nicolson viscosity and explicit
/// conservative upwind convection (Rusanov flux, linear reconstruction,
/// SSP-RK3). Dirichlet walls. Substeps follow a CFL bound of 0.4.
SolutionField solve_burgers(const PdeSpec& spec, const Grid& grid);

/// Allen-Cahn: Strang splitting of Crank-Nicolson diffusion and explicit
/// SSP-RK3 reaction, periodic.
SolutionField solve_allen_cahn(const PdeSpec& spec, const Grid& grid);

/// KdV: classical RK4 in time, fourth-order central stencils in space, periodic.
/// The flux form conserves the discrete mass up to round-off.
SolutionField solve_kdv(const PdeSpec& spec, const Grid& grid);

SolutionField solve(const PdeSpec& spec, const Grid& grid);

// Identifier of the scheme `solve` uses for this equation.
std::string scheme_id(PdeKind kind);

/// Travelling soliton of u_t + u u_x + mu u_xxx = 0.
double kdv_soliton(double x, double t, double c, double mu, double x0);

/// The soliton as a Taylor jet in (x, t), built from the elementary operations.
template <typename S>
Taylor<S> kdv_soliton_jet(S x, S t, S c, S mu, S x0) {
  using std::sqrt;
  const S k = sqrt(c / (S(4) * mu));
  const auto xi = (Taylor<S>::variable_x(x) - Taylor<S>::variable_t(t) * c) + (-x0);
  const auto th = tanh(xi * k);
  return (Taylor<S>::constant(S(1)) - th * th) * (S(3) * c);
}

/// u_theta sampled at every node of `grid`.
SolutionField evaluate_on_grid(const ParameterVector& params, const Grid& grid);

/// Sub-sample a fine field onto a coarser grid: node restriction when the
/// grids nest, bilinear interpolation otherwise.
SolutionField restrict_to(const SolutionField& fine, const Grid& coarse);

// Field file: "PINNFIELD v1", key=value metadata, then nx rows of nt comma-separated values.
std::string format_field(const SolutionField& field);
SolutionField parse_field(const std::string& text);
void save_field(const std::filesystem::path& path, const SolutionField& field);
SolutionField load_field(const std::filesystem::path& path);

// Largest |u| the solvers tolerate before declaring divergence.
inline constexpr double kDivergenceBound = 10.0;

}  // namespace pinn
