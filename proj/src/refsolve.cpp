#include "pinn/refsolve.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pinn/autodiff.hpp"
#include "pinn/error.hpp"

namespace pinn {

Grid Grid::for_spec(const PdeSpec& spec, int nx, int nt) {
  Grid g{nx, nt, spec.x_min, spec.x_max, 0.0, spec.t_max};
  g.validate();
  return g;
}

void Grid::validate() const {
  if (nx < 2 || nt < 2) throw ConfigError("grid needs at least two nodes per axis");
  if (!(x_min < x_max) || !(t_min < t_max)) throw ConfigError("grid bounds are empty");
}

namespace {

using Vec = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

void check_bounded(const Vec& u, const char* scheme, double t) {
  if (!u.allFinite() || u.cwiseAbs().maxCoeff() > kDivergenceBound) {
    std::ostringstream msg;
    msg << scheme << ": solution left |u| <= " << kDivergenceBound << " at t=" << t;
    throw DivergenceError(msg.str());
  }
}

SolutionField make_field(const PdeSpec& spec, const Grid& grid, const std::string& scheme) {
  SolutionField f;
  f.grid = grid;
  f.values.resize(grid.nx, grid.nt);
  std::istringstream canon(spec.canonical_string());
  std::string line, key, value;
  while (std::getline(canon, line))
    if (io::split_key_value(line, key, value)) f.metadata[key] = value;
  f.metadata["scheme"] = scheme;
  f.metadata["grid"] = std::to_string(grid.nx) + "x" + std::to_string(grid.nt);
  f.metadata["source"] = "fdm";
  return f;
}

Vec initial_values(const PdeSpec& spec, const Grid& grid) {
  Vec u(grid.nx);
  for (int i = 0; i < grid.nx; ++i) u[i] = spec.ic(grid.x(i));
  return u;
}

// Crank-Nicolson step for u_t = kappa u_xx over a time h. Periodic problems
// act on the nx-1 distinct nodes; Dirichlet rows pin the wall values.
class DiffusionStep {
 public:
  DiffusionStep(int n, double dx, double kappa, double h, bool periodic, double wall_value)
      : periodic_(periodic), wall_(wall_value) {
    const double r = 0.5 * kappa * h / (dx * dx);
    SparseMatrix lhs(n, n);
    rhs_ = SparseMatrix(n, n);
    std::vector<Eigen::Triplet<double>> a, b;
    for (int i = 0; i < n; ++i) {
      if (!periodic && (i == 0 || i == n - 1)) {
        a.emplace_back(i, i, 1.0);
        continue;
      }
      const int left = (i - 1 + n) % n;
      const int right = (i + 1) % n;
      a.emplace_back(i, i, 1.0 + 2.0 * r);
      a.emplace_back(i, left, -r);
      a.emplace_back(i, right, -r);
      b.emplace_back(i, i, 1.0 - 2.0 * r);
      b.emplace_back(i, left, r);
      b.emplace_back(i, right, r);
    }
    lhs.setFromTriplets(a.begin(), a.end());
    rhs_.setFromTriplets(b.begin(), b.end());
    lu_.compute(lhs);
    if (lu_.info() != Eigen::Success) throw VerificationError("Crank-Nicolson factorization failed");
  }

  void apply(Vec& u) const {
    Vec b = rhs_ * u;
    if (!periodic_) {
      b[0] = wall_;
      b[b.size() - 1] = wall_;
    }
    u = lu_.solve(b);
  }

 private:
  bool periodic_;
  double wall_;
  SparseMatrix rhs_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

// Strong-stability-preserving RK3 for u' = rhs(u).
template <typename Rhs>
void ssp_rk3(Vec& u, double h, Rhs&& rhs) {
  const Vec u1 = u + h * rhs(u);
  const Vec u2 = 0.75 * u + 0.25 * (u1 + h * rhs(u1));
  u = (1.0 / 3.0) * u + (2.0 / 3.0) * (u2 + h * rhs(u2));
}

// Local Lax-Friedrichs (Rusanov) flux for f(u) = u^2 / 2.
double upwind_flux(double ul, double ur) {
  const double speed = std::max(std::abs(ul), std::abs(ur));
  return 0.25 * (ul * ul + ur * ur) - 0.5 * speed * (ur - ul);
}

// -(u^2/2)_x in conservative form with linearly reconstructed (central slope)
// face states and upwind (Rusanov) fluxes. Wall nodes are held fixed.
Vec burgers_convection(const Vec& u, double dx) {
  const Eigen::Index n = u.size();
  Vec slope(n);
  slope[0] = u[1] - u[0];
  slope[n - 1] = u[n - 1] - u[n - 2];
  for (Eigen::Index i = 1; i + 1 < n; ++i) slope[i] = 0.5 * (u[i + 1] - u[i - 1]);
  Vec flux(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double ul = u[i] + 0.5 * slope[i];
    const double ur = u[i + 1] - 0.5 * slope[i + 1];
    flux[i] = upwind_flux(ul, ur);
  }
  Vec du = Vec::Zero(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) du[i] = -(flux[i] - flux[i - 1]) / dx;
  return du;
}

int substeps_for(double interval, double max_step) {
  return std::max(1, static_cast<int>(std::ceil(interval / max_step - 1e-12)));
}

}  // namespace

SolutionField solve_burgers(const PdeSpec& spec, const Grid& grid) {
  spec.validate();
  grid.validate();
  if (spec.kind != PdeKind::kBurgers) throw ConfigError("solve_burgers needs a Burgers spec");
  if (spec.bc != BoundaryKind::kDirichlet) throw ConfigError("Burgers solver supports Dirichlet walls only");

  SolutionField field = make_field(spec, grid, scheme_id(PdeKind::kBurgers));
  Vec u = initial_values(spec, grid);
  u[0] = spec.bc_value;
  u[grid.nx - 1] = spec.bc_value;
  field.values.col(0) = u;

  const double dx = grid.dx();
  const double umax = std::max({u.cwiseAbs().maxCoeff(), std::abs(spec.bc_value), 1e-12});
  const double cfl = 0.4;
  const int m = substeps_for(grid.dt(), cfl * dx / umax);
  const double h = grid.dt() / m;
  if (cfl * dx / umax < h * (1.0 - 1e-12)) throw VerificationError("Burgers time step violates CFL");
  field.metadata["substeps"] = std::to_string(m);

  const DiffusionStep half_diffusion(grid.nx, dx, spec.nu, 0.5 * h, false, spec.bc_value);
  for (int k = 1; k < grid.nt; ++k) {
    for (int s = 0; s < m; ++s) {
      half_diffusion.apply(u);
      ssp_rk3(u, h, [&](const Vec& v) { return burgers_convection(v, dx); });
      half_diffusion.apply(u);
    }
    check_bounded(u, "burgers", grid.t(k));
    field.values.col(k) = u;
  }
  return field;
}

SolutionField solve_allen_cahn(const PdeSpec& spec, const Grid& grid) {
  spec.validate();
  grid.validate();
  if (spec.kind != PdeKind::kAllenCahn) throw ConfigError("solve_allen_cahn needs an Allen-Cahn spec");
  if (spec.bc != BoundaryKind::kPeriodic) throw ConfigError("Allen-Cahn solver supports periodic walls only");
  if (grid.nx < 4) throw ConfigError("periodic grid too small");

  SolutionField field = make_field(spec, grid, scheme_id(PdeKind::kAllenCahn));
  const int n = grid.nx - 1;  // distinct nodes; node nx-1 repeats node 0
  const Vec u_full = initial_values(spec, grid);
  Vec u = u_full.head(n);
  field.values.col(0) = u_full;
  field.values(grid.nx - 1, 0) = u[0];

  // Reaction derivative is bounded by 10 on [-1.2, 1.2]; keep h * 10 well inside RK3's region.
  const int m = substeps_for(grid.dt(), std::min(0.05, 0.5 * grid.dx()));
  const double h = grid.dt() / m;
  field.metadata["substeps"] = std::to_string(m);

  const DiffusionStep half_diffusion(n, grid.dx(), spec.eps, 0.5 * h, true, 0.0);
  const auto reaction = [](const Vec& v) {
    return Vec((5.0 * (v.array() - v.array().cube())).matrix());
  };
  for (int k = 1; k < grid.nt; ++k) {
    for (int s = 0; s < m; ++s) {
      half_diffusion.apply(u);
      ssp_rk3(u, h, reaction);
      half_diffusion.apply(u);
    }
    check_bounded(u, "allen_cahn", grid.t(k));
    field.values.col(k).head(n) = u;
    field.values(grid.nx - 1, k) = u[0];
  }
  return field;
}

namespace {

// -(u^2/2)_x - mu u_xxx with fourth-order periodic central differences.
// Works on copies padded with three wrapped nodes per side.
Vec kdv_rhs(const Vec& u, double dx, double mu) {
  const Eigen::Index n = u.size();
  Vec p(n + 6);
  p.segment(3, n) = u;
  p.head(3) = u.tail(3);
  p.tail(3) = u.head(3);
  const Eigen::ArrayXd f = 0.5 * p.array().square();
  const auto s = [n](const auto& v, int shift) { return v.segment(3 + shift, n); };
  const double a = 1.0 / (12.0 * dx);
  const double b = mu / (8.0 * dx * dx * dx);
  const Eigen::ArrayXd pa = p.array();
  return (-(a * (-s(f, 2) + 8.0 * s(f, 1) - 8.0 * s(f, -1) + s(f, -2))) -
          b * (-s(pa, 3) + 8.0 * s(pa, 2) - 13.0 * s(pa, 1) + 13.0 * s(pa, -1) -
               8.0 * s(pa, -2) + s(pa, -3)))
      .matrix();
}

// Largest |symbol| of the two stencils over the resolved wavenumbers.
double max_symbol(int n, double dx, double mu, double umax) {
  double worst = 0.0;
  for (int k = 0; k <= n / 2; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n;
    const double d1 = std::abs(8.0 * std::sin(th) - std::sin(2.0 * th)) / (6.0 * dx);
    const double d3 = std::abs(-2.0 * std::sin(3.0 * th) + 16.0 * std::sin(2.0 * th) -
                               26.0 * std::sin(th)) / (8.0 * dx * dx * dx);
    worst = std::max(worst, umax * d1 + mu * d3);
  }
  return worst;
}

}  // namespace

SolutionField solve_kdv(const PdeSpec& spec, const Grid& grid) {
  spec.validate();
  grid.validate();
  if (spec.kind != PdeKind::kKdV) throw ConfigError("solve_kdv needs a KdV spec");
  if (spec.bc != BoundaryKind::kPeriodic) throw ConfigError("KdV solver supports periodic walls only");
  if (grid.nx < 8) throw ConfigError("periodic grid too small");

  SolutionField field = make_field(spec, grid, scheme_id(PdeKind::kKdV));
  const int n = grid.nx - 1;
  const double dx = grid.dx();
  const Vec u_full = initial_values(spec, grid);
  Vec u = u_full.head(n);
  field.values.col(0) = u_full;
  field.values(grid.nx - 1, 0) = u[0];

  // RK4 covers the imaginary axis up to 2*sqrt(2); keep a margin.
  constexpr double kImagLimit = 2.0 * std::numbers::sqrt2 * 0.8;
  long total_steps = 0;
  for (int k = 1; k < grid.nt; ++k) {
    const double umax = 1.5 * std::max(u.cwiseAbs().maxCoeff(), 1e-12);
    const int m = substeps_for(grid.dt(), kImagLimit / max_symbol(n, dx, spec.mu, umax));
    const double h = grid.dt() / m;
    for (int s = 0; s < m; ++s) {
      const Vec k1 = kdv_rhs(u, dx, spec.mu);
      const Vec k2 = kdv_rhs(u + 0.5 * h * k1, dx, spec.mu);
      const Vec k3 = kdv_rhs(u + 0.5 * h * k2, dx, spec.mu);
      const Vec k4 = kdv_rhs(u + h * k3, dx, spec.mu);
      u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    total_steps += m;
    check_bounded(u, "kdv", grid.t(k));
    field.values.col(k).head(n) = u;
    field.values(grid.nx - 1, k) = u[0];
  }
  field.metadata["substeps"] = std::to_string(total_steps);
  return field;
}

std::string scheme_id(PdeKind kind) {
  switch (kind) {
    case PdeKind::kBurgers: return "strang(cn-diffusion;ssp-rk3-rusanov-linear);cfl=0.4";
    case PdeKind::kAllenCahn: return "strang(cn-diffusion;ssp-rk3-reaction)";
    case PdeKind::kKdV: return "rk4;central4-flux;central4-dispersion";
  }
  return "unknown";
}

SolutionField solve(const PdeSpec& spec, const Grid& grid) {
  switch (spec.kind) {
    case PdeKind::kBurgers: return solve_burgers(spec, grid);
    case PdeKind::kAllenCahn: return solve_allen_cahn(spec, grid);
    case PdeKind::kKdV: return solve_kdv(spec, grid);
  }
  throw ConfigError("unknown pde kind");
}

double kdv_soliton(double x, double t, double c, double mu, double x0) {
  if (!(c > 0.0) || !(mu > 0.0)) throw ConfigError("soliton needs c > 0 and mu > 0");
  const double s = 1.0 / std::cosh(std::sqrt(c / (4.0 * mu)) * (x - c * t - x0));
  return 3.0 * c * s * s;
}

SolutionField evaluate_on_grid(const ParameterVector& params, const Grid& grid) {
  grid.validate();
  SolutionField f;
  f.grid = grid;
  f.values.resize(grid.nx, grid.nt);
  Eigen::RowVectorXd xs(grid.nx), ts(grid.nx);
  for (int i = 0; i < grid.nx; ++i) xs[i] = grid.x(i);
  for (int k = 0; k < grid.nt; ++k) {
    ts.setConstant(grid.t(k));
    BatchJets jets(params, xs, ts, {0, 0});
    f.values.col(k) = jets.output(kValue).transpose();
  }
  f.metadata["source"] = "network";
  f.metadata["layer_sizes"] = params.spec().layer_string();
  f.metadata["grid"] = std::to_string(grid.nx) + "x" + std::to_string(grid.nt);
  return f;
}

namespace {

// Index map when coarse nodes coincide with fine nodes, or -1.
int nest_stride(int fine, int coarse) {
  if ((fine - 1) % (coarse - 1) != 0) return -1;
  return (fine - 1) / (coarse - 1);
}

double sample_bilinear(const SolutionField& f, double x, double t) {
  const Grid& g = f.grid;
  const double fx = std::clamp((x - g.x_min) / g.dx(), 0.0, g.nx - 1.0);
  const double ft = std::clamp((t - g.t_min) / g.dt(), 0.0, g.nt - 1.0);
  const int i = std::min(static_cast<int>(fx), g.nx - 2);
  const int k = std::min(static_cast<int>(ft), g.nt - 2);
  const double a = fx - i, b = ft - k;
  return (1 - a) * (1 - b) * f.values(i, k) + a * (1 - b) * f.values(i + 1, k) +
         (1 - a) * b * f.values(i, k + 1) + a * b * f.values(i + 1, k + 1);
}

}  // namespace

SolutionField restrict_to(const SolutionField& fine, const Grid& coarse) {
  coarse.validate();
  SolutionField out;
  out.grid = coarse;
  out.metadata = fine.metadata;
  out.metadata["grid"] = std::to_string(coarse.nx) + "x" + std::to_string(coarse.nt);
  out.metadata["restricted_from"] = std::to_string(fine.grid.nx) + "x" + std::to_string(fine.grid.nt);
  out.values.resize(coarse.nx, coarse.nt);
  const int sx = nest_stride(fine.grid.nx, coarse.nx);
  const int st = nest_stride(fine.grid.nt, coarse.nt);
  const bool same_box = fine.grid.x_min == coarse.x_min && fine.grid.x_max == coarse.x_max &&
                        fine.grid.t_min == coarse.t_min && fine.grid.t_max == coarse.t_max;
  if (same_box && sx > 0 && st > 0) {
    for (int i = 0; i < coarse.nx; ++i)
      for (int k = 0; k < coarse.nt; ++k) out.values(i, k) = fine.values(i * sx, k * st);
    out.metadata["restriction"] = "nodes";
  } else {
    for (int i = 0; i < coarse.nx; ++i)
      for (int k = 0; k < coarse.nt; ++k)
        out.values(i, k) = sample_bilinear(fine, coarse.x(i), coarse.t(k));
    out.metadata["restriction"] = "bilinear";
  }
  return out;
}

std::string format_field(const SolutionField& field) {
  std::ostringstream out;
  out << "PINNFIELD v1\n";
  const Grid& g = field.grid;
  io::Metadata meta = field.metadata;
  meta["nx"] = std::to_string(g.nx);
  meta["nt"] = std::to_string(g.nt);
  meta["x_range"] = io::format_double(g.x_min) + "," + io::format_double(g.x_max);
  meta["t_range"] = io::format_double(g.t_min) + "," + io::format_double(g.t_max);
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
  for (int i = 0; i < g.nx; ++i) {
    for (int k = 0; k < g.nt; ++k) {
      if (k) out << ',';
      out << io::format_double(field.values(i, k));
    }
    out << '\n';
  }
  return out.str();
}

SolutionField parse_field(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || io::trim(line) != "PINNFIELD v1")
    throw Error("not a PINNFIELD v1 file");
  SolutionField f;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    std::string key, value;
    if (rows.empty() && io::split_key_value(line, key, value)) {
      f.metadata[key] = value;
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : io::split(line, ',')) row.push_back(io::parse_double(cell));
    rows.push_back(std::move(row));
  }
  const auto need = [&](const char* key) -> const std::string& {
    const auto it = f.metadata.find(key);
    if (it == f.metadata.end()) throw Error(std::string("field file lacks ") + key);
    return it->second;
  };
  Grid& g = f.grid;
  g.nx = static_cast<int>(io::parse_int(need("nx")));
  g.nt = static_cast<int>(io::parse_int(need("nt")));
  const auto xr = io::split(need("x_range"), ',');
  const auto tr = io::split(need("t_range"), ',');
  if (xr.size() != 2 || tr.size() != 2) throw Error("malformed field ranges");
  g.x_min = io::parse_double(xr[0]);
  g.x_max = io::parse_double(xr[1]);
  g.t_min = io::parse_double(tr[0]);
  g.t_max = io::parse_double(tr[1]);
  g.validate();
  if (static_cast<int>(rows.size()) != g.nx) throw Error("field row count does not match nx");
  f.values.resize(g.nx, g.nt);
  for (int i = 0; i < g.nx; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != g.nt)
      throw Error("field row length does not match nt");
    for (int k = 0; k < g.nt; ++k) f.values(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  for (const char* k : {"nx", "nt", "x_range", "t_range"}) f.metadata.erase(k);
  return f;
}

void save_field(const std::filesystem::path& path, const SolutionField& field) {
  io::write_file(path, format_field(field));
}

SolutionField load_field(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("field file not found: " + path.string());
  return parse_field(io::read_file(path));
}

}  // namespace pinn
