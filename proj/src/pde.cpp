#include "pinn/pde.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "pinn/error.hpp"
#include "pinn/io.hpp"
#include "pinn/rng.hpp"

namespace pinn {

using std::numbers::pi;

std::string to_string(PdeKind kind) {
  switch (kind) {
    case PdeKind::kBurgers: return "burgers";
    case PdeKind::kAllenCahn: return "allen_cahn";
    case PdeKind::kKdV: return "kdv";
  }
  return "?";
}

std::string to_string(BoundaryKind kind) {
  return kind == BoundaryKind::kDirichlet ? "dirichlet" : "periodic";
}

PdeKind parse_pde_kind(const std::string& text) {
  if (text == "burgers") return PdeKind::kBurgers;
  if (text == "allen_cahn" || text == "allen-cahn") return PdeKind::kAllenCahn;
  if (text == "kdv") return PdeKind::kKdV;
  throw ConfigError("unknown pde kind '" + text + "'");
}

BoundaryKind parse_boundary_kind(const std::string& text) {
  if (text == "dirichlet") return BoundaryKind::kDirichlet;
  if (text == "periodic") return BoundaryKind::kPeriodic;
  throw ConfigError("unknown boundary kind '" + text + "'");
}

NamedFunction named_function(const std::string& id) {
  if (id == "zero") return {id, [](double) { return 0.0; }};
  if (id == "one") return {id, [](double) { return 1.0; }};
  if (id == "neg_sin_pi") return {id, [](double x) { return -std::sin(pi * x); }};
  if (id == "x2_cos_pi") return {id, [](double x) { return x * x * std::cos(pi * x); }};
  if (id == "cos_pi") return {id, [](double x) { return std::cos(pi * x); }};
  throw ConfigError("unknown function id '" + id + "'");
}

PdeSpec PdeSpec::burgers() {
  PdeSpec s;
  s.kind = PdeKind::kBurgers;
  s.nu = 0.01 / pi;
  s.ic = named_function("neg_sin_pi");
  s.bc = BoundaryKind::kDirichlet;
  return s;
}

PdeSpec PdeSpec::allen_cahn() {
  PdeSpec s;
  s.kind = PdeKind::kAllenCahn;
  s.eps = 1e-4;
  s.ic = named_function("x2_cos_pi");
  s.bc = BoundaryKind::kPeriodic;
  return s;
}

PdeSpec PdeSpec::kdv() {
  PdeSpec s;
  s.kind = PdeKind::kKdV;
  s.mu = 0.0022;
  s.ic = named_function("cos_pi");
  s.bc = BoundaryKind::kPeriodic;
  return s;
}

PdeSpec PdeSpec::preset(PdeKind kind) {
  switch (kind) {
    case PdeKind::kBurgers: return burgers();
    case PdeKind::kAllenCahn: return allen_cahn();
    case PdeKind::kKdV: return kdv();
  }
  return burgers();
}

double PdeSpec::coefficient() const {
  switch (kind) {
    case PdeKind::kBurgers: return nu;
    case PdeKind::kAllenCahn: return eps;
    case PdeKind::kKdV: return mu;
  }
  return 0.0;
}

void PdeSpec::validate() const {
  const double c = coefficient();
  if (!(std::isfinite(c) && c > 0.0))
    throw ConfigError("coefficient of " + to_string(kind) + " must be positive and finite");
  if (!(x_min < x_max) || !(t_max > 0.0)) throw ConfigError("empty domain");
  if (!ic.fn || !forcing.fn) throw ConfigError("missing initial condition or forcing");
}

DerivativeRequest PdeSpec::interior_request() const {
  return DerivativeRequest{kind == PdeKind::kKdV ? 3 : 2, 1};
}

std::string PdeSpec::canonical_string() const {
  std::ostringstream out;
  out << "pde.kind=" << to_string(kind) << '\n'
      << "pde.coefficient=" << io::format_shortest(coefficient()) << '\n'
      << "pde.ic=" << ic.id << '\n'
      << "pde.forcing=" << forcing.id << '\n'
      << "pde.bc=" << to_string(bc) << '\n';
  if (bc == BoundaryKind::kDirichlet) out << "pde.bc_value=" << io::format_shortest(bc_value) << '\n';
  out << "pde.domain=" << io::format_shortest(x_min) << ',' << io::format_shortest(x_max) << ",0,"
      << io::format_shortest(t_max) << '\n';
  return out.str();
}

std::uint64_t PdeSpec::hash() const { return io::fnv1a(canonical_string()); }

double interior_residual(const PdeSpec& spec, const Jet& jet, double x) {
  const bool third = spec.kind == PdeKind::kKdV;
  if (!jet.du_dt || !jet.du_dx || (!third && !jet.d2u_dx2) || (third && !jet.d3u_dx3))
    throw ConfigError("jet lacks the derivative orders required by " + to_string(spec.kind));
  return interior_residual_value(spec, jet.u, *jet.du_dt, *jet.du_dx, jet.d2u_dx2.value_or(0.0),
                                 jet.d3u_dx3.value_or(0.0), spec.forcing(x));
}

double ic_residual(const PdeSpec& spec, const ParameterVector& params, double x) {
  return forward(params, x, 0.0) - spec.ic(x);
}

BoundaryResidual bc_residual(const PdeSpec& spec, const ParameterVector& params, double t,
                             Wall side) {
  if (spec.bc == BoundaryKind::kDirichlet) {
    const double x = side == Wall::kMin ? spec.x_min : spec.x_max;
    return {forward(params, x, t) - spec.bc_value, std::nullopt};
  }
  const Jet lo = eval_jet(params, spec.x_min, t, {1, 0});
  const Jet hi = eval_jet(params, spec.x_max, t, {1, 0});
  return {lo.u - hi.u, *lo.du_dx - *hi.du_dx};
}

Eigen::RowVectorXd xs_of(const std::vector<CollocationPoint>& pts) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) v[static_cast<Eigen::Index>(i)] = pts[i].x;
  return v;
}

Eigen::RowVectorXd ts_of(const std::vector<CollocationPoint>& pts) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) v[static_cast<Eigen::Index>(i)] = pts[i].t;
  return v;
}

Eigen::RowVectorXd interior_residuals(const PdeSpec& spec, const BatchJets& jets,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& xs) {
  const auto& u = jets.output(kValue).array();
  const auto& ut = jets.output(kDt).array();
  const auto& ux = jets.output(kDx).array();
  Eigen::RowVectorXd f(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) f[i] = spec.forcing(xs[i]);
  switch (spec.kind) {
    case PdeKind::kBurgers:
      return (ut + u * ux - spec.nu * jets.output(kDxx).array() - f.array()).matrix();
    case PdeKind::kAllenCahn:
      return (ut - spec.eps * jets.output(kDxx).array() - 5.0 * (u - u.cube()) - f.array())
          .matrix();
    case PdeKind::kKdV:
      return (ut + u * ux + spec.mu * jets.output(kDxxx).array() - f.array()).matrix();
  }
  return {};
}

OutputAdjoints interior_adjoints(const PdeSpec& spec, const BatchJets& jets,
                                 const Eigen::RowVectorXd& residuals, bool squared,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& weights) {
  // Outer factor: d(w R^2)/dR = 2 w R, or w for the raw residual.
  const Eigen::Array<double, 1, Eigen::Dynamic> outer =
      squared ? (2.0 * weights.array() * residuals.array()).eval() : weights.array().eval();
  const auto& u = jets.output(kValue).array();
  const auto& ux = jets.output(kDx).array();
  OutputAdjoints a = jets.zero_adjoints();
  a[kDt] = outer.matrix();
  switch (spec.kind) {
    case PdeKind::kBurgers:
      a[kValue] = (outer * ux).matrix();
      a[kDx] = (outer * u).matrix();
      a[kDxx] = (-spec.nu * outer).matrix();
      break;
    case PdeKind::kAllenCahn:
      a[kValue] = (outer * (-5.0 * (1.0 - 3.0 * u.square()))).matrix();
      a[kDxx] = (-spec.eps * outer).matrix();
      break;
    case PdeKind::kKdV:
      a[kValue] = (outer * ux).matrix();
      a[kDx] = (outer * u).matrix();
      a[kDxxx] = (spec.mu * outer).matrix();
      break;
  }
  return a;
}

LossAndGradient ic_loss_and_gradient(const PdeSpec& spec, const ParameterVector& params,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& xs,
                                     bool with_gradient) {
  const Eigen::Index n = xs.size();
  if (n == 0) return {0.0, Eigen::VectorXd::Zero(params.size())};
  const Eigen::RowVectorXd ts = Eigen::RowVectorXd::Zero(n);
  BatchJets jets(params, xs, ts, {0, 0});
  Eigen::RowVectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r[i] = jets.output(kValue)[i] - spec.ic(xs[i]);
  LossAndGradient out;
  out.loss = r.squaredNorm() / static_cast<double>(n);
  if (with_gradient) {
    OutputAdjoints a = jets.zero_adjoints();
    a[kValue] = (2.0 / static_cast<double>(n)) * r;
    out.gradient = jets.gradient_sum(a);
  }
  return out;
}

LossAndGradient bc_loss_and_gradient(const PdeSpec& spec, const ParameterVector& params,
                                     const std::vector<CollocationPoint>& boundary,
                                     bool with_gradient) {
  const auto n = static_cast<Eigen::Index>(boundary.size());
  if (n == 0) return {0.0, Eigen::VectorXd::Zero(params.size())};
  const double inv_n = 1.0 / static_cast<double>(n);
  LossAndGradient out;
  if (spec.bc == BoundaryKind::kDirichlet) {
    const Eigen::RowVectorXd xs = xs_of(boundary);
    BatchJets jets(params, xs, ts_of(boundary), {0, 0});
    const Eigen::RowVectorXd r = jets.output(kValue).array() - spec.bc_value;
    out.loss = r.squaredNorm() * inv_n;
    if (with_gradient) {
      OutputAdjoints a = jets.zero_adjoints();
      a[kValue] = 2.0 * inv_n * r;
      out.gradient = jets.gradient_sum(a);
    }
    return out;
  }
  // Periodic: both walls at each sampled time, first n columns at x_min.
  Eigen::RowVectorXd xs(2 * n), ts(2 * n);
  const Eigen::RowVectorXd tb = ts_of(boundary);
  xs.head(n).setConstant(spec.x_min);
  xs.tail(n).setConstant(spec.x_max);
  ts.head(n) = tb;
  ts.tail(n) = tb;
  BatchJets jets(params, xs, ts, {1, 0});
  const Eigen::RowVectorXd rv = jets.output(kValue).head(n) - jets.output(kValue).tail(n);
  const Eigen::RowVectorXd rd = jets.output(kDx).head(n) - jets.output(kDx).tail(n);
  out.loss = (rv.squaredNorm() + rd.squaredNorm()) * inv_n;
  if (with_gradient) {
    OutputAdjoints a = jets.zero_adjoints();
    a[kValue].head(n) = 2.0 * inv_n * rv;
    a[kValue].tail(n) = -2.0 * inv_n * rv;
    a[kDx].head(n) = 2.0 * inv_n * rd;
    a[kDx].tail(n) = -2.0 * inv_n * rd;
    out.gradient = jets.gradient_sum(a);
  }
  return out;
}

LossComponents total_loss(const PdeSpec& spec, const ParameterVector& params,
                          const CollocationSet& colloc) {
  LossComponents L;
  if (!colloc.interior.empty()) {
    const Eigen::RowVectorXd xs = xs_of(colloc.interior);
    BatchJets jets(params, xs, ts_of(colloc.interior), spec.interior_request());
    L.pde = interior_residuals(spec, jets, xs).squaredNorm() /
            static_cast<double>(colloc.interior.size());
  }
  L.ic = ic_loss_and_gradient(spec, params, xs_of(colloc.initial), false).loss;
  L.bc = bc_loss_and_gradient(spec, params, colloc.boundary, false).loss;
  L.total = L.ic + L.bc + L.pde;
  if (!std::isfinite(L.total)) throw DivergenceError("non-finite loss");
  return L;
}

CollocationSet sample_collocation(const PdeSpec& spec, int n_int, int n_ic, int n_bc,
                                  std::uint64_t seed) {
  if (n_int <= 0 || n_ic <= 0 || n_bc <= 0) throw ConfigError("collocation counts must be positive");
  CollocationSet set;
  set.seed = seed;
  Rng rng(seed, stream::kSampling);
  set.interior.reserve(static_cast<std::size_t>(n_int));
  for (int i = 0; i < n_int; ++i) {
    const double x = rng.uniform(spec.x_min, spec.x_max);
    const double t = rng.uniform(0.0, spec.t_max);
    set.interior.push_back({x, t, PointRole::kInterior});
  }
  set.initial.reserve(static_cast<std::size_t>(n_ic));
  for (int k = 0; k < n_ic; ++k) {
    const double x = n_ic == 1 ? spec.x_min
                               : spec.x_min + k * (spec.x_max - spec.x_min) / (n_ic - 1);
    set.initial.push_back({x, 0.0, PointRole::kInitial});
  }
  // First ceil(n/2) points on x_min, the rest on x_max.
  const int n_lo = (n_bc + 1) / 2;
  set.boundary.reserve(static_cast<std::size_t>(n_bc));
  for (int k = 0; k < n_bc; ++k) {
    const double t = rng.uniform(0.0, spec.t_max);
    set.boundary.push_back({k < n_lo ? spec.x_min : spec.x_max, t, PointRole::kBoundary});
  }
  return set;
}

}  // namespace pinn
