#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "pinn/error.hpp"
#include "pinn/refsolve.hpp"

using namespace pinn;

namespace {

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return std::sqrt((a - b).squaredNorm() / b.squaredNorm());
}

PdeSpec soliton_spec(double c, double x0) {
  auto s = PdeSpec::kdv();
  const double mu = s.mu;
  s.ic = NamedFunction{"soliton", [=](double x) { return kdv_soliton(x, 0.0, c, mu, x0); }};
  return s;
}

}  // namespace

TEST_SUITE("refsolve") {
  TEST_CASE("grid geometry") {
    const Grid g = Grid::for_spec(PdeSpec::burgers(), 401, 401);
    CHECK(g.dx() == doctest::Approx(0.005));
    CHECK(g.x(0) == -1.0);
    CHECK(g.x(400) == doctest::Approx(1.0));
    CHECK(g.t(400) == doctest::Approx(1.0));
    CHECK_THROWS_AS(Grid::for_spec(PdeSpec::burgers(), 1, 5), ConfigError);
  }

  TEST_CASE("zero data stays zero") {
    for (auto spec : {PdeSpec::burgers(), PdeSpec::allen_cahn(), PdeSpec::kdv()}) {
      spec.ic = named_function("zero");
      const auto f = solve(spec, Grid::for_spec(spec, 65, 33));
      CHECK(f.values.isZero(0.0));
    }
  }

  TEST_CASE("Allen-Cahn keeps the stable state u = 1") {
    auto spec = PdeSpec::allen_cahn();
    spec.ic = named_function("one");
    const auto f = solve(spec, Grid::for_spec(spec, 65, 33));
    CHECK((f.values.array() - 1.0).abs().maxCoeff() < 1e-14);
  }

  TEST_CASE("Burgers self-convergence and maximum principle") {
    const auto spec = PdeSpec::burgers();
    std::vector<SolutionField> f;
    for (int n : {1025, 2049, 4097}) f.push_back(solve(spec, Grid::for_spec(spec, n, n)));
    const Grid c = f[0].grid;
    const double e1 = rel(restrict_to(f[0], c).values, restrict_to(f[1], c).values);
    const double e2 = rel(restrict_to(f[1], c).values, restrict_to(f[2], c).values);
    MESSAGE("burgers: e1=" << e1 << " e2=" << e2 << " order=" << std::log2(e1 / e2));
    CHECK(e1 < 1e-2);
    CHECK(e2 < 1e-2);
    CHECK(std::log2(e1 / e2) >= 1.5);
    for (const auto& s : f) CHECK(s.values.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    // Coarser pair from the 512-cell grid.
    const auto g512 = solve(spec, Grid::for_spec(spec, 513, 513));
    CHECK(rel(g512.values, restrict_to(f[0], g512.grid).values) < 1e-2);
  }

  TEST_CASE("Allen-Cahn self-convergence and bounds") {
    const auto spec = PdeSpec::allen_cahn();
    std::vector<SolutionField> f;
    for (int n : {513, 1025, 2049}) f.push_back(solve(spec, Grid::for_spec(spec, n, n)));
    const Grid c = f[0].grid;
    const double e1 = rel(restrict_to(f[0], c).values, restrict_to(f[1], c).values);
    const double e2 = rel(restrict_to(f[1], c).values, restrict_to(f[2], c).values);
    MESSAGE("allen_cahn: e1=" << e1 << " e2=" << e2 << " order=" << std::log2(e1 / e2));
    CHECK(e1 < 1e-2);
    CHECK(std::log2(e1 / e2) >= 1.5);
    CHECK(f[2].values.maxCoeff() <= 1.05);
    CHECK(f[2].values.minCoeff() >= -1.05);
    // periodic copy of the first node
    CHECK((f[2].values.row(0) - f[2].values.row(f[2].grid.nx - 1)).isZero(0.0));
  }

  TEST_CASE("KdV soliton transport and mass conservation") {
    const double c = 1.0, x0 = -0.25;
    const auto spec = soliton_spec(c, x0);
    Grid g = Grid::for_spec(spec, 401, 51);
    g.t_max = 0.5;
    const auto f = solve_kdv(spec, g);
    Eigen::VectorXd exact(g.nx);
    for (int i = 0; i < g.nx; ++i) exact[i] = kdv_soliton(g.x(i), 0.5, c, spec.mu, x0);
    CHECK(rel(f.values.col(g.nt - 1), exact) < 1e-2);
    const double m0 = f.values.col(0).head(g.nx - 1).sum() * g.dx();
    const double m1 = f.values.col(g.nt - 1).head(g.nx - 1).sum() * g.dx();
    CHECK(std::abs(m1 - m0) / std::abs(m0) < 1e-6);
  }

  TEST_CASE("KdV benchmark conserves mass and self-converges") {
    const auto spec = PdeSpec::kdv();
    std::vector<SolutionField> f;
    for (int n : {201, 401, 801}) f.push_back(solve(spec, Grid::for_spec(spec, n, 101)));
    const Grid c = f[0].grid;
    const double e1 = rel(restrict_to(f[0], c).values, restrict_to(f[1], c).values);
    const double e2 = rel(restrict_to(f[1], c).values, restrict_to(f[2], c).values);
    MESSAGE("kdv: e1=" << e1 << " e2=" << e2 << " order=" << std::log2(e1 / e2));
    CHECK(std::log2(e1 / e2) >= 1.5);
    const auto& v = f[2].values;
    const int n = f[2].grid.nx - 1;
    // The initial mass is zero for cos(pi x); compare against the L1 scale instead.
    const double scale = v.col(0).head(n).cwiseAbs().sum();
    CHECK(std::abs(v.col(v.cols() - 1).head(n).sum() - v.col(0).head(n).sum()) / scale < 1e-6);
  }

  TEST_CASE("soliton closed form") {
    const double c = 0.8, mu = 0.0022, x0 = 0.1;
    CHECK(kdv_soliton(x0 + c * 0.3, 0.3, c, mu, x0) == doctest::Approx(3 * c));
    for (double d : {0.01, 0.05, 0.2})
      CHECK(kdv_soliton(x0 + d, 0.0, c, mu, x0) == doctest::Approx(kdv_soliton(x0 - d, 0.0, c, mu, x0)));
    CHECK_THROWS_AS(kdv_soliton(0, 0, -1, mu, 0), ConfigError);
  }

  TEST_CASE("divergence and stability are reported") {
    auto spec = PdeSpec::allen_cahn();
    spec.ic = NamedFunction{"big", [](double) { return 20.0; }};
    CHECK_THROWS_AS(solve(spec, Grid::for_spec(spec, 33, 5)), DivergenceError);
    auto k = PdeSpec::kdv();
    k.bc = BoundaryKind::kDirichlet;
    CHECK_THROWS_AS(solve(k, Grid::for_spec(k, 33, 5)), ConfigError);
  }

  TEST_CASE("network sampled on a grid") {
    const auto p = testing::random_net({2, 8, 1}, 3);
    const Grid g{401, 401};
    const auto f = evaluate_on_grid(p, g);
    CHECK(f.values.rows() == 401);
    CHECK(f.values.cols() == 401);
    for (int i : {0, 17, 400})
      for (int k : {0, 250}) CHECK(f.values(i, k) == forward(p, g.x(i), g.t(k)));
    auto c = p;
    const auto& last = c.layout().back();
    c.mutable_entries().segment(last.weight_offset, last.n_in).setZero();
    const auto fc = evaluate_on_grid(c, Grid{21, 21});
    CHECK((fc.values.array() == c.entries()[last.bias_offset]).all());
  }

  TEST_CASE("restriction picks nodes when grids nest") {
    SolutionField fine;
    fine.grid = Grid{9, 5};
    fine.values.resize(9, 5);
    for (int i = 0; i < 9; ++i)
      for (int k = 0; k < 5; ++k) fine.values(i, k) = 10 * i + k;
    const auto c = restrict_to(fine, Grid{5, 3});
    CHECK(c.values(2, 1) == 42.0);
    CHECK(c.metadata.at("restriction") == "nodes");
    const auto b = restrict_to(fine, Grid{4, 5});
    CHECK(b.metadata.at("restriction") == "bilinear");
    CHECK(b.values(1, 0) == doctest::Approx(10 * 8.0 / 3.0));
  }

  TEST_CASE("field files round-trip exactly") {
    auto spec = PdeSpec::burgers();
    auto f = solve(spec, Grid::for_spec(spec, 33, 17));
    const std::string text = format_field(f);
    CHECK(text.rfind("PINNFIELD v1\n", 0) == 0);
    const auto g = parse_field(text);
    CHECK(g.grid == f.grid);
    CHECK(g.values == f.values);
    CHECK(g.metadata == f.metadata);
    CHECK(format_field(g) == text);
    const auto path = std::filesystem::temp_directory_path() / "pinn_field_test.pinnfield";
    save_field(path, f);
    CHECK(load_field(path).values == f.values);
    std::filesystem::remove(path);
    CHECK_THROWS(parse_field("PINNFIELD v0\n"));
    CHECK_THROWS(load_field("/nonexistent.pinnfield"));
  }
}
