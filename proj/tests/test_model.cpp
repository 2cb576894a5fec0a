#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "pinn/autodiff.hpp"
#include "pinn/error.hpp"
#include "pinn/model.hpp"

using namespace pinn;

TEST_SUITE("model") {
  TEST_CASE("parameter count of the default network") {
    ModelSpec spec;
    // 2-64-64-64-1
    CHECK(spec.parameter_count() == 3 * 64 + 2 * 65 * 64 + 65);
    CHECK(init_params(spec, 3).size() == 8577);
  }

  TEST_CASE("spec validation") {
    ModelSpec s;
    s.layer_sizes = {3, 4, 1};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.layer_sizes = {2, 4, 2};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.layer_sizes = {2, 0, 1};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.layer_sizes = {2, 4, 1};
    s.activation = "relu";
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK(ModelSpec::parse_layers("2, 16,16 ,1").layer_sizes == std::vector<int>{2, 16, 16, 1});
  }

  TEST_CASE("init is deterministic and respects the Glorot bound") {
    ModelSpec spec;
    spec.layer_sizes = {2, 16, 8, 1};
    const auto a = init_params(spec, 11);
    const auto b = init_params(spec, 11);
    CHECK(a == b);
    CHECK_FALSE(a == init_params(spec, 12));
    for (int l = 0; l < spec.num_affine_layers(); ++l) {
      const auto& lay = a.layout()[static_cast<std::size_t>(l)];
      CHECK(a.weights(l).cwiseAbs().maxCoeff() <= glorot_bound(lay.n_in, lay.n_out));
      CHECK(a.bias(l).isZero(0.0));
    }
  }

  TEST_CASE("canonical layout is row-major weights then biases") {
    ModelSpec spec;
    spec.layer_sizes = {2, 3, 1};
    Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(13, 0, 12);
    ParameterVector p(spec, e);
    CHECK(p.weights(0)(1, 0) == 2.0);  // row 1, column 0
    CHECK(p.weights(0)(2, 1) == 5.0);
    CHECK(p.bias(0)(0) == 6.0);
    CHECK(p.weights(1)(0, 2) == 11.0);
    CHECK(p.bias(1)(0) == 12.0);
  }

  TEST_CASE("parameter vector rejects wrong length and non-finite values") {
    ModelSpec spec;
    spec.layer_sizes = {2, 3, 1};
    CHECK_THROWS_AS(ParameterVector(spec, Eigen::VectorXd::Zero(12)), ConfigError);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(13);
    e[4] = std::nan("");
    CHECK_THROWS(ParameterVector(spec, e));
  }

  TEST_CASE("zero last layer gives the bias everywhere") {
    auto p = testing::random_net({2, 8, 8, 1}, 5);
    const auto& last = p.layout().back();
    for (int i = 0; i < last.n_in; ++i) p.mutable_entries()[last.weight_offset + i] = 0.0;
    p.mutable_entries()[last.bias_offset] = 0.75;
    Rng rng(1);
    for (int k = 0; k < 20; ++k) CHECK(forward(p, rng.uniform(-1, 1), rng.uniform(0, 1)) == 0.75);
  }

  TEST_CASE("output is bounded by the last-layer weights") {
    const auto p = testing::random_net({2, 8, 8, 1}, 9);
    const auto& last = p.layout().back();
    const double bound = p.entries().segment(last.weight_offset, last.n_in).cwiseAbs().sum() +
                         std::abs(p.entries()[last.bias_offset]);
    Rng rng(2);
    for (int k = 0; k < 200; ++k)
      CHECK(std::abs(forward(p, rng.uniform(-5, 5), rng.uniform(-5, 5))) <= bound);
  }

  TEST_CASE("forward agrees exactly with the zero-order jet") {
    const auto p = testing::random_net({2, 16, 16, 1}, 4);
    Rng rng(3);
    for (int k = 0; k < 1000; ++k) {
      const double x = rng.uniform(-1, 1), t = rng.uniform(0, 1);
      CHECK(forward(p, x, t) == eval_jet(p, x, t, {0, 0}).u);
    }
  }

  TEST_CASE("checkpoint text round-trips exactly") {
    const auto p = testing::random_net({2, 5, 4, 1}, 8);
    const std::string text = format_checkpoint(p, 42, {{"note", "x"}});
    CHECK(text.rfind("PINNCKPT v1\n", 0) == 0);
    const Checkpoint c = parse_checkpoint(text);
    CHECK(c.params == p);
    CHECK(c.seed == 42);
    CHECK(c.metadata.at("note") == "x");
    CHECK(format_checkpoint(c.params, c.seed, c.metadata) == text);

    const auto path = std::filesystem::temp_directory_path() / "pinn_model_test.ckpt";
    save_checkpoint(path, p, 42);
    CHECK(load_checkpoint(path).params == p);
    std::filesystem::remove(path);
  }

  TEST_CASE("corrupt checkpoints are rejected") {
    const auto p = testing::random_net({2, 3, 1}, 1);
    std::string text = format_checkpoint(p, 1);
    CHECK_THROWS(parse_checkpoint("PINNCKPT v2\n"));
    text.pop_back();
    CHECK_THROWS(parse_checkpoint(text.substr(0, text.rfind('\n') + 1)));
    CHECK_THROWS(load_checkpoint("/nonexistent/file.ckpt"));
  }
}
