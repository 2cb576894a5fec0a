#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pinn/bench.hpp"
#include "pinn/error.hpp"
#include "pinn/io.hpp"

using namespace pinn;
namespace fs = std::filesystem;

namespace {

ExperimentConfig smoke(const std::string& dir) {
  auto c = ExperimentConfig::preset_config("smoke");
  c.output_dir = (fs::temp_directory_path() / "pinn_bench_test" / dir).string();
  c.evaluation.cache_dir = (fs::temp_directory_path() / "pinn_bench_test" / "cache").string();
  fs::remove_all(c.output_dir);
  return c;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("zero epochs return the initial network") {
    auto c = smoke("zero");
    c.training.epochs = 0;
    const auto r = run_training(c);
    CHECK(r.history.empty());
    CHECK(r.params == init_params(c.model, c.sampling.seed));
  }

  TEST_CASE("training is deterministic") {
    auto c = smoke("det");
    c.training.epochs = 3;
    for (auto kind : {OptimizerKind::kPdeAware, OptimizerKind::kAdam}) {
      c.optimizer = OptimizerConfig::defaults(kind);
      const auto a = run_training(c);
      const auto b = run_training(c);
      CHECK(a.params == b.params);
      CHECK(format_history_csv(a.history) == format_history_csv(b.history));
      CHECK(a.history.size() == 3);
      c.sampling.seed = 1;
      CHECK_FALSE(run_training(c).params == a.params);
      c.sampling.seed = 0;
    }
  }

  TEST_CASE("history rows decompose") {
    auto c = smoke("rows");
    c.pde = PdeSpec::kdv();
    const auto r = run_training(c);
    for (const auto& rec : r.history.records) CHECK(rec.total == rec.pde + rec.ic + rec.bc);
  }

  TEST_CASE("train writes every artifact and they reload") {
    auto c = smoke("train");
    const RunRecord r = train(c);
    CHECK(fs::exists(r.history_path));
    CHECK(fs::exists(r.checkpoint_path));
    CHECK(fs::exists(r.field_path));
    REQUIRE(r.error_field_path.has_value());
    CHECK(fs::exists(*r.error_field_path));
    REQUIRE(r.rel_l2.has_value());
    CHECK(std::isfinite(*r.rel_l2));
    CHECK(load_history(r.history_path).size() == static_cast<std::size_t>(c.training.epochs));
    const auto field = load_field(r.field_path);
    CHECK(field.grid.nx == 41);

    const RunRecord back = load_run_record(r.dir);
    CHECK(back.config.to_ini() == c.to_ini());
    CHECK(back.final_losses.total == r.final_losses.total);
    CHECK(*back.rel_l2 == *r.rel_l2);

    // In-process evaluation equals evaluation from the saved checkpoint.
    const auto ev = evaluate(r.checkpoint_path, c, r.dir / "eval");
    CHECK(ev.rel_l2 == *r.rel_l2);
    CHECK(load_field(ev.error_field_path).values.rows() == 41);
  }

  TEST_CASE("evaluate rejects missing checkpoints and foreign equations") {
    auto c = smoke("eval");
    const RunRecord r = train(c);
    CHECK_THROWS_AS(evaluate(r.dir / "missing.ckpt", c, r.dir), ConfigError);
    auto other = c;
    other.pde.nu *= 2;
    CHECK_THROWS_AS(evaluate(r.checkpoint_path, other, r.dir), ConfigError);
  }

  TEST_CASE("reference cache") {
    auto c = smoke("cache");
    const auto p1 = solve_reference(c);
    const std::string text = io::read_file(p1);
    const auto p2 = solve_reference(c);
    CHECK(p1 == p2);
    CHECK(io::read_file(p2) == text);
    auto c2 = c;
    c2.pde.nu *= 1.5;
    CHECK(reference_key(c2) != reference_key(c));
    CHECK(load_reference(p1).metadata.count("self_convergence_rel_l2") == 1);
    // Tampering is detected.
    const auto copy = p1.parent_path() / "tampered.pinnfield";
    std::string bad = text;
    const auto digit = bad.find_first_of("123456789", bad.size() / 2);
    bad[digit] = bad[digit] == '1' ? '2' : '1';
    io::write_file(copy, bad);
    CHECK_THROWS_AS(load_reference(copy), VerificationError);
    fs::remove(copy);
  }

  TEST_CASE("compare") {
    auto c = smoke("cmp");
    c.training.epochs = 24;
    const auto a = train(c);
    c.optimizer = OptimizerConfig::defaults(OptimizerKind::kAdam);
    const auto b = train(c);
    const auto rows = compare({a.dir, b.dir, a.dir});
    CHECK(rows.size() == 3);
    CHECK(rows[0].final_loss == rows[2].final_loss);
    CHECK(rows[0].smoothness == rows[2].smoothness);
    CHECK(rows[0].smoothness == loss_smoothness(load_history(a.history_path)));
    CHECK(rows[1].optimizer == "adam");
    CHECK(format_comparison_csv(rows).rfind("run,optimizer,seed,final_loss,rel_l2,smoothness,wall_seconds\n", 0) == 0);
    CHECK_THROWS_AS(compare({a.dir}), ConfigError);
    auto k = smoke("cmp_kdv");
    k.pde = PdeSpec::kdv();
    const auto kr = train(k, {false, {}});
    CHECK_THROWS_AS(compare({a.dir, kr.dir}), ConfigError);
  }

  TEST_CASE("grid search has eight cells") {
    auto c = smoke("grid");
    const auto g = grid_search(c);
    CHECK(g.cells.size() == 8);
    CHECK(fs::exists(g.csv_path));
    CHECK_FALSE(g.cells[g.best].diverged);
    for (const auto& cell : g.cells) CHECK(cell.validation_loss >= g.cells[g.best].validation_loss);
  }

  TEST_CASE("divergence keeps the partial history") {
    auto c = smoke("diverge");
    c.training.epochs = 50;
    c.optimizer.eta = 1e6;
    c.optimizer.epsilon = 0.0;
    bool threw = false;
    try {
      train(c);
    } catch (const DivergenceError&) {
      threw = true;
    }
    if (threw) {
      const auto r = load_run_record(run_directory(c));
      CHECK(r.status == "diverged");
      CHECK(fs::exists(r.history_path));
    } else {
      MESSAGE("eta = 1e6 did not diverge on this configuration");
    }
  }
}
