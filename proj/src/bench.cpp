#include "pinn/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pinn/error.hpp"
#include "pinn/optim.hpp"
#include "pinn/rng.hpp"

namespace pinn {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Either optimizer behind one step() call.
class Stepper {
 public:
  Stepper(const ExperimentConfig& config, Eigen::Index n) : config_(config) {
    const auto& o = config.optimizer;
    if (o.kind == OptimizerKind::kAdam)
      adam_ = AdamState::zeros(n, o.adam_hyper(), o.bias_correction);
    else
      pde_aware_ = PdeAwareState::zeros(n, o.pde_aware_hyper(), o.gradient_source, o.per_sample_form);
  }

  BatchLosses step(ParameterVector& params, const std::vector<CollocationPoint>& batch,
                   const CollocationSet& colloc) {
    BatchLosses losses;
    Eigen::VectorXd delta;
    if (adam_) {
      const Eigen::VectorXd g = batch_loss_gradient(config_.pde, params, batch, colloc, &losses);
      delta = adam_step(*adam_, g);
    } else {
      const auto psg = assemble_per_sample_gradients(config_.pde, params, batch, colloc,
                                                     pde_aware_->gradient_source,
                                                     pde_aware_->per_sample_form, &losses, false);
      delta = pde_aware_step(*pde_aware_, psg);
    }
    if (!delta.allFinite()) throw DivergenceError("non-finite parameter update");
    params.mutable_entries() += delta;
    if (!params.entries().allFinite()) throw DivergenceError("non-finite parameters");
    return losses;
  }

 private:
  const ExperimentConfig& config_;
  std::optional<AdamState> adam_;
  std::optional<PdeAwareState> pde_aware_;
};

}  // namespace

TrainingResult run_training(const ExperimentConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = config.sampling.seed;
  const CollocationSet colloc = sample_collocation(config.pde, config.sampling.n_int,
                                                   config.sampling.n_ic, config.sampling.n_bc, seed);
  TrainingResult result{init_params(config.model, seed), {}, false, {}, 0.0};
  result.history.optimizer = to_string(config.optimizer.kind);
  result.history.seed = seed;

  Stepper stepper(config, result.params.size());
  Rng shuffle_rng(seed, stream::kShuffle);
  std::vector<std::size_t> order(colloc.interior.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto b = static_cast<std::size_t>(config.training.batch_size);
  std::vector<CollocationPoint> batch;
  batch.reserve(b);

  try {
    for (long epoch = 1; epoch <= config.training.epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      double pde_sum = 0.0, ic_sum = 0.0, bc_sum = 0.0;
      long steps = 0;
      for (std::size_t start = 0; start < order.size(); start += b) {
        batch.clear();
        const std::size_t stop = std::min(order.size(), start + b);
        for (std::size_t i = start; i < stop; ++i) batch.push_back(colloc.interior[order[i]]);
        const BatchLosses l = stepper.step(result.params, batch, colloc);
        pde_sum += l.pde_sum;
        ic_sum += l.ic;
        bc_sum += l.bc;
        ++steps;
      }
      LossRecord rec;
      rec.epoch = epoch;
      rec.pde = pde_sum / static_cast<double>(order.size());
      rec.ic = ic_sum / static_cast<double>(steps);
      rec.bc = bc_sum / static_cast<double>(steps);
      rec.total = rec.pde + rec.ic + rec.bc;
      result.history.append(rec);
      if (on_epoch) on_epoch(rec);
    }
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.divergence_message = e.what();
  }
  result.wall_seconds = seconds_since(t0);
  return result;
}

fs::path run_directory(const ExperimentConfig& config) {
  return fs::path(config.output_dir) / (to_string(config.pde.kind) + "-" +
                                        to_string(config.optimizer.kind) + "-seed" +
                                        std::to_string(config.sampling.seed));
}

namespace {

std::string hash_hex(const PdeSpec& pde) { return io::hex64(pde.hash()); }

std::string optional_double(const std::optional<double>& v) {
  return v ? io::format_double(*v) : "none";
}

ExperimentConfig config_from_metadata(const io::Metadata& meta) {
  std::ostringstream top, body;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [key, value] : meta) {
    if (key.rfind("config.", 0) != 0) continue;
    const std::string rest = key.substr(7);
    const auto dot = rest.find('.');
    if (dot == std::string::npos)
      top << rest << " = " << value << '\n';
    else
      sections[rest.substr(0, dot)].emplace_back(rest.substr(dot + 1), value);
  }
  for (const auto& [name, kvs] : sections) {
    body << '[' << name << "]\n";
    for (const auto& [k, v] : kvs) body << k << " = " << v << '\n';
  }
  return ExperimentConfig::from_ini(top.str() + body.str());
}

}  // namespace

void save_run_record(const RunRecord& r) {
  io::Metadata meta = r.config.as_metadata();
  meta["status"] = r.status;
  meta["epochs_completed"] = std::to_string(r.epochs_completed);
  meta["epoch_convention"] = "full pass over interior points, ceil(n_int/batch_size) steps";
  meta["final.total"] = io::format_double(r.final_losses.total);
  meta["final.ic"] = io::format_double(r.final_losses.ic);
  meta["final.bc"] = io::format_double(r.final_losses.bc);
  meta["final.pde"] = io::format_double(r.final_losses.pde);
  meta["rel_l2"] = optional_double(r.rel_l2);
  meta["wall_seconds"] = io::format_double(r.wall_seconds);
  meta["pde.hash"] = hash_hex(r.config.pde);
  meta["history"] = r.history_path.filename().string();
  meta["checkpoint"] = r.checkpoint_path.filename().string();
  meta["field"] = r.field_path.filename().string();
  meta["error_field"] = r.error_field_path ? r.error_field_path->filename().string() : "none";
  std::ostringstream out;
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
  io::write_file(r.dir / "record.txt", out.str());
}

RunRecord load_run_record(const fs::path& dir) {
  const fs::path file = dir / "record.txt";
  if (!fs::exists(file)) throw ConfigError("no run record in " + dir.string());
  io::Metadata meta;
  std::istringstream in(io::read_file(file));
  std::string line, key, value;
  while (std::getline(in, line))
    if (io::split_key_value(line, key, value)) meta[key] = value;
  const auto need = [&](const std::string& k) -> const std::string& {
    const auto it = meta.find(k);
    if (it == meta.end()) throw ConfigError("run record lacks " + k);
    return it->second;
  };
  RunRecord r;
  r.config = config_from_metadata(meta);
  r.status = need("status");
  r.epochs_completed = io::parse_int(need("epochs_completed"));
  r.final_losses = {io::parse_double(need("final.total")), io::parse_double(need("final.ic")),
                    io::parse_double(need("final.bc")), io::parse_double(need("final.pde"))};
  if (need("rel_l2") != "none") r.rel_l2 = io::parse_double(need("rel_l2"));
  r.wall_seconds = io::parse_double(need("wall_seconds"));
  r.dir = dir;
  r.history_path = dir / need("history");
  r.checkpoint_path = dir / need("checkpoint");
  r.field_path = dir / need("field");
  if (need("error_field") != "none") r.error_field_path = dir / need("error_field");
  return r;
}

RunRecord train(const ExperimentConfig& config, const TrainOptions& options) {
  config.validate();
  RunRecord r;
  r.config = config;
  r.dir = run_directory(config);
  fs::create_directories(r.dir);
  r.history_path = r.dir / "history.csv";
  r.checkpoint_path = r.dir / "checkpoint.ckpt";
  r.field_path = r.dir / "field.pinnfield";

  const TrainingResult t = run_training(config, options.on_epoch);
  r.wall_seconds = t.wall_seconds;
  r.epochs_completed = static_cast<long>(t.history.size());
  save_history(r.history_path, t.history);

  io::Metadata extra = config.as_metadata();
  extra["pde.hash"] = hash_hex(config.pde);
  extra["epochs_completed"] = std::to_string(r.epochs_completed);
  save_checkpoint(r.checkpoint_path, t.params, config.sampling.seed, extra);

  if (t.diverged) {
    r.status = "diverged";
    if (!t.history.empty()) {
      const auto& last = t.history.records.back();
      r.final_losses = {last.total, last.ic, last.bc, last.pde};
    }
    save_run_record(r);
    throw DivergenceError("training diverged after " + std::to_string(r.epochs_completed) +
                          " epochs: " + t.divergence_message);
  }

  const CollocationSet colloc = sample_collocation(config.pde, config.sampling.n_int,
                                                   config.sampling.n_ic, config.sampling.n_bc,
                                                   config.sampling.seed);
  r.final_losses = total_loss(config.pde, t.params, colloc);

  SolutionField field = evaluate_on_grid(t.params, config.evaluation_grid());
  for (const auto& [k, v] : extra) field.metadata[k] = v;
  save_field(r.field_path, field);

  if (options.evaluate) {
    const SolutionField ref = load_reference(solve_reference(config));
    r.rel_l2 = rel_l2(field, ref);
    SolutionField err = abs_error_field(field, ref);
    err.metadata["rel_l2"] = io::format_double(*r.rel_l2);
    r.error_field_path = r.dir / "abs_error.pinnfield";
    save_field(*r.error_field_path, err);
  }
  save_run_record(r);
  return r;
}

GridSearchResult grid_search(const ExperimentConfig& config, const std::vector<double>& etas,
                             const std::vector<double>& beta1s, const std::vector<double>& beta2s) {
  config.validate();
  if (etas.empty() || beta1s.empty() || beta2s.empty()) throw ConfigError("empty hyperparameter grid");
  const CollocationSet held_out =
      sample_collocation(config.pde, config.sampling.n_int, config.sampling.n_ic,
                         config.sampling.n_bc, config.sampling.seed + 1);
  GridSearchResult result;
  for (double eta : etas)
    for (double beta1 : beta1s)
      for (double beta2 : beta2s) {
        ExperimentConfig c = config;
        c.optimizer.eta = eta;
        c.optimizer.beta1 = beta1;
        c.optimizer.beta2 = beta2;
        if (config.grid_search.epochs > 0) c.training.epochs = config.grid_search.epochs;
        const TrainingResult t = run_training(c);
        GridCell cell{eta, beta1, beta2, std::numeric_limits<double>::quiet_NaN(), t.diverged};
        if (!t.diverged) {
          const double v = total_loss(c.pde, t.params, held_out).total;
          if (std::isfinite(v)) cell.validation_loss = v;
          else cell.diverged = true;
        }
        result.cells.push_back(cell);
      }
  bool any = false;
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& c = result.cells[i];
    if (c.diverged) continue;
    if (!any || c.validation_loss < result.cells[result.best].validation_loss) result.best = i;
    any = true;
  }
  if (!any) throw DivergenceError("every grid-search cell diverged");

  std::ostringstream csv;
  csv << "eta,beta1,beta2,validation_loss,status,best\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& c = result.cells[i];
    csv << io::format_double(c.eta) << ',' << io::format_double(c.beta1) << ','
        << io::format_double(c.beta2) << ','
        << (c.diverged ? std::string("nan") : io::format_double(c.validation_loss)) << ','
        << (c.diverged ? "diverged" : "ok") << ',' << (i == result.best ? 1 : 0) << '\n';
  }
  fs::create_directories(config.output_dir);
  result.csv_path = fs::path(config.output_dir) /
                    ("grid-" + to_string(config.pde.kind) + "-" + to_string(config.optimizer.kind) +
                     "-seed" + std::to_string(config.sampling.seed) + ".csv");
  io::write_file(result.csv_path, csv.str());
  return result;
}

std::string reference_key(const ExperimentConfig& config) {
  const Grid s = config.reference_grid();
  const Grid e = config.evaluation_grid();
  std::ostringstream key;
  key << config.pde.canonical_string() << "scheme=" << scheme_id(config.pde.kind) << '\n'
      << "solver_grid=" << s.nx << 'x' << s.nt << '\n'
      << "evaluation_grid=" << e.nx << 'x' << e.nt << '\n';
  return io::hex64(io::fnv1a(key.str()));
}

namespace {

std::string content_hash(SolutionField f) {
  f.metadata.erase("content_hash");
  return io::hex64(io::fnv1a(format_field(f)));
}

Grid halved(const Grid& g) {
  Grid h = g;
  h.nx = (g.nx - 1) / 2 + 1;
  h.nt = (g.nt - 1) / 2 + 1;
  return h;
}

}  // namespace

SolutionField load_reference(const fs::path& path) {
  SolutionField f = load_field(path);
  const auto it = f.metadata.find("content_hash");
  if (it == f.metadata.end()) throw VerificationError("reference lacks a content hash: " + path.string());
  if (it->second != content_hash(f))
    throw VerificationError("reference content hash mismatch: " + path.string());
  return f;
}

fs::path solve_reference(const ExperimentConfig& config) {
  config.validate();
  const fs::path dir(config.evaluation.cache_dir);
  const fs::path file = dir / (to_string(config.pde.kind) + "-" + reference_key(config) + ".pinnfield");
  if (fs::exists(file)) {
    load_reference(file);
    return file;
  }
  const Grid solver = config.reference_grid();
  const Grid eval = config.evaluation_grid();
  if ((solver.nx - 1) % 2 != 0 || (solver.nt - 1) % 2 != 0)
    throw ConfigError("reference grid needs an even number of cells per axis");

  SolutionField fine;
  SolutionField coarse;
  try {
    fine = solve(config.pde, solver);
    coarse = solve(config.pde, halved(solver));
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + " [scheme " + scheme_id(config.pde.kind) + "]");
  }
  const Grid& common = coarse.grid;
  SolutionField a = restrict_to(fine, common);
  const double diff = std::sqrt((a.values - coarse.values).squaredNorm() / a.values.squaredNorm());
  if (!(diff < 1e-2)) {
    std::ostringstream msg;
    msg << "reference failed self-convergence: Rel-L2 " << diff << " between " << common.nx << 'x'
        << common.nt << " and " << solver.nx << 'x' << solver.nt << " [scheme "
        << scheme_id(config.pde.kind) << "]";
    throw VerificationError(msg.str());
  }

  SolutionField out = restrict_to(fine, eval);
  out.metadata["solver_grid"] = std::to_string(solver.nx) + "x" + std::to_string(solver.nt);
  out.metadata["self_convergence_rel_l2"] = io::format_double(diff);
  out.metadata["grid_convention"] = "nodes per axis";
  out.metadata["pde.hash"] = hash_hex(config.pde);
  out.metadata["cache_key"] = reference_key(config);
  out.metadata["content_hash"] = content_hash(out);
  fs::create_directories(dir);
  save_field(file, out);
  return file;
}

EvaluationResult evaluate(const fs::path& checkpoint, const ExperimentConfig& config,
                          const fs::path& out_dir) {
  config.validate();
  if (!fs::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
  const Checkpoint ck = load_checkpoint(checkpoint);
  const auto it = ck.metadata.find("pde.hash");
  if (it == ck.metadata.end()) throw ConfigError("checkpoint does not record its equation hash");
  if (it->second != hash_hex(config.pde))
    throw ConfigError("checkpoint equation hash " + it->second + " does not match config " +
                      hash_hex(config.pde));
  const SolutionField ref = load_reference(solve_reference(config));
  const SolutionField pred = evaluate_on_grid(ck.params, config.evaluation_grid());
  EvaluationResult r;
  r.rel_l2 = rel_l2(pred, ref);
  SolutionField err = abs_error_field(pred, ref);
  r.max_abs_error = err.values.maxCoeff();
  err.metadata["rel_l2"] = io::format_double(r.rel_l2);
  err.metadata["checkpoint"] = checkpoint.string();
  fs::create_directories(out_dir);
  r.error_field_path = out_dir / "abs_error.pinnfield";
  save_field(r.error_field_path, err);
  return r;
}

std::vector<ComparisonRow> compare(const std::vector<fs::path>& run_dirs) {
  if (run_dirs.size() < 2) throw ConfigError("compare needs at least two runs");
  std::vector<ComparisonRow> rows;
  std::optional<std::string> pde_hash;
  for (const auto& dir : run_dirs) {
    const RunRecord r = load_run_record(dir);
    const std::string h = hash_hex(r.config.pde);
    if (pde_hash && *pde_hash != h) throw ConfigError("compare: runs solve different equations");
    pde_hash = h;
    ComparisonRow row;
    row.run = dir.filename().string();
    if (row.run.empty()) row.run = dir.parent_path().filename().string();
    row.optimizer = to_string(r.config.optimizer.kind);
    row.seed = r.config.sampling.seed;
    row.final_loss = r.final_losses.total;
    row.rel_l2 = r.rel_l2;
    row.wall_seconds = r.wall_seconds;
    const LossHistory h2 = load_history(r.history_path);
    try {
      row.smoothness = loss_smoothness(h2);
    } catch (const Error&) {
      row.smoothness = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "run,optimizer,seed,final_loss,rel_l2,smoothness,wall_seconds\n";
  for (const auto& r : rows)
    out << r.run << ',' << r.optimizer << ',' << r.seed << ',' << io::format_double(r.final_loss)
        << ',' << optional_double(r.rel_l2) << ','
        << (std::isfinite(r.smoothness) ? io::format_double(r.smoothness) : "nan") << ','
        << io::format_double(r.wall_seconds) << '\n';
  return out.str();
}

}  // namespace pinn
