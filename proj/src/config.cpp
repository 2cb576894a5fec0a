#include "pinn/config.hpp"

#include <sstream>
#include <vector>

#include "pinn/error.hpp"

namespace pinn {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "pde_aware"; }

OptimizerKind parse_optimizer_kind(const std::string& text) {
  if (text == "pde_aware") return OptimizerKind::kPdeAware;
  if (text == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + text + "'");
}

OptimizerConfig OptimizerConfig::defaults(OptimizerKind kind) {
  OptimizerConfig c;
  c.kind = kind;
  if (kind == OptimizerKind::kAdam) {
    c.beta1 = 0.9;
    c.beta2 = 0.999;
  }
  return c;
}

ExperimentConfig ExperimentConfig::preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "paper") return c;
  if (name == "desk") {
    c.model.layer_sizes = {2, 32, 32, 1};
    c.training.epochs = 2000;
    c.grid_search.epochs = 500;
    return c;
  }
  if (name == "smoke") {
    c.model.layer_sizes = {2, 8, 8, 1};
    c.sampling = {256, 64, 64, 0};
    c.training = {64, 5};
    c.evaluation.nx = 41;
    c.evaluation.nt = 41;
    c.evaluation.ref_nx = 641;
    c.evaluation.ref_nt = 161;
    c.grid_search.epochs = 2;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (expected paper, desk or smoke)");
}

void ExperimentConfig::validate() const {
  pde.validate();
  model.validate();
  const auto& o = optimizer;
  if (!(o.eta > 0.0)) throw ConfigError("optimizer.eta must be positive");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0))
    throw ConfigError("optimizer betas must lie in [0, 1)");
  if (!(o.epsilon >= 0.0)) throw ConfigError("optimizer.epsilon must be non-negative");
  if (sampling.n_int < 1 || sampling.n_ic < 1 || sampling.n_bc < 1)
    throw ConfigError("sampling counts must be positive");
  if (training.batch_size < 1) throw ConfigError("training.batch_size must be positive");
  if (training.batch_size > sampling.n_int)
    throw ConfigError("training.batch_size exceeds sampling.n_int");
  if (training.epochs < 0) throw ConfigError("training.epochs must be non-negative");
  if (grid_search.epochs < 0) throw ConfigError("grid_search.epochs must be non-negative");
  evaluation_grid();
  reference_grid();
  if (evaluation.cache_dir.empty()) throw ConfigError("evaluation.cache_dir is empty");
  if (output_dir.empty()) throw ConfigError("output.dir is empty");
}

Grid ExperimentConfig::evaluation_grid() const {
  Grid g{evaluation.nx, evaluation.nt, pde.x_min, pde.x_max, 0.0, pde.t_max};
  g.validate();
  return g;
}

Grid ExperimentConfig::reference_grid() const {
  int nx = evaluation.ref_nx, nt = evaluation.ref_nt;
  // KdV's dispersive time-step limit scales with dx^3, so it gets a coarser x grid.
  const bool kdv = pde.kind == PdeKind::kKdV;
  if (nx == 0) nx = kdv ? 801 : 1601;
  if (nt == 0) nt = kdv ? 401 : 1601;
  Grid g{nx, nt, pde.x_min, pde.x_max, 0.0, pde.t_max};
  g.validate();
  return g;
}

namespace {

struct Entry {
  std::string section, key, value;
};

std::vector<Entry> entries_of(const ExperimentConfig& c) {
  const auto format_double = io::format_shortest;
  const auto& p = c.pde;
  std::vector<Entry> e{
      {"", "preset", c.preset},
      {"pde", "kind", to_string(p.kind)},
  };
  switch (p.kind) {
    case PdeKind::kBurgers: e.push_back({"pde", "nu", format_double(p.nu)}); break;
    case PdeKind::kAllenCahn: e.push_back({"pde", "eps", format_double(p.eps)}); break;
    case PdeKind::kKdV: e.push_back({"pde", "mu", format_double(p.mu)}); break;
  }
  const auto& o = c.optimizer;
  std::vector<Entry> rest{
      {"pde", "ic", p.ic.id},
      {"pde", "forcing", p.forcing.id},
      {"pde", "bc", to_string(p.bc)},
      {"pde", "bc_value", format_double(p.bc_value)},
      {"pde", "x_min", format_double(p.x_min)},
      {"pde", "x_max", format_double(p.x_max)},
      {"pde", "t_max", format_double(p.t_max)},
      {"model", "layers", c.model.layer_string()},
      {"model", "activation", c.model.activation},
      {"optimizer", "kind", to_string(o.kind)},
      {"optimizer", "eta", format_double(o.eta)},
      {"optimizer", "beta1", format_double(o.beta1)},
      {"optimizer", "beta2", format_double(o.beta2)},
      {"optimizer", "epsilon", format_double(o.epsilon)},
      {"optimizer", "gradient_source", to_string(o.gradient_source)},
      {"optimizer", "per_sample_form", to_string(o.per_sample_form)},
      {"optimizer", "bias_correction", o.bias_correction ? "true" : "false"},
      {"sampling", "n_int", std::to_string(c.sampling.n_int)},
      {"sampling", "n_ic", std::to_string(c.sampling.n_ic)},
      {"sampling", "n_bc", std::to_string(c.sampling.n_bc)},
      {"sampling", "seed", std::to_string(c.sampling.seed)},
      {"training", "batch_size", std::to_string(c.training.batch_size)},
      {"training", "epochs", std::to_string(c.training.epochs)},
      {"evaluation", "nx", std::to_string(c.evaluation.nx)},
      {"evaluation", "nt", std::to_string(c.evaluation.nt)},
      {"evaluation", "ref_nx", std::to_string(c.evaluation.ref_nx)},
      {"evaluation", "ref_nt", std::to_string(c.evaluation.ref_nt)},
      {"evaluation", "cache_dir", c.evaluation.cache_dir},
      {"grid_search", "epochs", std::to_string(c.grid_search.epochs)},
      {"output", "dir", c.output_dir},
  };
  e.insert(e.end(), rest.begin(), rest.end());
  return e;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

int parse_count(const std::string& v) {
  const long long n = io::parse_int(v);
  if (n < 0 || n > 1'000'000'000) throw ConfigError("count out of range: " + v);
  return static_cast<int>(n);
}

void apply(ExperimentConfig& c, const Entry& e) {
  const auto& s = e.section;
  const auto& k = e.key;
  const auto& v = e.value;
  const auto num = [&] { return io::parse_double(v); };
  auto& p = c.pde;
  auto& o = c.optimizer;
  if (s.empty() && k == "preset") c.preset = v;
  else if (s == "pde" && k == "kind") {
    const PdeKind kind = parse_pde_kind(v);
    if (kind != p.kind) p = PdeSpec::preset(kind);
  } else if (s == "pde" && k == "nu") p.nu = num();
  else if (s == "pde" && k == "eps") p.eps = num();
  else if (s == "pde" && k == "mu") p.mu = num();
  else if (s == "pde" && k == "ic") p.ic = named_function(v);
  else if (s == "pde" && k == "forcing") p.forcing = named_function(v);
  else if (s == "pde" && k == "bc") p.bc = parse_boundary_kind(v);
  else if (s == "pde" && k == "bc_value") p.bc_value = num();
  else if (s == "pde" && k == "x_min") p.x_min = num();
  else if (s == "pde" && k == "x_max") p.x_max = num();
  else if (s == "pde" && k == "t_max") p.t_max = num();
  else if (s == "model" && k == "layers") c.model.layer_sizes = ModelSpec::parse_layers(v).layer_sizes;
  else if (s == "model" && k == "activation") c.model.activation = v;
  else if (s == "optimizer" && k == "kind") {
    const OptimizerKind kind = parse_optimizer_kind(v);
    if (kind != o.kind) o = OptimizerConfig::defaults(kind);
  } else if (s == "optimizer" && k == "eta") o.eta = num();
  else if (s == "optimizer" && k == "beta1") o.beta1 = num();
  else if (s == "optimizer" && k == "beta2") o.beta2 = num();
  else if (s == "optimizer" && k == "epsilon") o.epsilon = num();
  else if (s == "optimizer" && k == "gradient_source") o.gradient_source = parse_gradient_source(v);
  else if (s == "optimizer" && k == "per_sample_form") o.per_sample_form = parse_per_sample_form(v);
  else if (s == "optimizer" && k == "bias_correction") o.bias_correction = parse_bool(v);
  else if (s == "sampling" && k == "n_int") c.sampling.n_int = parse_count(v);
  else if (s == "sampling" && k == "n_ic") c.sampling.n_ic = parse_count(v);
  else if (s == "sampling" && k == "n_bc") c.sampling.n_bc = parse_count(v);
  else if (s == "sampling" && k == "seed") {
    const long long seed = io::parse_int(v);
    if (seed < 0) throw ConfigError("sampling.seed must be non-negative");
    c.sampling.seed = static_cast<std::uint64_t>(seed);
  } else if (s == "training" && k == "batch_size") c.training.batch_size = parse_count(v);
  else if (s == "training" && k == "epochs") c.training.epochs = parse_count(v);
  else if (s == "evaluation" && k == "nx") c.evaluation.nx = parse_count(v);
  else if (s == "evaluation" && k == "nt") c.evaluation.nt = parse_count(v);
  else if (s == "evaluation" && k == "ref_nx") c.evaluation.ref_nx = parse_count(v);
  else if (s == "evaluation" && k == "ref_nt") c.evaluation.ref_nt = parse_count(v);
  else if (s == "evaluation" && k == "cache_dir") c.evaluation.cache_dir = v;
  else if (s == "grid_search" && k == "epochs") c.grid_search.epochs = parse_count(v);
  else if (s == "output" && k == "dir") c.output_dir = v;
  else throw ConfigError("unknown config key '" + (s.empty() ? k : s + "." + k) + "'");
}

}  // namespace

std::string ExperimentConfig::to_ini() const {
  std::ostringstream out;
  std::string section;
  for (const auto& e : entries_of(*this)) {
    if (e.section != section) {
      section = e.section;
      out << "\n[" << section << "]\n";
    }
    out << e.key << " = " << e.value << '\n';
  }
  return out.str();
}

ExperimentConfig ExperimentConfig::from_ini(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string raw, section;
  std::vector<Entry> entries;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = io::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = io::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    std::string key, value;
    if (!io::split_key_value(line, key, value))
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    entries.push_back({section, io::trim(key), io::trim(value)});
  }
  // Kinds first: they reset the dependent defaults.
  const auto is_kind = [](const Entry& e) {
    return e.key == "kind" && (e.section == "pde" || e.section == "optimizer");
  };
  try {
    for (const auto& e : entries)
      if (is_kind(e)) apply(base, e);
    for (const auto& e : entries)
      if (!is_kind(e)) apply(base, e);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& err) {
    throw ConfigError(err.what());
  }
  base.validate();
  return base;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path, ExperimentConfig base) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return from_ini(io::read_file(path), std::move(base));
}

ExperimentConfig ExperimentConfig::from_ini(const std::string& text) {
  return from_ini(text, ExperimentConfig{});
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return load(path, ExperimentConfig{});
}

io::Metadata ExperimentConfig::as_metadata() const {
  io::Metadata m;
  for (const auto& e : entries_of(*this))
    m["config." + (e.section.empty() ? e.key : e.section + "." + e.key)] = e.value;
  return m;
}

}  // namespace pinn
