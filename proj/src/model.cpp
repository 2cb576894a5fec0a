#include "pinn/model.hpp"

#include <cmath>
#include <sstream>

#include "pinn/autodiff.hpp"
#include "pinn/error.hpp"
#include "pinn/rng.hpp"

namespace pinn {

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("model needs at least an input and an output layer");
  if (layer_sizes.front() != 2) throw ConfigError("model input size must be 2 (x, t)");
  if (layer_sizes.back() != 1) throw ConfigError("model output size must be 1");
  for (int n : layer_sizes)
    if (n <= 0) throw ConfigError("layer sizes must be positive");
  if (activation != "tanh") throw ConfigError("unsupported activation '" + activation + "'");
}

Eigen::Index ModelSpec::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += static_cast<Eigen::Index>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  return n;
}

std::string ModelSpec::layer_string() const {
  std::string s;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(layer_sizes[i]);
  }
  return s;
}

ModelSpec ModelSpec::parse_layers(const std::string& text) {
  ModelSpec spec;
  spec.layer_sizes.clear();
  for (const auto& part : io::split(text, ','))
    spec.layer_sizes.push_back(static_cast<int>(io::parse_int(part)));
  spec.validate();
  return spec;
}

std::vector<LayerLayout> layer_layout(const ModelSpec& spec) {
  std::vector<LayerLayout> out;
  Eigen::Index offset = 0;
  for (int l = 0; l < spec.num_affine_layers(); ++l) {
    const int n_in = spec.layer_sizes[l];
    const int n_out = spec.layer_sizes[l + 1];
    LayerLayout lay{offset, offset + static_cast<Eigen::Index>(n_in) * n_out, n_in, n_out};
    offset = lay.bias_offset + n_out;
    out.push_back(lay);
  }
  return out;
}

ParameterVector::ParameterVector(ModelSpec spec, Eigen::VectorXd entries)
    : spec_(std::move(spec)), entries_(std::move(entries)) {
  spec_.validate();
  if (entries_.size() != spec_.parameter_count())
    throw ConfigError("parameter count mismatch: got " + std::to_string(entries_.size()) +
                      ", model " + spec_.layer_string() + " needs " +
                      std::to_string(spec_.parameter_count()));
  if (!entries_.allFinite()) throw DivergenceError("non-finite parameter entries");
  layout_ = layer_layout(spec_);
}

Eigen::Map<const RowMajorMatrixXd> ParameterVector::weights(int layer) const {
  const auto& lay = layout_[static_cast<std::size_t>(layer)];
  return {entries_.data() + lay.weight_offset, lay.n_out, lay.n_in};
}

Eigen::Map<const Eigen::VectorXd> ParameterVector::bias(int layer) const {
  const auto& lay = layout_[static_cast<std::size_t>(layer)];
  return {entries_.data() + lay.bias_offset, lay.n_out};
}

double glorot_bound(int n_in, int n_out) { return std::sqrt(6.0 / (n_in + n_out)); }

ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(spec.parameter_count());
  Rng rng(seed, stream::kInit);
  for (const auto& lay : layer_layout(spec)) {
    const double bound = glorot_bound(lay.n_in, lay.n_out);
    const Eigen::Index n = static_cast<Eigen::Index>(lay.n_in) * lay.n_out;
    for (Eigen::Index k = 0; k < n; ++k) w[lay.weight_offset + k] = rng.uniform(-bound, bound);
  }
  return ParameterVector(spec, std::move(w));
}

double forward(const ParameterVector& params, double x, double t) {
  return eval_jet(params, x, t, DerivativeRequest{0, 0}).u;
}

std::string format_checkpoint(const ParameterVector& params, std::uint64_t seed,
                              const io::Metadata& extra) {
  std::ostringstream out;
  out << "PINNCKPT v1\n";
  out << "layer_sizes=" << params.spec().layer_string() << '\n';
  out << "activation=" << params.spec().activation << '\n';
  out << "seed=" << seed << '\n';
  out << "rng=" << Rng::kIdentifier << '\n';
  out << "parameter_count=" << params.size() << '\n';
  for (const auto& [k, v] : extra) {
    if (k == "layer_sizes" || k == "activation" || k == "seed" || k == "rng" ||
        k == "parameter_count")
      continue;
    out << k << '=' << v << '\n';
  }
  for (Eigen::Index i = 0; i < params.size(); ++i)
    out << io::format_double(params.entries()[i]) << '\n';
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || io::trim(line) != "PINNCKPT v1")
    throw Error("not a PINNCKPT v1 checkpoint");
  io::Metadata meta;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    std::string key, value;
    if (values.empty() && io::split_key_value(line, key, value)) {
      meta[key] = value;
      continue;
    }
    values.push_back(io::parse_double(line));
  }
  ModelSpec spec;
  auto it = meta.find("layer_sizes");
  if (it == meta.end()) throw Error("checkpoint lacks layer_sizes");
  spec = ModelSpec::parse_layers(it->second);
  if (auto a = meta.find("activation"); a != meta.end()) spec.activation = a->second;
  std::uint64_t seed = 0;
  if (auto s = meta.find("seed"); s != meta.end())
    seed = static_cast<std::uint64_t>(io::parse_int(s->second));
  Eigen::VectorXd entries = Eigen::Map<Eigen::VectorXd>(values.data(),
                                                        static_cast<Eigen::Index>(values.size()));
  for (const char* k : {"layer_sizes", "activation", "seed"}) meta.erase(k);
  return Checkpoint{ParameterVector(spec, std::move(entries)), seed, std::move(meta)};
}

void save_checkpoint(const std::filesystem::path& path, const ParameterVector& params,
                     std::uint64_t seed, const io::Metadata& extra) {
  io::write_file(path, format_checkpoint(params, seed, extra));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("checkpoint not found: " + path.string());
  return parse_checkpoint(io::read_file(path));
}

}  // namespace pinn
