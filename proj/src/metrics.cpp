#include "pinn/metrics.hpp"

#include <cmath>
#include <sstream>

#include "pinn/error.hpp"
#include "pinn/io.hpp"

namespace pinn {

void LossHistory::append(const LossRecord& r) {
  if (!records.empty() && r.epoch <= records.back().epoch)
    throw Error("loss history epochs must increase");
  for (double v : {r.total, r.ic, r.bc, r.pde})
    if (!std::isfinite(v) || v < 0.0) throw DivergenceError("invalid loss value in history");
  records.push_back(r);
}

std::string format_history_csv(const LossHistory& h) {
  std::ostringstream out;
  out << "epoch,total,ic,bc,pde\n";
  for (const auto& r : h.records)
    out << r.epoch << ',' << io::format_double(r.total) << ',' << io::format_double(r.ic) << ','
        << io::format_double(r.bc) << ',' << io::format_double(r.pde) << '\n';
  return out.str();
}

LossHistory parse_history_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || io::trim(line) != "epoch,total,ic,bc,pde")
    throw Error("loss history lacks the epoch,total,ic,bc,pde header");
  LossHistory h;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto cells = io::split(line, ',');
    if (cells.size() != 5) throw Error("loss history row needs five columns");
    h.append({io::parse_int(cells[0]), io::parse_double(cells[1]), io::parse_double(cells[2]),
              io::parse_double(cells[3]), io::parse_double(cells[4])});
  }
  return h;
}

void save_history(const std::filesystem::path& path, const LossHistory& h) {
  io::write_file(path, format_history_csv(h));
}

LossHistory load_history(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("history file not found: " + path.string());
  return parse_history_csv(io::read_file(path));
}

namespace {

void require_same_grid(const SolutionField& a, const SolutionField& b) {
  if (!(a.grid == b.grid) || a.values.rows() != b.values.rows() ||
      a.values.cols() != b.values.cols())
    throw ConfigError("fields live on different grids");
}

}  // namespace

double rel_l2(const SolutionField& pred, const SolutionField& exact) {
  require_same_grid(pred, exact);
  const double denom = exact.values.squaredNorm();
  if (!(denom > 0.0)) throw Error("rel_l2: reference field is identically zero");
  return std::sqrt((pred.values - exact.values).squaredNorm() / denom);
}

SolutionField abs_error_field(const SolutionField& pred, const SolutionField& exact) {
  require_same_grid(pred, exact);
  SolutionField e;
  e.grid = exact.grid;
  e.values = (pred.values - exact.values).cwiseAbs();
  e.metadata = exact.metadata;
  e.metadata["source"] = "abs_error";
  return e;
}

double loss_smoothness(const LossHistory& h, double window) {
  if (!(window > 0.0 && window <= 1.0)) throw ConfigError("smoothness window must lie in (0, 1]");
  const std::size_t n = h.records.size();
  const auto count = static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)));
  if (count < 10) throw Error("loss_smoothness needs at least ten records in the window");
  const std::size_t first = n - count;
  double sum = 0.0;
  double prev = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double l = h.records[i].total;
    if (!(l > 0.0)) throw Error("loss_smoothness: non-positive loss has no logarithm");
    const double lg = std::log(l);
    if (i > first) sum += std::abs(lg - prev);
    prev = lg;
  }
  return sum / static_cast<double>(count - 1);
}

Alignment gradient_alignment(const Eigen::Ref<const Eigen::VectorXd>& a,
                             const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw ConfigError("gradients differ in length");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error("gradient_alignment: zero gradient");
  return {a.dot(b) / (na * nb), na / nb};
}

ConflictType classify_conflict(const Alignment& a, const ConflictThresholds& th) {
  const double r = a.magnitude_ratio;
  if (a.cosine > th.aligned_cosine && (r < 1.0 / th.imbalance_ratio || r > th.imbalance_ratio))
    return ConflictType::kTypeI;
  if (a.cosine < th.opposed_cosine && r >= 1.0 / th.comparable_ratio && r <= th.comparable_ratio)
    return ConflictType::kTypeII;
  return ConflictType::kNone;
}

std::string to_string(ConflictType t) {
  switch (t) {
    case ConflictType::kTypeI: return "type_i";
    case ConflictType::kTypeII: return "type_ii";
    case ConflictType::kNone: break;
  }
  return "none";
}

}  // namespace pinn
