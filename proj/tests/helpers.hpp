#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pinn/model.hpp"
#include "pinn/rng.hpp"

namespace testing {

// Small random network with non-trivial biases.
inline pinn::ParameterVector random_net(std::vector<int> layers, std::uint64_t seed,
                                        double bias_scale = 0.3) {
  pinn::ModelSpec spec;
  spec.layer_sizes = std::move(layers);
  pinn::ParameterVector p = pinn::init_params(spec, seed);
  pinn::Rng rng(seed, 77);
  for (const auto& l : p.layout())
    for (int o = 0; o < l.n_out; ++o)
      p.mutable_entries()[l.bias_offset + o] = rng.uniform(-bias_scale, bias_scale);
  return p;
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace testing
