#pragma once

#include "ksm/spectral.hpp"

#include <random>

namespace ksm::testing {

/// Smooth random state: amplitudes decay like exp(-decay k).
inline ModalState random_state(const Domain& dom, std::mt19937_64& rng, double amplitude = 1.0,
                               double decay = 0.2, bool odd = false) {
  std::normal_distribution<double> normal;
  ModalState a = zero_state(dom);
  for (int k = 1; k <= dom.modes(); ++k) {
    const double s = amplitude * std::exp(-decay * k);
    a[k] = {odd ? 0.0 : s * normal(rng), s * normal(rng)};
  }
  return a;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace ksm::testing
