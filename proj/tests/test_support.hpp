#pragma once

#include <cstdint>
#include <vector>

#include "finsleroid/scenario.hpp"

namespace finsleroid::fixtures {

using scenarios::vec;

/// `count` random admissible samples of a scenario, explicit ones dropped.
inline std::vector<Sample> random_samples(Scenario sc, int count, std::uint64_t seed) {
  sc.explicit_samples.clear();
  sc.random->count = count;
  return scenario_samples(sc, seed);
}

inline const Vec& P1() {
  static const Vec p = vec({1, 1, 1});
  return p;
}

}  // namespace finsleroid::fixtures
