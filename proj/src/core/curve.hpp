#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace avgemb {

enum class curve_provenance { analytic, simulated, empirical };

inline const char* provenance_name(curve_provenance p) noexcept {
  switch (p) {
    case curve_provenance::analytic: return "analytic";
    case curve_provenance::simulated: return "simulated";
    case curve_provenance::empirical: return "empirical";
  }
  return "?";
}

struct consistency_curve {
  std::vector<std::uint32_t> k_values;
  std::vector<double> scores;          // each in [0, 1]
  std::vector<double> stderrs;         // 0 for analytic curves
  curve_provenance provenance = curve_provenance::analytic;
  std::uint64_t trials = 0;            // 0 for analytic curves
  std::optional<random_seed> seed;
  std::string label;
};

}  // namespace avgemb
