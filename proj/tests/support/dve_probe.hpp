#pragma once

#include "reid/model.hpp"
#include "reid/synth.hpp"

#include <cstdint>

namespace reid::testing {

struct MatchRate {
  int hits = 0;
  int queries = 0;
  int identity_hits = 0;  ///< hits of the trivial matcher that answers the query location itself
  double rate() const { return queries ? static_cast<double>(hits) / queries : 0.0; }
};

// Warps test images of the toy set, queries foreground pixels and counts how often the matched
// cell lies within `radius` cells (Euclidean) of the true warped location.
MatchRate warp_match_rate(nn::ReIdModel& model, const synth::ToyDataConfig& data, std::uint64_t seed,
                          int queries = 50, double radius = 2.0, double strength = 1.0);

}  // namespace reid::testing
