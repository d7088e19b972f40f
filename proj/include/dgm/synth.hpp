#pragma once

// Synthetic videos with a known decomposition: smooth low-rank background,
// one moving rectangle, optional impulsive outliers.
//
// Random numbers come from std::mt19937_64 (fully specified by the standard)
// and are converted by hand, never through <random> distributions, so
// fixtures are reproducible across standard libraries:
//   uniform(x) = (x >> 11) * 2^-53
// Outlier positions: partial Fisher-Yates over the n*m entries, drawing
// index k + floor(uniform * (n*m - k)) for the k-th pick; the sign of each
// spike is taken from the next draw's top bit (1 = negative).

#include "dgm/metrics.hpp"
#include "dgm/video_io.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace dgm {

using Position = std::pair<Eigen::Index, Eigen::Index>;  // (row, col) of the object's top-left, 0-based

struct SynthSpec {
  Eigen::Index n1 = 40, n2 = 40, m = 12;
  int bg_rank = 2;
  Eigen::Index object_h = 6, object_w = 6;
  std::vector<Position> trajectory;  // one per frame
  double object_intensity_delta = 0.5;
  double outlier_fraction = 0.01;
  double outlier_magnitude = 0.8;
  std::uint64_t rng_seed = 7;

  // The 40x40x12 benchmark fixture: 6x6 object crossing horizontally at 2 px/frame.
  static SynthSpec benchmark();
};

struct SynthVideo {
  VideoMatrix D, L_true, S_true;
  MaskSequence masks;
};

std::vector<Position> linear_trajectory(Position start, Position velocity, Eigen::Index m);

SynthVideo generate(const SynthSpec& spec);

}  // namespace dgm
