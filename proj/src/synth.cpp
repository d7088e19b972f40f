#include "dgm/synth.hpp"

#include "dgm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dgm {
namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// 0.5 - 0.5 cos(2 pi (f x + phase)) on x in [0, 1]
Eigen::VectorXd raised_cosine(Eigen::Index len, double freq, double phase) {
  Eigen::VectorXd v(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    const double x = len > 1 ? static_cast<double>(i) / static_cast<double>(len - 1) : 0.0;
    v(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (freq * x + phase));
  }
  return v;
}

// Spatial pattern k as a flattened (column-major) image. Pattern 0 carries
// the mean level in [0.16, 0.44]; the others are zero-centred with a combined
// amplitude of at most 0.1, so the background stays inside [0.05, 0.55].
Eigen::VectorXd spatial_pattern(int k, int rank, Eigen::Index n1, Eigen::Index n2) {
  const double fk = 0.7 + 0.45 * k;
  const Eigen::VectorXd rows = raised_cosine(n1, fk, 0.15 + 0.21 * k);
  const Eigen::VectorXd cols = raised_cosine(n2, fk + 0.2, 0.35 + 0.13 * k);
  Eigen::MatrixXd img = rows * cols.transpose();
  if (k == 0) return (0.16 + 0.28 * img.array()).matrix().reshaped();
  const double amp = 0.1 / std::max(1, rank - 1);
  return (amp * (2.0 * img.array() - 1.0)).matrix().reshaped();
}

Eigen::VectorXd temporal_profile(int k, Eigen::Index m) {
  Eigen::VectorXd tau(m);
  for (Eigen::Index t = 0; t < m; ++t)
    tau(t) = 1.0 + 0.01 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(m) +
                                   k * std::numbers::pi / 2.0);
  return tau;
}

}  // namespace

SynthSpec SynthSpec::benchmark() {
  SynthSpec spec;
  spec.trajectory = linear_trajectory({17, 4}, {0, 2}, spec.m);
  return spec;
}

std::vector<Position> linear_trajectory(Position start, Position velocity, Eigen::Index m) {
  std::vector<Position> out;
  out.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(m, 0)));
  for (Eigen::Index j = 0; j < m; ++j)
    out.emplace_back(start.first + j * velocity.first, start.second + j * velocity.second);
  return out;
}

SynthVideo generate(const SynthSpec& spec) {
  require(spec.n1 >= 1 && spec.n2 >= 1 && spec.m >= 1, "synthetic video dimensions must be positive");
  const Eigen::Index n = spec.n1 * spec.n2;
  require(spec.bg_rank >= 1 && spec.bg_rank <= std::min(n, spec.m), "bg_rank must lie in [1, min(n, m)]");
  require(spec.object_h >= 0 && spec.object_w >= 0, "object size must be nonnegative");
  require(spec.outlier_fraction >= 0.0 && spec.outlier_fraction < 1.0, "outlier fraction must lie in [0, 1)");
  const bool has_object = spec.object_h > 0 && spec.object_w > 0;
  if (has_object) {
    require(static_cast<Eigen::Index>(spec.trajectory.size()) == spec.m, "trajectory needs one position per frame");
    for (std::size_t j = 0; j < spec.trajectory.size(); ++j) {
      const auto [r, c] = spec.trajectory[j];
      if (r < 0 || c < 0 || r + spec.object_h > spec.n1 || c + spec.object_w > spec.n2)
        fail(ErrorCode::InvalidArgument, "trajectory leaves the frame at frame " + std::to_string(j + 1));
    }
  }

  SynthVideo out;
  out.L_true = {Eigen::MatrixXd::Zero(n, spec.m), spec.n1, spec.n2};
  for (int k = 0; k < spec.bg_rank; ++k)
    out.L_true.data.noalias() +=
        spatial_pattern(k, spec.bg_rank, spec.n1, spec.n2) * temporal_profile(k, spec.m).transpose();
  out.L_true.data = out.L_true.data.cwiseMax(0.0).cwiseMin(1.0);

  out.S_true = {Eigen::MatrixXd::Zero(n, spec.m), spec.n1, spec.n2};
  out.masks = {Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, spec.m, false), spec.n1, spec.n2};
  if (has_object && spec.object_intensity_delta != 0.0) {
    for (Eigen::Index j = 0; j < spec.m; ++j) {
      const auto [r0, c0] = spec.trajectory[static_cast<std::size_t>(j)];
      for (Eigen::Index c = c0; c < c0 + spec.object_w; ++c)
        for (Eigen::Index r = r0; r < r0 + spec.object_h; ++r) {
          out.S_true.data(r + c * spec.n1, j) = spec.object_intensity_delta;
          out.masks.masks(r + c * spec.n1, j) = true;
        }
    }
  }

  Eigen::MatrixXd outliers = Eigen::MatrixXd::Zero(n, spec.m);
  const Eigen::Index total = n * spec.m;
  const auto count = static_cast<Eigen::Index>(std::llround(spec.outlier_fraction * static_cast<double>(total)));
  if (count > 0) {
    std::mt19937_64 rng(spec.rng_seed);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
    for (Eigen::Index k = 0; k < total; ++k) idx[static_cast<std::size_t>(k)] = k;
    for (Eigen::Index k = 0; k < count; ++k) {
      const auto pick = k + static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(total - k));
      std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick)]);
      const bool negative = (rng() >> 63) != 0;
      outliers.data()[idx[static_cast<std::size_t>(k)]] = negative ? -spec.outlier_magnitude : spec.outlier_magnitude;
    }
  }

  out.D = {(out.L_true.data + out.S_true.data + outliers).cwiseMax(0.0).cwiseMin(1.0), spec.n1, spec.n2};
  return out;
}

}  // namespace dgm
