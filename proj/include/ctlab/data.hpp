#pragma once

#include "ctlab/nn.hpp"
#include "ctlab/tensor.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace ctlab {

enum class DatasetKind : std::uint8_t { Bimodal1d, Ring8, Grid25, SwissRoll, HalfMoons };

std::string_view to_string(DatasetKind k);
DatasetKind parse_dataset_kind(std::string_view s);

/// Geometry shared by the samplers and the ground-truth mode tables.
namespace toy {
inline constexpr double kRingRadius = 2.0;
inline constexpr double kGridSpacing = 2.0;
inline constexpr double kModeStd = 0.05;   // ring8 / grid25 components
inline constexpr double kCurveNoise = 0.05;  // swiss-roll / half-moons
}  // namespace toy

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Bimodal1d;
  /// ring8 only: weight of mode 0; the other seven share 1 - gamma.
  double gamma = 0.125;
  Index size = 5000;

  Index dim() const { return kind == DatasetKind::Bimodal1d ? 1 : 2; }
  bool has_modes() const { return kind != DatasetKind::SwissRoll && kind != DatasetKind::HalfMoons; }
  void validate() const;
};

struct ModeSet {
  Tensor centers;  // K x dim
  std::vector<double> weights;
  double std = 0.0;  // isotropic component standard deviation
};

/// Exact mixture components; rejected for the curve datasets.
ModeSet mode_centers(const DatasetSpec& spec);

struct SampleSet {
  Tensor data;  // size x dim
  DatasetSpec spec;
  std::uint64_t seed = 0;
};

SampleSet sample_dataset(const DatasetSpec& spec, std::uint64_t seed);

/// n distinct row indices drawn uniformly (partial Fisher-Yates).
std::vector<Index> minibatch_indices(Index size, Index n, Rng& rng);
Tensor minibatch(const SampleSet& set, Index n, Rng& rng);

}  // namespace ctlab
