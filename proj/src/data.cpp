#include "ctlab/data.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace ctlab {

std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Bimodal1d:
      return "bimodal1d";
    case DatasetKind::Ring8:
      return "ring8";
    case DatasetKind::Grid25:
      return "grid25";
    case DatasetKind::SwissRoll:
      return "swiss-roll";
    case DatasetKind::HalfMoons:
      return "half-moons";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view s) {
  for (DatasetKind k : {DatasetKind::Bimodal1d, DatasetKind::Ring8, DatasetKind::Grid25, DatasetKind::SwissRoll,
                        DatasetKind::HalfMoons}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown dataset '" + std::string(s) +
                              "' (valid: bimodal1d, ring8, grid25, swiss-roll, half-moons)");
}

void DatasetSpec::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (size < 1) throw std::invalid_argument("dataset size must be >= 1");
}

ModeSet mode_centers(const DatasetSpec& spec) {
  spec.validate();
  ModeSet m;
  switch (spec.kind) {
    case DatasetKind::Bimodal1d:
      m.centers.resize(2, 1);
      m.centers << -5.0, 2.0;
      m.weights = {0.25, 0.75};
      m.std = 1.0;
      return m;
    case DatasetKind::Ring8:
      m.centers.resize(8, 2);
      for (Index k = 0; k < 8; ++k) {
        const double a = static_cast<double>(k) * std::numbers::pi / 4.0;
        m.centers(k, 0) = toy::kRingRadius * std::cos(a);
        m.centers(k, 1) = toy::kRingRadius * std::sin(a);
      }
      m.weights.assign(8, (1.0 - spec.gamma) / 7.0);
      m.weights[0] = spec.gamma;
      m.std = toy::kModeStd;
      return m;
    case DatasetKind::Grid25:
      m.centers.resize(25, 2);
      for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) {
          m.centers(i * 5 + j, 0) = toy::kGridSpacing * static_cast<double>(i - 2);
          m.centers(i * 5 + j, 1) = toy::kGridSpacing * static_cast<double>(j - 2);
        }
      }
      m.weights.assign(25, 1.0 / 25.0);
      m.std = toy::kModeStd;
      return m;
    case DatasetKind::SwissRoll:
    case DatasetKind::HalfMoons:
      break;
  }
  throw std::invalid_argument(std::string(to_string(spec.kind)) + " has no discrete modes");
}

SampleSet sample_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  SampleSet s{Tensor(spec.size, spec.dim()), spec, seed};

  if (spec.has_modes()) {
    const ModeSet m = mode_centers(spec);
    std::discrete_distribution<Index> pick(m.weights.begin(), m.weights.end());
    for (Index r = 0; r < spec.size; ++r) {
      const Index k = pick(rng);
      for (Index c = 0; c < spec.dim(); ++c) s.data(r, c) = m.centers(k, c) + m.std * n01(rng);
    }
    return s;
  }

  const double pi = std::numbers::pi;
  for (Index r = 0; r < spec.size; ++r) {
    double x = 0.0;
    double y = 0.0;
    if (spec.kind == DatasetKind::SwissRoll) {
      // t in [1.5 pi, 4.5 pi], radius t scaled so the outer turn reaches 2
      const double t = 1.5 * pi + 3.0 * pi * u01(rng);
      x = t * std::cos(t) / (2.25 * pi);
      y = t * std::sin(t) / (2.25 * pi);
    } else {
      const double t = pi * u01(rng);
      if (u01(rng) < 0.5) {
        x = std::cos(t);
        y = std::sin(t);
      } else {
        x = 1.0 - std::cos(t);
        y = 0.5 - std::sin(t);
      }
      // [-1,2] x [-0.5,1] -> [-2,2] x [-1,1]
      x = (x - 0.5) * 4.0 / 3.0;
      y = (y - 0.25) * 4.0 / 3.0;
    }
    s.data(r, 0) = x + toy::kCurveNoise * n01(rng);
    s.data(r, 1) = y + toy::kCurveNoise * n01(rng);
  }
  return s;
}

std::vector<Index> minibatch_indices(Index size, Index n, Rng& rng) {
  if (n < 0 || n > size) {
    throw std::invalid_argument("minibatch of " + std::to_string(n) + " rows from a set of " + std::to_string(size));
  }
  std::vector<Index> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < n; ++i) {
    std::uniform_int_distribution<Index> pick(i, size - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

Tensor minibatch(const SampleSet& set, Index n, Rng& rng) {
  const std::vector<Index> idx = minibatch_indices(set.data.rows(), n, rng);
  Tensor b(n, set.data.cols());
  for (Index r = 0; r < n; ++r) b.row(r) = set.data.row(idx[static_cast<std::size_t>(r)]);
  return b;
}

}  // namespace ctlab
