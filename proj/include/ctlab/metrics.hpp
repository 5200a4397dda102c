#pragma once

#include "ctlab/analytic.hpp"
#include "ctlab/data.hpp"
#include "ctlab/nn.hpp"

#include <span>
#include <string>
#include <vector>

namespace ctlab {

/// Gaussian KDE with isotropic bandwidth: mean over samples of
/// N(point; sample, bandwidth^2 I), evaluated at each row of `points`.
Eigen::VectorXd kde_eval(const Tensor& samples, double bandwidth, const Tensor& points);

/// Scott's rule n^(-1/(d+4)) times the mean per-column standard deviation.
double scott_bandwidth(const Tensor& samples);

struct Grid1D {
  double lo = 0.0;
  double hi = 1.0;
  Index bins = 2;
  std::vector<double> masses;

  bool same_geometry(const Grid1D& o) const { return lo == o.lo && hi == o.hi && bins == o.bins; }
};

/// Normalized histogram of the values inside [lo, hi); values outside are
/// dropped. Throws when nothing lands on the grid.
Grid1D histogram(std::span<const double> values, double lo, double hi, Index bins);

/// KL(p||q) after flooring both at `floor` and renormalizing.
double grid_kl(const Grid1D& p, const Grid1D& q, double floor = 1e-10);

/// Squared 1D Wasserstein-2 between equal-size samples via sorted pairing.
double wasserstein2_1d(std::span<const double> x, std::span<const double> y);

/// Mean of wasserstein2_1d over K random unit directions.
double sliced_w2(const Tensor& x, const Tensor& y, Index projections, Rng& rng);
double sliced_w2(const Tensor& x, const Tensor& y, const Tensor& directions);

struct ModeCapture {
  Index captured = 0;
  std::vector<double> fractions;  // share of samples within the radius of each mode
};

/// A mode counts as captured when at least `threshold` of the samples lie
/// within radius_multiplier * std of its center.
ModeCapture mode_capture(const Tensor& samples, const ModeSet& modes, double radius_multiplier = 3.0,
                         double threshold = 0.01);

struct McResult {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Per-trial forward/backward estimates for the conjugate Gaussian model
/// (x ~ N(0,1), y ~ N(0,e^theta), cost (x-y)^2, energy (x-y)^2/(2e^phi)).
struct McParts {
  std::vector<double> forward;
  std::vector<double> backward;

  McResult blended(double rho) const;
};

McParts mc_ct_parts(const analytic::GaussPair<double>& p, Index n, Index m, Index trials, Rng& rng);
McResult mc_ct_oracle(const analytic::GaussPair<double>& p, double rho, Index n, Index m, Index trials, Rng& rng);

struct MetricReport {
  double kl_forward = 0.0;  // KL[p_data || p_model] on the grid
  double kl_reverse = 0.0;  // KL[p_model || p_data]
  double d_gap = 0.0;       // kl_forward - kl_reverse
  double w2sq = 0.0;
  Index modes_captured = 0;
  std::vector<double> mode_fractions;

  static std::string csv_header();
  std::string csv_row() const;
  std::string json() const;
};

/// 200-bin grid on [-10, 10] used for the 1D KL diagnostics.
struct KlGrid {
  double lo = -10.0;
  double hi = 10.0;
  Index bins = 200;
  double floor = 1e-10;
};

/// Fills the KL fields of `r` for 1D data/model samples.
void grid_kl_pair(const Tensor& data, const Tensor& model, const KlGrid& g, MetricReport& r);

}  // namespace ctlab
