#include "ctlab/metrics.hpp"

#include "ctlab/empirical.hpp"
#include "ctlab/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctlab {

Eigen::VectorXd kde_eval(const Tensor& samples, double bandwidth, const Tensor& points) {
  if (samples.rows() < 1) throw std::invalid_argument("kde_eval: no samples");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde_eval: bandwidth must be positive");
  if (samples.cols() != points.cols()) throw ShapeError("kde_eval: samples and points differ in dimension");
  const double d = static_cast<double>(samples.cols());
  const double norm = std::pow(2.0 * std::numbers::pi * bandwidth * bandwidth, -0.5 * d);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Eigen::VectorXd out(points.rows());
  for (Index p = 0; p < points.rows(); ++p) {
    const Eigen::VectorXd sq = (samples.rowwise() - points.row(p)).rowwise().squaredNorm();
    out[p] = norm * (-inv * sq.array()).exp().mean();
  }
  return out;
}

double scott_bandwidth(const Tensor& samples) {
  const Index n = samples.rows();
  if (n < 2) throw std::invalid_argument("scott_bandwidth: need at least 2 samples");
  double sd = 0.0;
  for (Index c = 0; c < samples.cols(); ++c) {
    const double mu = samples.col(c).mean();
    sd += std::sqrt((samples.col(c).array() - mu).square().sum() / static_cast<double>(n - 1));
  }
  sd /= static_cast<double>(samples.cols());
  const double d = static_cast<double>(samples.cols());
  return std::pow(static_cast<double>(n), -1.0 / (d + 4.0)) * sd;
}

Grid1D histogram(std::span<const double> values, double lo, double hi, Index bins) {
  if (bins < 2) throw std::invalid_argument("histogram: bins must be >= 2");
  if (!(hi > lo)) throw std::invalid_argument("histogram: empty range");
  Grid1D g{lo, hi, bins, std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
  const double width = (hi - lo) / static_cast<double>(bins);
  double inside = 0.0;
  for (double v : values) {
    if (!(v >= lo && v < hi)) continue;
    auto b = static_cast<Index>((v - lo) / width);
    b = std::min(b, bins - 1);
    g.masses[static_cast<std::size_t>(b)] += 1.0;
    inside += 1.0;
  }
  if (inside == 0.0) throw std::invalid_argument("histogram: no value inside the grid");
  for (double& m : g.masses) m /= inside;
  return g;
}

double grid_kl(const Grid1D& p, const Grid1D& q, double floor) {
  if (!p.same_geometry(q) || p.masses.size() != q.masses.size()) {
    throw std::invalid_argument("grid_kl: grids differ");
  }
  if (!(floor > 0.0)) throw std::invalid_argument("grid_kl: floor must be positive");
  double zp = 0.0;
  double zq = 0.0;
  for (std::size_t b = 0; b < p.masses.size(); ++b) {
    zp += std::max(p.masses[b], floor);
    zq += std::max(q.masses[b], floor);
  }
  double kl = 0.0;
  for (std::size_t b = 0; b < p.masses.size(); ++b) {
    const double pb = std::max(p.masses[b], floor) / zp;
    const double qb = std::max(q.masses[b], floor) / zq;
    kl += pb * std::log(pb / qb);
  }
  return std::max(kl, 0.0);
}

double wasserstein2_1d(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("wasserstein2_1d: lengths differ (" + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  if (x.empty()) throw std::invalid_argument("wasserstein2_1d: empty input");
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double sliced_w2(const Tensor& x, const Tensor& y, const Tensor& directions) {
  if (x.rows() != y.rows()) throw std::invalid_argument("sliced_w2: sample counts differ");
  if (x.cols() != y.cols() || directions.cols() != x.cols()) throw ShapeError("sliced_w2: dimension mismatch");
  double total = 0.0;
  for (Index k = 0; k < directions.rows(); ++k) {
    const Eigen::VectorXd px = x * directions.row(k).transpose();
    const Eigen::VectorXd py = y * directions.row(k).transpose();
    total += wasserstein2_1d({px.data(), static_cast<std::size_t>(px.size())},
                             {py.data(), static_cast<std::size_t>(py.size())});
  }
  return total / static_cast<double>(directions.rows());
}

double sliced_w2(const Tensor& x, const Tensor& y, Index projections, Rng& rng) {
  if (projections < 1) throw std::invalid_argument("sliced_w2: projections must be >= 1");
  return sliced_w2(x, y, random_directions(projections, x.cols(), rng));
}

ModeCapture mode_capture(const Tensor& samples, const ModeSet& modes, double radius_multiplier, double threshold) {
  if (modes.centers.rows() < 1) throw std::invalid_argument("mode_capture: no centers");
  if (samples.rows() < 1) throw std::invalid_argument("mode_capture: no samples");
  if (samples.cols() != modes.centers.cols()) throw ShapeError("mode_capture: dimension mismatch");
  const double r2 = std::pow(radius_multiplier * modes.std, 2);
  ModeCapture out;
  out.fractions.assign(static_cast<std::size_t>(modes.centers.rows()), 0.0);
  for (Index k = 0; k < modes.centers.rows(); ++k) {
    const Index hits = ((samples.rowwise() - modes.centers.row(k)).rowwise().squaredNorm().array() <= r2).count();
    const double f = static_cast<double>(hits) / static_cast<double>(samples.rows());
    out.fractions[static_cast<std::size_t>(k)] = f;
    if (f >= threshold) ++out.captured;
  }
  return out;
}

McResult McParts::blended(double rho) const {
  analytic::check_rho(rho);
  const std::size_t t = forward.size();
  if (t == 0) throw std::invalid_argument("McParts: no trials");
  double mean = 0.0;
  for (std::size_t k = 0; k < t; ++k) mean += rho * forward[k] + (1.0 - rho) * backward[k];
  mean /= static_cast<double>(t);
  double var = 0.0;
  for (std::size_t k = 0; k < t; ++k) var += std::pow(rho * forward[k] + (1.0 - rho) * backward[k] - mean, 2);
  const double se = t > 1 ? std::sqrt(var / static_cast<double>(t - 1) / static_cast<double>(t)) : 0.0;
  return {mean, se};
}

McParts mc_ct_parts(const analytic::GaussPair<double>& p, Index n, Index m, Index trials, Rng& rng) {
  if (n < 2 || m < 2) throw std::invalid_argument("mc_ct_oracle: N and M must be >= 2");
  if (trials < 1) throw std::invalid_argument("mc_ct_oracle: trials must be >= 1");
  std::normal_distribution<double> n01(0.0, 1.0);
  const double sy = std::exp(0.5 * p.theta);
  const double k = 1.0 / (2.0 * std::exp(p.phi));
  McParts out;
  std::vector<double> x(static_cast<std::size_t>(n));
  std::vector<double> y(static_cast<std::size_t>(m));
  for (Index t = 0; t < trials; ++t) {
    for (double& v : x) v = n01(rng);
    for (double& v : y) v = sy * n01(rng);
    const CTEstimate e = ct_estimate_quadratic_1d(x, y, k);
    out.forward.push_back(e.forward);
    out.backward.push_back(e.backward);
  }
  return out;
}

McResult mc_ct_oracle(const analytic::GaussPair<double>& p, double rho, Index n, Index m, Index trials, Rng& rng) {
  analytic::check_rho(rho);
  return mc_ct_parts(p, n, m, trials, rng).blended(rho);
}

std::string MetricReport::csv_header() { return "kl_fwd,kl_rev,d_gap,w2sq,modes_captured,mode_fractions"; }

std::string MetricReport::csv_row() const {
  std::string s = format_double(kl_forward) + ',' + format_double(kl_reverse) + ',' + format_double(d_gap) + ',' +
                  format_double(w2sq) + ',' + std::to_string(modes_captured) + ',';
  for (std::size_t k = 0; k < mode_fractions.size(); ++k) {
    if (k > 0) s += ';';
    s += format_double(mode_fractions[k]);
  }
  return s;
}

std::string MetricReport::json() const {
  nlohmann::ordered_json j;
  j["kl_fwd"] = kl_forward;
  j["kl_rev"] = kl_reverse;
  j["d_gap"] = d_gap;
  j["w2sq"] = w2sq;
  j["modes_captured"] = modes_captured;
  j["mode_fractions"] = mode_fractions;
  return j.dump();
}

void grid_kl_pair(const Tensor& data, const Tensor& model, const KlGrid& g, MetricReport& r) {
  if (data.cols() != 1 || model.cols() != 1) throw ShapeError("grid KL needs 1D samples");
  const Grid1D p = histogram({data.data(), static_cast<std::size_t>(data.size())}, g.lo, g.hi, g.bins);
  const Grid1D q = histogram({model.data(), static_cast<std::size_t>(model.size())}, g.lo, g.hi, g.bins);
  r.kl_forward = grid_kl(p, q, g.floor);
  r.kl_reverse = grid_kl(q, p, g.floor);
  r.d_gap = r.kl_forward - r.kl_reverse;
}

}  // namespace ctlab
