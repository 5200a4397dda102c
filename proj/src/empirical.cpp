#include "ctlab/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ctlab {

std::string_view to_string(CostSpace s) {
  switch (s) {
    case CostSpace::Raw:
      return "raw";
    case CostSpace::Feature:
      return "feature";
    case CostSpace::Sliced:
      return "sliced";
  }
  return "?";
}

std::string_view to_string(NavigatorForm f) {
  return f == NavigatorForm::Embedding ? "embedding" : "pair-mlp";
}

CostSpace parse_cost_space(std::string_view s) {
  if (s == "raw") return CostSpace::Raw;
  if (s == "feature") return CostSpace::Feature;
  if (s == "sliced") return CostSpace::Sliced;
  throw std::invalid_argument("unknown cost space '" + std::string(s) + "' (valid: raw, feature, sliced)");
}

NavigatorForm parse_navigator_form(std::string_view s) {
  if (s == "embedding") return NavigatorForm::Embedding;
  if (s == "pair-mlp") return NavigatorForm::PairMlp;
  throw std::invalid_argument("unknown navigator form '" + std::string(s) + "' (valid: embedding, pair-mlp)");
}

void CTConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  if (space == CostSpace::Sliced && projections < 1) {
    throw std::invalid_argument("sliced cost space needs projections >= 1");
  }
  if (!(cosine_eps > 0.0)) throw std::invalid_argument("cosine_eps must be positive");
}

namespace {

struct Prepared {
  Var a;
  Var b;
};

Prepared unit_features(const Var& x, const Var& y, const CTConfig& cfg, MLP* encoder) {
  if (encoder == nullptr) throw std::invalid_argument("feature cost space requires an encoder");
  Tape& tape = *x.tape();
  return {normalize_rows(encoder->forward(tape, x), cfg.cosine_eps),
          normalize_rows(encoder->forward(tape, y), cfg.cosine_eps)};
}

void check_batches(const Var& x, const Var& y) {
  if (x.rows() < 1 || y.rows() < 1) throw std::invalid_argument("ct_loss: empty batch");
  if (x.cols() != y.cols()) {
    throw ShapeError("ct_loss: batches differ in width " + shape_string(x.value()) + " vs " +
                     shape_string(y.value()));
  }
}

}  // namespace

Var cost_matrix(const Var& x, const Var& y, const CTConfig& cfg, MLP* encoder) {
  switch (cfg.space) {
    case CostSpace::Raw:
      return pairwise_sqdist(x, y);
    case CostSpace::Sliced:
      if (x.cols() != 1 || y.cols() != 1) {
        throw ShapeError("sliced cost expects projected 1-column inputs, got " + shape_string(x.value()));
      }
      return pairwise_sqdist(x, y);
    case CostSpace::Feature: {
      const Prepared f = unit_features(x, y, cfg, encoder);
      return scale(pairwise_sqdist(f.a, f.b), 0.5);
    }
  }
  throw std::logic_error("unreachable");
}

Var navigator_energy(const Var& a, const Var& b, Navigator& nav) {
  Tape& tape = *a.tape();
  if (nav.form == NavigatorForm::PairMlp) {
    if (nav.net == nullptr) throw std::invalid_argument("pair-mlp navigator needs a network");
    if (nav.net->spec().output_width() != 1 || nav.net->spec().input_width() != a.cols()) {
      throw std::invalid_argument("pair-mlp navigator must map width " + std::to_string(a.cols()) +
                                  " to 1");
    }
    Var e = nav.net->forward(tape, pairwise_sqdiff(a, b));
    return reshape(e, a.rows(), b.rows());
  }
  if (nav.net == nullptr) {
    if (nav.identity_scale == 1.0) return pairwise_sqdist(a, b);
    return pairwise_sqdist(scale(a, nav.identity_scale), scale(b, nav.identity_scale));
  }
  if (nav.net->spec().input_width() != a.cols()) {
    throw std::invalid_argument("embedding navigator expects input width " +
                                std::to_string(nav.net->spec().input_width()));
  }
  return pairwise_sqdist(nav.net->forward(tape, a), nav.net->forward(tape, b));
}

Var navigator_matrix(const Var& x, const Var& y, Navigator& nav, const CTConfig& cfg, MLP* encoder) {
  if (cfg.space == CostSpace::Feature) {
    const Prepared f = unit_features(x, y, cfg, encoder);
    return navigator_energy(f.a, f.b, nav);
  }
  return navigator_energy(x, y, nav);
}

TransportMaps transport_maps(const Tensor& energy) {
  if (!all_finite(energy)) throw std::domain_error("transport_maps: non-finite energy");
  Tensor neg = -energy;
  return {Tensor(), softmax_values(neg, Axis::Row), softmax_values(neg, Axis::Col)};
}

CTTerms ct_loss(const Var& x, const Var& y, Navigator& nav, const CTConfig& cfg, MLP* encoder) {
  cfg.validate();
  check_batches(x, y);
  Var cost;
  Var energy;
  if (cfg.space == CostSpace::Feature) {
    const Prepared f = unit_features(x, y, cfg, encoder);
    cost = scale(pairwise_sqdist(f.a, f.b), 0.5);
    energy = navigator_energy(f.a, f.b, nav);
  } else {
    cost = pairwise_sqdist(x, y);
    energy = navigator_energy(x, y, nav);
  }
  Var loss = transport_loss(cost, energy, cfg.rho);
  const TransportParts parts = transport_parts(loss);
  return {loss, parts.forward, parts.backward};
}

Tensor random_directions(Index k, Index dim, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Tensor u(k, dim);
  for (Index r = 0; r < k; ++r) {
    double norm = 0.0;
    do {
      for (Index c = 0; c < dim; ++c) u(r, c) = n01(rng);
      norm = u.row(r).norm();
    } while (norm == 0.0);
    u.row(r) /= norm;
  }
  return u;
}

CTTerms sliced_ct_loss(const Var& x, const Var& y, Navigator& nav, double rho, const Tensor& directions) {
  check_batches(x, y);
  if (directions.cols() != x.cols() || directions.rows() < 1) {
    throw ShapeError("sliced_ct_loss: directions " + shape_string(directions) + " do not match data " +
                     shape_string(x.value()));
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  Tape& tape = *x.tape();
  const Index k = directions.rows();
  Var total;
  CTTerms out;
  for (Index r = 0; r < k; ++r) {
    Var u = tape.constant(directions.row(r).transpose());
    Var px = matmul(x, u);
    Var py = matmul(y, u);
    Var loss = transport_loss(pairwise_sqdist(px, py), navigator_energy(px, py, nav), rho);
    const TransportParts parts = transport_parts(loss);
    out.forward += parts.forward;
    out.backward += parts.backward;
    total = r == 0 ? loss : total + loss;
  }
  const double inv = 1.0 / static_cast<double>(k);
  out.loss = k == 1 ? total : scale(total, inv);
  out.forward *= inv;
  out.backward *= inv;
  return out;
}

CTTerms sliced_ct_loss(const Var& x, const Var& y, Navigator& nav, const CTConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.projections < 1) throw std::invalid_argument("sliced_ct_loss: projections must be >= 1");
  return sliced_ct_loss(x, y, nav, cfg.rho, random_directions(cfg.projections, x.cols(), rng));
}

namespace {

// k * min_j (v - s_j)^2 over sorted s
double nearest_energy(const std::vector<double>& sorted, double v, double k) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  double best = std::numeric_limits<double>::infinity();
  if (it != sorted.end()) best = std::min(best, (*it - v) * (*it - v));
  if (it != sorted.begin()) {
    const double p = *std::prev(it);
    best = std::min(best, (p - v) * (p - v));
  }
  return k * best;
}

}  // namespace

CTEstimate ct_estimate_quadratic_1d(std::span<const double> x, std::span<const double> y, double k) {
  if (x.empty() || y.empty()) throw std::invalid_argument("ct_estimate: empty sample");
  if (!(k > 0.0)) throw std::invalid_argument("ct_estimate: energy scale must be positive");
  const Index n = static_cast<Index>(x.size());
  const Index m = static_cast<Index>(y.size());
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  // per-row and per-column minimum energies serve as softmax shifts
  Eigen::ArrayXd row_shift(n);
  Eigen::ArrayXd col_shift(m);
  for (Index i = 0; i < n; ++i) row_shift[i] = nearest_energy(ys, x[static_cast<std::size_t>(i)], k);
  for (Index j = 0; j < m; ++j) col_shift[j] = nearest_energy(xs, y[static_cast<std::size_t>(j)], k);
  // columns can reuse the row weights while e^{-shift} stays representable
  const bool shared = row_shift.maxCoeff() < 600.0 && col_shift.maxCoeff() < 600.0;

  const Eigen::Map<const Eigen::ArrayXd> yv(y.data(), m);
  Eigen::ArrayXd col_w = Eigen::ArrayXd::Zero(m);
  Eigen::ArrayXd col_c = Eigen::ArrayXd::Zero(m);
  Eigen::ArrayXd c(m);
  Eigen::ArrayXd w(m);
  double fwd = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    c = (yv - xi).square();
    w = (row_shift[i] - k * c).exp();
    fwd += (c * w).sum() / w.sum();
    if (shared) {
      const double scale = std::exp(-row_shift[i]);
      col_w += scale * w;
      col_c += scale * (c * w);
    }
  }
  if (!shared) {
    for (Index i = 0; i < n; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      c = (yv - xi).square();
      w = (col_shift - k * c).exp();
      col_w += w;
      col_c += c * w;
    }
  }
  return {fwd / static_cast<double>(n), (col_c / col_w).sum() / static_cast<double>(m)};
}

}  // namespace ctlab
