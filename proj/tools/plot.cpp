#include "plot.hpp"

#include "ctlab/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace ctlab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;
constexpr const char* kDataColor = "#d62728";
constexpr const char* kModelColor = "#1f77b4";

// Fixed-point text independent of the C locale.
std::string fx(double v, int digits = 2) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  if (ec != std::errc()) throw std::logic_error("svg number formatting failed");
  return std::string(buf, end);
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

std::string header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fx(kWidth, 0) + "\" height=\"" + fx(kHeight, 0) +
         "\" viewBox=\"0 0 " + fx(kWidth, 0) + ' ' + fx(kHeight, 0) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + fx(kWidth, 0) + "\" height=\"" + fx(kHeight, 0) + "\" fill=\"white\"/>\n";
}

std::string axes(const Frame& f, bool y_ticks) {
  std::string s;
  const double bx = kMargin;
  const double by = kHeight - kMargin;
  s += "<line x1=\"" + fx(bx) + "\" y1=\"" + fx(by) + "\" x2=\"" + fx(kWidth - kMargin) + "\" y2=\"" + fx(by) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fx(bx) + "\" y1=\"" + fx(by) + "\" x2=\"" + fx(bx) + "\" y2=\"" + fx(kMargin) +
       "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = f.x0 + (f.x1 - f.x0) * k / 4.0;
    s += "<text x=\"" + fx(f.px(v)) + "\" y=\"" + fx(by + 18) + "\" text-anchor=\"middle\">" + fx(v) + "</text>\n";
    if (y_ticks) {
      const double w = f.y0 + (f.y1 - f.y0) * k / 4.0;
      s += "<text x=\"" + fx(bx - 6) + "\" y=\"" + fx(f.py(w) + 4) + "\" text-anchor=\"end\">" + fx(w) + "</text>\n";
    }
  }
  return s;
}

std::string legend() {
  std::string s;
  const double x = kWidth - kMargin - 110;
  const double y = kMargin;
  s += "<rect x=\"" + fx(x) + "\" y=\"" + fx(y) + "\" width=\"12\" height=\"12\" fill=\"" + kDataColor + "\"/>\n";
  s += "<text x=\"" + fx(x + 18) + "\" y=\"" + fx(y + 11) + "\">data</text>\n";
  s += "<rect x=\"" + fx(x) + "\" y=\"" + fx(y + 20) + "\" width=\"12\" height=\"12\" fill=\"" + kModelColor + "\"/>\n";
  s += "<text x=\"" + fx(x + 18) + "\" y=\"" + fx(y + 31) + "\">generated</text>\n";
  return s;
}

void check_samples(const Tensor& t, Index dim, const char* what) {
  if (t.rows() < 1) throw std::invalid_argument(std::string(what) + " samples are empty");
  if (t.cols() != dim) throw ShapeError(std::string(what) + " samples must have " + std::to_string(dim) + " columns");
  if (!t.allFinite()) throw std::invalid_argument(std::string(what) + " samples contain non-finite values");
}

}  // namespace

std::string render_kde_svg(const Tensor& data, const Tensor& model) {
  check_samples(data, 1, "data");
  check_samples(model, 1, "model");
  const double bw_d = scott_bandwidth(data);
  const double bw_m = scott_bandwidth(model);
  const double lo = std::min(data.minCoeff() - 3 * bw_d, model.minCoeff() - 3 * bw_m);
  const double hi = std::max(data.maxCoeff() + 3 * bw_d, model.maxCoeff() + 3 * bw_m);
  constexpr Index kPoints = 400;
  Tensor grid(kPoints, 1);
  for (Index k = 0; k < kPoints; ++k) grid(k, 0) = lo + (hi - lo) * static_cast<double>(k) / (kPoints - 1);
  // a degenerate sample has zero bandwidth; fall back to a tenth of the span
  const double span = hi > lo ? hi - lo : 1.0;
  const Eigen::VectorXd pd = kde_eval(data, bw_d > 0 ? bw_d : 0.1 * span, grid);
  const Eigen::VectorXd pm = kde_eval(model, bw_m > 0 ? bw_m : 0.1 * span, grid);
  Frame f{grid(0, 0), grid(kPoints - 1, 0), 0.0, std::max(pd.maxCoeff(), pm.maxCoeff()) * 1.05};
  if (!(f.x1 > f.x0)) f.x1 = f.x0 + 1.0;
  if (!(f.y1 > 0.0)) f.y1 = 1.0;

  std::string s = header() + axes(f, true);
  for (const auto& [dens, color] : {std::pair{&pd, kDataColor}, std::pair{&pm, kModelColor}}) {
    s += "<path fill=\"none\" stroke-width=\"2\" stroke=\"";
    s += color;
    s += "\" d=\"";
    for (Index k = 0; k < kPoints; ++k) {
      s += k == 0 ? "M" : " L";
      s += fx(f.px(grid(k, 0))) + ',' + fx(f.py((*dens)(k)));
    }
    s += "\"/>\n";
  }
  return s + legend() + "</svg>\n";
}

std::string render_scatter_svg(const Tensor& data, const Tensor& model, Index max_points) {
  check_samples(data, 2, "data");
  check_samples(model, 2, "model");
  const Index nd = std::min(data.rows(), max_points);
  const Index nm = std::min(model.rows(), max_points);
  double lo = std::min(data.topRows(nd).minCoeff(), model.topRows(nm).minCoeff());
  double hi = std::max(data.topRows(nd).maxCoeff(), model.topRows(nm).maxCoeff());
  const double pad = 0.05 * std::max(hi - lo, 1e-9);
  lo -= pad;
  hi += pad;
  const Frame f{lo, hi, lo, hi};

  std::string s = header() + axes(f, true);
  for (const auto& [pts, n, color] :
       {std::tuple{&data, nd, kDataColor}, std::tuple{&model, nm, kModelColor}}) {
    s += "<g fill=\"";
    s += color;
    s += "\" fill-opacity=\"0.5\">\n";
    for (Index i = 0; i < n; ++i) {
      s += "<circle cx=\"" + fx(f.px((*pts)(i, 0))) + "\" cy=\"" + fx(f.py((*pts)(i, 1))) + "\" r=\"1.5\"/>\n";
    }
    s += "</g>\n";
  }
  return s + legend() + "</svg>\n";
}

}  // namespace ctlab
