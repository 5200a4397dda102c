#include "ctlab/analytic.hpp"

namespace ctlab::analytic {

namespace {

// sigma(a) = exp(-log(1 + exp(-a)))
Var sigmoid_on_tape(const Var& a) { return exp(-log(add_scalar(exp(-a), 1.0))); }

}  // namespace

Var ct_cost_on_tape(const Var& theta, const Var& phi, double rho) {
  check_rho(rho);
  Var s1 = sigmoid_on_tape(phi - theta);
  Var s2 = sigmoid_on_tape(phi);
  Var e = exp(theta);
  Var forward = mul(s1, e + s1);
  Var backward = mul(s2, add_scalar(mul(s2, e), 1.0));
  return scale(forward, rho) + scale(backward, 1.0 - rho);
}

std::vector<DemoRow> gd_demo(const DemoOptions& opts) {
  if (opts.steps < 0) throw std::invalid_argument("gd_demo: steps must be >= 0");
  if (!(opts.lr_theta > 0.0) || opts.lr_phi < 0.0) {
    throw std::invalid_argument("gd_demo: learning rates must be positive");
  }
  check_rho(opts.rho);
  std::vector<DemoRow> rows;
  rows.reserve(static_cast<std::size_t>(opts.steps) + 1);
  GaussPair<double> p{opts.theta0, opts.phi0};
  for (long k = 0;; ++k) {
    const CostTriple<double> c = ct_cost(p, opts.rho);
    if (!std::isfinite(p.theta) || !std::isfinite(p.phi) || !std::isfinite(c.blended)) {
      throw DivergenceError(k, "gd_demo diverged at step " + std::to_string(k));
    }
    rows.push_back({k, p.theta, p.phi, c.forward, c.backward, c.blended});
    if (k == opts.steps) break;
    const CostGradient<double> g = ct_cost_gradient(p, opts.rho);
    p.theta -= opts.lr_theta * g.d_theta;
    p.phi -= opts.lr_phi * g.d_phi;
  }
  return rows;
}

}  // namespace ctlab::analytic
