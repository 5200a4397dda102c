#pragma once

// Closed forms for p_X = N(0,1), p_Y = N(0, e^theta), navigator energy
// d(x,y) = (x-y)^2 / (2 e^phi) and cost c(x,y) = (x-y)^2.

#include "ctlab/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctlab::analytic {

template <typename Scalar>
struct GaussPair {
  Scalar theta{0};  // log-variance of p_Y
  Scalar phi{0};    // log-temperature of the navigator energy
};

/// Conditional N(mean_coefficient * conditioning point, variance).
template <typename Scalar>
struct NavigatorGaussian {
  Scalar mean_coefficient{0};
  Scalar variance{0};
};

template <typename Scalar>
struct CostTriple {
  Scalar forward{0};
  Scalar backward{0};
  Scalar blended{0};
};

template <typename Scalar>
struct CostGradient {
  Scalar d_theta{0};
  Scalar d_phi{0};
};

// tanh form stays finite for any finite argument
template <typename Scalar>
Scalar sigmoid(Scalar a) {
  using std::tanh;
  return Scalar(0.5) * (Scalar(1) + tanh(a / Scalar(2)));
}

template <typename Scalar>
void check_rho(Scalar rho) {
  if (!(rho >= Scalar(0) && rho <= Scalar(1))) throw std::invalid_argument("rho must lie in [0,1]");
}

/// pi_Y(y|x) = N(sigma(theta-phi) x, sigma(theta-phi) e^phi)
template <typename Scalar>
NavigatorGaussian<Scalar> forward_navigator(const GaussPair<Scalar>& p) {
  using std::exp;
  const Scalar s = sigmoid(p.theta - p.phi);
  return {s, s * exp(p.phi)};
}

/// pi_X(x|y) = N(sigma(-phi) y, sigma(phi))
template <typename Scalar>
NavigatorGaussian<Scalar> backward_navigator(const GaussPair<Scalar>& p) {
  return {sigmoid(-p.phi), sigmoid(p.phi)};
}

template <typename Scalar>
CostTriple<Scalar> ct_cost(const GaussPair<Scalar>& p, Scalar rho) {
  using std::exp;
  check_rho(rho);
  const Scalar s1 = sigmoid(p.phi - p.theta);
  const Scalar s2 = sigmoid(p.phi);
  const Scalar e = exp(p.theta);
  CostTriple<Scalar> c;
  c.forward = s1 * (e + s1);
  c.backward = s2 * (Scalar(1) + s2 * e);
  c.blended = rho * c.forward + (Scalar(1) - rho) * c.backward;
  return c;
}

/// Symbolic partial derivatives of the forward and backward costs.
template <typename Scalar>
std::pair<CostGradient<Scalar>, CostGradient<Scalar>> ct_cost_partials(const GaussPair<Scalar>& p) {
  using std::exp;
  const Scalar s1 = sigmoid(p.phi - p.theta);
  const Scalar s2 = sigmoid(p.phi);
  const Scalar e = exp(p.theta);
  const Scalar ds1 = s1 * (Scalar(1) - s1);  // d s1 / d phi = -d s1 / d theta
  CostGradient<Scalar> fwd{s1 * e - ds1 * (e + Scalar(2) * s1), ds1 * (e + Scalar(2) * s1)};
  CostGradient<Scalar> bwd{s2 * s2 * e, s2 * (Scalar(1) - s2) * (Scalar(1) + Scalar(2) * s2 * e)};
  return {fwd, bwd};
}

template <typename Scalar>
CostGradient<Scalar> ct_cost_gradient(const GaussPair<Scalar>& p, Scalar rho) {
  check_rho(rho);
  const auto [f, b] = ct_cost_partials(p);
  return {rho * f.d_theta + (Scalar(1) - rho) * b.d_theta, rho * f.d_phi + (Scalar(1) - rho) * b.d_phi};
}

/// KL(p_X || p_Y) - KL(p_Y || p_X) = theta - sinh(theta).
/// Positive means mode-seeking, negative mode-covering.
template <typename Scalar>
Scalar kl_gap(Scalar theta) {
  using std::sinh;
  return theta - sinh(theta);
}

/// Blended cost built from tape primitives, differentiable in theta and phi
/// (1x1 tensors).
Var ct_cost_on_tape(const Var& theta, const Var& phi, double rho);

struct DemoOptions {
  double theta0 = 1.0;
  double phi0 = 0.0;
  double lr_theta = 0.2;
  double lr_phi = 0.01;
  long steps = 10000;
  double rho = 0.5;
};

struct DemoRow {
  long step = 0;
  double theta = 0.0;
  double phi = 0.0;
  double forward = 0.0;
  double backward = 0.0;
  double blended = 0.0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long step, const std::string& what) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Plain gradient descent on the blended closed-form cost. Returns steps+1
/// rows, row 0 being the initial state.
std::vector<DemoRow> gd_demo(const DemoOptions& opts);

}  // namespace ctlab::analytic
