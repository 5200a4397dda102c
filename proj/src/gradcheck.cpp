#include "ctlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctlab {

namespace {

double evaluate(const ScalarFn& fn) {
  Tape tape;
  const double v = fn(tape).item();
  if (!std::isfinite(v)) throw std::domain_error("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& fn, std::span<Param* const> params, double step) {
  for (Param* p : params) p->zero_grad();
  double value = 0.0;
  {
    Tape tape;
    Var loss = fn(tape);
    if (!std::isfinite(loss.item())) throw std::domain_error("grad_check: function value is not finite");
    tape.backward(loss);
    value = loss.item();
  }

  GradCheckResult res;
  res.value = value;
  for (Param* p : params) {
    for (Index k = 0; k < p->value.size(); ++k) {
      double& x = p->value.data()[k];
      const double x0 = x;
      x = x0 + step;
      const double up = evaluate(fn);
      x = x0 - step;
      const double down = evaluate(fn);
      x = x0;
      const double fd = (up - down) / (2.0 * step);
      const double ad = p->grad.data()[k];
      res.max_rel_error = std::max(res.max_rel_error, std::abs(ad - fd) / std::max(1e-8, std::abs(fd)));
      res.min_abs_fd = std::min(res.min_abs_fd, std::abs(fd));
      ++res.coordinates;
    }
    p->zero_grad();
  }
  return res;
}

ProbeDiagnostics probe_diagnostics(const ScalarFn& fn) {
  Tape tape;
  fn(tape);
  ProbeDiagnostics d;
  for (std::size_t id = 0; id < tape.size(); ++id) {
    const TapeNode& nd = tape.node(static_cast<int>(id));
    if (nd.op != Op::LeakyRelu) continue;
    const Tensor& z = tape.node(nd.parents[0]).value;
    d.kink_margin = std::min(d.kink_margin, z.cwiseAbs().minCoeff());
    for (Index k = 0; k < z.cols(); ++k) {
      if (!(z.col(k).array() > 0.0).any() || !(z.col(k).array() < 0.0).any()) d.mixed_regimes = false;
    }
  }
  return d;
}

}  // namespace ctlab
