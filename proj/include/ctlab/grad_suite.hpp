#pragma once

// Gradient checks of ct_loss over every cost space and navigator form, on
// 4x4 batches. Used by the tests, the acceptance binary and `ctlab oracle`.

#include "ctlab/analytic.hpp"
#include "ctlab/empirical.hpp"
#include "ctlab/gradcheck.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace ctlab {

struct GradCase {
  std::string name;
  CostSpace space;
  NavigatorForm form;
};

inline std::vector<GradCase> grad_cases() {
  return {{"raw/embedding", CostSpace::Raw, NavigatorForm::Embedding},
          {"raw/pair-mlp", CostSpace::Raw, NavigatorForm::PairMlp},
          {"feature/embedding", CostSpace::Feature, NavigatorForm::Embedding},
          {"feature/pair-mlp", CostSpace::Feature, NavigatorForm::PairMlp},
          {"sliced/embedding", CostSpace::Sliced, NavigatorForm::Embedding}};
}

struct GradOutcome {
  std::uint64_t seed = 0;
  double max_rel_error = 0.0;
  Index coordinates = 0;
  double gauge_grad = 0.0;  // |d loss / d navigator output bias|, zero by invariance
  bool found = false;
};

/// grad_check over the generator, navigator (minus its output bias, which
/// the loss is invariant to) and encoder parameters, at the first seed
/// >= `first_seed` whose probe point
///  - keeps every leaky-relu input at least 1e-4 from its kink, and
///  - has every finite difference resolvable above rounding noise,
///    |fd| >= 1e-4 |loss| (the noise floor is about 1e-10 |loss| at h=1e-6).
/// Both conditions are read off the tape values and the finite
/// differences, never off the gradients under test.
inline GradOutcome run_grad_case(const GradCase& gc, std::uint64_t first_seed, int max_tries = 5000) {
  const double rho = 0.3;
  for (std::uint64_t seed = first_seed; seed < first_seed + static_cast<std::uint64_t>(max_tries); ++seed) {
    Rng rng(seed);
    MLP gen(MLPSpec::toy(3, 8, 2), rng);
    MLP enc(MLPSpec::toy(2, 8, 4), rng);
    const Index nav_in = gc.space == CostSpace::Feature ? 4 : gc.space == CostSpace::Sliced ? 1 : 2;
    MLP nav_net(gc.form == NavigatorForm::PairMlp ? MLPSpec{{nav_in, 8, 1}} : MLPSpec::toy(nav_in, 8, 3), rng);
    const Tensor x = 2.0 * draw_noise(4, 2, rng);
    const Tensor eps = draw_noise(4, 3, rng);
    const Tensor dirs = random_directions(3, 2, rng);
    Navigator nav{gc.form, &nav_net, 1.0};
    CTConfig cfg;
    cfg.rho = rho;
    cfg.space = gc.space;

    ScalarFn fn = [&](Tape& t) {
      Var gx = t.constant(x);
      Var gy = gen.forward(t, t.constant(eps));
      if (gc.space == CostSpace::Sliced) return sliced_ct_loss(gx, gy, nav, rho, dirs).loss;
      return ct_loss(gx, gy, nav, cfg, &enc).loss;
    };
    const ProbeDiagnostics diag = probe_diagnostics(fn);
    if (!(diag.kink_margin >= 1e-4)) continue;

    std::vector<Param*> ps = gen.params();
    std::vector<Param*> nav_params = nav_net.params();
    Param* gauge = nav_params.back();
    nav_params.pop_back();
    ps.insert(ps.end(), nav_params.begin(), nav_params.end());
    if (gc.space == CostSpace::Feature) {
      for (Param* p : enc.params()) ps.push_back(p);
    }

    const GradCheckResult r = grad_check(fn, ps);
    if (!(r.min_abs_fd >= 1e-4 * std::abs(r.value))) continue;
    GradOutcome out;
    out.seed = seed;
    out.found = true;
    out.max_rel_error = r.max_rel_error;
    out.coordinates = r.coordinates;
    {
      gauge->zero_grad();
      Tape t;
      t.backward(fn(t));
      out.gauge_grad = gauge->grad.cwiseAbs().maxCoeff();
      gauge->zero_grad();
    }
    return out;
  }
  return {};
}

/// grad_check of the closed-form blended cost with respect to (theta, phi).
inline GradCheckResult analytic_grad_case(double theta, double phi, double rho) {
  Param th(Tensor::Constant(1, 1, theta));
  Param ph(Tensor::Constant(1, 1, phi));
  std::vector<Param*> ps{&th, &ph};
  return grad_check([&](Tape& t) { return analytic::ct_cost_on_tape(t.param(th), t.param(ph), rho); }, ps);
}

/// Probe points of analytic_grad_case; none sits at a stationary point.
inline std::vector<std::array<double, 3>> analytic_grad_points() {
  return {{-1.0, 0.5, 0.25}, {0.7, -1.2, 0.5}, {1.5, 1.0, 0.9}, {-0.3, -0.8, 0.0}, {0.4, 0.9, 1.0}};
}

}  // namespace ctlab
