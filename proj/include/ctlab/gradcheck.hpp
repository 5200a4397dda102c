#pragma once

#include "ctlab/tensor.hpp"

#include <functional>
#include <limits>
#include <span>

namespace ctlab {

using ScalarFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  Index coordinates = 0;
  double value = 0.0;  // fn at the probe point
  // smallest |finite difference|; central differences at step h carry
  // roughly |value| * 1e-16 / h of rounding noise
  double min_abs_fd = std::numeric_limits<double>::infinity();
};

/// Compares tape gradients of `fn` against central finite differences.
/// Per coordinate: |autodiff - fd| / max(1e-8, |fd|). `fn` must build a
/// scalar on the tape it is handed and be deterministic. Parameter values
/// are restored on return; gradient accumulators are left zeroed.
GradCheckResult grad_check(const ScalarFn& fn, std::span<Param* const> params, double step = 1e-6);

/// Where the probe point sits relative to the leaky-relu kinks on the tape
/// built by `fn`. Central differences are meaningful only when the margin
/// is well above the step. A unit that stays on one side of its kink over
/// the whole batch can leave a parameter with an exactly-zero gradient
/// (a shift the loss is invariant to), which differences cannot resolve.
struct ProbeDiagnostics {
  double kink_margin = std::numeric_limits<double>::infinity();
  bool mixed_regimes = true;  // every unit saw both signs across the batch
};
ProbeDiagnostics probe_diagnostics(const ScalarFn& fn);

}  // namespace ctlab
