// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// all selected criteria pass. `acceptance 3 5` runs a subset.

#include "ctlab/alloc.hpp"
#include "ctlab/analytic.hpp"
#include "ctlab/empirical.hpp"
#include "ctlab/grad_suite.hpp"
#include "ctlab/io.hpp"
#include "ctlab/metrics.hpp"
#include "ctlab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ctlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Tensor col(std::initializer_list<double> v) {
  Tensor t(static_cast<Index>(v.size()), 1);
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

// Loop oracle of the mini-batch CT estimate from a cost and an energy matrix.
struct OracleParts {
  double forward = 0.0;
  double backward = 0.0;
};

OracleParts oracle_parts(const Tensor& c, const Tensor& d) {
  OracleParts p;
  const Index n = c.rows();
  const Index m = c.cols();
  for (Index i = 0; i < n; ++i) {
    const double mn = d.row(i).minCoeff();
    double z = 0.0;
    double acc = 0.0;
    for (Index j = 0; j < m; ++j) z += std::exp(mn - d(i, j));
    for (Index j = 0; j < m; ++j) acc += c(i, j) * std::exp(mn - d(i, j));
    p.forward += acc / z / static_cast<double>(n);
  }
  for (Index j = 0; j < m; ++j) {
    const double mn = d.col(j).minCoeff();
    double z = 0.0;
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) z += std::exp(mn - d(i, j));
    for (Index i = 0; i < n; ++i) acc += c(i, j) * std::exp(mn - d(i, j));
    p.backward += acc / z / static_cast<double>(m);
  }
  return p;
}

Tensor loop_sqdist(const Tensor& a, const Tensor& b) {
  Tensor d(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Index k = 0; k < a.cols(); ++k) s += (a(i, k) - b(j, k)) * (a(i, k) - b(j, k));
      d(i, j) = s;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------

Outcome lemma1_oracle() {
  Rng rng(20240601);
  const std::vector<double> grid{-1.0, 0.0, 1.0};
  double worst = 0.0;
  std::string worst_at;
  int bad = 0;
  for (double th : grid) {
    for (double ph : grid) {
      const analytic::GaussPair<double> p{th, ph};
      const McParts parts = mc_ct_parts(p, 20000, 20000, 20, rng);
      for (double rho : {0.0, 0.5, 1.0}) {
        const double exact = analytic::ct_cost(p, rho).blended;
        const double rel = std::abs(parts.blended(rho).mean - exact) / std::abs(exact);
        bad += rel <= 0.01 ? 0 : 1;
        if (rel > worst) {
          worst = rel;
          worst_at = "(" + num(th) + "," + num(ph) + "," + num(rho) + ")";
        }
      }
    }
  }
  const double at_origin = analytic::ct_cost(analytic::GaussPair<double>{0.0, 0.0}, 0.5).blended;
  const bool origin_ok = std::abs(at_origin - 0.75) <= 1e-12;
  return {bad == 0 && origin_ok, "27 points, worst rel err " + num(worst) + " at " + worst_at +
                                     ", analytic(0,0,0.5)=" + num(at_origin, 17)};
}

Outcome gradient_suite() {
  double worst = 0.0;
  bool ok = true;
  for (const GradCase& gc : grad_cases()) {
    const GradOutcome r = run_grad_case(gc, 100);
    ok = ok && r.found && r.gauge_grad < 1e-12;
    worst = std::max(worst, r.max_rel_error);
  }
  double worst_analytic = 0.0;
  for (const auto& [th, ph, rho] : analytic_grad_points()) {
    worst_analytic = std::max(worst_analytic, analytic_grad_case(th, ph, rho).max_rel_error);
  }
  ok = ok && worst < 1e-5 && worst_analytic < 1e-5;
  return {ok, "ct_loss max rel err " + num(worst) + " over " + std::to_string(grad_cases().size()) +
                  " space/navigator cases, analytic cost " + num(worst_analytic)};
}

Outcome hand_oracle() {
  Tape t;
  Navigator id = Navigator::identity();
  CTConfig cfg;
  cfg.rho = 0.5;
  const double v = ct_loss(t.constant(col({0, 1})), t.constant(col({0, 1})), id, cfg).loss.item();
  // each point keeps weight e^0 on itself and e^-1 on the other; only the
  // off-diagonal pairs cost 1
  const double hand = std::exp(-1.0) / (1.0 + std::exp(-1.0));
  return {std::abs(v - 0.26894) <= 1e-5 && std::abs(v - hand) <= 1e-14,
          "ct_loss=" + num(v, 10) + " hand=" + num(hand, 10)};
}

Outcome w2_optimality() {
  Rng rng(7);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> small(-2, 2);
  int trials = 0;
  int bad = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int t = 0; t < 200; ++t, ++trials) {
      // every fourth trial uses small integers so that ties occur
      std::vector<double> a(n);
      std::vector<double> b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = t % 4 == 3 ? small(rng) : 3.0 * z(rng);
        b[i] = t % 4 == 3 ? small(rng) : 3.0 * z(rng);
      }
      // with a sorted, the sorted pairing is one of the enumerated
      // permutations and is summed in the same order
      std::vector<double> as = a;
      std::sort(as.begin(), as.end());
      const auto cost = [&](const std::vector<double>& bb) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (as[i] - bb[i]) * (as[i] - bb[i]);
        return s;
      };
      std::vector<double> perm = b;
      std::sort(perm.begin(), perm.end());
      const double sorted = cost(perm);
      double best = std::numeric_limits<double>::infinity();
      do {
        best = std::min(best, cost(perm));
      } while (std::next_permutation(perm.begin(), perm.end()));
      const bool attains = sorted == best;
      const double lib = wasserstein2_1d(a, b) * static_cast<double>(n);
      const bool lib_ok = std::abs(lib - best) <= 1e-13 * std::max(1.0, best);
      bad += attains && lib_ok ? 0 : 1;
    }
  }
  return {bad == 0, std::to_string(trials - bad) + "/" + std::to_string(trials) +
                        " trials (lengths 1..6) where the sorted pairing attains the enumerated minimum"};
}

Outcome analytic_dynamics() {
  bool ok = true;
  std::string detail;
  for (double theta0 : {1.0, -1.0}) {
    analytic::DemoOptions o;
    o.theta0 = theta0;
    o.phi0 = 0.0;
    const auto rows = analytic::gd_demo(o);
    long first = -1;
    for (const auto& r : rows) {
      if (std::abs(r.theta) < 0.05) {
        first = r.step;
        break;
      }
    }
    const bool pass = first >= 0 && first <= 10000 && std::abs(rows.back().theta) < 0.05;
    ok = ok && pass;
    detail += "theta0=" + num(theta0) + ": |theta|<0.05 from step " + std::to_string(first) +
              ", final theta " + num(rows.back().theta) + "; ";
  }
  return {ok, detail};
}

Outcome mode_cover_seek() {
  std::vector<double> gaps[3];
  const double rhos[3] = {1.0, 0.5, 0.0};
  for (int r = 0; r < 3; ++r) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      TrainConfig c;
      c.mode = TrainMode::RawCt;
      c.rho = rhos[r];
      c.seed = seed;
      c.dataset.kind = DatasetKind::Bimodal1d;
      c.dataset.size = 5000;
      c.epochs = 5000;
      c.batch_n = c.batch_m = 100;
      c.checkpoint_every = 5000;
      gaps[r].push_back(train(c).final_checkpoint().report.d_gap);
    }
  }
  const double g1 = median(gaps[0]);
  const double gh = median(gaps[1]);
  const double g0 = median(gaps[2]);
  const bool ok = g1 < 0.0 && g0 > 0.0 && std::abs(gh) < std::abs(g1) && std::abs(gh) < std::abs(g0);
  return {ok, "median d-gap rho=1: " + num(g1) + ", rho=0.5: " + num(gh) + ", rho=0: " + num(g0)};
}

bool weighted_fraction_ok(const MetricReport& r) {
  return !r.mode_fractions.empty() && r.mode_fractions[0] >= 0.01 && r.mode_fractions[0] <= 0.15;
}

Outcome mode_collapse() {
  int good = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    TrainConfig c;
    c.mode = TrainMode::AdvCt;
    c.seed = seed;
    c.dataset.kind = DatasetKind::Ring8;
    c.dataset.gamma = 0.05;
    c.dataset.size = 5000;
    c.epochs = 5000;
    c.batch_n = c.batch_m = 100;
    c.checkpoint_every = 5000;
    const MetricReport r = train(c).final_checkpoint().report;
    const bool pass = r.modes_captured == 8 && weighted_fraction_ok(r);
    good += pass ? 1 : 0;
    detail += "seed " + std::to_string(seed) + ": " + std::to_string(r.modes_captured) + " modes, weighted " +
              num(r.mode_fractions[0]) + "; ";
  }
  return {good >= 2, detail + std::to_string(good) + "/3 seeds pass"};
}

Outcome batch_sensitivity() {
  TrainConfig base;
  base.mode = TrainMode::RawCt;
  base.dataset.kind = DatasetKind::Bimodal1d;
  base.dataset.size = 5000;
  // An N=5000 ct step takes about 1 s on one core; 1000 epochs keeps the N=5000 run near 20 minutes.
  base.epochs = 1000;
  const std::vector<SweepRow> rows = batch_sensitivity_sweep(base, {20, 5000});
  double ct20 = 0;
  double ct5k = 0;
  double w20 = 0;
  double w5k = 0;
  for (const SweepRow& r : rows) {
    const bool ct = r.mode != TrainMode::BaselineW2;
    (r.batch == 20 ? (ct ? ct20 : w20) : (ct ? ct5k : w5k)) = r.w2sq;
  }
  const double ratio5k = std::max(ct5k, w5k) / std::min(ct5k, w5k);
  const bool ok = ct20 <= 2.0 * ct5k && ct20 < w20 && ratio5k <= 2.0;
  return {ok, "W2^2 ct N=20 " + num(ct20) + ", ct N=5000 " + num(ct5k) + ", w2 N=20 " + num(w20) + ", w2 N=5000 " +
                  num(w5k)};
}

Outcome freeze_robustness() {
  TrainConfig c;
  c.mode = TrainMode::AdvCt;
  c.dataset.kind = DatasetKind::Ring8;
  c.dataset.gamma = 0.05;
  c.epochs = 4000;
  c.freeze_epoch = 2000;
  c.checkpoint_every = 4000;
  const FreezeComparison fc = freeze_robustness_run(c);
  const MetricReport& f = fc.frozen.final_checkpoint().report;
  const MetricReport& b = fc.baseline.final_checkpoint().report;
  int lost = 0;
  for (std::size_t k = 0; k < b.mode_fractions.size(); ++k) {
    if (b.mode_fractions[k] >= 0.01 && f.mode_fractions[k] < 0.01) ++lost;
  }
  const bool ok = fc.w2_ratio <= 1.2 && lost == 0;
  return {ok, "sliced W2 frozen " + num(f.w2sq) + " vs never-frozen " + num(b.w2sq) + " (ratio " + num(fc.w2_ratio) +
                  "), modes " + std::to_string(f.modes_captured) + " vs " + std::to_string(b.modes_captured) +
                  ", lost " + std::to_string(lost)};
}

Outcome structural_invariants() {
  Rng rng(99);
  std::uniform_int_distribution<Index> size(1, 12);
  std::uniform_int_distribution<Index> dim(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int cases = 0;
  int bad = 0;
  std::string first_failure;
  const auto fail = [&](const std::string& what) {
    ++bad;
    if (first_failure.empty()) first_failure = what + " (case " + std::to_string(cases) + ")";
  };
  for (; cases < 1200; ++cases) {
    const Index n = size(rng);
    const Index m = size(rng);
    const Index d = dim(rng);
    const double spread = 0.1 + 4.0 * unit(rng);
    const Tensor x = spread * draw_noise(n, d, rng);
    const Tensor y = spread * draw_noise(m, d, rng) + Tensor::Constant(m, d, unit(rng));
    const int kind = cases % 4;  // identity, embedding, pair-mlp, feature space
    MLP emb(MLPSpec::toy(d, 8, 3), rng);
    MLP pair(MLPSpec{{d, 8, 1}}, rng);
    MLP enc(MLPSpec::toy(d, 8, 4), rng);
    MLP femb(MLPSpec::toy(4, 8, 3), rng);
    Navigator nav = kind == 0   ? Navigator::identity(0.3 + unit(rng))
                    : kind == 1 ? Navigator::embedding(emb)
                    : kind == 2 ? Navigator::pair(pair)
                                : Navigator::embedding(femb);
    CTConfig cfg;
    if (kind == 3) cfg.space = CostSpace::Feature;
    MLP* e = kind == 3 ? &enc : nullptr;

    const auto value = [&](const Tensor& a, const Tensor& b, double rho) {
      Tape t;
      CTConfig c = cfg;
      c.rho = rho;
      return ct_loss(t.constant(a), t.constant(b), nav, c, e);
    };
    Tape t;
    const Tensor energy = navigator_matrix(t.constant(x), t.constant(y), nav, cfg, e).value();
    const TransportMaps maps = transport_maps(energy);
    const double row_err = (maps.forward.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_err = (maps.backward.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_err > 1e-10 || col_err > 1e-10) fail("stochasticity");

    const CTTerms full = value(x, y, 0.5);
    if (!(full.loss.item() >= 0.0) || full.forward < 0.0 || full.backward < 0.0) fail("non-negativity");

    // the loss is affine in rho with the forward and backward parts as ends
    const double l1 = value(x, y, 1.0).loss.item();
    const double l0 = value(x, y, 0.0).loss.item();
    const double rho = unit(rng);
    const double lr = value(x, y, rho).loss.item();
    if (std::abs(lr - (rho * l1 + (1.0 - rho) * l0)) > 1e-12 * std::max(1.0, std::abs(lr))) fail("rho-linearity");

    // loop oracle on the raw cost, including the ends
    if (kind != 3) {
      const OracleParts o = oracle_parts(loop_sqdist(x, y), energy);
      if (std::abs(o.forward - l1) > 1e-12 * std::max(1.0, o.forward) ||
          std::abs(o.backward - l0) > 1e-12 * std::max(1.0, o.backward)) {
        fail("loop oracle");
      }
    }

    // symmetric cost and energy: swapping the batches leaves rho=0.5 unchanged
    const double swapped = value(y, x, 0.5).loss.item();
    if (std::abs(swapped - full.loss.item()) > 1e-12 * std::max(1.0, std::abs(swapped))) fail("swap symmetry");
  }

  // determinism: repeated seeds give byte-identical metrics.csv
  int runs = 0;
  for (TrainMode mode : {TrainMode::RawCt, TrainMode::AdvCt, TrainMode::SlicedCt, TrainMode::BaselineW2,
                         TrainMode::BaselineSwd}) {
    for (std::uint64_t seed : {0u, 1u}) {
      TrainConfig c;
      c.mode = mode;
      c.seed = seed;
      c.dataset.kind = mode == TrainMode::BaselineW2 ? DatasetKind::Bimodal1d : DatasetKind::Ring8;
      c.dataset.size = 500;
      c.epochs = 60;
      c.batch_n = c.batch_m = 32;
      c.arch.hidden = 16;
      c.arch.noise_dim = 5;
      c.checkpoint_every = 20;
      c.freeze_epoch = mode == TrainMode::AdvCt && seed == 1 ? 30 : 0;
      if (metrics_csv(train(c)) != metrics_csv(train(c))) fail("determinism " + std::string(to_string(mode)));
      ++runs;
    }
  }
  return {bad == 0, std::to_string(cases) + " randomized cases x 5 properties, " + std::to_string(runs) +
                        " repeated runs, " + std::to_string(bad) + " failures" +
                        (first_failure.empty() ? "" : ", first: " + first_failure)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  ctlab::keep_heap_resident();
  const std::vector<Criterion> all{
      {1, "lemma-1 oracle", lemma1_oracle},
      {2, "gradient suite", gradient_suite},
      {3, "hand oracle", hand_oracle},
      {4, "1D W2 optimality", w2_optimality},
      {5, "analytic dynamics", analytic_dynamics},
      {6, "mode covering/seeking", mode_cover_seek},
      {7, "mode-collapse resistance", mode_collapse},
      {8, "mini-batch sensitivity", batch_sensitivity},
      {9, "frozen-critic robustness", freeze_robustness},
      {10, "structural invariants", structural_invariants},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    try {
      only.insert(std::stoi(argv[i]));
    } catch (const std::exception&) {
      std::cerr << "usage: acceptance [criterion ids...]\n";
      return 1;
    }
  }
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << c.id << ' ' << (o.pass ? "PASS" : "FAIL") << " [" << c.name << "] " << o.detail
              << " (" << num(secs, 3) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
