#include "cli.hpp"

#include "plot.hpp"

#include "ctlab/analytic.hpp"
#include "ctlab/grad_suite.hpp"
#include "ctlab/io.hpp"
#include "ctlab/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <sstream>

namespace ctlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string json_scalar(const std::string& key, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  throw std::invalid_argument("config key '" + key + "' must be a string or a number");
}

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> h{
      {"mode", "raw-ct | adv-ct | sliced-ct | baseline-w2 | baseline-swd"},
      {"rho", "forward/backward blend in [0,1]"},
      {"epochs", "number of epochs"},
      {"batch", "sets both batch-n and batch-m"},
      {"batch-n", "data rows per step"},
      {"batch-m", "generated rows per step"},
      {"lr", "Adam learning rate of generator and encoder"},
      {"beta1", "Adam beta1"},
      {"beta2", "Adam beta2"},
      {"nav-lr-divisor", "navigator learning rate = lr / divisor"},
      {"freeze-epoch", "train only the generator after this epoch (0 = never)"},
      {"seed", "run seed (default: $CT_LAB_SEED, else 0)"},
      {"dataset", "bimodal1d | ring8 | grid25 | swiss-roll | half-moons"},
      {"gamma", "ring8 weight of mode 0"},
      {"dataset-size", "number of data samples"},
      {"noise-dim", "generator input width"},
      {"hidden", "hidden width H of every network"},
      {"slope", "leaky-relu slope"},
      {"navigator-form", "embedding | pair-mlp"},
      {"navigator-out", "embedding navigator output width"},
      {"encoder-out", "adv-ct feature width"},
      {"projections", "directions per step (sliced-ct, baseline-swd)"},
      {"iterations-per-epoch", "optimizer steps per epoch"},
      {"checkpoint-every", "metric checkpoint cadence in epochs"},
      {"metric-projections", "fixed directions of the 2D sliced W2 metric"},
      {"cosine-eps", "norm floor of the unit features"},
  };
  return h;
}

/// Config keys exposed as flags on a subcommand, resolved as
/// defaults < config file < $CT_LAB_SEED (seed only, if still unset) < flags.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) : app_(app) {
    app->add_option("--config", config_path_, "config file: key = value lines or a manifest.json");
    keys_.push_back("batch");
    for (const auto& [k, v] : config_entries(TrainConfig{})) keys_.push_back(k);
    for (const std::string& k : keys_) {
      auto it = key_help().find(k);
      app->add_option("--" + k, values_[k], it == key_help().end() ? k : it->second);
    }
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    bool seed_set = false;
    if (!config_path_.empty()) {
      for (const auto& [k, v] : load_config_file(config_path_)) {
        apply_config_entry(cfg, k, v);
        seed_set = seed_set || k == "seed";
      }
    }
    if (!seed_set && app_->count("--seed") == 0) {
      if (const char* env = std::getenv("CT_LAB_SEED")) apply_config_entry(cfg, "seed", env);
    }
    for (const std::string& k : keys_) {
      if (app_->count("--" + k) > 0) apply_config_entry(cfg, k, values_.at(k));
    }
    cfg.validate();
    return cfg;
  }

  bool given(const std::string& key) const { return app_->count("--" + key) > 0; }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::vector<std::string> keys_;
  std::map<std::string, std::string> values_;
};

std::uint64_t default_seed(const CLI::App* app, std::uint64_t flag_value) {
  if (app->count("--seed") > 0) return flag_value;
  TrainConfig c;
  if (const char* env = std::getenv("CT_LAB_SEED")) apply_config_entry(c, "seed", env);
  return c.seed;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string checkpoint_json(const Checkpoint& cp) {
  nlohmann::ordered_json j;
  j["w2sq_ref"] = cp.report.w2sq;
  if (cp.has_kl) {
    j["kl_fwd"] = cp.report.kl_forward;
    j["kl_rev"] = cp.report.kl_reverse;
    j["d_gap"] = cp.report.d_gap;
  }
  if (cp.has_modes) {
    j["modes_captured"] = cp.report.modes_captured;
    j["mode_fractions"] = cp.report.mode_fractions;
  }
  return j.dump(2) + "\n";
}

std::string summary_line(const RunRecord& run) {
  const Checkpoint& cp = run.final_checkpoint();
  std::string s = "final w2sq_ref=" + format_double(cp.report.w2sq);
  if (cp.has_kl) s += " d_gap=" + format_double(cp.report.d_gap);
  if (cp.has_modes) s += " modes_captured=" + std::to_string(cp.report.modes_captured);
  return s;
}

TrainConfig config_of_run(const std::filesystem::path& dir) {
  TrainConfig cfg;
  for (const auto& [k, v] : load_config_file(dir / "manifest.json")) apply_config_entry(cfg, k, v);
  cfg.validate();
  return cfg;
}

Tensor read_samples(const std::filesystem::path& dir) {
  const std::filesystem::path p = dir / "samples_final.csv";
  Tensor s = read_matrix_csv(p);
  if (s.rows() == 0) throw IoError(p.string() + ": no samples");
  return s;
}

// ---- oracle checks -------------------------------------------------------

int oracle_lemma1(const std::vector<double>& thetas, const std::vector<double>& phis, const std::vector<double>& rhos,
                  Index n, Index trials, std::uint64_t seed, std::ostream& out) {
  Rng rng(seed);
  int failed = 0;
  int total = 0;
  for (double th : thetas) {
    for (double ph : phis) {
      const analytic::GaussPair<double> p{th, ph};
      const McParts parts = mc_ct_parts(p, n, n, trials, rng);
      for (double rho : rhos) {
        const double exact = analytic::ct_cost(p, rho).blended;
        const McResult mc = parts.blended(rho);
        const double rel = std::abs(mc.mean - exact) / std::abs(exact);
        const bool ok = rel <= 0.01;
        failed += ok ? 0 : 1;
        ++total;
        out << "lemma1 theta=" << format_double(th) << " phi=" << format_double(ph) << " rho=" << format_double(rho)
            << " analytic=" << format_double(exact) << " mc=" << format_double(mc.mean)
            << " se=" << format_double(mc.stderr_) << " z=" << format_double((mc.mean - exact) / mc.stderr_)
            << " rel_err=" << format_double(rel) << (ok ? " PASS" : " FAIL") << '\n';
      }
    }
  }
  out << "lemma1: " << (total - failed) << '/' << total << " within 1% relative error\n";
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

int oracle_gradcheck(std::ostream& out) {
  constexpr double kTol = 1e-5;
  bool ok = true;
  for (const GradCase& gc : grad_cases()) {
    const GradOutcome r = run_grad_case(gc, 100);
    const bool pass = r.found && r.max_rel_error < kTol && r.gauge_grad < 1e-12;
    ok = ok && pass;
    out << "gradcheck ct_loss " << gc.name << " max_rel_err=" << format_double(r.max_rel_error)
        << " coords=" << r.coordinates << " seed=" << r.seed << (pass ? " PASS" : " FAIL") << '\n';
  }
  double worst = 0.0;
  for (const auto& [th, ph, rho] : analytic_grad_points()) {
    worst = std::max(worst, analytic_grad_case(th, ph, rho).max_rel_error);
  }
  const bool pass = worst < kTol;
  ok = ok && pass;
  out << "gradcheck ct_cost_analytic max_rel_err=" << format_double(worst) << (pass ? " PASS" : " FAIL") << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

int oracle_w2_enum(Index n, Index trials, std::uint64_t seed, std::ostream& out) {
  if (n < 1 || n > 8) throw std::invalid_argument("w2-enum: n must lie in [1, 8]");
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  int failed = 0;
  for (Index t = 0; t < trials; ++t) {
    std::vector<double> a(static_cast<std::size_t>(n));
    std::vector<double> b(static_cast<std::size_t>(n));
    for (double& v : a) v = z(rng);
    for (double& v : b) v = z(rng);
    const auto cost = [&](const std::vector<std::size_t>& perm) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[perm[i]]) * (a[i] - b[perm[i]]);
      return s / static_cast<double>(a.size());
    };
    // sorted pairing: the k-th smallest of a meets the k-th smallest of b
    std::vector<std::size_t> ia(a.size());
    std::vector<std::size_t> ib(b.size());
    std::iota(ia.begin(), ia.end(), 0);
    std::iota(ib.begin(), ib.end(), 0);
    std::sort(ia.begin(), ia.end(), [&](auto i, auto j) { return a[i] < a[j]; });
    std::sort(ib.begin(), ib.end(), [&](auto i, auto j) { return b[i] < b[j]; });
    std::vector<std::size_t> sorted_perm(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) sorted_perm[ia[k]] = ib[k];
    const double sorted_cost = cost(sorted_perm);

    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    long count = 0;
    do {
      best = std::min(best, cost(perm));
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double w2 = wasserstein2_1d(a, b);
    const bool ok = sorted_cost == best && std::abs(w2 - best) <= 1e-14 * std::max(1.0, best);
    failed += ok ? 0 : 1;
    out << "w2-enum n=" << n << " pairings=" << count << " sorted=" << format_double(sorted_cost)
        << " enumerated_min=" << format_double(best) << " wasserstein2_1d=" << format_double(w2)
        << (ok ? " PASS" : " FAIL") << '\n';
  }
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> load_config_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::pair<std::string, std::string>> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
    const nlohmann::json& obj = j.contains("config") ? j.at("config") : j;
    if (!obj.is_object()) throw IoError(path.string() + ": config must be a JSON object");
    for (const auto& [k, v] : obj.items()) out.emplace_back(k, json_scalar(k, v));
    return out;
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional transport distances: closed forms, mini-batch estimators and toy generator fits"};
  app.name("ctlab");
  app.require_subcommand(1);

  // analytic
  analytic::DemoOptions demo;
  std::string analytic_out;
  CLI::App* an = app.add_subcommand("analytic", "gradient descent on the closed-form Gaussian CT cost");
  an->add_option("--theta0", demo.theta0, "initial generator log-variance")->capture_default_str();
  an->add_option("--phi0", demo.phi0, "initial navigator parameter")->capture_default_str();
  an->add_option("--lr-theta", demo.lr_theta, "step size of theta")->capture_default_str();
  an->add_option("--lr-phi", demo.lr_phi, "step size of phi (0 freezes phi)")->capture_default_str();
  an->add_option("--steps", demo.steps, "number of steps")->capture_default_str();
  an->add_option("--rho", demo.rho, "forward/backward blend")->capture_default_str();
  an->add_option("--out", analytic_out, "CSV output (default stdout)");

  // fit
  CLI::App* fit = app.add_subcommand("fit", "train a generator and write a run directory");
  ConfigFlags fit_flags(fit);
  std::string fit_dir;
  fit->add_option("--out-dir", fit_dir, "run directory")->required();

  // sweep
  CLI::App* sw = app.add_subcommand("sweep", "batch-size sensitivity or freeze robustness experiment");
  ConfigFlags sweep_flags(sw);
  std::string sweep_kind = "batch";
  std::vector<Index> batches{20, 200, 5000};
  std::string sweep_dir;
  sw->add_option("--kind", sweep_kind, "batch | freeze")
      ->check(CLI::IsMember({"batch", "freeze"}))
      ->capture_default_str();
  sw->add_option("--batches", batches, "batch sizes of the batch sweep")->delimiter(',');
  sw->add_option("--out-dir", sweep_dir, "output directory")->required();

  // oracle
  CLI::App* orc = app.add_subcommand("oracle", "independent checks: lemma1 | gradcheck | w2-enum");
  std::string check;
  double o_theta = 0.0;
  double o_phi = 0.0;
  double o_rho = 0.5;
  Index o_n = 20000;
  Index o_trials = 20;
  std::uint64_t o_seed = 0;
  orc->add_option("--check", check, "lemma1 | gradcheck | w2-enum")
      ->required()
      ->check(CLI::IsMember({"lemma1", "gradcheck", "w2-enum"}));
  orc->add_option("--theta", o_theta, "lemma1: single theta (default: grid -1,0,1)");
  orc->add_option("--phi", o_phi, "lemma1: single phi (default: grid -1,0,1)");
  orc->add_option("--rho", o_rho, "lemma1: single rho (default: 0,0.5,1)");
  orc->add_option("--n", o_n, "lemma1: N=M per trial; w2-enum: vector length");
  orc->add_option("--trials", o_trials, "Monte Carlo trials / random instances");
  orc->add_option("--seed", o_seed, "seed (default: $CT_LAB_SEED, else 0)");

  // eval
  CLI::App* ev = app.add_subcommand("eval", "recompute the metric report of a run directory");
  std::string eval_dir;
  std::string eval_out;
  ev->add_option("--run-dir", eval_dir, "run directory")->required();
  ev->add_option("--out", eval_out, "JSON output (default stdout)");

  // plot
  CLI::App* pl = app.add_subcommand("plot", "render a run as SVG");
  std::string plot_dir;
  std::string plot_kind;
  std::string plot_out;
  pl->add_option("--run-dir", plot_dir, "run directory")->required();
  pl->add_option("--kind", plot_kind, "kde (1D) | scatter (2D)")->required()->check(CLI::IsMember({"kde", "scatter"}));
  pl->add_option("--out", plot_out, "SVG output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (an->parsed()) {
      std::string csv = "step,theta,phi,forward,backward,blended\n";
      for (const analytic::DemoRow& r : analytic::gd_demo(demo)) {
        csv += std::to_string(r.step) + ',' + format_double(r.theta) + ',' + format_double(r.phi) + ',' +
               format_double(r.forward) + ',' + format_double(r.backward) + ',' + format_double(r.blended) + '\n';
      }
      emit(analytic_out, csv, out);
      return kExitOk;
    }
    if (fit->parsed()) {
      const TrainConfig cfg = fit_flags.resolve();
      const RunRecord run = train(cfg);
      write_run(run, fit_dir);
      out << "wrote " << fit_dir << ": " << summary_line(run) << '\n';
      return kExitOk;
    }
    if (sw->parsed()) {
      TrainConfig cfg = sweep_flags.resolve();
      std::filesystem::create_directories(sweep_dir);
      const std::filesystem::path dir(sweep_dir);
      if (sweep_kind == "batch") {
        std::string csv = "mode,batch,w2sq\n";
        for (const SweepRow& r : batch_sensitivity_sweep(cfg, batches)) {
          csv += std::string(to_string(r.mode)) + ',' + std::to_string(r.batch) + ',' + format_double(r.w2sq) + '\n';
        }
        write_text_file(dir / "manifest.json", manifest_json(cfg));
        write_text_file(dir / "sweep.csv", csv);
        out << csv;
      } else {
        if (!sweep_flags.given("freeze-epoch") && cfg.freeze_epoch == 0) cfg.freeze_epoch = cfg.epochs / 2;
        const FreezeComparison fc = freeze_robustness_run(cfg);
        write_run(fc.frozen, dir / "frozen");
        write_run(fc.baseline, dir / "never-frozen");
        nlohmann::ordered_json j;
        j["freeze_epoch"] = cfg.freeze_epoch;
        j["w2_ratio"] = fc.w2_ratio;
        j["frozen"] = nlohmann::ordered_json::parse(checkpoint_json(fc.frozen.final_checkpoint()));
        j["never_frozen"] = nlohmann::ordered_json::parse(checkpoint_json(fc.baseline.final_checkpoint()));
        const std::string text = j.dump(2) + "\n";
        write_text_file(dir / "summary.json", text);
        out << text;
      }
      return kExitOk;
    }
    if (orc->parsed()) {
      const std::uint64_t seed = default_seed(orc, o_seed);
      if (check == "lemma1") {
        const bool single = orc->count("--theta") + orc->count("--phi") + orc->count("--rho") > 0;
        const std::vector<double> grid{-1.0, 0.0, 1.0};
        return oracle_lemma1(single ? std::vector<double>{o_theta} : grid, single ? std::vector<double>{o_phi} : grid,
                             single ? std::vector<double>{o_rho} : std::vector<double>{0.0, 0.5, 1.0}, o_n, o_trials,
                             seed, out);
      }
      if (check == "gradcheck") return oracle_gradcheck(out);
      return oracle_w2_enum(orc->count("--n") > 0 ? o_n : 4, orc->count("--trials") > 0 ? o_trials : 1, seed, out);
    }
    if (ev->parsed()) {
      const TrainConfig cfg = config_of_run(eval_dir);
      const SampleSet data = training_data(cfg);
      emit(eval_out, checkpoint_json(evaluate_samples(cfg, data.data, read_samples(eval_dir))), out);
      return kExitOk;
    }
    if (pl->parsed()) {
      const Tensor samples = read_samples(plot_dir);
      const TrainConfig cfg = config_of_run(plot_dir);
      const SampleSet data = training_data(cfg);
      if (plot_kind == "kde" && data.data.cols() != 1) throw std::invalid_argument("kde plots need 1D data; use scatter");
      if (plot_kind == "scatter" && data.data.cols() != 2) {
        throw std::invalid_argument("scatter plots need 2D data; use kde");
      }
      const std::string svg =
          plot_kind == "kde" ? render_kde_svg(data.data, samples) : render_scatter_svg(data.data, samples);
      write_text_file(plot_out, svg);
      return kExitOk;
    }
  } catch (const IoError& e) {
    err << "ctlab: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "ctlab: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "ctlab: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace ctlab
