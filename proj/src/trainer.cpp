#include "ctlab/trainer.hpp"

#include "ctlab/io.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ctlab {

namespace {

constexpr std::array<std::pair<TrainMode, std::string_view>, 5> kModeNames{{
    {TrainMode::RawCt, "raw-ct"},
    {TrainMode::AdvCt, "adv-ct"},
    {TrainMode::SlicedCt, "sliced-ct"},
    {TrainMode::BaselineW2, "baseline-w2"},
    {TrainMode::BaselineSwd, "baseline-swd"},
}};

// Independent generator per purpose so that e.g. checkpoint cadence never
// shifts the training stream.
enum Stream : std::uint32_t { kData = 0, kInit = 1, kTrain = 2, kEval = 3, kMetric = 4 };

Rng stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(s)};
  return Rng(seq);
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const IoError&) {
    throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  }
}

std::vector<Tensor> snapshot(MLP* net) {
  std::vector<Tensor> out;
  if (net == nullptr) return out;
  for (Param* p : net->params()) out.push_back(p->value);
  return out;
}

void zero_all(MLP* net) {
  if (net == nullptr) return;
  for (Param* p : net->params()) p->zero_grad();
}

void check_finite(double v, Index epoch) {
  if (!std::isfinite(v)) throw std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
}

}  // namespace

std::string_view to_string(TrainMode m) {
  for (const auto& [k, name] : kModeNames) {
    if (k == m) return name;
  }
  throw std::logic_error("unknown train mode");
}

TrainMode parse_train_mode(std::string_view s) {
  for (const auto& [k, name] : kModeNames) {
    if (name == s) return k;
  }
  throw std::invalid_argument("unknown mode '" + std::string(s) +
                              "' (valid: raw-ct, adv-ct, sliced-ct, baseline-w2, baseline-swd)");
}

MLPSpec Architecture::generator(Index data_dim) const { return MLPSpec::toy(noise_dim, hidden, data_dim, slope); }

MLPSpec Architecture::navigator(Index in) const {
  return MLPSpec::toy(in, hidden, navigator_form == NavigatorForm::PairMlp ? 1 : navigator_out, slope);
}

MLPSpec Architecture::encoder(Index data_dim) const { return MLPSpec::toy(data_dim, hidden, encoder_out, slope); }

void TrainConfig::validate() const {
  dataset.validate();
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_n < 1 || batch_m < 1) throw std::invalid_argument("batch sizes must be >= 1");
  if (batch_n > dataset.size) throw std::invalid_argument("batch-n must not exceed the dataset size");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("beta1 and beta2 must lie in [0,1)");
  }
  if (!(nav_lr_divisor > 0.0)) throw std::invalid_argument("nav-lr-divisor must be positive");
  if (freeze_epoch < 0 || freeze_epoch > epochs) throw std::invalid_argument("freeze-epoch must lie in [0, epochs]");
  if (arch.noise_dim < 1 || arch.hidden < 2 || arch.navigator_out < 1 || arch.encoder_out < 1) {
    throw std::invalid_argument("network widths must be >= 1 (hidden >= 2)");
  }
  if (!(arch.slope >= 0.0)) throw std::invalid_argument("slope must be >= 0");
  if (projections < 1 || metric_projections < 1) throw std::invalid_argument("projections must be >= 1");
  if (iterations_per_epoch < 1) throw std::invalid_argument("iterations-per-epoch must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("checkpoint-every must be >= 1");
  if (!(cosine_eps > 0.0)) throw std::invalid_argument("cosine-eps must be positive");
  if (mode == TrainMode::BaselineW2 && dataset.dim() != 1) {
    throw std::invalid_argument("baseline-w2 needs 1D data; use baseline-swd for " + std::string(to_string(dataset.kind)));
  }
  if ((mode == TrainMode::BaselineW2 || mode == TrainMode::BaselineSwd) && batch_n != batch_m) {
    throw std::invalid_argument("sorted W2 baselines need batch-n == batch-m");
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
  const auto i = [](Index v) { return std::to_string(v); };
  const auto d = [](double v) { return format_double(v); };
  return {
      {"mode", std::string(to_string(c.mode))},
      {"rho", d(c.rho)},
      {"epochs", i(c.epochs)},
      {"batch-n", i(c.batch_n)},
      {"batch-m", i(c.batch_m)},
      {"lr", d(c.lr)},
      {"beta1", d(c.beta1)},
      {"beta2", d(c.beta2)},
      {"nav-lr-divisor", d(c.nav_lr_divisor)},
      {"freeze-epoch", i(c.freeze_epoch)},
      {"seed", std::to_string(c.seed)},
      {"dataset", std::string(to_string(c.dataset.kind))},
      {"gamma", d(c.dataset.gamma)},
      {"dataset-size", i(c.dataset.size)},
      {"noise-dim", i(c.arch.noise_dim)},
      {"hidden", i(c.arch.hidden)},
      {"slope", d(c.arch.slope)},
      {"navigator-form", std::string(to_string(c.arch.navigator_form))},
      {"navigator-out", i(c.arch.navigator_out)},
      {"encoder-out", i(c.arch.encoder_out)},
      {"projections", i(c.projections)},
      {"iterations-per-epoch", i(c.iterations_per_epoch)},
      {"checkpoint-every", i(c.checkpoint_every)},
      {"metric-projections", i(c.metric_projections)},
      {"cosine-eps", d(c.cosine_eps)},
  };
}

void apply_config_entry(TrainConfig& c, const std::string& key, const std::string& v) {
  if (key == "mode") c.mode = parse_train_mode(v);
  else if (key == "rho") c.rho = parse_real(key, v);
  else if (key == "epochs") c.epochs = parse_int(key, v);
  else if (key == "batch") c.batch_n = c.batch_m = parse_int(key, v);
  else if (key == "batch-n") c.batch_n = parse_int(key, v);
  else if (key == "batch-m") c.batch_m = parse_int(key, v);
  else if (key == "lr") c.lr = parse_real(key, v);
  else if (key == "beta1") c.beta1 = parse_real(key, v);
  else if (key == "beta2") c.beta2 = parse_real(key, v);
  else if (key == "nav-lr-divisor") c.nav_lr_divisor = parse_real(key, v);
  else if (key == "freeze-epoch") c.freeze_epoch = parse_int(key, v);
  else if (key == "seed") {
    std::uint64_t s = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      throw std::invalid_argument("seed: expected a non-negative integer, got '" + v + "'");
    }
    c.seed = s;
  } else if (key == "dataset") c.dataset.kind = parse_dataset_kind(v);
  else if (key == "gamma") c.dataset.gamma = parse_real(key, v);
  else if (key == "dataset-size") c.dataset.size = parse_int(key, v);
  else if (key == "noise-dim") c.arch.noise_dim = parse_int(key, v);
  else if (key == "hidden") c.arch.hidden = parse_int(key, v);
  else if (key == "slope") c.arch.slope = parse_real(key, v);
  else if (key == "navigator-form") c.arch.navigator_form = parse_navigator_form(v);
  else if (key == "navigator-out") c.arch.navigator_out = parse_int(key, v);
  else if (key == "encoder-out") c.arch.encoder_out = parse_int(key, v);
  else if (key == "projections") c.projections = parse_int(key, v);
  else if (key == "iterations-per-epoch") c.iterations_per_epoch = parse_int(key, v);
  else if (key == "checkpoint-every") c.checkpoint_every = parse_int(key, v);
  else if (key == "metric-projections") c.metric_projections = parse_int(key, v);
  else if (key == "cosine-eps") c.cosine_eps = parse_real(key, v);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

const Checkpoint& RunRecord::final_checkpoint() const {
  if (series.empty() || !series.back().checkpoint) throw std::logic_error("run has no final checkpoint");
  return *series.back().checkpoint;
}

namespace {

Index navigator_input(const TrainConfig& c) {
  switch (c.mode) {
    case TrainMode::RawCt: return c.dataset.dim();
    case TrainMode::AdvCt: return c.arch.encoder_out;
    case TrainMode::SlicedCt: return 1;
    default: return 0;
  }
}

const TrainConfig& validated(const TrainConfig& c) {
  c.validate();
  return c;
}

}  // namespace

Trainer::Trainer(TrainConfig cfg)
    : cfg_(validated(cfg)),
      data_(training_data(cfg_)),
      init_rng_(stream(cfg_.seed, kInit)),
      train_rng_(stream(cfg_.seed, kTrain)),
      generator_(cfg_.arch.generator(cfg_.dataset.dim()), init_rng_) {
  if (cfg_.uses_ct()) navigator_.emplace(cfg_.arch.navigator(navigator_input(cfg_)), init_rng_);
  if (cfg_.mode == TrainMode::AdvCt) encoder_.emplace(cfg_.arch.encoder(cfg_.dataset.dim()), init_rng_);

  Rng eval_rng = stream(cfg_.seed, kEval);
  eval_noise_ = draw_noise(cfg_.dataset.size, cfg_.arch.noise_dim, eval_rng);

  const AdamOptions base{cfg_.lr, cfg_.beta1, cfg_.beta2, 1e-8, false};
  opt_gen_.emplace(generator_.params(), base);
  if (navigator_) {
    AdamOptions o = base;
    o.lr = cfg_.lr / cfg_.nav_lr_divisor;
    opt_nav_.emplace(navigator_->params(), o);
  }
  if (encoder_) {
    AdamOptions o = base;
    o.maximize = true;
    opt_enc_.emplace(encoder_->params(), o);
  }
}

Batch Trainer::draw_batch() {
  Batch b;
  b.x = minibatch(data_, cfg_.batch_n, train_rng_);
  b.noise = draw_noise(cfg_.batch_m, cfg_.arch.noise_dim, train_rng_);
  if (cfg_.mode == TrainMode::SlicedCt || cfg_.mode == TrainMode::BaselineSwd) {
    b.directions = random_directions(cfg_.projections, cfg_.dataset.dim(), train_rng_);
  }
  return b;
}

Var Trainer::objective(Tape& tape, const Batch& b, CTTerms* terms) {
  Var x = tape.constant(b.x);
  Var y = generator_.forward(tape, tape.constant(b.noise));
  const NavigatorForm form = cfg_.arch.navigator_form;
  CTConfig ct{cfg_.rho, CostSpace::Raw, 1, form, cfg_.cosine_eps};
  switch (cfg_.mode) {
    case TrainMode::RawCt:
    case TrainMode::AdvCt:
    case TrainMode::SlicedCt: {
      Navigator nav = form == NavigatorForm::PairMlp ? Navigator::pair(*navigator_) : Navigator::embedding(*navigator_);
      if (cfg_.mode == TrainMode::SlicedCt) {
        *terms = sliced_ct_loss(x, y, nav, cfg_.rho, b.directions);
      } else if (cfg_.mode == TrainMode::AdvCt) {
        ct.space = CostSpace::Feature;
        *terms = ct_loss(x, y, nav, ct, &*encoder_);
      } else {
        *terms = ct_loss(x, y, nav, ct);
      }
      return terms->loss;
    }
    case TrainMode::BaselineW2:
      return sorted_w2(x, y);
    case TrainMode::BaselineSwd: {
      Var u = tape.constant(b.directions.transpose());
      return sorted_w2(matmul(x, u), matmul(y, u));
    }
  }
  throw std::logic_error("unknown train mode");
}

double Trainer::adversarial_step(const Batch& b) {
  if (!encoder_) throw std::logic_error("adversarial_step: mode has no encoder");
  zero_all(&generator_);
  zero_all(navigator());
  zero_all(encoder());
  Tape tape;
  CTTerms terms;
  Var loss = objective(tape, b, &terms);
  check_finite(loss.item(), epoch_ + 1);
  tape.backward(loss);
  opt_enc_->step();
  return loss.item();
}

void Trainer::descent_step(const Batch& b, bool update_navigator, EpochRecord& rec) {
  zero_all(&generator_);
  zero_all(navigator());
  zero_all(encoder());
  Tape tape;
  CTTerms terms;
  Var loss = objective(tape, b, &terms);
  check_finite(loss.item(), epoch_ + 1);
  tape.backward(loss);
  opt_gen_->step();
  if (update_navigator && opt_nav_) opt_nav_->step();

  rec.objective = loss.item();
  rec.has_ct = cfg_.uses_ct();
  if (rec.has_ct) {
    rec.ct = loss.item();
    rec.forward = terms.forward;
    rec.backward = terms.backward;
  }
}

EpochRecord Trainer::run_epoch() {
  const Index e = epoch_ + 1;
  const bool freeze = cfg_.freeze_epoch > 0 && e > cfg_.freeze_epoch;
  EpochRecord rec;
  rec.epoch = e;
  for (Index it = 0; it < cfg_.iterations_per_epoch; ++it) {
    const Batch b = draw_batch();
    if (encoder_ && !freeze) adversarial_step(b);
    descent_step(b, !freeze, rec);
  }
  epoch_ = e;
  if (e % cfg_.checkpoint_every == 0 || e == cfg_.epochs) rec.checkpoint = evaluate();
  return rec;
}

Checkpoint Trainer::evaluate(Tensor* samples_out) {
  Tensor samples = generator_.apply(eval_noise_);
  if (!samples.allFinite()) {
    throw std::runtime_error("training diverged: non-finite samples at epoch " + std::to_string(epoch_));
  }
  Checkpoint cp = evaluate_samples(cfg_, data_.data, samples);
  if (samples_out != nullptr) *samples_out = std::move(samples);
  return cp;
}

SampleSet training_data(const TrainConfig& cfg) {
  cfg.dataset.validate();
  return sample_dataset(cfg.dataset, stream(cfg.seed, kData)());
}

Checkpoint evaluate_samples(const TrainConfig& cfg, const Tensor& x, const Tensor& samples) {
  if (samples.cols() != x.cols() || samples.rows() != x.rows()) {
    throw ShapeError("evaluate: samples " + shape_string(samples) + " do not match data " + shape_string(x));
  }
  Checkpoint cp;
  MetricReport& r = cp.report;
  if (x.cols() == 1) {
    r.w2sq = wasserstein2_1d({x.data(), static_cast<std::size_t>(x.size())},
                             {samples.data(), static_cast<std::size_t>(samples.size())});
    try {
      grid_kl_pair(x, samples, KlGrid{}, r);
    } catch (const std::invalid_argument&) {
      // every generated sample fell off the grid
      r.kl_forward = r.kl_reverse = std::numeric_limits<double>::infinity();
      r.d_gap = std::numeric_limits<double>::quiet_NaN();
    }
    cp.has_kl = true;
  } else {
    Rng metric_rng = stream(cfg.seed, kMetric);
    r.w2sq = sliced_w2(x, samples, random_directions(cfg.metric_projections, x.cols(), metric_rng));
  }
  if (cfg.dataset.has_modes()) {
    const ModeCapture mc = mode_capture(samples, mode_centers(cfg.dataset));
    r.modes_captured = mc.captured;
    r.mode_fractions = mc.fractions;
    cp.has_modes = true;
  }
  return cp;
}

RunRecord train(const TrainConfig& cfg) {
  Trainer t(cfg);
  RunRecord run;
  run.config = cfg;
  run.series.reserve(static_cast<std::size_t>(cfg.epochs));
  for (Index e = 0; e < cfg.epochs; ++e) run.series.push_back(t.run_epoch());
  t.evaluate(&run.samples_final);
  run.generator_params = snapshot(&t.generator());
  run.navigator_params = snapshot(t.navigator());
  run.encoder_params = snapshot(t.encoder());
  return run;
}

std::string manifest_json(const TrainConfig& cfg) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["tool"] = "ctlab";
  j["version"] = kVersion;
  j["seed"] = cfg.seed;
  ordered_json c = ordered_json::object();
  for (const auto& [k, v] : config_entries(cfg)) c[k] = v;
  j["config"] = c;
  j["epoch_definition"] =
      "one epoch = iterations-per-epoch steps; each step draws a without-replacement data batch and fresh generator "
      "noise, then makes one optimizer step per trained parameter group (adv-ct: encoder ascent, then generator and "
      "navigator descent on the same batch)";
  j["rng_streams"] = {{"data", 0}, {"init", 1}, {"train", 2}, {"eval_noise", 3}, {"metric_directions", 4}};
  j["dataset_constants"] = {{"ring_radius", toy::kRingRadius},
                            {"grid_spacing", toy::kGridSpacing},
                            {"mode_std", toy::kModeStd},
                            {"curve_noise", toy::kCurveNoise}};
  if (cfg.dataset.has_modes()) {
    const ModeSet m = mode_centers(cfg.dataset);
    ordered_json centers = ordered_json::array();
    for (Index r = 0; r < m.centers.rows(); ++r) {
      ordered_json row = ordered_json::array();
      for (Index k = 0; k < m.centers.cols(); ++k) row.push_back(m.centers(r, k));
      centers.push_back(row);
    }
    j["mode_centers"] = centers;
    j["mode_weights"] = m.weights;
    j["mode_std"] = m.std;
  }
  const KlGrid g;
  j["metrics"] = {{"eval_samples", cfg.dataset.size},
                  {"checkpoint_every", cfg.checkpoint_every},
                  {"kl_grid", {{"lo", g.lo}, {"hi", g.hi}, {"bins", g.bins}, {"floor", g.floor}}},
                  {"w2sq_ref", cfg.dataset.dim() == 1 ? "sorted 1D W2^2 vs the full data set"
                                                      : "sliced W2^2 over metric-projections fixed directions"},
                  {"mode_capture", {{"radius_std_multiple", 3.0}, {"min_fraction", 0.01}}},
                  {"kde_bandwidth", "scott"}};
  return j.dump(2) + "\n";
}

std::string metrics_csv(const RunRecord& run) {
  std::string s = "epoch,ct,forward,backward,w2sq_ref,kl_fwd,kl_rev,d_gap,modes_captured\n";
  for (const EpochRecord& e : run.series) {
    s += std::to_string(e.epoch);
    s += ',';
    if (e.has_ct) s += format_double(e.ct) + ',' + format_double(e.forward) + ',' + format_double(e.backward);
    else s += ",,";
    s += ',';
    if (e.checkpoint) {
      const Checkpoint& cp = *e.checkpoint;
      s += format_double(cp.report.w2sq) + ',';
      if (cp.has_kl) {
        s += format_double(cp.report.kl_forward) + ',' + format_double(cp.report.kl_reverse) + ',' +
             format_double(cp.report.d_gap) + ',';
      } else {
        s += ",,,";
      }
      if (cp.has_modes) s += std::to_string(cp.report.modes_captured);
    } else {
      s += ",,,,";
    }
    s += '\n';
  }
  return s;
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffU));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffU));
}

std::uint64_t get_uint(const std::string& in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size()) throw IoError("params file truncated");
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(k)])) << (8 * k);
  }
  pos += static_cast<std::size_t>(bytes);
  return v;
}

constexpr std::string_view kParamsMagic = "CTLP";

}  // namespace

std::string encode_params(const std::vector<Tensor>& tensors) {
  std::string out(kParamsMagic);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor& t : tensors) {
    put_u64(out, static_cast<std::uint64_t>(t.rows()));
    put_u64(out, static_cast<std::uint64_t>(t.cols()));
    for (Index k = 0; k < t.size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(t.data()[k]));
  }
  return out;
}

std::vector<Tensor> decode_params(const std::string& bytes) {
  if (bytes.compare(0, kParamsMagic.size(), kParamsMagic) != 0) throw IoError("params file: bad magic");
  std::size_t pos = kParamsMagic.size();
  if (get_uint(bytes, pos, 4) != 1) throw IoError("params file: unsupported version");
  const std::uint64_t count = get_uint(bytes, pos, 4);
  std::vector<Tensor> out;
  for (std::uint64_t n = 0; n < count; ++n) {
    const std::uint64_t rows = get_uint(bytes, pos, 8);
    const std::uint64_t cols = get_uint(bytes, pos, 8);
    if (rows * cols > (bytes.size() - pos) / 8) throw IoError("params file truncated");
    Tensor t(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index k = 0; k < t.size(); ++k) t.data()[k] = std::bit_cast<double>(get_uint(bytes, pos, 8));
    out.push_back(std::move(t));
  }
  if (pos != bytes.size()) throw IoError("params file: trailing bytes");
  return out;
}

void write_run(const RunRecord& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create directory: " + ec.message());
  write_text_file(dir / "manifest.json", manifest_json(run.config));
  write_text_file(dir / "metrics.csv", metrics_csv(run));
  write_matrix_csv(dir / "samples_final.csv", run.samples_final);
  write_text_file(dir / "params_final.bin", encode_params(run.generator_params));
}

std::vector<SweepRow> batch_sensitivity_sweep(const TrainConfig& base, const std::vector<Index>& batches) {
  if (base.dataset.dim() != 1) throw std::invalid_argument("batch sweep needs 1D data");
  if (!base.uses_ct()) throw std::invalid_argument("batch sweep: base mode must be a CT mode");
  std::vector<SweepRow> rows;
  for (Index n : batches) {
    for (TrainMode mode : {base.mode, TrainMode::BaselineW2}) {
      TrainConfig c = base;
      c.mode = mode;
      c.batch_n = c.batch_m = n;
      c.iterations_per_epoch = std::max<Index>(1, base.dataset.size / std::max<Index>(1, n));
      c.checkpoint_every = c.epochs;
      const RunRecord run = train(c);
      rows.push_back({mode, n, run.final_checkpoint().report.w2sq});
    }
  }
  return rows;
}

FreezeComparison freeze_robustness_run(const TrainConfig& cfg) {
  if (!cfg.uses_ct()) throw std::invalid_argument("freeze run: mode must be raw-ct, adv-ct or sliced-ct");
  FreezeComparison out;
  out.frozen = train(cfg);
  TrainConfig never = cfg;
  never.freeze_epoch = 0;
  out.baseline = train(never);
  const double a = out.frozen.final_checkpoint().report.w2sq;
  const double b = out.baseline.final_checkpoint().report.w2sq;
  out.w2_ratio = b > 0.0 ? a / b : (a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace ctlab
