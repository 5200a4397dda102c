#pragma once

#include "ctlab/data.hpp"
#include "ctlab/empirical.hpp"
#include "ctlab/metrics.hpp"
#include "ctlab/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctlab {

inline constexpr std::string_view kVersion = "0.1.0";

enum class TrainMode : std::uint8_t { RawCt, AdvCt, SlicedCt, BaselineW2, BaselineSwd };

std::string_view to_string(TrainMode m);
TrainMode parse_train_mode(std::string_view s);

/// Layer widths of the three networks. Every net is MLPSpec::toy shaped
/// {in, hidden, hidden/2, out}; input widths follow from the data and mode.
struct Architecture {
  Index noise_dim = 50;
  Index hidden = 100;
  double slope = 0.1;
  NavigatorForm navigator_form = NavigatorForm::Embedding;
  Index navigator_out = 10;  // embedding width; the pair form always emits 1
  Index encoder_out = 10;

  MLPSpec generator(Index data_dim) const;
  /// Navigator for inputs of width `in` (data, unit features or projections).
  MLPSpec navigator(Index in) const;
  MLPSpec encoder(Index data_dim) const;
};

struct TrainConfig {
  TrainMode mode = TrainMode::RawCt;
  double rho = 0.5;
  Index epochs = 5000;
  Index batch_n = 100;
  Index batch_m = 100;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.99;
  double nav_lr_divisor = 5.0;
  Index freeze_epoch = 0;  // 0 = never; otherwise only theta trains after it
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  Architecture arch;
  Index projections = 10;  // sliced-ct and baseline-swd directions per step
  Index iterations_per_epoch = 1;
  Index checkpoint_every = 100;
  Index metric_projections = 100;  // fixed directions of the 2D w2sq_ref
  double cosine_eps = 1e-8;

  void validate() const;
  bool uses_ct() const { return mode == TrainMode::RawCt || mode == TrainMode::AdvCt || mode == TrainMode::SlicedCt; }
};

/// Flat key/value view of a config. Keys match the CLI flag names; values are
/// written so that parsing them back gives a bit-identical config.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg);
/// Sets one key; throws std::invalid_argument on unknown keys or bad values.
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);

struct Checkpoint {
  MetricReport report;
  bool has_kl = false;
  bool has_modes = false;
};

struct EpochRecord {
  Index epoch = 0;
  double objective = 0.0;  // minimized loss of the last descent step
  bool has_ct = false;     // CT modes only
  double ct = 0.0;
  double forward = 0.0;
  double backward = 0.0;
  std::optional<Checkpoint> checkpoint;
};

struct RunRecord {
  TrainConfig config;
  std::vector<EpochRecord> series;
  Tensor samples_final;                  // dataset.size x dim, fixed eval noise
  std::vector<Tensor> generator_params;  // MLP::params() order
  std::vector<Tensor> navigator_params;
  std::vector<Tensor> encoder_params;

  const Checkpoint& final_checkpoint() const;
};

/// One training step's randomness: data rows, generator noise and, for the
/// sliced modes, the projection directions.
struct Batch {
  Tensor x;
  Tensor noise;
  Tensor directions;
};

/// Owns the data, networks and optimizers of one run. train() drives it; the
/// step methods are public so tests can inspect single updates.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  Batch draw_batch();
  /// Ascent step on the encoder (adv-ct only). Returns the loss before the step.
  double adversarial_step(const Batch& b);
  /// Descent on theta, and on phi unless frozen. Fills the loss fields of `rec`.
  void descent_step(const Batch& b, bool update_navigator, EpochRecord& rec);
  /// One epoch; increments epoch().
  EpochRecord run_epoch();
  Checkpoint evaluate(Tensor* samples_out = nullptr);
  bool frozen() const { return cfg_.freeze_epoch > 0 && epoch_ >= cfg_.freeze_epoch; }

  Index epoch() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }
  const SampleSet& data() const { return data_; }
  MLP& generator() { return generator_; }
  MLP* navigator() { return navigator_ ? &*navigator_ : nullptr; }
  MLP* encoder() { return encoder_ ? &*encoder_ : nullptr; }

 private:
  Var objective(Tape& tape, const Batch& b, CTTerms* terms);

  TrainConfig cfg_;
  SampleSet data_;
  Rng init_rng_;
  Rng train_rng_;
  Tensor eval_noise_;
  MLP generator_;
  std::optional<MLP> navigator_;
  std::optional<MLP> encoder_;
  std::optional<Adam> opt_gen_;
  std::optional<Adam> opt_nav_;
  std::optional<Adam> opt_enc_;
  Index epoch_ = 0;
};

RunRecord train(const TrainConfig& cfg);

/// The data set a run with this config trains on.
SampleSet training_data(const TrainConfig& cfg);
/// Checkpoint metrics of `samples` against `data`, exactly as train() logs them.
Checkpoint evaluate_samples(const TrainConfig& cfg, const Tensor& data, const Tensor& samples);

/// Resolved config, version, dataset constants and epoch definition.
std::string manifest_json(const TrainConfig& cfg);
std::string metrics_csv(const RunRecord& run);
/// Writes manifest.json, metrics.csv, samples_final.csv and params_final.bin.
void write_run(const RunRecord& run, const std::filesystem::path& dir);

/// params_final.bin: "CTLP" magic, u32 version 1, u32 tensor count, then per
/// tensor u64 rows, u64 cols and rows*cols row-major f64, all little-endian.
std::string encode_params(const std::vector<Tensor>& tensors);
std::vector<Tensor> decode_params(const std::string& bytes);

struct SweepRow {
  TrainMode mode = TrainMode::RawCt;
  Index batch = 0;
  double w2sq = 0.0;
};

/// Trains base.mode (a CT mode) and baseline-w2 at each batch size with
/// |X|/N iterations per epoch; reports the final full-set W2^2. 1D data only.
std::vector<SweepRow> batch_sensitivity_sweep(const TrainConfig& base, const std::vector<Index>& batches);

struct FreezeComparison {
  RunRecord frozen;
  RunRecord baseline;
  double w2_ratio = 0.0;  // frozen / never-frozen final w2sq_ref
};

/// Trains `cfg` as given and again with freeze_epoch = 0. Callers set
/// freeze_epoch (epochs/2 in the robustness experiment).
FreezeComparison freeze_robustness_run(const TrainConfig& cfg);

}  // namespace ctlab
