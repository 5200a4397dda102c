#pragma once

#include "ctlab/tensor.hpp"

#include <random>
#include <vector>

namespace ctlab {

using Rng = std::mt19937_64;

/// Dense network: affine + leaky-relu on every hidden layer, final affine linear.
struct MLPSpec {
  std::vector<Index> widths;  // input, hidden..., output
  double slope = 0.1;

  /// in -> hidden -> floor(hidden/2) -> out, the toy architecture.
  static MLPSpec toy(Index in, Index hidden, Index out, double slope = 0.1);

  Index input_width() const { return widths.front(); }
  Index output_width() const { return widths.back(); }
  void validate() const;
};

class MLP {
 public:
  MLP() = default;
  /// Kaiming-style uniform weights in +-sqrt(6 / ((1 + slope^2) fan_in)), zero biases.
  MLP(MLPSpec spec, Rng& rng);

  const MLPSpec& spec() const { return spec_; }
  Index layers() const { return static_cast<Index>(weights_.size()); }

  Var forward(Tape& tape, const Var& input);
  /// Forward pass without keeping a tape around.
  Tensor apply(const Tensor& input);

  std::vector<Param*> params();
  Param& weight(Index layer) { return weights_.at(static_cast<std::size_t>(layer)); }
  Param& bias(Index layer) { return biases_.at(static_cast<std::size_t>(layer)); }
  const Param& weight(Index layer) const { return weights_.at(static_cast<std::size_t>(layer)); }
  const Param& bias(Index layer) const { return biases_.at(static_cast<std::size_t>(layer)); }

 private:
  MLPSpec spec_;
  std::vector<Param> weights_;  // fan_in x fan_out
  std::vector<Param> biases_;   // 1 x fan_out
};

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.99;
  double eps = 1e-8;
  bool maximize = false;
};

/// Bias-corrected Adam over a fixed set of parameters.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Param*> params, AdamOptions opts);

  void step();
  void zero_grad();

  std::int64_t steps() const { return t_; }
  const AdamOptions& options() const { return opts_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  std::vector<Param*> params_;
  AdamOptions opts_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

/// M x dim standard-normal noise.
Tensor draw_noise(Index m, Index dim, Rng& rng);

/// Draws M noise rows and pushes them through the generator on `tape`.
Var generator_sample(Tape& tape, MLP& generator, Index m, Rng& rng);

}  // namespace ctlab
