#include "ctlab/nn.hpp"

#include <cmath>
#include <string>

namespace ctlab {

MLPSpec MLPSpec::toy(Index in, Index hidden, Index out, double slope) {
  return MLPSpec{{in, hidden, hidden / 2, out}, slope};
}

void MLPSpec::validate() const {
  if (widths.size() < 3) throw std::invalid_argument("MLPSpec: need at least one hidden layer");
  for (Index w : widths) {
    if (w < 1) throw std::invalid_argument("MLPSpec: widths must be >= 1");
  }
}

MLP::MLP(MLPSpec spec, Rng& rng) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t n = spec_.widths.size() - 1;
  weights_.reserve(n);
  biases_.reserve(n);
  for (std::size_t l = 0; l < n; ++l) {
    const Index fan_in = spec_.widths[l];
    const Index fan_out = spec_.widths[l + 1];
    const double bound = std::sqrt(6.0 / ((1.0 + spec_.slope * spec_.slope) * static_cast<double>(fan_in)));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor w(fan_in, fan_out);
    for (Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
    weights_.emplace_back(std::move(w));
    biases_.emplace_back(Tensor::Zero(1, fan_out));
  }
}

Var MLP::forward(Tape& tape, const Var& input) {
  if (input.cols() != spec_.input_width()) {
    throw ShapeError("mlp_forward: expected " + std::to_string(spec_.input_width()) + " input columns, got " +
                     shape_string(input.value()));
  }
  Var h = input;
  const Index n = input.rows();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = matmul(h, tape.param(weights_[l])) + broadcast_rows(tape.param(biases_[l]), n);
    if (l + 1 < weights_.size()) h = leaky_relu(h, spec_.slope);
  }
  return h;
}

Tensor MLP::apply(const Tensor& input) {
  Tape tape;
  return forward(tape, tape.constant(input)).value();
}

std::vector<Param*> MLP::params() {
  std::vector<Param*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

Adam::Adam(std::vector<Param*> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  for (Param* p : params_) {
    m_.push_back(Tensor::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Tensor::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  for (Param* p : params_) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) {
      throw ShapeError("adam_step: gradient " + shape_string(p->grad) + " does not match parameter " +
                       shape_string(p->value));
    }
  }
  ++t_;
  const double b1 = opts_.beta1;
  const double b2 = opts_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double dir = opts_.maximize ? 1.0 : -1.0;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param& p = *params_[k];
    m_[k] = b1 * m_[k] + (1.0 - b1) * p.grad;
    v_[k] = b2 * v_[k] + (1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() += dir * opts_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + opts_.eps);
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

Tensor draw_noise(Index m, Index dim, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Tensor eps(m, dim);
  for (Index k = 0; k < eps.size(); ++k) eps.data()[k] = n01(rng);
  return eps;
}

Var generator_sample(Tape& tape, MLP& generator, Index m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("generator_sample: M must be >= 1");
  return generator.forward(tape, tape.constant(draw_noise(m, generator.spec().input_width(), rng)));
}

}  // namespace ctlab
