#pragma once

#include "ctlab/nn.hpp"
#include "ctlab/tensor.hpp"

#include <span>
#include <string_view>

namespace ctlab {

enum class CostSpace : std::uint8_t { Raw, Feature, Sliced };
enum class NavigatorForm : std::uint8_t { Embedding, PairMlp };

std::string_view to_string(CostSpace s);
std::string_view to_string(NavigatorForm f);
CostSpace parse_cost_space(std::string_view s);
NavigatorForm parse_navigator_form(std::string_view s);

struct CTConfig {
  double rho = 0.5;
  CostSpace space = CostSpace::Raw;
  Index projections = 1;  // sliced space only
  NavigatorForm form = NavigatorForm::Embedding;
  double cosine_eps = 1e-8;

  void validate() const;
};

/// Navigator energy d_phi(a, b).
///  - Embedding: ||T(a) - T(b)||^2 with T = net, or T(a) = identity_scale * a
///    when no net is attached.
///  - PairMlp: net((a - b) o (a - b)), net output width 1.
/// Non-owning; the trainer owns the network.
struct Navigator {
  NavigatorForm form = NavigatorForm::Embedding;
  MLP* net = nullptr;
  double identity_scale = 1.0;

  static Navigator embedding(MLP& net) { return {NavigatorForm::Embedding, &net, 1.0}; }
  static Navigator pair(MLP& net) { return {NavigatorForm::PairMlp, &net, 1.0}; }
  static Navigator identity(double scale = 1.0) { return {NavigatorForm::Embedding, nullptr, scale}; }
};

/// Row- and column-normalized transport plans for an energy matrix.
struct TransportMaps {
  Tensor cost;      // NxM, may be empty when only the maps were requested
  Tensor forward;   // row-stochastic, softmax_j(-d_ij)
  Tensor backward;  // column-stochastic, softmax_i(-d_ij)
};

/// Scalar loss plus its forward and backward components.
struct CTTerms {
  Var loss;
  double forward = 0.0;
  double backward = 0.0;
};

/// Point-to-point cost c(x_i, y_j).
///  raw:     squared Euclidean distance
///  feature: 1 - cos(T_eta(x), T_eta(y)), evaluated as 0.5 ||u - v||^2 on the
///           norm-floored unit features, which is exact on the diagonal
///  sliced:  squared difference of 1-column projected inputs
Var cost_matrix(const Var& x, const Var& y, const CTConfig& cfg, MLP* encoder = nullptr);

/// NxM navigator energies; in feature space the navigator sees unit features.
Var navigator_matrix(const Var& x, const Var& y, Navigator& nav, const CTConfig& cfg, MLP* encoder = nullptr);

/// Energy matrix only, on already-prepared inputs.
Var navigator_energy(const Var& a, const Var& b, Navigator& nav);

TransportMaps transport_maps(const Tensor& energy);

/// Mini-batch CT estimate
///   sum_ij c_ij (rho/N F_ij + (1-rho)/M B_ij)
/// in raw or feature space.
CTTerms ct_loss(const Var& x, const Var& y, Navigator& nav, const CTConfig& cfg, MLP* encoder = nullptr);

/// K x dim matrix of directions drawn uniformly on the unit sphere.
Tensor random_directions(Index k, Index dim, Rng& rng);

/// CT averaged over `cfg.projections` random 1D projections; raw 1D cost and
/// the embedding navigator act on the projected samples.
CTTerms sliced_ct_loss(const Var& x, const Var& y, Navigator& nav, const CTConfig& cfg, Rng& rng);
/// Same, with explicit K x V directions.
CTTerms sliced_ct_loss(const Var& x, const Var& y, Navigator& nav, double rho, const Tensor& directions);

struct CTEstimate {
  double forward = 0.0;
  double backward = 0.0;
  double blended(double rho) const { return rho * forward + (1.0 - rho) * backward; }
};

/// Tape-free CT estimate for 1D samples with cost (x-y)^2 and navigator
/// energy k (x-y)^2. Streams over pairs with O(N+M) memory.
CTEstimate ct_estimate_quadratic_1d(std::span<const double> x, std::span<const double> y, double k);

}  // namespace ctlab
