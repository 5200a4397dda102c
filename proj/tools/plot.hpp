#pragma once

#include "ctlab/tensor.hpp"

#include <string>

namespace ctlab {

/// Overlaid Gaussian KDE curves of 1D data (red) and model samples (blue).
/// The curves are the only <path> elements in the document.
std::string render_kde_svg(const Tensor& data, const Tensor& model);

/// Scatter of 2D data (red) and model samples (blue) with a legend. At most
/// `max_points` leading rows of each set are drawn.
std::string render_scatter_svg(const Tensor& data, const Tensor& model, Index max_points = 2000);

}  // namespace ctlab
