#pragma once

#include <filesystem>
#include <string>

#include "wrcm/continuum.hpp"

namespace wrcm {

struct SvgOptions {
  double width_px = 900.0;
  bool scale_radius_with_weight = true;  // forced off for unweighted models
  double base_radius_px = 3.0;
  bool color_clusters = true;
};

// Draws the realization: edges under nodes, everything clipped to the box,
// node radii proportional to the weights for weighted models, nodes colored
// by union-find cluster root.
std::string render_svg(const PointConfiguration& config,
                       const SvgOptions& opts = {});

void write_svg(const PointConfiguration& config,
               const std::filesystem::path& path, const SvgOptions& opts = {});

}  // namespace wrcm
