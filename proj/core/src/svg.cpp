#include "wrcm/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wrcm {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string cluster_color(uint64_t root, uint64_t size) {
  if (size <= 1) return "#b0b0b0";
  // stable hue from the root id
  double hue = static_cast<double>((root * 2654435761ULL) % 360);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "hsl(%d, 65%%, 45%%)",
                static_cast<int>(hue));
  return buf;
}

}  // namespace

std::string render_svg(const PointConfiguration& config,
                       const SvgOptions& opts) {
  if (config.dim() != 2)
    throw std::invalid_argument("render_svg: planar realizations only");
  const double L = config.box();
  const double w = opts.width_px;
  const double scale = w / (2.0 * L);
  auto px = [&](double x) { return (x + L) * scale; };
  auto py = [&](double y) { return (L - y) * scale; };

  bool weighted = config.model().adjacency.weighted &&
                  opts.scale_radius_with_weight;

  auto clusters = all_clusters(config);
  std::vector<std::string> color(config.size(), "#808080");
  if (opts.color_clusters) {
    for (const auto& c : clusters) {
      std::string col = cluster_color(c.members.empty() ? 0 : c.members[0],
                                      c.size);
      for (PointId m : c.members) color[m] = col;
    }
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(w) << "\" viewBox=\"0 0 " << fmt(w) << " "
      << fmt(w) << "\">\n";
  svg << "<defs><clipPath id=\"box\"><rect x=\"0\" y=\"0\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(w) << "\"/></clipPath></defs>\n";
  svg << "<rect width=\"" << fmt(w) << "\" height=\"" << fmt(w)
      << "\" fill=\"white\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "<g clip-path=\"url(#box)\">\n";

  // edges first so nodes draw on top
  svg << "<g stroke=\"#666\" stroke-width=\"0.8\" stroke-opacity=\"0.7\">\n";
  for (PointId i = 0; i < config.size(); ++i)
    for (PointId j = i + 1; j < config.size(); ++j)
      if (config.edge_present(i, j))
        svg << "<line x1=\"" << fmt(px(config.coord(i, 0))) << "\" y1=\""
            << fmt(py(config.coord(i, 1))) << "\" x2=\""
            << fmt(px(config.coord(j, 0))) << "\" y2=\""
            << fmt(py(config.coord(j, 1))) << "\"/>\n";
  svg << "</g>\n";

  svg << "<g stroke=\"black\" stroke-width=\"0.4\">\n";
  for (PointId i = 0; i < config.size(); ++i) {
    double r = opts.base_radius_px;
    if (weighted) r *= config.weight(i);
    svg << "<circle cx=\"" << fmt(px(config.coord(i, 0))) << "\" cy=\""
        << fmt(py(config.coord(i, 1))) << "\" r=\"" << fmt(r) << "\" fill=\""
        << color[i] << "\"/>\n";
  }
  svg << "</g>\n</g>\n</svg>\n";
  return svg.str();
}

void write_svg(const PointConfiguration& config,
               const std::filesystem::path& path, const SvgOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  out << render_svg(config, opts);
}

}  // namespace wrcm
