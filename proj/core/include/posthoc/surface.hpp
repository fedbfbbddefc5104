#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace posthoc {

using PredictFn = std::function<std::uint32_t(double x, double y)>;

struct SurfaceBounds {
    double xmin = -1.2, xmax = 1.2;
    double ymin = -1.2, ymax = 1.2;
};

/// Predicted classes on a regular resolution x resolution lattice covering
/// the bounds (endpoints included), row-major with the top row at ymax.
std::vector<std::uint32_t> render_decision_surface(const PredictFn& predict,
                                                   const SurfaceBounds& bounds,
                                                   std::size_t resolution);

/// Binary PGM (P5, maxval 255); pixel value = class * 255 / (classes - 1).
void write_pgm(const std::filesystem::path& path, std::span<const std::uint32_t> grid,
               std::size_t width, std::size_t height, std::uint32_t classes);

}  // namespace posthoc
