#include "posthoc/surface.hpp"

#include <fstream>

#include "posthoc/errors.hpp"

namespace posthoc {

std::vector<std::uint32_t> render_decision_surface(const PredictFn& predict,
                                                   const SurfaceBounds& bounds,
                                                   std::size_t resolution) {
    if (resolution < 2) throw ValidationError("surface resolution must be >= 2");
    if (!(bounds.xmin < bounds.xmax) || !(bounds.ymin < bounds.ymax))
        throw ValidationError("degenerate surface bounds");
    std::vector<std::uint32_t> grid(resolution * resolution);
    const double dx = (bounds.xmax - bounds.xmin) / static_cast<double>(resolution - 1);
    const double dy = (bounds.ymax - bounds.ymin) / static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double y = bounds.ymax - static_cast<double>(i) * dy;
        for (std::size_t j = 0; j < resolution; ++j)
            grid[i * resolution + j] = predict(bounds.xmin + static_cast<double>(j) * dx, y);
    }
    return grid;
}

void write_pgm(const std::filesystem::path& path, std::span<const std::uint32_t> grid,
               std::size_t width, std::size_t height, std::uint32_t classes) {
    if (classes < 2) throw ValidationError("PGM export needs at least 2 classes");
    if (grid.size() != width * height) throw ValidationError("grid size does not match dimensions");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot create " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    for (std::uint32_t cls : grid) {
        if (cls >= classes) throw ValidationError("class id exceeds class count");
        out.put(static_cast<char>(cls * 255u / (classes - 1)));
    }
    if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace posthoc
