#include "posthoc/spirals.hpp"

#include <cmath>
#include <numeric>

#include "posthoc/errors.hpp"
#include "posthoc/rng.hpp"

namespace posthoc {

void SpiralsDataset::validate() const {
    if (points.size() != n * 2 || labels.size() != n || clean_labels.size() != n ||
        flip_mask.size() != n)
        throw ValidationError("spirals dataset buffers inconsistent");
    for (std::size_t i = 0; i < n; ++i) {
        const bool flipped = labels[i] != clean_labels[i];
        if (flipped != static_cast<bool>(flip_mask[i]))
            throw ValidationError("flip mask does not match label difference");
    }
}

SpiralsDataset gen_spirals(std::size_t n, double noise_rate, std::uint64_t seed) {
    if (n < 4 || n % 2 != 0) throw ValidationError("spirals need an even n >= 4");
    if (!(noise_rate >= 0.0 && noise_rate < 0.5))
        throw ValidationError("noise rate must lie in [0, 0.5)");

    const double kPi = 3.14159265358979323846;
    const double span = 3.0 * kPi;
    const double jitter = 0.05;  // of the max radius (1.0)

    SpiralsDataset d;
    d.n = n;
    d.points.resize(n * 2);
    d.clean_labels.resize(n);
    d.flip_mask.assign(n, false);

    Rng geom = Rng::from_path(seed, {}).derive("geometry");
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t arm = static_cast<std::uint32_t>(i % 2);
        const double theta = geom.next_unit() * span;
        const double radius = theta / span + jitter * geom.next_gauss();
        const double angle = theta + arm * kPi;
        d.points[2 * i] = radius * std::cos(angle);
        d.points[2 * i + 1] = radius * std::sin(angle);
        d.clean_labels[i] = arm;
    }

    d.labels = d.clean_labels;
    const std::size_t flips = static_cast<std::size_t>(std::llround(noise_rate * static_cast<double>(n)));
    Rng noise = Rng::from_path(seed, {}).derive("label_noise");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < flips; ++i) {  // partial Fisher-Yates
        const std::size_t j = i + static_cast<std::size_t>(noise.next_below(n - i));
        std::swap(order[i], order[j]);
        d.flip_mask[order[i]] = true;
        d.labels[order[i]] = 1 - d.labels[order[i]];
    }
    return d;
}

SpiralsDataset concat_spirals(const std::vector<SpiralsDataset>& parts) {
    SpiralsDataset out;
    for (const auto& p : parts) {
        p.validate();
        out.n += p.n;
        out.points.insert(out.points.end(), p.points.begin(), p.points.end());
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
        out.clean_labels.insert(out.clean_labels.end(), p.clean_labels.begin(), p.clean_labels.end());
        out.flip_mask.insert(out.flip_mask.end(), p.flip_mask.begin(), p.flip_mask.end());
    }
    return out;
}

SpiralsDataset slice_spirals(const SpiralsDataset& d, std::size_t begin, std::size_t end) {
    if (begin >= end || end > d.n) throw ValidationError("bad spirals slice");
    SpiralsDataset out;
    out.n = end - begin;
    out.points.assign(d.points.begin() + 2 * begin, d.points.begin() + 2 * end);
    out.labels.assign(d.labels.begin() + begin, d.labels.begin() + end);
    out.clean_labels.assign(d.clean_labels.begin() + begin, d.clean_labels.begin() + end);
    out.flip_mask.assign(d.flip_mask.begin() + begin, d.flip_mask.begin() + end);
    return out;
}

}  // namespace posthoc
