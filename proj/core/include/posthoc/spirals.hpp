#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace posthoc {

/// Two interleaved noisy spiral arms with a fraction of labels flipped.
/// points is row-major n x 2; labels are the observed (possibly flipped)
/// classes, clean_labels the pre-flip ones, and flip_mask marks exactly the
/// positions where they differ.
struct SpiralsDataset {
    std::size_t n = 0;
    std::vector<double> points;               // n * 2
    std::vector<std::uint32_t> labels;
    std::vector<std::uint32_t> clean_labels;
    std::vector<bool> flip_mask;

    void validate() const;
};

/// Generates n points (n >= 4, even): arm = position parity, angle uniform
/// in [0, 3*pi], radius proportional to the angle with Gaussian radial
/// jitter (sigma = 0.05 of the max radius), the second arm rotated by pi.
/// Exactly round(noise_rate * n) labels are flipped on a uniformly drawn
/// subset. Deterministic given the seed.
SpiralsDataset gen_spirals(std::size_t n, double noise_rate, std::uint64_t seed);

/// Concatenation preserving flip bookkeeping; used to build a
/// train+val+test package from independently generated splits.
SpiralsDataset concat_spirals(const std::vector<SpiralsDataset>& parts);

/// Contiguous slice [begin, end) of a dataset.
SpiralsDataset slice_spirals(const SpiralsDataset& d, std::size_t begin, std::size_t end);

}  // namespace posthoc
