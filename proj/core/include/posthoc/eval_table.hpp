#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace posthoc {

/// Logits and labels for one split of one checkpoint. Logits are row-major
/// n x c, held in double although files store float32 (decoding widens,
/// encoding narrows with round-to-nearest-even).
struct EvalTable {
    std::size_t n = 0;
    std::size_t c = 0;
    std::vector<double> logits;          // n * c, row-major
    std::vector<std::uint32_t> labels;   // n entries, each < c

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(logits).subspan(i * c, c);
    }

    /// Throws ValidationError unless n >= 1, c >= 2, sizes match, every
    /// label < c and every logit is finite.
    void validate() const;
};

}  // namespace posthoc
