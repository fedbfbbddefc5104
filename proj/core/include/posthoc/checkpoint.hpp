#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace posthoc {

struct TensorEntry {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<double> data;  // flat, length == product of shape
};

/// Named flat weight tensors of one checkpoint; the unit weight averaging
/// operates on. Tensor names are unique and order is significant.
struct CheckpointTensors {
    std::vector<TensorEntry> tensors;

    std::size_t total_elems() const;
    const TensorEntry* find(const std::string& name) const;

    /// Throws ValidationError on duplicate names, shape/data length
    /// mismatches, or non-finite entries.
    void validate() const;

    /// True when tensor names and shapes match entry-by-entry.
    bool same_schema(const CheckpointTensors& other) const;
};

/// Position of one checkpoint: the training run it came from (>= 1) and a
/// real-valued epoch tag. Fractional tags cover sub-epoch checkpointing.
struct CheckpointIndex {
    int run = 1;
    double index = 0.0;
};

}  // namespace posthoc
