#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posthoc/checkpoint.hpp"
#include "posthoc/eval_table.hpp"

namespace posthoc {

/// Checkpoints and eval tables of one or more training runs, keyed by
/// (run, index). Within a split, all tables must agree on (n, c); within a
/// run, indices are kept strictly increasing.
///
/// Checkpoint payloads are held at storage precision (float32, exactly what
/// the .f32 files carry) and widened to double on access, so in-memory and
/// disk-backed stores yield bit-identical downstream arithmetic. The
/// container is immutable after construction-by-insertion and safe to share
/// across concurrent readers.
class RunStore {
public:
    void add_checkpoint(int run, double index, const CheckpointTensors& w);
    void add_table(int run, double index, const std::string& split, EvalTable table);

    std::vector<int> runs() const;
    /// Strictly increasing checkpoint indices of one run.
    std::vector<double> indices(int run) const;
    /// Longest shared index prefix across the given runs (empty list = all).
    std::vector<double> common_index_prefix(std::span<const int> runs = {}) const;
    std::vector<std::string> splits() const;

    bool has_run(int run) const;
    bool has_checkpoint(int run, double index) const;
    /// Materializes the checkpoint (widening f32 -> f64). Throws
    /// ValidationError naming the slot when absent.
    CheckpointTensors checkpoint(int run, double index) const;
    const EvalTable& table(int run, double index, const std::string& split) const;
    const EvalTable* find_table(int run, double index, const std::string& split) const;

    /// Tables of one run for one split, in index order.
    std::map<double, EvalTable> split_tables(int run, const std::string& split) const;

    /// Checks the container invariants: at least one run, every entry has a
    /// "val" table.
    void validate() const;

private:
    struct StoredTensor {
        std::string name;
        std::vector<std::uint32_t> shape;
        std::vector<float> data;
    };
    struct Entry {
        std::optional<std::vector<StoredTensor>> weights;
        std::map<std::string, EvalTable> tables;
    };

    const Entry* find_entry(int run, double index) const;

    std::map<int, std::map<double, Entry>> runs_;
    std::map<std::string, std::pair<std::size_t, std::size_t>> split_shape_;  // split -> (n, c)
};

}  // namespace posthoc
