#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posthoc/checkpoint.hpp"
#include "posthoc/eval_table.hpp"

namespace posthoc {

/// Eval bundle codec. Layout: magic "PHEVAL01", u32 LE n, u32 LE c,
/// n*c f32 LE row-major logits, n u32 LE labels. No trailing bytes.
EvalTable read_eval_table(std::span<const std::byte> bytes);
std::vector<std::byte> write_eval_table(const EvalTable& t);

/// Checkpoint codec. The manifest is JSON
///   {"tensors":[{"name","shape","offset_elems"}...],"total_elems":N}
/// and the blob is total_elems little-endian f32 values. Reading honors
/// arbitrary non-overlapping in-range offsets; writing emits contiguous
/// offsets in tensor order.
CheckpointTensors read_checkpoint(std::span<const std::byte> manifest,
                                  std::span<const std::byte> blob);
std::pair<std::string, std::vector<std::byte>> write_checkpoint(const CheckpointTensors& c);

// File helpers for the <stem>.json / <stem>.f32 pair and .phe bundles.
std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);
EvalTable load_eval_table(const std::filesystem::path& path);
void save_eval_table(const std::filesystem::path& path, const EvalTable& t);
CheckpointTensors load_checkpoint(const std::filesystem::path& stem);
void save_checkpoint(const std::filesystem::path& stem, const CheckpointTensors& c);

}  // namespace posthoc
