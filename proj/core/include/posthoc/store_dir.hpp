#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "posthoc/mlp.hpp"
#include "posthoc/run_store.hpp"
#include "posthoc/spirals.hpp"

namespace posthoc {

/// Index tag formatting for file names: up to 3 decimal places, trailing
/// zeros trimmed ("10", "0.7", "10.25").
std::string format_index(double index);
double parse_index(const std::string& text);

/// Directory layout: run-<j>/ckpt-<index>.json + .f32 and
/// run-<j>/<split>-<index>.phe.
void write_run_store(const RunStore& store, const std::filesystem::path& dir);
RunStore read_run_store(const std::filesystem::path& dir);

/// Sidecar written by `synth run` so later commands can rebuild the MLP
/// evaluator: synth.json (config) + dataset.bin (points, labels, clean
/// labels, flip mask).
struct SynthSidecar {
    MlpConfig cfg;
    int n_models = 0;
    SpiralsDataset data;
};

void write_synth_sidecar(const std::filesystem::path& dir, const SynthSidecar& sidecar);
std::optional<SynthSidecar> read_synth_sidecar(const std::filesystem::path& dir);

}  // namespace posthoc
