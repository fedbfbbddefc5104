#pragma once

#include <optional>

#include <json.hpp>

#include "posthoc/run_store.hpp"
#include "posthoc/store_dir.hpp"
#include "posthoc/transforms.hpp"

namespace posthoc {

struct ReportOptions {
    FitOptions fit;
    bool include_witnesses = false;  // witness lists can be large; counts always included
};

/// Per-run SWA scans plus the shared grid; computed once and reused by
/// curves, selection comparisons and reversal checks.
struct StoreAnalysis {
    std::vector<int> runs;
    std::vector<double> grid;                        // common index prefix
    std::vector<std::vector<SwaSweepPoint>> sweeps;  // empty when no evaluator
};

StoreAnalysis analyze_store(const RunStore& store, const Evaluator* evaluator,
                            const FitOptions& opts = {});

/// Full summary: base/post-hoc curves for every applicable transform,
/// reversal reports per (transform, metric), and the naive vs post-hoc vs
/// hybrid selection table. Ens rows require >= 2 runs; SWA-composed rows
/// require an evaluator (synthetic stores rebuild one from the sidecar).
nlohmann::json report_all(const RunStore& store, const std::optional<SynthSidecar>& sidecar,
                          const ReportOptions& opts = {});

}  // namespace posthoc
