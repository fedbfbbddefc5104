#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posthoc/diagnostics.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/run_store.hpp"
#include "posthoc/transforms.hpp"

namespace posthoc {

enum class SelectionStrategy { naive, posthoc_swa_ts, posthoc_swa_ens_ts, hybrid };

std::string to_string(SelectionStrategy s);

struct SelectionReport {
    SelectionStrategy strategy = SelectionStrategy::naive;
    std::vector<std::pair<int, double>> chosen;  // (run, index); shared index for swa_ens_ts
    MetricValue val_metric;                      // the minimized quantity
    MetricValue test_metric;                     // same transform on the test split (n = 0 if absent)
    std::optional<TransformSpec> transform;      // nullopt for naive
};

/// Index of the series minimum; ties go to the earliest index.
double naive_select(std::span<const double> indices, std::span<const double> values);

/// Naive selection on a run's base validation metric.
SelectionReport naive_select_report(const RunStore& store, int run, MetricKind metric);

/// Post-hoc selection for SWA+TS: evaluates the transformed validation
/// metric at every prefix length (incremental SWA) and takes the argmin.
SelectionReport posthoc_select_swa_ts(const RunStore& store, int run, MetricKind metric,
                                      const Evaluator& evaluator, const FitOptions& opts = {});
SelectionReport posthoc_select_swa_ts(std::span<const SwaSweepPoint> sweep, int run,
                                      MetricKind metric);

/// Constrained shared-epoch search for SWA+Ens+TS: one shared prefix length
/// across runs, the full nesting (per-run temps + outer temp) rebuilt at
/// every grid point. Unequal run lengths truncate to the common prefix.
SelectionReport posthoc_select_swa_ens_ts(const RunStore& store, std::span<const int> runs,
                                          MetricKind metric, const Evaluator& evaluator,
                                          const FitOptions& opts = {});
SelectionReport posthoc_select_swa_ens_ts(std::span<const std::vector<SwaSweepPoint>> sweeps,
                                          std::span<const int> runs, MetricKind metric,
                                          const FitOptions& opts = {});

/// Hybrid: per-run SWA+TS post-hoc selection, then ensemble the selected
/// averaged models with their temps plus a final outer temp.
SelectionReport hybrid_select(const RunStore& store, std::span<const int> runs, MetricKind metric,
                              const Evaluator& evaluator, const FitOptions& opts = {});
SelectionReport hybrid_select(std::span<const std::vector<SwaSweepPoint>> sweeps,
                              std::span<const int> runs, MetricKind metric,
                              const FitOptions& opts = {});

struct MonitorOptions {
    std::size_t patience = 10;
    double min_delta = 0.0;
    MetricKind metric = MetricKind::loss;  // post-TS validation loss
    FitOptions fit;
};

enum class MonitorDecision { proceed, stop };

/// Streaming early stopping on the SWA+TS validation metric. Each step
/// absorbs one checkpoint into the running weight average, evaluates it,
/// fits the temperature, and compares against the best seen so far.
class EarlyStopMonitor {
public:
    EarlyStopMonitor(Evaluator evaluator, MonitorOptions opts = {});

    MonitorDecision step(double index, const CheckpointTensors& ckpt);

    double best_val() const { return best_val_; }
    double best_index() const { return best_index_; }
    std::size_t since_best() const { return since_best_; }
    std::size_t absorbed() const { return swa_.count; }

private:
    Evaluator evaluator_;
    MonitorOptions opts_;
    SwaState swa_;
    double best_val_ = std::numeric_limits<double>::infinity();
    double best_index_ = 0.0;
    std::size_t since_best_ = 0;
};

}  // namespace posthoc
