#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posthoc/calibrate.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/run_store.hpp"
#include "posthoc/transforms.hpp"

namespace posthoc {

/// Base and post-hoc metric series over a strictly increasing index set.
struct CurvePair {
    std::vector<double> indices;
    std::vector<double> base;
    std::vector<double> post;
    MetricKind metric = MetricKind::error;
    TransformKind transform = TransformKind::ts;

    void validate() const;
};

/// Witnesses are (s, t) pairs of index values with base(s) >= base(t) but
/// post(s) < post(t), listed in lexicographic order.
struct ReversalReport {
    bool reversed = false;
    std::vector<std::pair<double, double>> witnesses;
    std::size_t count = 0;
};

/// Metric of a table; clean_error needs the alternate labels.
double metric_of(const EvalTable& t, MetricKind kind,
                 std::span<const std::uint32_t> clean_labels = {});

/// Each index's own metric, in index order. This is the plotting convention
/// (latest checkpoint's metric), not the prefix mean.
std::vector<double> base_curve(const std::map<double, EvalTable>& per_index, MetricKind metric);

struct CurveOptions {
    std::string split = "test";
    int run = 0;  // run id for single-run transforms; 0 picks the lowest
    FitOptions fit;
    std::vector<std::uint32_t> clean_labels;  // for metric = clean_error
};

/// Post-hoc metric series under the index maps: TS uses the index's own
/// checkpoint, Ens the same index across all runs, SWA-composed kinds the
/// prefix up to the index (maintained incrementally). Multi-run kinds run
/// over the common index prefix; single-run kinds over the chosen run's
/// indices. SWA-composed kinds require the evaluator.
std::vector<double> posthoc_curve(const RunStore& store, TransformKind transform,
                                  MetricKind metric, const Evaluator* evaluator,
                                  const CurveOptions& opts = {});

/// Assembles indices + convention base + post series in one go. The base of
/// multi-run transforms is the mean over runs of the per-checkpoint metric.
CurvePair make_curve_pair(const RunStore& store, TransformKind transform, MetricKind metric,
                          const Evaluator* evaluator, const CurveOptions& opts = {});

/// Exhaustive ordered-pair scan for Def-style reversal between the curves.
ReversalReport detect_reversal(const CurvePair& c);

/// Fraction of positions where the two prediction vectors differ, on the
/// masked subset and on its complement.
std::pair<double, double> flip_rate(std::span<const std::uint32_t> preds_a,
                                    std::span<const std::uint32_t> preds_b,
                                    const std::vector<bool>& mask);

/// Temperature fitted on the run's val table at every index, in order.
std::vector<TemperatureFit> temperature_trajectory(const RunStore& store, int run,
                                                   const FitOptions& opts = {});

/// Incremental SWA scan of one run: at each prefix length, average the
/// weights seen so far, evaluate them, and fit the temperature on val.
std::vector<SwaSweepPoint> swa_ts_sweep(const RunStore& store, int run,
                                        const Evaluator& evaluator,
                                        const FitOptions& opts = {});

/// Spearman rank correlation with average ranks on ties.
double spearman_rank_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace posthoc
