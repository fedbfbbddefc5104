#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posthoc/calibrate.hpp"
#include "posthoc/checkpoint.hpp"
#include "posthoc/eval_table.hpp"

namespace posthoc {

enum class TransformKind { ts, ens, swa, swa_ts, swa_ens_ts };

std::string to_string(TransformKind k);
TransformKind transform_kind_from_string(const std::string& s);

/// Contiguous checkpoint range of one run that fed a transform.
struct IndexRange {
    int run = 1;
    double first = 0.0;
    double last = 0.0;
};

struct TransformSpec {
    TransformKind kind = TransformKind::ts;
    std::vector<double> member_temps;      // per-member tau_k / tau_l
    std::optional<double> ensemble_temp;   // outer tau for swa_ens_ts
    std::vector<IndexRange> members;
};

/// Tables for the splits an evaluator produced on one set of weights.
/// Always contains "val"; "test" and "train" are optional.
using SplitTables = std::map<std::string, EvalTable>;

/// Produces eval tables for arbitrary weights. SWA-composed transforms need
/// this because averaged-weight logits are not derivable from member logits
/// for nonlinear models.
using Evaluator = std::function<SplitTables(const CheckpointTensors&)>;

/// Mean of (1/temps[k]) * logits over members, in member order. All tables
/// must share (n, c) and identical labels.
EvalTable ensemble_logits(std::span<const EvalTable> tables, std::span<const double> temps);

/// Elementwise arithmetic mean of same-schema checkpoints.
CheckpointTensors swa_mean(std::span<const CheckpointTensors> checkpoints);

/// Running weight average. mean tracks the arithmetic mean of everything
/// absorbed so far; only this needs updating as training produces new
/// checkpoints.
struct SwaState {
    CheckpointTensors mean;
    std::size_t count = 0;

    bool empty() const { return count == 0; }
    /// mean <- mean + (w - mean)/(count+1). Schema must match unless empty.
    void update(const CheckpointTensors& w);
};

SwaState swa_update(SwaState state, const CheckpointTensors& w);

struct ComposedTables {
    TransformSpec spec;
    EvalTable val;
    std::optional<EvalTable> test;
};

/// One prefix length of an SWA scan: the averaged model's tables (logits
/// unscaled) plus the temperature fitted on its val table. Everything the
/// SWA-composed curves and selections need is derivable from these.
struct SwaSweepPoint {
    double index = 0.0;
    SplitTables tables;
    TemperatureFit fit;
};

/// SWA then TS: averages the prefix, evaluates the averaged weights, fits
/// the temperature on the val table and applies it to val and test.
ComposedTables compose_swa_ts(std::span<const CheckpointTensors> prefix,
                              const Evaluator& evaluator,
                              const FitOptions& opts = {});

/// SWA per run, per-run TS, cross-run ensembling, then an outer TS:
///   (1/tau_ens) (1/L) sum_l (1/tau_l) f(x; mean of run l's prefix).
ComposedTables compose_swa_ens_ts(std::span<const std::vector<CheckpointTensors>> run_prefixes,
                                  const Evaluator& evaluator,
                                  const FitOptions& opts = {});

}  // namespace posthoc
