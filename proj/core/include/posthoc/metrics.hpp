#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posthoc/eval_table.hpp"

namespace posthoc {

enum class MetricKind { error, loss, perplexity, clean_error };

std::string to_string(MetricKind k);
MetricKind metric_kind_from_string(const std::string& s);

struct MetricValue {
    double value = 0.0;
    MetricKind kind = MetricKind::error;
    std::size_t n = 0;
};

/// Numerically stable softmax of one logit row (max-subtraction). Entries
/// are positive and sum to 1 within 1e-12 for magnitudes up to 1e4.
std::vector<double> softmax_row(std::span<const double> z);

/// log(sum_k exp(z_k)) with max-subtraction.
double logsumexp(std::span<const double> z);

/// Index of the largest entry; ties go to the lowest class index.
std::size_t argmax_row(std::span<const double> z);

/// Mean of 1{argmax != label} over rows.
MetricValue error_metric(const EvalTable& t);

/// Mean of logsumexp(z) - z_y over rows, accumulated in row order in double
/// precision.
MetricValue loss_metric(const EvalTable& t);

/// exp of a loss value. Rejects non-loss inputs.
MetricValue perplexity_metric(const MetricValue& loss);

/// Error against an alternate (clean) label vector.
MetricValue clean_error_metric(const EvalTable& t, std::span<const std::uint32_t> clean_labels);

/// The requested metric (error or loss) computed independently on masked
/// rows and on the complement. Both subsets must be nonempty.
std::pair<MetricValue, MetricValue> subset_metrics(const EvalTable& t,
                                                   const std::vector<bool>& mask,
                                                   MetricKind kind);

/// Per-row argmax classes, lowest-index tie-break.
std::vector<std::uint32_t> predictions(const EvalTable& t);

}  // namespace posthoc
