#include "posthoc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "posthoc/errors.hpp"

namespace posthoc {

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::error: return "error";
        case MetricKind::loss: return "loss";
        case MetricKind::perplexity: return "perplexity";
        case MetricKind::clean_error: return "clean_error";
    }
    return "?";
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "error") return MetricKind::error;
    if (s == "loss") return MetricKind::loss;
    if (s == "perplexity") return MetricKind::perplexity;
    if (s == "clean_error" || s == "clean-error") return MetricKind::clean_error;
    throw ValidationError("unknown metric kind: " + s);
}

std::vector<double> softmax_row(std::span<const double> z) {
    for (double v : z)
        if (!std::isfinite(v)) throw ValidationError("non-finite logit in softmax input");
    std::vector<double> out(z.size());
    const double m = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        out[k] = std::exp(z[k] - m);
        denom += out[k];
    }
    for (double& p : out) p /= denom;
    return out;
}

double logsumexp(std::span<const double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

std::size_t argmax_row(std::span<const double> z) {
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<std::uint32_t> predictions(const EvalTable& t) {
    std::vector<std::uint32_t> preds(t.n);
    for (std::size_t i = 0; i < t.n; ++i)
        preds[i] = static_cast<std::uint32_t>(argmax_row(t.row(i)));
    return preds;
}

MetricValue error_metric(const EvalTable& t) {
    t.validate();
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < t.n; ++i)
        wrong += argmax_row(t.row(i)) != t.labels[i];
    return {static_cast<double>(wrong) / static_cast<double>(t.n), MetricKind::error, t.n};
}

MetricValue loss_metric(const EvalTable& t) {
    t.validate();
    double acc = 0.0;
    for (std::size_t i = 0; i < t.n; ++i) {
        auto row = t.row(i);
        acc += logsumexp(row) - row[t.labels[i]];
    }
    return {acc / static_cast<double>(t.n), MetricKind::loss, t.n};
}

MetricValue perplexity_metric(const MetricValue& loss) {
    if (loss.kind != MetricKind::loss)
        throw ValidationError("perplexity requires a loss value");
    return {std::exp(loss.value), MetricKind::perplexity, loss.n};
}

MetricValue clean_error_metric(const EvalTable& t, std::span<const std::uint32_t> clean_labels) {
    if (clean_labels.size() != t.n)
        throw ValidationError("clean label vector length mismatch");
    EvalTable alt = t;
    alt.labels.assign(clean_labels.begin(), clean_labels.end());
    MetricValue v = error_metric(alt);
    v.kind = MetricKind::clean_error;
    return v;
}

std::pair<MetricValue, MetricValue> subset_metrics(const EvalTable& t,
                                                   const std::vector<bool>& mask,
                                                   MetricKind kind) {
    t.validate();
    if (mask.size() != t.n) throw ValidationError("mask length mismatch");
    if (kind != MetricKind::error && kind != MetricKind::loss)
        throw ValidationError("subset metrics support error and loss");

    EvalTable in, out;
    in.c = out.c = t.c;
    for (std::size_t i = 0; i < t.n; ++i) {
        EvalTable& dst = mask[i] ? in : out;
        auto row = t.row(i);
        dst.logits.insert(dst.logits.end(), row.begin(), row.end());
        dst.labels.push_back(t.labels[i]);
        ++dst.n;
    }
    if (in.n == 0 || out.n == 0) throw ValidationError("subset metric requires both subsets nonempty");
    auto eval = [kind](const EvalTable& s) {
        return kind == MetricKind::error ? error_metric(s) : loss_metric(s);
    };
    return {eval(in), eval(out)};
}

}  // namespace posthoc
