#include "posthoc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "posthoc/errors.hpp"
#include "posthoc/parallel.hpp"

namespace posthoc {

void CurvePair::validate() const {
    if (indices.size() != base.size() || indices.size() != post.size())
        throw ValidationError("curve series lengths differ");
    for (std::size_t i = 1; i < indices.size(); ++i)
        if (!(indices[i - 1] < indices[i]))
            throw ValidationError("curve indices must be strictly increasing");
}

double metric_of(const EvalTable& t, MetricKind kind,
                 std::span<const std::uint32_t> clean_labels) {
    switch (kind) {
        case MetricKind::error: return error_metric(t).value;
        case MetricKind::loss: return loss_metric(t).value;
        case MetricKind::perplexity: return perplexity_metric(loss_metric(t)).value;
        case MetricKind::clean_error:
            if (clean_labels.empty())
                throw ValidationError("clean_error requires a clean label vector");
            return clean_error_metric(t, clean_labels).value;
    }
    throw ValidationError("unknown metric kind");
}

std::vector<double> base_curve(const std::map<double, EvalTable>& per_index, MetricKind metric) {
    if (per_index.empty()) throw ValidationError("base curve needs at least one index");
    std::vector<double> out;
    out.reserve(per_index.size());
    for (const auto& [idx, table] : per_index) out.push_back(metric_of(table, metric));
    return out;
}

namespace {

int pick_run(const RunStore& store, int requested) {
    if (requested > 0) return requested;
    auto runs = store.runs();
    if (runs.empty()) throw ValidationError("store has no runs");
    return runs[0];
}

}  // namespace

std::vector<SwaSweepPoint> swa_ts_sweep(const RunStore& store, int run,
                                        const Evaluator& evaluator,
                                        const FitOptions& opts) {
    std::vector<double> idx = store.indices(run);
    if (idx.empty()) throw ValidationError("run has no checkpoints");
    std::vector<SwaSweepPoint> out;
    out.reserve(idx.size());
    SwaState state;
    for (double t : idx) {
        state.update(store.checkpoint(run, t));
        SwaSweepPoint p;
        p.index = t;
        p.tables = evaluator(state.mean);
        auto it = p.tables.find("val");
        if (it == p.tables.end()) throw ValidationError("evaluator produced no 'val' table");
        p.fit = fit_temperature(it->second, opts);
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

double table_metric(const EvalTable& t, MetricKind metric, const CurveOptions& opts) {
    return metric_of(t, metric, opts.clean_labels);
}

std::vector<double> ts_curve(const RunStore& store, MetricKind metric, const CurveOptions& opts) {
    const int run = pick_run(store, opts.run);
    std::vector<double> out;
    for (double t : store.indices(run)) {
        TemperatureFit fit = fit_temperature(store.table(run, t, "val"), opts.fit);
        out.push_back(table_metric(apply_temperature(store.table(run, t, opts.split), fit.tau),
                                   metric, opts));
    }
    return out;
}

std::vector<double> ens_curve(const RunStore& store, MetricKind metric, const CurveOptions& opts) {
    auto runs = store.runs();
    std::vector<double> grid = store.common_index_prefix();
    if (grid.empty()) throw ValidationError("no common index grid across runs");
    std::vector<double> out;
    for (double t : grid) {
        std::vector<EvalTable> members;
        std::vector<double> temps;
        for (int r : runs) {
            temps.push_back(fit_temperature(store.table(r, t, "val"), opts.fit).tau);
            members.push_back(store.table(r, t, opts.split));
        }
        out.push_back(table_metric(ensemble_logits(members, temps), metric, opts));
    }
    return out;
}

std::vector<double> swa_family_curve(const RunStore& store, TransformKind kind,
                                     MetricKind metric, const Evaluator* evaluator,
                                     const CurveOptions& opts) {
    if (!evaluator)
        throw ValidationError("SWA-composed curves require an evaluator");
    if (kind == TransformKind::swa || kind == TransformKind::swa_ts) {
        const int run = pick_run(store, opts.run);
        std::vector<double> out;
        for (const SwaSweepPoint& p : swa_ts_sweep(store, run, *evaluator, opts.fit)) {
            auto it = p.tables.find(opts.split);
            if (it == p.tables.end())
                throw ValidationError("evaluator produced no '" + opts.split + "' table");
            if (kind == TransformKind::swa)
                out.push_back(table_metric(it->second, metric, opts));
            else
                out.push_back(table_metric(apply_temperature(it->second, p.fit.tau), metric, opts));
        }
        return out;
    }

    // swa_ens_ts over the common grid; per-run sweeps run in parallel.
    auto runs = store.runs();
    std::vector<double> grid = store.common_index_prefix();
    if (grid.empty()) throw ValidationError("no common index grid across runs");
    std::vector<std::vector<SwaSweepPoint>> sweeps(runs.size());
    parallel_for(runs.size(), [&](std::size_t i) {
        sweeps[i] = swa_ts_sweep(store, runs[i], *evaluator, opts.fit);
    });
    std::vector<double> out;
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
        std::vector<EvalTable> vals, targets;
        std::vector<double> temps;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            const SwaSweepPoint& p = sweeps[r][ti];
            temps.push_back(p.fit.tau);
            vals.push_back(p.tables.at("val"));
            auto it = p.tables.find(opts.split);
            if (it == p.tables.end())
                throw ValidationError("evaluator produced no '" + opts.split + "' table");
            targets.push_back(it->second);
        }
        EvalTable ens_val = ensemble_logits(vals, temps);
        TemperatureFit outer = fit_temperature(ens_val, opts.fit);
        EvalTable scaled = opts.split == "val"
                               ? apply_temperature(ens_val, outer.tau)
                               : apply_temperature(ensemble_logits(targets, temps), outer.tau);
        out.push_back(table_metric(scaled, metric, opts));
    }
    return out;
}

}  // namespace

std::vector<double> posthoc_curve(const RunStore& store, TransformKind transform,
                                  MetricKind metric, const Evaluator* evaluator,
                                  const CurveOptions& opts) {
    switch (transform) {
        case TransformKind::ts: return ts_curve(store, metric, opts);
        case TransformKind::ens: return ens_curve(store, metric, opts);
        case TransformKind::swa:
        case TransformKind::swa_ts:
        case TransformKind::swa_ens_ts:
            return swa_family_curve(store, transform, metric, evaluator, opts);
    }
    throw ValidationError("unknown transform kind");
}

CurvePair make_curve_pair(const RunStore& store, TransformKind transform, MetricKind metric,
                          const Evaluator* evaluator, const CurveOptions& opts) {
    CurvePair c;
    c.metric = metric;
    c.transform = transform;
    const bool multi_run = transform == TransformKind::ens || transform == TransformKind::swa_ens_ts;
    if (multi_run) {
        c.indices = store.common_index_prefix();
        auto runs = store.runs();
        for (double t : c.indices) {
            double acc = 0.0;
            for (int r : runs)
                acc += metric_of(store.table(r, t, opts.split), metric, opts.clean_labels);
            c.base.push_back(acc / static_cast<double>(runs.size()));
        }
    } else {
        const int run = pick_run(store, opts.run);
        c.indices = store.indices(run);
        for (double t : c.indices)
            c.base.push_back(metric_of(store.table(run, t, opts.split), metric, opts.clean_labels));
    }
    c.post = posthoc_curve(store, transform, metric, evaluator, opts);
    c.validate();
    return c;
}

ReversalReport detect_reversal(const CurvePair& c) {
    c.validate();
    if (c.indices.size() < 2) throw ValidationError("reversal detection needs at least 2 indices");
    ReversalReport rep;
    const std::size_t n = c.indices.size();
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t) {
            if (s == t) continue;
            if (c.base[s] >= c.base[t] && c.post[s] < c.post[t])
                rep.witnesses.emplace_back(c.indices[s], c.indices[t]);
        }
    rep.count = rep.witnesses.size();
    rep.reversed = rep.count >= 1;
    return rep;
}

std::pair<double, double> flip_rate(std::span<const std::uint32_t> preds_a,
                                    std::span<const std::uint32_t> preds_b,
                                    const std::vector<bool>& mask) {
    if (preds_a.size() != preds_b.size() || preds_a.size() != mask.size())
        throw ValidationError("flip rate inputs must have equal lengths");
    std::size_t n_in = 0, n_out = 0, flip_in = 0, flip_out = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool flipped = preds_a[i] != preds_b[i];
        if (mask[i]) {
            ++n_in;
            flip_in += flipped;
        } else {
            ++n_out;
            flip_out += flipped;
        }
    }
    if (n_in == 0 || n_out == 0)
        throw ValidationError("flip rate requires both subsets nonempty");
    return {static_cast<double>(flip_in) / static_cast<double>(n_in),
            static_cast<double>(flip_out) / static_cast<double>(n_out)};
}

std::vector<TemperatureFit> temperature_trajectory(const RunStore& store, int run,
                                                   const FitOptions& opts) {
    std::vector<TemperatureFit> out;
    for (double t : store.indices(run))
        out.push_back(fit_temperature(store.table(run, t, "val"), opts));
    return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ValidationError("spearman needs two equal-length series of size >= 2");
    std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0 || vb == 0) return 0.0;
    return num / std::sqrt(va * vb);
}

}  // namespace posthoc
