#include "posthoc/selection.hpp"

#include <algorithm>

#include "posthoc/errors.hpp"
#include "posthoc/parallel.hpp"

namespace posthoc {

std::string to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::naive: return "naive";
        case SelectionStrategy::posthoc_swa_ts: return "posthoc_swa_ts";
        case SelectionStrategy::posthoc_swa_ens_ts: return "posthoc_swa_ens_ts";
        case SelectionStrategy::hybrid: return "hybrid";
    }
    return "?";
}

namespace {

MetricKind check_selection_metric(MetricKind metric) {
    if (metric != MetricKind::loss && metric != MetricKind::error)
        throw ValidationError("selection supports the loss and error metrics");
    return metric;
}

MetricValue value_of(const EvalTable& t, MetricKind metric) {
    return metric == MetricKind::loss ? loss_metric(t) : error_metric(t);
}

std::size_t argmin_earliest(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

std::vector<std::vector<SwaSweepPoint>> sweep_all(const RunStore& store,
                                                  std::span<const int> runs,
                                                  const Evaluator& evaluator,
                                                  const FitOptions& opts) {
    std::vector<std::vector<SwaSweepPoint>> sweeps(runs.size());
    parallel_for(runs.size(), [&](std::size_t i) {
        sweeps[i] = swa_ts_sweep(store, runs[i], evaluator, opts);
    });
    return sweeps;
}

/// Reduction happens in ascending run order regardless of how the caller
/// lists the runs, so permuting the input cannot change any result.
std::vector<int> resolve_runs(const RunStore& store, std::span<const int> runs) {
    std::vector<int> ids(runs.begin(), runs.end());
    if (ids.empty()) ids = store.runs();
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw ValidationError("store has no runs");
    return ids;
}

/// Common grid length across sweeps; diverging grids are rejected.
std::size_t common_prefix_length(std::span<const std::vector<SwaSweepPoint>> sweeps) {
    std::size_t len = sweeps[0].size();
    for (const auto& s : sweeps) len = std::min(len, s.size());
    if (len == 0) throw ValidationError("empty common index grid");
    for (const auto& s : sweeps)
        for (std::size_t i = 0; i < len; ++i)
            if (s[i].index != sweeps[0][i].index)
                throw ValidationError("index grids diverge at position " + std::to_string(i));
    return len;
}

const EvalTable* find_split(const SwaSweepPoint& p, const char* split) {
    auto it = p.tables.find(split);
    return it == p.tables.end() ? nullptr : &it->second;
}

}  // namespace

double naive_select(std::span<const double> indices, std::span<const double> values) {
    if (indices.empty() || indices.size() != values.size())
        throw ValidationError("naive selection needs a nonempty series");
    return indices[argmin_earliest(values)];
}

SelectionReport naive_select_report(const RunStore& store, int run, MetricKind metric) {
    check_selection_metric(metric);
    std::vector<double> indices = store.indices(run);
    std::vector<double> values;
    values.reserve(indices.size());
    for (double t : indices) values.push_back(metric_of(store.table(run, t, "val"), metric));
    const std::size_t at = argmin_earliest(values);

    SelectionReport rep;
    rep.strategy = SelectionStrategy::naive;
    rep.chosen = {{run, indices[at]}};
    rep.val_metric = value_of(store.table(run, indices[at], "val"), metric);
    if (const EvalTable* test = store.find_table(run, indices[at], "test"))
        rep.test_metric = value_of(*test, metric);
    else
        rep.test_metric = {0.0, metric, 0};
    return rep;
}

SelectionReport posthoc_select_swa_ts(std::span<const SwaSweepPoint> sweep, int run,
                                      MetricKind metric) {
    check_selection_metric(metric);
    if (sweep.empty()) throw ValidationError("empty sweep");
    std::vector<double> values;
    values.reserve(sweep.size());
    for (const auto& p : sweep)
        values.push_back(metric_of(apply_temperature(p.tables.at("val"), p.fit.tau), metric));
    const std::size_t at = argmin_earliest(values);
    const SwaSweepPoint& pick = sweep[at];

    SelectionReport rep;
    rep.strategy = SelectionStrategy::posthoc_swa_ts;
    rep.chosen = {{run, pick.index}};
    rep.val_metric = value_of(apply_temperature(pick.tables.at("val"), pick.fit.tau), metric);
    if (const EvalTable* test = find_split(pick, "test"))
        rep.test_metric = value_of(apply_temperature(*test, pick.fit.tau), metric);
    else
        rep.test_metric = {0.0, metric, 0};
    TransformSpec spec;
    spec.kind = TransformKind::swa_ts;
    spec.member_temps = {pick.fit.tau};
    spec.members = {{run, sweep.front().index, pick.index}};
    rep.transform = std::move(spec);
    return rep;
}

SelectionReport posthoc_select_swa_ts(const RunStore& store, int run, MetricKind metric,
                                      const Evaluator& evaluator, const FitOptions& opts) {
    return posthoc_select_swa_ts(swa_ts_sweep(store, run, evaluator, opts), run, metric);
}

namespace {

struct EnsPoint {
    EvalTable val;
    std::optional<EvalTable> test;
    std::vector<double> member_temps;
    double ensemble_temp = 1.0;
};

/// Builds the full SWA+Ens+TS nesting at one shared grid position.
EnsPoint ens_point(std::span<const std::vector<SwaSweepPoint>> sweeps, std::size_t ti,
                   const FitOptions& opts) {
    EnsPoint out;
    std::vector<EvalTable> vals, tests;
    bool have_test = true;
    for (const auto& sweep : sweeps) {
        const SwaSweepPoint& p = sweep[ti];
        out.member_temps.push_back(p.fit.tau);
        vals.push_back(p.tables.at("val"));
        if (const EvalTable* t = find_split(p, "test"))
            tests.push_back(*t);
        else
            have_test = false;
    }
    EvalTable ens_val = ensemble_logits(vals, out.member_temps);
    out.ensemble_temp = fit_temperature(ens_val, opts).tau;
    out.val = apply_temperature(ens_val, out.ensemble_temp);
    if (have_test)
        out.test = apply_temperature(ensemble_logits(tests, out.member_temps), out.ensemble_temp);
    return out;
}

SelectionReport report_from_ens_point(EnsPoint point, SelectionStrategy strategy,
                                      MetricKind metric) {
    SelectionReport rep;
    rep.strategy = strategy;
    rep.val_metric = value_of(point.val, metric);
    if (point.test)
        rep.test_metric = value_of(*point.test, metric);
    else
        rep.test_metric = {0.0, metric, 0};
    TransformSpec spec;
    spec.kind = TransformKind::swa_ens_ts;
    spec.member_temps = std::move(point.member_temps);
    spec.ensemble_temp = point.ensemble_temp;
    rep.transform = std::move(spec);
    return rep;
}

}  // namespace

SelectionReport posthoc_select_swa_ens_ts(std::span<const std::vector<SwaSweepPoint>> sweeps,
                                          std::span<const int> runs, MetricKind metric,
                                          const FitOptions& opts) {
    check_selection_metric(metric);
    if (sweeps.empty() || sweeps.size() != runs.size())
        throw ValidationError("sweep list does not match run list");
    const std::size_t len = common_prefix_length(sweeps);
    std::vector<double> values(len);
    for (std::size_t ti = 0; ti < len; ++ti)
        values[ti] = metric_of(ens_point(sweeps, ti, opts).val, metric);
    const std::size_t at = argmin_earliest(values);

    SelectionReport rep = report_from_ens_point(ens_point(sweeps, at, opts),
                                                SelectionStrategy::posthoc_swa_ens_ts, metric);
    const double shared = sweeps[0][at].index;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        rep.chosen.emplace_back(runs[r], shared);
        rep.transform->members.push_back({runs[r], sweeps[r].front().index, shared});
    }
    return rep;
}

SelectionReport posthoc_select_swa_ens_ts(const RunStore& store, std::span<const int> runs,
                                          MetricKind metric, const Evaluator& evaluator,
                                          const FitOptions& opts) {
    std::vector<int> ids = resolve_runs(store, runs);
    return posthoc_select_swa_ens_ts(sweep_all(store, ids, evaluator, opts), ids, metric, opts);
}

SelectionReport hybrid_select(std::span<const std::vector<SwaSweepPoint>> sweeps,
                              std::span<const int> runs, MetricKind metric,
                              const FitOptions& opts) {
    check_selection_metric(metric);
    if (sweeps.empty() || sweeps.size() != runs.size())
        throw ValidationError("sweep list does not match run list");

    std::vector<EvalTable> vals, tests;
    std::vector<double> temps;
    std::vector<std::pair<int, double>> chosen;
    std::vector<IndexRange> members;
    bool have_test = true;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        SelectionReport per_run = posthoc_select_swa_ts(sweeps[r], runs[r], metric);
        const double at = per_run.chosen[0].second;
        const SwaSweepPoint* pick = nullptr;
        for (const auto& p : sweeps[r])
            if (p.index == at) pick = &p;
        temps.push_back(pick->fit.tau);
        vals.push_back(pick->tables.at("val"));
        if (const EvalTable* t = find_split(*pick, "test"))
            tests.push_back(*t);
        else
            have_test = false;
        chosen.emplace_back(runs[r], at);
        members.push_back({runs[r], sweeps[r].front().index, at});
    }

    EvalTable ens_val = ensemble_logits(vals, temps);
    TemperatureFit outer = fit_temperature(ens_val, opts);

    SelectionReport rep;
    rep.strategy = SelectionStrategy::hybrid;
    rep.chosen = std::move(chosen);
    rep.val_metric = value_of(apply_temperature(ens_val, outer.tau), metric);
    if (have_test && tests.size() == runs.size())
        rep.test_metric = value_of(apply_temperature(ensemble_logits(tests, temps), outer.tau), metric);
    else
        rep.test_metric = {0.0, metric, 0};
    TransformSpec spec;
    spec.kind = TransformKind::swa_ens_ts;
    spec.member_temps = std::move(temps);
    spec.ensemble_temp = outer.tau;
    spec.members = std::move(members);
    rep.transform = std::move(spec);
    return rep;
}

SelectionReport hybrid_select(const RunStore& store, std::span<const int> runs, MetricKind metric,
                              const Evaluator& evaluator, const FitOptions& opts) {
    std::vector<int> ids = resolve_runs(store, runs);
    return hybrid_select(sweep_all(store, ids, evaluator, opts), ids, metric, opts);
}

EarlyStopMonitor::EarlyStopMonitor(Evaluator evaluator, MonitorOptions opts)
    : evaluator_(std::move(evaluator)), opts_(opts) {
    check_selection_metric(opts_.metric);
    if (opts_.patience == 0) throw ValidationError("patience must be >= 1");
}

MonitorDecision EarlyStopMonitor::step(double index, const CheckpointTensors& ckpt) {
    swa_.update(ckpt);
    SplitTables tables = evaluator_(swa_.mean);
    auto it = tables.find("val");
    if (it == tables.end()) throw ValidationError("evaluator produced no 'val' table");
    TemperatureFit fit = fit_temperature(it->second, opts_.fit);
    const double v = metric_of(apply_temperature(it->second, fit.tau), opts_.metric);
    if (v < best_val_ - opts_.min_delta) {
        best_val_ = v;
        best_index_ = index;
        since_best_ = 0;
    } else {
        ++since_best_;
    }
    return since_best_ >= opts_.patience ? MonitorDecision::stop : MonitorDecision::proceed;
}

}  // namespace posthoc
