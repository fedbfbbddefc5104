#include "posthoc/report.hpp"

#include <algorithm>

#include "posthoc/diagnostics.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/json_io.hpp"
#include "posthoc/mlp.hpp"
#include "posthoc/parallel.hpp"
#include "posthoc/selection.hpp"

namespace posthoc {

StoreAnalysis analyze_store(const RunStore& store, const Evaluator* evaluator,
                            const FitOptions& opts) {
    store.validate();
    StoreAnalysis a;
    a.runs = store.runs();
    a.grid = store.common_index_prefix();
    if (evaluator) {
        a.sweeps.resize(a.runs.size());
        parallel_for(a.runs.size(), [&](std::size_t i) {
            a.sweeps[i] = swa_ts_sweep(store, a.runs[i], *evaluator, opts);
        });
    }
    return a;
}

namespace {

struct ReportContext {
    const RunStore& store;
    const StoreAnalysis& analysis;
    const ReportOptions& opts;
    std::string split = "test";              // falls back to val-only stores
    std::vector<std::uint32_t> clean_test;   // empty unless sidecar present
    std::vector<bool> train_flip_mask;       // flip mask of the train slice
    std::size_t n_train = 0;
};

std::vector<MetricKind> report_metrics(const ReportContext& ctx) {
    std::vector<MetricKind> out{MetricKind::error, MetricKind::loss};
    if (!ctx.clean_test.empty()) out.push_back(MetricKind::clean_error);
    return out;
}

double table_metric(const ReportContext& ctx, const EvalTable& t, MetricKind m) {
    return metric_of(t, m, ctx.clean_test);
}

/// Convention base on the shared grid: mean over runs of each checkpoint's
/// own test metric.
std::vector<double> mean_base(const ReportContext& ctx, MetricKind m) {
    std::vector<double> out;
    for (double t : ctx.analysis.grid) {
        double acc = 0.0;
        for (int r : ctx.analysis.runs)
            acc += table_metric(ctx, ctx.store.table(r, t, ctx.split), m);
        out.push_back(acc / static_cast<double>(ctx.analysis.runs.size()));
    }
    return out;
}

std::vector<double> mean_over_runs(std::vector<std::vector<double>> per_run) {
    std::vector<double> out(per_run.at(0).size(), 0.0);
    for (const auto& series : per_run)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += series[i];
    for (double& v : out) v /= static_cast<double>(per_run.size());
    return out;
}

/// Post-hoc test series on the shared grid for one transform; single-run
/// transforms are averaged over runs (the figures' convention).
std::vector<double> post_series(const ReportContext& ctx, TransformKind kind, MetricKind m) {
    const auto& runs = ctx.analysis.runs;
    const auto& grid = ctx.analysis.grid;
    const auto& sweeps = ctx.analysis.sweeps;
    switch (kind) {
        case TransformKind::ts: {
            std::vector<std::vector<double>> per_run;
            for (int r : runs) {
                std::vector<double> series;
                for (double t : grid) {
                    TemperatureFit fit = fit_temperature(ctx.store.table(r, t, "val"), ctx.opts.fit);
                    series.push_back(table_metric(
                        ctx, apply_temperature(ctx.store.table(r, t, ctx.split), fit.tau), m));
                }
                per_run.push_back(std::move(series));
            }
            return mean_over_runs(std::move(per_run));
        }
        case TransformKind::ens: {
            std::vector<double> series;
            for (double t : grid) {
                std::vector<EvalTable> members;
                std::vector<double> temps;
                for (int r : runs) {
                    temps.push_back(fit_temperature(ctx.store.table(r, t, "val"), ctx.opts.fit).tau);
                    members.push_back(ctx.store.table(r, t, ctx.split));
                }
                series.push_back(table_metric(ctx, ensemble_logits(members, temps), m));
            }
            return series;
        }
        case TransformKind::swa:
        case TransformKind::swa_ts: {
            std::vector<std::vector<double>> per_run;
            for (std::size_t ri = 0; ri < runs.size(); ++ri) {
                std::vector<double> series;
                for (std::size_t ti = 0; ti < grid.size(); ++ti) {
                    const SwaSweepPoint& p = sweeps[ri][ti];
                    const EvalTable& test = p.tables.at(ctx.split);
                    series.push_back(kind == TransformKind::swa
                                         ? table_metric(ctx, test, m)
                                         : table_metric(ctx, apply_temperature(test, p.fit.tau), m));
                }
                per_run.push_back(std::move(series));
            }
            return mean_over_runs(std::move(per_run));
        }
        case TransformKind::swa_ens_ts: {
            std::vector<double> series;
            for (std::size_t ti = 0; ti < grid.size(); ++ti) {
                std::vector<EvalTable> vals, tests;
                std::vector<double> temps;
                for (std::size_t ri = 0; ri < runs.size(); ++ri) {
                    const SwaSweepPoint& p = sweeps[ri][ti];
                    temps.push_back(p.fit.tau);
                    vals.push_back(p.tables.at("val"));
                    tests.push_back(p.tables.at(ctx.split));
                }
                TemperatureFit outer = fit_temperature(ensemble_logits(vals, temps), ctx.opts.fit);
                series.push_back(table_metric(
                    ctx, apply_temperature(ensemble_logits(tests, temps), outer.tau), m));
            }
            return series;
        }
    }
    throw ValidationError("unknown transform kind");
}

nlohmann::json curves_section(const ReportContext& ctx, std::vector<std::string>& omitted) {
    nlohmann::json out = nlohmann::json::object();
    const bool multi = ctx.analysis.runs.size() >= 2;
    const bool swa_ok = !ctx.analysis.sweeps.empty();
    std::vector<TransformKind> kinds{TransformKind::ts};
    if (multi) kinds.push_back(TransformKind::ens);
    if (swa_ok) {
        kinds.push_back(TransformKind::swa);
        kinds.push_back(TransformKind::swa_ts);
        if (multi) kinds.push_back(TransformKind::swa_ens_ts);
    }
    if (!multi) omitted.push_back("ens and swa_ens_ts rows need >= 2 runs");
    if (!swa_ok) omitted.push_back("swa-family rows need an evaluator (synthetic store)");

    for (TransformKind kind : kinds) {
        nlohmann::json per_metric = nlohmann::json::object();
        for (MetricKind m : report_metrics(ctx)) {
            CurvePair pair;
            pair.indices = ctx.analysis.grid;
            pair.metric = m;
            pair.transform = kind;
            pair.base = mean_base(ctx, m);
            pair.post = post_series(ctx, kind, m);
            ReversalReport rev = detect_reversal(pair);
            nlohmann::json entry = to_json(pair);
            nlohmann::json rj = to_json(rev);
            if (!ctx.opts.include_witnesses) rj.erase("witnesses");
            entry["reversal"] = rj;
            per_metric[to_string(m)] = std::move(entry);
        }
        out[to_string(kind)] = std::move(per_metric);
    }
    return out;
}

nlohmann::json selection_section(const ReportContext& ctx) {
    nlohmann::json out = nlohmann::json::object();
    const auto& runs = ctx.analysis.runs;
    const bool swa_ok = !ctx.analysis.sweeps.empty();
    for (MetricKind m : {MetricKind::loss, MetricKind::error}) {
        nlohmann::json sec = nlohmann::json::object();
        {
            nlohmann::json per_run = nlohmann::json::array();
            double val = 0, test = 0;
            for (int r : runs) {
                SelectionReport rep = naive_select_report(ctx.store, r, m);
                val += rep.val_metric.value;
                test += rep.test_metric.value;
                per_run.push_back(to_json(rep));
            }
            sec["naive"] = {{"per_run", per_run},
                            {"mean_val", jnum(val / static_cast<double>(runs.size()))},
                            {"mean_test", jnum(test / static_cast<double>(runs.size()))}};
        }
        if (swa_ok) {
            nlohmann::json per_run = nlohmann::json::array();
            double val = 0, test = 0;
            for (std::size_t ri = 0; ri < runs.size(); ++ri) {
                SelectionReport rep = posthoc_select_swa_ts(ctx.analysis.sweeps[ri], runs[ri], m);
                val += rep.val_metric.value;
                test += rep.test_metric.value;
                per_run.push_back(to_json(rep));
            }
            sec["posthoc_swa_ts"] = {{"per_run", per_run},
                                     {"mean_val", jnum(val / static_cast<double>(runs.size()))},
                                     {"mean_test", jnum(test / static_cast<double>(runs.size()))}};
            if (runs.size() >= 2) {
                sec["posthoc_swa_ens_ts"] =
                    to_json(posthoc_select_swa_ens_ts(ctx.analysis.sweeps, runs, m, ctx.opts.fit));
                sec["hybrid"] = to_json(hybrid_select(ctx.analysis.sweeps, runs, m, ctx.opts.fit));
            }
        }
        out[to_string(m)] = std::move(sec);
    }
    return out;
}

nlohmann::json diagnostics_section(const ReportContext& ctx) {
    nlohmann::json out = nlohmann::json::object();
    const auto& runs = ctx.analysis.runs;
    const auto& grid = ctx.analysis.grid;

    {
        std::vector<double> mean_tau(grid.size(), 0.0);
        for (int r : runs) {
            auto traj = temperature_trajectory(ctx.store, r, ctx.opts.fit);
            for (std::size_t i = 0; i < grid.size(); ++i) mean_tau[i] += traj[i].tau;
        }
        for (double& v : mean_tau) v /= static_cast<double>(runs.size());
        nlohmann::json t;
        t["indices"] = jnum_list(grid);
        t["mean_tau"] = jnum_list(mean_tau);
        t["spearman_vs_index"] = jnum(spearman_rank_correlation(grid, mean_tau));
        out["temperature"] = std::move(t);
    }

    if (!ctx.train_flip_mask.empty() && grid.size() >= 2) {
        double mis = 0, clean = 0;
        std::size_t pairs = 0;
        for (int r : runs) {
            std::vector<std::uint32_t> prev;
            for (double t : grid) {
                std::vector<std::uint32_t> cur = predictions(ctx.store.table(r, t, "train"));
                if (!prev.empty()) {
                    auto [on_mask, off_mask] = flip_rate(prev, cur, ctx.train_flip_mask);
                    mis += on_mask;
                    clean += off_mask;
                    ++pairs;
                }
                prev = std::move(cur);
            }
        }
        mis /= static_cast<double>(pairs);
        clean /= static_cast<double>(pairs);
        out["flip_rate"] = {{"mislabeled", jnum(mis)},
                            {"clean", jnum(clean)},
                            {"ratio", jnum(clean > 0 ? mis / clean : 0.0)}};
    }

    if (!ctx.train_flip_mask.empty()) {
        nlohmann::json memo;
        std::vector<double> base_mis(grid.size(), 0), base_clean(grid.size(), 0);
        for (int r : runs) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                auto [on_mask, off_mask] =
                    subset_metrics(ctx.store.table(r, grid[i], "train"), ctx.train_flip_mask,
                                   MetricKind::error);
                base_mis[i] += on_mask.value;
                base_clean[i] += off_mask.value;
            }
        }
        for (double& v : base_mis) v /= static_cast<double>(runs.size());
        for (double& v : base_clean) v /= static_cast<double>(runs.size());
        memo["indices"] = jnum_list(grid);
        memo["base_train_error_mislabeled"] = jnum_list(base_mis);
        memo["base_train_error_clean"] = jnum_list(base_clean);
        if (!ctx.analysis.sweeps.empty()) {
            std::vector<double> swa_mis(grid.size(), 0), swa_clean(grid.size(), 0);
            for (std::size_t ri = 0; ri < runs.size(); ++ri) {
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    auto [on_mask, off_mask] =
                        subset_metrics(ctx.analysis.sweeps[ri][i].tables.at("train"),
                                       ctx.train_flip_mask, MetricKind::error);
                    swa_mis[i] += on_mask.value;
                    swa_clean[i] += off_mask.value;
                }
            }
            for (double& v : swa_mis) v /= static_cast<double>(runs.size());
            for (double& v : swa_clean) v /= static_cast<double>(runs.size());
            memo["swa_train_error_mislabeled"] = jnum_list(swa_mis);
            memo["swa_train_error_clean"] = jnum_list(swa_clean);
        }
        out["memorization"] = std::move(memo);
    }
    return out;
}

}  // namespace

nlohmann::json report_all(const RunStore& store, const std::optional<SynthSidecar>& sidecar,
                          const ReportOptions& opts) {
    std::optional<Evaluator> evaluator;
    if (sidecar) evaluator = make_mlp_evaluator(sidecar->data, sidecar->cfg);
    StoreAnalysis analysis = analyze_store(store, evaluator ? &*evaluator : nullptr, opts.fit);

    ReportContext ctx{store, analysis, opts, "test", {}, {}, 0};
    {
        auto splits = store.splits();
        if (std::find(splits.begin(), splits.end(), "test") == splits.end()) ctx.split = "val";
    }
    if (sidecar) {
        const auto& d = sidecar->data;
        ctx.n_train = d.n - sidecar->cfg.val_size - sidecar->cfg.test_size;
        const std::size_t test_begin = d.n - sidecar->cfg.test_size;
        ctx.clean_test.assign(d.clean_labels.begin() + test_begin, d.clean_labels.end());
        ctx.train_flip_mask.assign(d.flip_mask.begin(), d.flip_mask.begin() + ctx.n_train);
    }

    std::vector<std::string> omitted;
    nlohmann::json doc;
    doc["conventions"] = {
        {"reduction_order", "rows in table order; ensemble members in supplied order; runs ascending"},
        {"base_curve", "each checkpoint's own metric (plotting convention); mean over runs"},
        {"float_digits", 9}};
    doc["runs"] = analysis.runs;
    doc["grid"] = jnum_list(analysis.grid);
    doc["splits"] = store.splits();
    doc["curves"] = curves_section(ctx, omitted);
    doc["selection"] = selection_section(ctx);
    if (sidecar) doc["diagnostics"] = diagnostics_section(ctx);
    doc["omitted"] = omitted;
    return doc;
}

}  // namespace posthoc
