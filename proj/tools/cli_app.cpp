#include "cli_app.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "posthoc/codec.hpp"
#include "posthoc/diagnostics.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/experiment.hpp"
#include "posthoc/json_io.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/mlp.hpp"
#include "posthoc/report.hpp"
#include "posthoc/selection.hpp"
#include "posthoc/store_dir.hpp"
#include "posthoc/surface.hpp"
#include "posthoc/transforms.hpp"
#include "posthoc/version.hpp"

namespace posthoc::cli {

namespace fs = std::filesystem;

namespace {

void emit(std::ostream& out, const std::string& command, nlohmann::json inputs,
          nlohmann::json result) {
    nlohmann::json doc;
    doc["command"] = command;
    doc["inputs"] = std::move(inputs);
    doc["result"] = std::move(result);
    doc["engine_version"] = kEngineVersion;
    out << doc.dump(2) << "\n";
}

struct StoreBundle {
    RunStore store;
    std::optional<SynthSidecar> sidecar;
    std::optional<Evaluator> evaluator;

    const Evaluator* evaluator_ptr() const { return evaluator ? &*evaluator : nullptr; }
};

StoreBundle open_store(const std::string& dir) {
    StoreBundle b;
    b.store = read_run_store(dir);
    b.sidecar = read_synth_sidecar(dir);
    if (b.sidecar) b.evaluator = make_mlp_evaluator(b.sidecar->data, b.sidecar->cfg);
    return b;
}

std::vector<std::uint32_t> clean_labels_for_split(const SynthSidecar& sc, const std::string& split) {
    const auto& d = sc.data;
    const std::size_t n_train = d.n - sc.cfg.val_size - sc.cfg.test_size;
    std::size_t begin = 0, end = d.n;
    if (split == "train") {
        end = n_train;
    } else if (split == "val") {
        begin = n_train;
        end = n_train + sc.cfg.val_size;
    } else if (split == "test") {
        begin = n_train + sc.cfg.val_size;
    } else {
        throw ValidationError("unknown split: " + split);
    }
    return {d.clean_labels.begin() + begin, d.clean_labels.begin() + end};
}

int run_fit_temp(const std::string& bundle, const FitOptions& opts, std::ostream& out) {
    EvalTable t = load_eval_table(bundle);
    TemperatureFit fit = fit_temperature(t, opts);
    emit(out, "fit-temp", {{"bundle", bundle}}, to_json(fit));
    return 0;
}

int run_apply_temp(const std::string& bundle, double tau, const std::string& output,
                   std::ostream& out) {
    EvalTable t = apply_temperature(load_eval_table(bundle), tau);
    save_eval_table(output, t);
    emit(out, "apply-temp", {{"bundle", bundle}, {"tau", jnum(tau)}, {"output", output}},
         {{"written", output}, {"n", t.n}, {"c", t.c}});
    return 0;
}

int run_ensemble(const std::vector<std::string>& bundles, std::vector<double> temps,
                 const std::string& output, std::ostream& out) {
    std::vector<EvalTable> tables;
    for (const auto& b : bundles) tables.push_back(load_eval_table(b));
    if (temps.empty()) temps.assign(tables.size(), 1.0);
    EvalTable ens = ensemble_logits(tables, temps);
    save_eval_table(output, ens);
    emit(out, "ensemble",
         {{"bundles", bundles}, {"temps", jnum_list(temps)}, {"output", output}},
         {{"written", output}, {"members", bundles.size()}, {"n", ens.n}, {"c", ens.c}});
    return 0;
}

int run_swa(const std::string& run_dir, double upto, const std::string& stem, std::ostream& out) {
    if (!fs::is_directory(run_dir)) throw FormatError("not a directory: " + run_dir);
    std::vector<std::pair<double, fs::path>> found;
    for (const auto& f : fs::directory_iterator(run_dir)) {
        const std::string name = f.path().filename().string();
        if (f.path().extension() == ".json" && name.rfind("ckpt-", 0) == 0)
            found.emplace_back(parse_index(f.path().stem().string().substr(5)),
                               fs::path(f.path()).replace_extension());
    }
    std::sort(found.begin(), found.end());
    SwaState state;
    double first = 0, last = 0;
    for (const auto& [idx, path] : found) {
        if (idx > upto) break;
        if (state.empty()) first = idx;
        last = idx;
        state.update(load_checkpoint(path));
    }
    if (state.empty())
        throw ValidationError("empty SWA prefix: no checkpoints with index <= " +
                              format_index(upto));
    save_checkpoint(stem, state.mean);
    emit(out, "swa", {{"run", run_dir}, {"upto", jnum(upto)}, {"output", stem}},
         {{"written_manifest", stem + ".json"},
          {"written_blob", stem + ".f32"},
          {"members", state.count},
          {"first", jnum(first)},
          {"last", jnum(last)}});
    return 0;
}

int run_curves(const std::string& dir, const std::string& transform, const std::string& metric,
               const std::string& split, int run, std::ostream& out) {
    StoreBundle b = open_store(dir);
    CurveOptions opts;
    opts.split = split;
    opts.run = run;
    MetricKind mk = metric_kind_from_string(metric);
    if (mk == MetricKind::clean_error) {
        if (!b.sidecar)
            throw ValidationError("clean_error curves need a synthetic store with dataset.bin");
        opts.clean_labels = clean_labels_for_split(*b.sidecar, split);
    }
    CurvePair pair = make_curve_pair(b.store, transform_kind_from_string(transform), mk,
                                     b.evaluator_ptr(), opts);
    emit(out, "curves",
         {{"store", dir}, {"transform", transform}, {"metric", metric}, {"split", split}, {"run", run}},
         to_json(pair));
    return 0;
}

int run_detect_reversal(const std::string& curves_file, std::ostream& out) {
    nlohmann::json doc;
    try {
        auto bytes = read_file(curves_file);
        doc = nlohmann::json::parse(
            std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad curves JSON: ") + e.what());
    }
    ReversalReport rep = detect_reversal(curve_pair_from_json(doc));
    emit(out, "detect-reversal", {{"curves", curves_file}}, to_json(rep));
    return 0;
}

int run_select(const std::string& dir, const std::string& strategy, const std::string& metric,
               int run, std::ostream& out) {
    StoreBundle b = open_store(dir);
    MetricKind mk = metric_kind_from_string(metric);
    auto runs = b.store.runs();
    const int one_run = run > 0 ? run : (runs.empty() ? 1 : runs[0]);

    SelectionReport rep;
    if (strategy == "naive") {
        rep = naive_select_report(b.store, one_run, mk);
    } else {
        if (!b.evaluator)
            throw ValidationError(
                "post-hoc selection needs the built-in evaluator; this store has no synth.json "
                "sidecar (run the swa/ensemble/fit-temp pipeline for external models)");
        if (strategy == "swa-ts")
            rep = posthoc_select_swa_ts(b.store, one_run, mk, *b.evaluator);
        else if (strategy == "swa-ens-ts")
            rep = posthoc_select_swa_ens_ts(b.store, runs, mk, *b.evaluator);
        else if (strategy == "hybrid")
            rep = hybrid_select(b.store, runs, mk, *b.evaluator);
        else
            throw ValidationError("unknown strategy: " + strategy);
    }
    emit(out, "select",
         {{"store", dir}, {"strategy", strategy}, {"metric", metric}, {"run", one_run}},
         to_json(rep));
    return 0;
}

int run_synth_run(const MlpConfig& cfg, int models, double noise, std::size_t n_train,
                  const std::string& out_dir, std::ostream& out) {
    SpiralsDataset data =
        gen_experiment_data(n_train, cfg.val_size, cfg.test_size, noise, cfg.seed);
    RunStore store = run_ensemble_experiment(models, data, cfg);
    write_run_store(store, out_dir);
    write_synth_sidecar(out_dir, SynthSidecar{cfg, models, data});
    const auto grid = store.common_index_prefix();
    emit(out, "synth run",
         {{"out", out_dir},
          {"models", models},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed},
          {"hidden", cfg.hidden},
          {"noise", jnum(noise)},
          {"train_size", n_train}},
         {{"written", out_dir},
          {"runs", models},
          {"checkpoints_per_run", grid.size()},
          {"first_index", grid.empty() ? nlohmann::json(nullptr) : jnum(grid.front())},
          {"last_index", grid.empty() ? nlohmann::json(nullptr) : jnum(grid.back())}});
    return 0;
}

int run_synth_surface(const std::string& dir, int run, double index, bool swa, bool ensemble,
                      std::size_t resolution, const SurfaceBounds& bounds,
                      const std::string& output, std::ostream& out) {
    StoreBundle b = open_store(dir);
    if (!b.sidecar) throw ValidationError("synth surface needs a synthetic store");
    auto runs = b.store.runs();
    const int one_run = run > 0 ? run : (runs.empty() ? 1 : runs[0]);

    auto model_at = [&](int r) -> CheckpointTensors {
        if (!swa) return b.store.checkpoint(r, index);
        SwaState state;
        for (double t : b.store.indices(r)) {
            if (t > index) break;
            state.update(b.store.checkpoint(r, t));
        }
        if (state.empty()) throw ValidationError("empty SWA prefix at index " + format_index(index));
        return state.mean;
    };

    std::vector<CheckpointTensors> members;
    std::vector<double> temps;
    if (ensemble) {
        for (int r : runs) {
            CheckpointTensors w = model_at(r);
            SplitTables tabs = (*b.evaluator)(w);
            temps.push_back(fit_temperature(tabs.at("val")).tau);
            members.push_back(std::move(w));
        }
    } else {
        members.push_back(model_at(one_run));
        temps.push_back(1.0);
    }

    const std::uint32_t classes = static_cast<std::uint32_t>(b.sidecar->cfg.classes);
    PredictFn predict = [&](double x, double y) -> std::uint32_t {
        const double pt[2] = {x, y};
        std::vector<double> acc;
        for (std::size_t m = 0; m < members.size(); ++m) {
            std::vector<double> z = mlp_forward(members[m], std::span<const double>(pt, 2), 1);
            if (acc.empty()) acc.assign(z.size(), 0.0);
            for (std::size_t k = 0; k < z.size(); ++k) acc[k] += z[k] / temps[m];
        }
        return static_cast<std::uint32_t>(argmax_row(acc));
    };

    auto grid = render_decision_surface(predict, bounds, resolution);
    write_pgm(output, grid, resolution, resolution, classes);
    emit(out, "synth surface",
         {{"store", dir},
          {"run", one_run},
          {"index", jnum(index)},
          {"swa", swa},
          {"ensemble", ensemble},
          {"resolution", resolution},
          {"output", output}},
         {{"written", output}, {"width", resolution}, {"height", resolution}});
    return 0;
}

int run_report(const std::string& dir, bool witnesses, std::ostream& out) {
    StoreBundle b = open_store(dir);
    ReportOptions opts;
    opts.include_witnesses = witnesses;
    emit(out, "report", {{"store", dir}, {"witnesses", witnesses}},
         report_all(b.store, b.sidecar, opts));
    return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Post-hoc transform toolkit: temperature scaling, ensembling, weight "
                 "averaging, reversal detection and checkpoint selection"};
    app.require_subcommand(1);

    // fit-temp
    std::string ft_bundle;
    FitOptions fit_opts;
    auto* fit_cmd = app.add_subcommand("fit-temp", "Fit a temperature on an eval bundle");
    fit_cmd->add_option("bundle", ft_bundle, "eval bundle (.phe)")->required();
    fit_cmd->add_option("--beta-min", fit_opts.beta_min);
    fit_cmd->add_option("--beta-max", fit_opts.beta_max);
    fit_cmd->add_option("--grad-tol", fit_opts.grad_tol);
    fit_cmd->add_option("--max-iters", fit_opts.max_iters);

    // apply-temp
    std::string at_bundle, at_out;
    double at_tau = 1.0;
    auto* apply_cmd = app.add_subcommand("apply-temp", "Scale a bundle's logits by 1/tau");
    apply_cmd->add_option("bundle", at_bundle)->required();
    apply_cmd->add_option("--tau", at_tau)->required();
    apply_cmd->add_option("-o,--output", at_out)->required();

    // ensemble
    std::vector<std::string> ens_bundles;
    std::vector<double> ens_temps;
    std::string ens_out;
    auto* ens_cmd = app.add_subcommand("ensemble", "Average temperature-scaled logits");
    ens_cmd->add_option("bundles", ens_bundles)->required()->expected(-1);
    ens_cmd->add_option("--temps", ens_temps)->delimiter(',');
    ens_cmd->add_option("-o,--output", ens_out)->required();

    // swa
    std::string swa_run, swa_out;
    double swa_upto = 0.0;
    auto* swa_cmd = app.add_subcommand("swa", "Average a run's checkpoints up to an index");
    swa_cmd->add_option("--run", swa_run, "run directory with ckpt-<index>.json/.f32")->required();
    swa_cmd->add_option("--upto", swa_upto)->required();
    swa_cmd->add_option("-o,--output", swa_out, "output checkpoint stem")->required();

    // curves
    std::string cv_store, cv_transform = "swa_ts", cv_metric = "error", cv_split = "test";
    int cv_run = 0;
    auto* cv_cmd = app.add_subcommand("curves", "Base and post-hoc metric curves");
    cv_cmd->add_option("--store", cv_store)->required();
    cv_cmd->add_option("--transform", cv_transform,
                       "ts | ens | swa | swa-ts | swa-ens-ts");
    cv_cmd->add_option("--metric", cv_metric, "error | loss | perplexity | clean-error");
    cv_cmd->add_option("--split", cv_split);
    cv_cmd->add_option("--run", cv_run, "run id for single-run transforms");

    // detect-reversal
    std::string dr_file;
    auto* dr_cmd = app.add_subcommand("detect-reversal", "Scan a curve pair for reversal");
    dr_cmd->add_option("curves", dr_file, "curves JSON (bare or CLI report)")->required();

    // select
    std::string sel_store, sel_strategy = "swa-ts", sel_metric = "loss";
    int sel_run = 0;
    auto* sel_cmd = app.add_subcommand("select", "Checkpoint selection");
    sel_cmd->add_option("--store", sel_store)->required();
    sel_cmd->add_option("--strategy", sel_strategy, "naive | swa-ts | swa-ens-ts | hybrid");
    sel_cmd->add_option("--metric", sel_metric, "loss | error");
    sel_cmd->add_option("--run", sel_run);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic spirals experiment");
    synth_cmd->require_subcommand(1);
    MlpConfig synth_cfg;
    int synth_models = 16;
    double synth_noise = 0.2;
    std::size_t synth_train = 1000;
    std::string synth_out;
    bool synth_desk = false;
    auto* sr_cmd = synth_cmd->add_subcommand("run", "Train the MLP ensemble and write a store");
    sr_cmd->add_option("--models", synth_models);
    sr_cmd->add_option("--epochs", synth_cfg.epochs);
    sr_cmd->add_option("--seed", synth_cfg.seed);
    sr_cmd->add_option("--out", synth_out)->required();
    sr_cmd->add_option("--hidden", synth_cfg.hidden);
    sr_cmd->add_option("--depth", synth_cfg.depth);
    sr_cmd->add_option("--lr", synth_cfg.lr);
    sr_cmd->add_option("--batch", synth_cfg.batch);
    sr_cmd->add_option("--subsample", synth_cfg.subsample);
    sr_cmd->add_option("--ckpt-interval", synth_cfg.ckpt_interval);
    sr_cmd->add_option("--noise", synth_noise);
    sr_cmd->add_option("--train-size", synth_train);
    sr_cmd->add_option("--val-size", synth_cfg.val_size);
    sr_cmd->add_option("--test-size", synth_cfg.test_size);
    sr_cmd->add_flag("--desk", synth_desk, "reduced 4x128 configuration");

    std::string sf_store, sf_out = "surface.pgm";
    int sf_run = 0;
    double sf_index = 0.0;
    bool sf_swa = false, sf_ens = false;
    std::size_t sf_res = 256;
    SurfaceBounds sf_bounds;
    auto* sf_cmd = synth_cmd->add_subcommand("surface", "Render a decision surface to PGM");
    sf_cmd->add_option("--store", sf_store)->required();
    sf_cmd->add_option("--run", sf_run);
    sf_cmd->add_option("--index", sf_index)->required();
    sf_cmd->add_flag("--swa", sf_swa, "use the SWA prefix up to the index");
    sf_cmd->add_flag("--ensemble", sf_ens, "ensemble all runs at the index");
    sf_cmd->add_option("--resolution", sf_res);
    sf_cmd->add_option("--xmin", sf_bounds.xmin);
    sf_cmd->add_option("--xmax", sf_bounds.xmax);
    sf_cmd->add_option("--ymin", sf_bounds.ymin);
    sf_cmd->add_option("--ymax", sf_bounds.ymax);
    sf_cmd->add_option("-o,--output", sf_out);

    // report
    std::string rp_store;
    bool rp_witnesses = false;
    auto* rp_cmd = app.add_subcommand("report", "Full curves + reversal + selection summary");
    rp_cmd->add_option("--store", rp_store)->required();
    rp_cmd->add_flag("--witnesses", rp_witnesses, "include witness lists");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (fit_cmd->parsed()) return run_fit_temp(ft_bundle, fit_opts, out);
        if (apply_cmd->parsed()) return run_apply_temp(at_bundle, at_tau, at_out, out);
        if (ens_cmd->parsed()) return run_ensemble(ens_bundles, ens_temps, ens_out, out);
        if (swa_cmd->parsed()) return run_swa(swa_run, swa_upto, swa_out, out);
        if (cv_cmd->parsed())
            return run_curves(cv_store, cv_transform, cv_metric, cv_split, cv_run, out);
        if (dr_cmd->parsed()) return run_detect_reversal(dr_file, out);
        if (sel_cmd->parsed()) return run_select(sel_store, sel_strategy, sel_metric, sel_run, out);
        if (sr_cmd->parsed()) {
            if (synth_desk) synth_cfg.hidden = 128;
            return run_synth_run(synth_cfg, synth_models, synth_noise, synth_train, synth_out, out);
        }
        if (sf_cmd->parsed())
            return run_synth_surface(sf_store, sf_run, sf_index, sf_swa, sf_ens, sf_res, sf_bounds,
                                     sf_out, out);
        if (rp_cmd->parsed()) return run_report(rp_store, rp_witnesses, out);
        err << app.help();
        return 1;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const TrainingError& e) {
        err << "training error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace posthoc::cli
