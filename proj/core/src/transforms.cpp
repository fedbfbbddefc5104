#include "posthoc/transforms.hpp"

#include "posthoc/errors.hpp"

namespace posthoc {

std::string to_string(TransformKind k) {
    switch (k) {
        case TransformKind::ts: return "ts";
        case TransformKind::ens: return "ens";
        case TransformKind::swa: return "swa";
        case TransformKind::swa_ts: return "swa_ts";
        case TransformKind::swa_ens_ts: return "swa_ens_ts";
    }
    return "?";
}

TransformKind transform_kind_from_string(const std::string& s) {
    if (s == "ts") return TransformKind::ts;
    if (s == "ens") return TransformKind::ens;
    if (s == "swa") return TransformKind::swa;
    if (s == "swa_ts" || s == "swa-ts") return TransformKind::swa_ts;
    if (s == "swa_ens_ts" || s == "swa-ens-ts") return TransformKind::swa_ens_ts;
    throw ValidationError("unknown transform kind: " + s);
}

EvalTable ensemble_logits(std::span<const EvalTable> tables, std::span<const double> temps) {
    if (tables.empty()) throw ValidationError("ensemble needs at least one member");
    if (temps.size() != tables.size())
        throw ValidationError("temperature list length does not match member count");
    const EvalTable& first = tables[0];
    first.validate();
    for (double tau : temps)
        if (!(tau > 0)) throw ValidationError("member temperatures must be positive");
    for (const EvalTable& t : tables.subspan(1)) {
        if (t.n != first.n || t.c != first.c)
            throw ValidationError("ensemble members disagree on (n, c)");
        if (t.labels != first.labels)
            throw ValidationError("ensemble members disagree on labels");
    }

    EvalTable out;
    out.n = first.n;
    out.c = first.c;
    out.labels = first.labels;
    out.logits.assign(first.n * first.c, 0.0);
    const double inv_k = 1.0 / static_cast<double>(tables.size());
    for (std::size_t m = 0; m < tables.size(); ++m) {
        const double w = 1.0 / temps[m];
        const auto& z = tables[m].logits;
        for (std::size_t i = 0; i < z.size(); ++i) out.logits[i] += w * z[i];
    }
    for (double& z : out.logits) z *= inv_k;
    return out;
}

CheckpointTensors swa_mean(std::span<const CheckpointTensors> checkpoints) {
    if (checkpoints.empty()) throw ValidationError("weight average needs at least one checkpoint");
    SwaState state;
    for (const auto& c : checkpoints) state.update(c);
    return std::move(state.mean);
}

void SwaState::update(const CheckpointTensors& w) {
    if (empty()) {
        w.validate();
        mean = w;
        count = 1;
        return;
    }
    if (!mean.same_schema(w))
        throw ValidationError("checkpoint schema does not match running average");
    const double scale = 1.0 / static_cast<double>(count + 1);
    for (std::size_t t = 0; t < mean.tensors.size(); ++t) {
        auto& acc = mean.tensors[t].data;
        const auto& add = w.tensors[t].data;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (add[i] - acc[i]) * scale;
    }
    ++count;
}

SwaState swa_update(SwaState state, const CheckpointTensors& w) {
    state.update(w);
    return state;
}

namespace {

const EvalTable& require_split(const SplitTables& tables, const std::string& split) {
    auto it = tables.find(split);
    if (it == tables.end())
        throw ValidationError("evaluator produced no '" + split + "' table");
    return it->second;
}

}  // namespace

ComposedTables compose_swa_ts(std::span<const CheckpointTensors> prefix,
                              const Evaluator& evaluator,
                              const FitOptions& opts) {
    if (prefix.empty()) throw ValidationError("SWA prefix must be nonempty");
    CheckpointTensors averaged = swa_mean(prefix);
    SplitTables tables = evaluator(averaged);
    const EvalTable& val = require_split(tables, "val");
    TemperatureFit fit = fit_temperature(val, opts);

    ComposedTables out;
    out.spec.kind = TransformKind::swa_ts;
    out.spec.member_temps = {fit.tau};
    out.val = apply_temperature(val, fit.tau);
    if (auto it = tables.find("test"); it != tables.end())
        out.test = apply_temperature(it->second, fit.tau);
    return out;
}

ComposedTables compose_swa_ens_ts(std::span<const std::vector<CheckpointTensors>> run_prefixes,
                                  const Evaluator& evaluator,
                                  const FitOptions& opts) {
    if (run_prefixes.empty()) throw ValidationError("need at least one run");
    std::vector<EvalTable> vals, tests;
    std::vector<double> member_temps;
    bool have_test = true;
    for (const auto& prefix : run_prefixes) {
        if (prefix.empty()) throw ValidationError("SWA prefix must be nonempty");
        CheckpointTensors averaged = swa_mean(prefix);
        SplitTables tables = evaluator(averaged);
        const EvalTable& val = require_split(tables, "val");
        member_temps.push_back(fit_temperature(val, opts).tau);
        vals.push_back(val);
        auto it = tables.find("test");
        if (it == tables.end())
            have_test = false;
        else
            tests.push_back(it->second);
    }
    EvalTable ens_val = ensemble_logits(vals, member_temps);
    TemperatureFit outer = fit_temperature(ens_val, opts);

    ComposedTables out;
    out.spec.kind = TransformKind::swa_ens_ts;
    out.spec.member_temps = member_temps;
    out.spec.ensemble_temp = outer.tau;
    out.val = apply_temperature(ens_val, outer.tau);
    if (have_test && tests.size() == run_prefixes.size())
        out.test = apply_temperature(ensemble_logits(tests, member_temps), outer.tau);
    return out;
}

}  // namespace posthoc
