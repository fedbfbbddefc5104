#include "posthoc/json_io.hpp"

#include <cstdio>
#include <cstdlib>

#include "posthoc/errors.hpp"

namespace posthoc {

double sig9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

nlohmann::json jnum(double v) { return sig9(v); }

nlohmann::json jnum_list(std::span<const double> values) {
    nlohmann::json arr = nlohmann::json::array();
    for (double v : values) arr.push_back(sig9(v));
    return arr;
}

nlohmann::json to_json(const MetricValue& v) {
    return {{"kind", to_string(v.kind)}, {"value", jnum(v.value)}, {"n", v.n}};
}

nlohmann::json to_json(const TemperatureFit& f) {
    return {{"tau", jnum(f.tau)},
            {"beta", jnum(f.beta)},
            {"val_loss_before", jnum(f.val_loss_before)},
            {"val_loss_after", jnum(f.val_loss_after)},
            {"iterations", f.iterations},
            {"status", to_string(f.status)}};
}

nlohmann::json to_json(const TransformSpec& s) {
    nlohmann::json j;
    j["kind"] = to_string(s.kind);
    j["member_temps"] = jnum_list(s.member_temps);
    if (s.ensemble_temp)
        j["ensemble_temp"] = jnum(*s.ensemble_temp);
    else
        j["ensemble_temp"] = nullptr;
    j["members"] = nlohmann::json::array();
    for (const IndexRange& m : s.members)
        j["members"].push_back({{"run", m.run}, {"first", jnum(m.first)}, {"last", jnum(m.last)}});
    return j;
}

nlohmann::json to_json(const CurvePair& c) {
    return {{"indices", jnum_list(c.indices)},
            {"base", jnum_list(c.base)},
            {"post", jnum_list(c.post)},
            {"metric", to_string(c.metric)},
            {"transform", to_string(c.transform)}};
}

nlohmann::json to_json(const ReversalReport& r) {
    nlohmann::json wit = nlohmann::json::array();
    for (const auto& [s, t] : r.witnesses) wit.push_back({jnum(s), jnum(t)});
    return {{"reversed", r.reversed}, {"witnesses", wit}, {"count", r.count}};
}

nlohmann::json to_json(const SelectionReport& r) {
    nlohmann::json chosen = nlohmann::json::array();
    for (const auto& [run, idx] : r.chosen) chosen.push_back({{"run", run}, {"index", jnum(idx)}});
    nlohmann::json j;
    j["strategy"] = to_string(r.strategy);
    j["chosen"] = chosen;
    j["val_metric"] = to_json(r.val_metric);
    j["test_metric"] = to_json(r.test_metric);
    j["transform"] = r.transform ? to_json(*r.transform) : nlohmann::json(nullptr);
    return j;
}

CurvePair curve_pair_from_json(const nlohmann::json& j) {
    const nlohmann::json* doc = &j;
    // Accept both a bare curve object and a full CLI report envelope.
    if (j.contains("result") && j["result"].contains("indices")) doc = &j["result"];
    if (!doc->contains("indices") || !doc->contains("base") || !doc->contains("post"))
        throw FormatError("curve JSON needs indices, base and post arrays");
    CurvePair c;
    for (const auto& v : (*doc)["indices"]) c.indices.push_back(v.get<double>());
    for (const auto& v : (*doc)["base"]) c.base.push_back(v.get<double>());
    for (const auto& v : (*doc)["post"]) c.post.push_back(v.get<double>());
    if (doc->contains("metric")) c.metric = metric_kind_from_string((*doc)["metric"].get<std::string>());
    if (doc->contains("transform"))
        c.transform = transform_kind_from_string((*doc)["transform"].get<std::string>());
    c.validate();
    return c;
}

}  // namespace posthoc
