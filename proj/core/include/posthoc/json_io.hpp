#pragma once

#include <json.hpp>

#include "posthoc/calibrate.hpp"
#include "posthoc/diagnostics.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/selection.hpp"
#include "posthoc/transforms.hpp"

namespace posthoc {

/// Rounds through "%.9g" so serialized reports carry 9 significant digits
/// (enough to reproduce any float32-stored value exactly).
double sig9(double v);
nlohmann::json jnum(double v);
nlohmann::json jnum_list(std::span<const double> values);

nlohmann::json to_json(const MetricValue& v);
nlohmann::json to_json(const TemperatureFit& f);
nlohmann::json to_json(const TransformSpec& s);
nlohmann::json to_json(const CurvePair& c);
nlohmann::json to_json(const ReversalReport& r);
nlohmann::json to_json(const SelectionReport& r);

CurvePair curve_pair_from_json(const nlohmann::json& j);

}  // namespace posthoc
