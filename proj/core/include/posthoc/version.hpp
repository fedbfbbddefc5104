#pragma once

namespace posthoc {

inline constexpr const char* kEngineVersion = "1.0.0";

}  // namespace posthoc
