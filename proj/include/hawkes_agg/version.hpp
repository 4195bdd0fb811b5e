#pragma once

namespace hawkes_agg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hawkes_agg
