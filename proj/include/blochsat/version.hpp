#pragma once

namespace blochsat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace blochsat
