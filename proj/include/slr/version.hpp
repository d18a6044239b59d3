#pragma once

namespace slr {

inline constexpr const char* kVersionString = "slr-1.0.0";

}  // namespace slr
