#pragma once

namespace fiberorient {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fiberorient
