#pragma once

namespace llgm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace llgm
