#pragma once

namespace acemad {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace acemad
