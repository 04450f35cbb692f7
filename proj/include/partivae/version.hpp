#pragma once

namespace partivae {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace partivae
