#pragma once

namespace glassbox {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

}  // namespace glassbox
