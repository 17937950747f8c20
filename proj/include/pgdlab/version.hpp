#pragma once

namespace pgdlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pgdlab
