#pragma once

namespace nlslab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "nlslab";

}  // namespace nlslab
