#pragma once

namespace orthant {

#ifdef ORTHANT_VERSION
inline constexpr const char* kVersion = ORTHANT_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

}  // namespace orthant
