#pragma once

namespace imago {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace imago
