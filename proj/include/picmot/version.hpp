#pragma once

namespace picmot {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace picmot
