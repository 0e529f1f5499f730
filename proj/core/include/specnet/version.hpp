#pragma once

namespace specnet {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace specnet
