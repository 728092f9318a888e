#pragma once

namespace ulrates {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ulrates
