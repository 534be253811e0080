#pragma once

namespace mvreplay {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mvreplay
