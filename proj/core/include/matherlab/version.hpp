#pragma once

namespace mather {

inline constexpr const char* kVersion = "1.0.0";

} // namespace mather
