#pragma once

namespace rbsde {

inline constexpr const char* kVersion = "0.1.0";

} // namespace rbsde
