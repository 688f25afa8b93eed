#pragma once

namespace xshift {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace xshift
