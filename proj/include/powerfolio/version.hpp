#pragma once

namespace powerfolio {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace powerfolio
