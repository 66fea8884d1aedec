#pragma once

namespace wrcm {
inline constexpr const char* kVersion = "0.1.0";
}
