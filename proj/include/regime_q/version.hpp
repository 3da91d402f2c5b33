#pragma once

namespace regime_q {
inline constexpr const char* version = "0.1.0";
}
