#pragma once

namespace qfbox {
inline constexpr const char* kVersion = "0.1.0";
}
