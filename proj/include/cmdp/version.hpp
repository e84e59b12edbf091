#pragma once

namespace cmdp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cmdp
