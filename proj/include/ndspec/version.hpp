#pragma once

namespace ndspec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ndspec
