#pragma once

namespace trajmeta {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace trajmeta
