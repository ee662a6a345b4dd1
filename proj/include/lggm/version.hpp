#pragma once

namespace lggm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lggm
