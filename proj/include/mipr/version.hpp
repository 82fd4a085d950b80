#pragma once

namespace mipr {

inline constexpr const char* kVersion = "0.1.0";

}
