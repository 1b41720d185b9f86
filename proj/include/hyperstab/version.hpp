#pragma once

namespace hyperstab {
inline constexpr const char* version = "0.3.0";
}
