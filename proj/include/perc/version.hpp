#pragma once

namespace perc {
inline constexpr const char* kVersion = "perclab 0.1.0";
}
