#pragma once

namespace sigld {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sigld
