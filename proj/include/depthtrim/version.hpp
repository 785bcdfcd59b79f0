#pragma once

namespace depthtrim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace depthtrim
