#pragma once

#ifndef TWINBEAM_VERSION
#define TWINBEAM_VERSION "0.1.0"
#endif

namespace twinbeam {
inline constexpr const char* kVersion = TWINBEAM_VERSION;
}  // namespace twinbeam
