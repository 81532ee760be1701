#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace harvest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // parse and validation errors
inline constexpr int kExitRuntime = 2;  // solver, calibration and I/O failures

inline constexpr double kDefaultPulseWidth = 1e-3;       // s
inline constexpr double kDefaultPulseDuration = 120.0;   // s

/// argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace harvest::cli
