#pragma once

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace xorflow {

// Absolute comparison tolerance for flow quantities. Flows are fluid
// (fractional) doubles; anything within kTol of zero is treated as zero.
inline constexpr double kTol = 1e-9;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grid-tolerant floor/ceil: a value sitting kTol below/above an integer is
// snapped onto it before truncation, so exact packet multiples round stably.
inline double floor_tol(double x) { return std::floor(x + kTol); }
inline double ceil_tol(double x) { return std::ceil(x - kTol); }

// Verbosity from XORFLOW_LOG (0 = quiet, 1 = info, 2 = debug).
int log_level();

void logf(int level, const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 2, 3)))
#endif
    ;

}  // namespace xorflow
