#pragma once

#include <numbers>

namespace blockade::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 exact values.
inline constexpr double boltzmann = 1.380649e-23; // J/K
inline constexpr double planck = 6.62607015e-34;  // J s

inline constexpr double hz(double f) { return two_pi * f; }
inline constexpr double khz(double f) { return two_pi * f * 1e3; }
inline constexpr double mhz(double f) { return two_pi * f * 1e6; }
inline constexpr double ghz(double f) { return two_pi * f * 1e9; }

inline constexpr double to_mhz(double omega) { return omega / (two_pi * 1e6); }

inline constexpr double ns(double t) { return t * 1e-9; }
inline constexpr double us(double t) { return t * 1e-6; }

} // namespace blockade::units
