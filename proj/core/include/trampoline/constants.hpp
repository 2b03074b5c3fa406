#pragma once

#include <numbers>

// CODATA 2018 exact SI values. Every physical constant used by the library
// and its tests comes from here.
namespace trampoline::constants {

inline constexpr double kSpeedOfLight = 299'792'458.0;       // m/s
inline constexpr double kBoltzmann = 1.380'649e-23;          // J/K
inline constexpr double kPlanck = 6.626'070'15e-34;          // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);  // J s

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace trampoline::constants
