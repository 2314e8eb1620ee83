#pragma once

#include <numbers>

// SI 2019 exact defining constants.
namespace impa::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 299792458.0;          // m/s
inline constexpr double planck = 6.62607015e-34;               // J s
inline constexpr double hbar = planck / (2.0 * pi);            // J s
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double boltzmann = 1.380649e-23;              // J/K
inline constexpr double flux_quantum = planck / (2.0 * elementary_charge);  // Wb

}  // namespace impa::constants
