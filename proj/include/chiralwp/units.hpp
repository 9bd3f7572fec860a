#pragma once

// Conversions between laboratory units and the internal unit system.
//
// Internally hbar = 1, energies are measured in units of the rotational
// constant B (as an energy, h*B), and times in t0 = hbar / (h*B).

#include <numbers>

namespace chiralwp::units {

inline constexpr double planck_J_s = 6.62607015e-34;
inline constexpr double debye_C_m = 3.335641e-30;

/// Energy of a rotational constant given in MHz, in joule.
constexpr double mhz_to_joule(double mhz) { return planck_J_s * mhz * 1.0e6; }

/// Coupling mu*E (mu in Debye, E in V/m) expressed in units of B.
constexpr double dipole_coupling(double mu_debye, double field_V_per_m, double B_MHz) {
  return mu_debye * debye_C_m * field_V_per_m / mhz_to_joule(B_MHz);
}

/// Coupling per Debye per V/m, in units of B.
constexpr double coupling_scale(double B_MHz) { return dipole_coupling(1.0, 1.0, B_MHz); }

/// The time unit t0 = hbar/B in seconds.
constexpr double time_unit_seconds(double B_MHz) {
  return 1.0 / (2.0 * std::numbers::pi * B_MHz * 1.0e6);
}

}  // namespace chiralwp::units
