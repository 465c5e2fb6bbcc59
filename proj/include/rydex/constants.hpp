#pragma once

#include <cmath>
#include <numbers>

namespace rydex::constants {

inline constexpr double pi = std::numbers::pi;

// CODATA 2018
inline constexpr double hartree_over_h_hz = 6.579683920502e15;  // E_h/h
inline constexpr double bohr_radius_cm = 5.29177210903e-9;      // a0

// Interaction coefficient C_s given in atomic units (E_h * a0^s),
// converted to h-normalized Hz * cm^s.
inline double cs_au_to_hz_cms(double c_au, int s) {
    return c_au * hartree_over_h_hz * std::pow(bohr_radius_cm, s);
}

// Gaussian amplitude envelope e^{-tau^2}: intensity-FWHM time-bandwidth
// product Gamma * T_FWHM = 2 ln2 / pi, and T = T_FWHM / sqrt(2 ln2).
inline const double sqrt_2ln2 = std::sqrt(2.0 * std::numbers::ln2);
inline const double gauss_tbp = 2.0 * std::numbers::ln2 / pi;

// Square envelope: sinc^2 intensity spectrum, half power at sin(x)/x = 1/sqrt2.
inline constexpr double square_tbp = 0.885892941378905;  // Gamma * T

}  // namespace rydex::constants
