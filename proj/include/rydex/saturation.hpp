#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "rydex/constants.hpp"
#include "rydex/interactions.hpp"

namespace rydex {

/// Dimensionless interaction strength gamma rho (|C_s| T)^{3/s}.
inline double interaction_strength(double gamma, double rho_cm3, const InteractionKernel& kernel,
                                   double duration_s) {
    kernel.validate();
    if (!(gamma > 0.0)) throw std::invalid_argument("interaction_strength: gamma must be positive");
    if (rho_cm3 < 0.0) throw std::invalid_argument("interaction_strength: rho must be >= 0");
    if (kernel.c_au == 0.0 || rho_cm3 == 0.0) return 0.0;
    const double q = 3.0 / kernel.s;
    return gamma * rho_cm3 * std::pow(std::abs(kernel.c_hz_cms()) * duration_s, q);
}

/// Suppression factor N_d = 1 + gamma rho (|C_s| T)^{3/s}; the effective
/// number of atoms per blockade domain.
inline double suppression_factor(double gamma, double rho_cm3, const InteractionKernel& kernel,
                                 double duration_s) {
    return 1.0 + interaction_strength(gamma, rho_cm3, kernel, duration_s);
}

/// Saturated excitation fraction P0 = I0/I_sat = 1/N_d.
inline double p0_saturated(double n_d) {
    if (!(n_d >= 1.0)) throw std::invalid_argument("p0_saturated: N_d must be >= 1");
    return 1.0 / n_d;
}

/// Maximum of the raw two-term series, (3/4)/N_d. Underestimates the
/// saturated fraction (3/4 instead of 1 at C_s = 0); kept for transparency.
inline double p0_truncated(double gamma, double rho_cm3, const InteractionKernel& kernel,
                           double duration_s) {
    return 0.75 / suppression_factor(gamma, rho_cm3, kernel, duration_s);
}

/// Modified collective-Rabi curve: sin^2(sqrt(N_d I/I_sat) pi/2)/N_d below
/// the saturation intensity I0 = I_sat/N_d, clamped at P0 above it. The two
/// branches coincide at the joint.
inline double excitation_curve(double n_d, double i_over_isat) {
    if (!(n_d >= 1.0)) throw std::invalid_argument("excitation_curve: N_d must be >= 1");
    if (i_over_isat < 0.0) throw std::invalid_argument("excitation_curve: I/I_sat must be >= 0");
    const double i0 = 1.0 / n_d;
    if (i_over_isat >= i0) return 1.0 / n_d;
    const double arg = std::sqrt(n_d * i_over_isat) * constants::pi / 2.0;
    const double s = std::sin(arg);
    return s * s / n_d;
}

struct SaturationModel {
    double n_d = 1.0;
    double p0 = 1.0;            // corrected saturated fraction 1/N_d
    double p0_raw = 0.75;       // (3/4)/N_d from the bare series
    double i0_over_isat = 1.0;  // saturation intensity ratio
    double gamma = 0.0;
    double rho_cm3 = 0.0;
    double duration_s = 0.0;

    static SaturationModel compute(double gamma, double rho_cm3, const InteractionKernel& kernel,
                                   double duration_s) {
        SaturationModel m;
        m.gamma = gamma;
        m.rho_cm3 = rho_cm3;
        m.duration_s = duration_s;
        m.n_d = suppression_factor(gamma, rho_cm3, kernel, duration_s);
        m.p0 = p0_saturated(m.n_d);
        m.p0_raw = p0_truncated(gamma, rho_cm3, kernel, duration_s);
        m.i0_over_isat = m.p0;
        return m;
    }
};

/// P0(rho) per the corrected saturated-fraction formula; strictly
/// decreasing in rho.
inline std::vector<double> density_sweep(double gamma, const InteractionKernel& kernel,
                                         double duration_s, std::span<const double> rho_grid) {
    for (std::size_t i = 0; i + 1 < rho_grid.size(); ++i)
        if (!(rho_grid[i] <= rho_grid[i + 1]))
            throw std::invalid_argument("density_sweep: rho grid must be nondecreasing");
    std::vector<double> p0(rho_grid.size());
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        if (rho_grid[i] < 0.0)
            throw std::invalid_argument("density_sweep: rho grid must be nonnegative");
        p0[i] = p0_saturated(suppression_factor(gamma, rho_grid[i], kernel, duration_s));
    }
    return p0;
}

}  // namespace rydex
