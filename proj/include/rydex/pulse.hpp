#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <string>

#include "rydex/constants.hpp"
#include "rydex/quadrature.hpp"

namespace rydex {

enum class PulseShape { Gaussian, Square };

inline const char* to_string(PulseShape s) {
    return s == PulseShape::Gaussian ? "gaussian" : "square";
}

/// Laser pulse in scaled time tau = t/T. The envelope is
/// f(tau) = g(tau) * exp(i(delta tau + chirp tau^2 + phase0)) inside the
/// support window and zero outside. Gaussian: g = exp(-tau^2) on
/// [-window, window]; Square: g = 1 on [0, 1).
struct PulseSpec {
    PulseShape shape = PulseShape::Gaussian;
    double duration_s = 1.0;  // T in seconds; the scaled-time unit
    double delta = 0.0;       // dimensionless detuning, Delta * T
    double chirp = 0.0;       // quadratic-phase coefficient beta
    double phase0 = 0.0;      // global phase of the drive
    double tau0 = -4.0;
    double tau_end = 4.0;

    static PulseSpec gaussian(double duration_s, double delta = 0.0, double chirp = 0.0,
                              double window = 4.0) {
        return {PulseShape::Gaussian, duration_s, delta, chirp, 0.0, -window, window};
    }
    static PulseSpec square(double duration_s, double delta = 0.0, double chirp = 0.0) {
        return {PulseShape::Square, duration_s, delta, chirp, 0.0, 0.0, 1.0};
    }

    bool resonant() const { return delta == 0.0 && chirp == 0.0 && phase0 == 0.0; }

    // Upper bound on |d phase/d tau| over the window.
    double phase_rate() const {
        const double tmax = std::max(std::abs(tau0), std::abs(tau_end));
        return std::abs(delta) + 2.0 * std::abs(chirp) * tmax;
    }

    void validate() const {
        if (!(duration_s > 0.0)) throw std::invalid_argument("pulse duration must be positive");
        if (!(tau0 < tau_end)) throw std::invalid_argument("pulse window must satisfy tau0 < tau_end");
        if (shape == PulseShape::Square && (tau0 != 0.0 || tau_end != 1.0))
            throw std::invalid_argument("square pulse support is fixed to [0, 1] in scaled time");
    }
};

namespace detail {

inline double envelope_g(PulseShape shape, double tau) {
    if (shape == PulseShape::Gaussian) return std::exp(-tau * tau);
    return (tau >= 0.0 && tau < 1.0) ? 1.0 : 0.0;
}

// Envelope evaluated without the support cutoff (one-sided limits at the
// square-pulse edges), used by asymptotic boundary terms.
inline std::complex<double> envelope_unclamped(const PulseSpec& p, double tau) {
    const double g = p.shape == PulseShape::Gaussian ? std::exp(-tau * tau) : 1.0;
    const double phase = p.delta * tau + p.chirp * tau * tau + p.phase0;
    return std::polar(g, phase);
}

}  // namespace detail

/// Immutable pulse with a cached cumulative integral. Resonant pulses use
/// closed forms (erf / linear); detuned or chirped ones a checkpointed
/// quadrature exact to opts.abs_tol.
class Pulse {
public:
    explicit Pulse(const PulseSpec& spec, const QuadOptions& opts = {}) : spec_(spec) {
        spec_.validate();
        if (spec_.resonant()) {
            area_ = resonant_area_to(spec_.tau_end);
        } else {
            QuadOptions q = opts;
            q.osc_rate = spec_.phase_rate() + 1.0;
            cum_ = std::make_shared<Cumulative>(
                [s = spec_](double t) { return pulse_envelope(s, t); }, spec_.tau0, spec_.tau_end,
                q, 512);
            area_ = resonant_area_to(spec_.tau_end);
        }
    }

    const PulseSpec& spec() const { return spec_; }
    PulseShape shape() const { return spec_.shape; }
    double duration_s() const { return spec_.duration_s; }
    double tau0() const { return spec_.tau0; }
    double tau_end() const { return spec_.tau_end; }

    /// f(tau); zero outside the support window.
    std::complex<double> envelope(double tau) const { return pulse_envelope(spec_, tau); }

    /// F(tau) = int_{tau0}^{tau} f. Clamped to F(tau_end) past the window.
    std::complex<double> cumulative(double tau) const {
        if (tau <= spec_.tau0) return 0.0;
        if (spec_.resonant()) return resonant_area_to(std::min(tau, spec_.tau_end));
        return (*cum_)(tau);
    }

    /// Pulse area factor W = int g over the window (resonant F(tau_end)).
    double area() const { return area_; }

    static std::complex<double> pulse_envelope(const PulseSpec& p, double tau) {
        if (tau < p.tau0 || tau > p.tau_end) return 0.0;
        const double g = detail::envelope_g(p.shape, tau);
        if (g == 0.0) return 0.0;
        if (p.resonant()) return g;
        return std::polar(g, p.delta * tau + p.chirp * tau * tau + p.phase0);
    }

private:
    double resonant_area_to(double tau) const {
        if (spec_.shape == PulseShape::Square) return std::clamp(tau, 0.0, 1.0);
        const double spi2 = std::sqrt(constants::pi) / 2.0;
        return spi2 * (std::erf(tau) - std::erf(spec_.tau0));
    }

    PulseSpec spec_;
    double area_ = 0.0;
    std::shared_ptr<const Cumulative> cum_;
};

/// f(tau) for a bare spec.
inline std::complex<double> envelope(const PulseSpec& p, double tau) {
    return Pulse::pulse_envelope(p, tau);
}

/// F(tau) for a bare spec (builds the cumulative; prefer Pulse for loops).
inline std::complex<double> cumulative(const PulseSpec& p, double tau,
                                       const QuadOptions& opts = {}) {
    if (!(tau >= p.tau0)) throw std::invalid_argument("cumulative: tau below window start");
    return Pulse(p, opts).cumulative(tau);
}

/// Transform-limited duration T (seconds) for an intensity-spectrum FWHM
/// bandwidth in Hz.
inline double transform_limited_duration_s(PulseShape shape, double gamma_hz) {
    if (!(gamma_hz > 0.0) || !std::isfinite(gamma_hz))
        throw std::invalid_argument("bandwidth must be positive and finite");
    if (shape == PulseShape::Gaussian) {
        const double t_fwhm = constants::gauss_tbp / gamma_hz;
        return t_fwhm / constants::sqrt_2ln2;
    }
    return constants::square_tbp / gamma_hz;
}

/// Bandwidth broadening factor of a linearly chirped Gaussian.
inline double chirp_broadening(double beta) { return std::sqrt(1.0 + beta * beta); }

/// Pulse whose intensity-spectrum FWHM equals gamma_hz. With
/// chirp_fraction > 0 the envelope stays transform-limited for the base
/// bandwidth (1 - chirp_fraction) * gamma_hz and a linear chirp supplies
/// the excess: gamma = gamma0 * sqrt(1 + beta^2).
inline PulseSpec duration_from_bandwidth(PulseShape shape, double gamma_hz,
                                         double chirp_fraction = 0.0, int chirp_sign = +1) {
    if (!(gamma_hz > 0.0) || !std::isfinite(gamma_hz))
        throw std::invalid_argument("bandwidth must be positive and finite");
    if (chirp_fraction < 0.0 || chirp_fraction >= 1.0)
        throw std::invalid_argument("chirp_fraction must be in [0, 1)");
    if (shape == PulseShape::Square) {
        if (chirp_fraction != 0.0)
            throw std::invalid_argument("chirped bandwidth is defined for Gaussian pulses only");
        return PulseSpec::square(transform_limited_duration_s(shape, gamma_hz));
    }
    const double gamma0 = gamma_hz * (1.0 - chirp_fraction);
    const double t = transform_limited_duration_s(shape, gamma0);
    double beta = 0.0;
    if (chirp_fraction > 0.0) {
        const double r = gamma_hz / gamma0;
        beta = (chirp_sign < 0 ? -1.0 : 1.0) * std::sqrt(r * r - 1.0);
    }
    return PulseSpec::gaussian(t, 0.0, beta);
}

/// Fig.-3 parametrization: envelope width fixed by the transform-limited
/// base bandwidth gamma0_hz, chirp chosen to broaden it to gamma_hz.
inline PulseSpec chirped_from_base(PulseShape shape, double gamma_hz, double gamma0_hz,
                                   int chirp_sign = +1) {
    if (shape != PulseShape::Gaussian)
        throw std::invalid_argument("chirped bandwidth is defined for Gaussian pulses only");
    if (!(gamma0_hz > 0.0) || !(gamma_hz > 0.0))
        throw std::invalid_argument("bandwidth must be positive");
    if (gamma_hz < gamma0_hz)
        throw std::invalid_argument(
            "requested bandwidth " + std::to_string(gamma_hz) +
            " Hz is below the transform limit of the fixed-duration pulse (" +
            std::to_string(gamma0_hz) + " Hz)");
    const double t = transform_limited_duration_s(shape, gamma0_hz);
    const double r = gamma_hz / gamma0_hz;
    const double beta = (chirp_sign < 0 ? -1.0 : 1.0) * std::sqrt(r * r - 1.0);
    return PulseSpec::gaussian(t, 0.0, beta);
}

}  // namespace rydex
