#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "rydex/expansion.hpp"
#include "rydex/interactions.hpp"
#include "rydex/parallel.hpp"
#include "rydex/pulse.hpp"
#include "rydex/quadrature.hpp"

namespace rydex {

struct CorrelationOptions {
    double abs_tol = 1e-10;
    std::size_t max_panels = 400000;
    // Above this |k| the integral is replaced by its leading
    // integration-by-parts boundary term, with O(|k|^-2) remainder.
    double asymptotic_threshold = 2e4;
    unsigned workers = 1;
};

namespace detail {

// I(k) = int_{tau0}^{tau} e^{i k t} f(t) F(t) dt
inline std::complex<double> correlation_integral(const Pulse& p, double k, double tau,
                                                 const CorrelationOptions& opt) {
    if (std::abs(k) >= opt.asymptotic_threshold) {
        // boundary term of one integration by parts; F(tau0) = 0 kills the
        // lower end, and the square-pulse edge uses the interior limit.
        const std::complex<double> h_end =
            envelope_unclamped(p.spec(), tau) * p.cumulative(tau);
        return std::polar(1.0, k * tau) * h_end / std::complex<double>(0.0, k);
    }
    QuadOptions q{opt.abs_tol, opt.max_panels, std::abs(k) + p.spec().phase_rate() + 1.0};
    return integrate(
               [&](double t) {
                   return std::polar(1.0, k * t) * p.envelope(t) * p.cumulative(t);
               },
               p.tau0(), tau, q)
        .value;
}

}  // namespace detail

/// Pair fourth-order correlation coefficient,
/// c4 = (1/4) | int e^{i k t1} f(t1) F(t1) dt1 |^2.
inline double c4(const Pulse& p, double k, double tau, const CorrelationOptions& opt = {}) {
    if (k == 0.0) {
        // int f F = F^2 / 2 exactly
        const std::complex<double> F = p.cumulative(tau);
        return 0.0625 * std::norm(F * F);
    }
    return 0.25 * std::norm(detail::correlation_integral(p, k, tau, opt));
}

/// Low-power pair correlation P(i,j) = 16 c4 / |F(tau)|^4 at coupling k.
inline double pair_correlation_k(const Pulse& p, double k, double tau,
                                 const CorrelationOptions& opt = {}) {
    const std::complex<double> F = p.cumulative(tau);
    const double f2 = std::norm(F);
    if (f2 < 1e-24)
        throw std::domain_error("pair_correlation: vanishing pulse area, correlation undefined");
    return 16.0 * c4(p, k, tau, opt) / (f2 * f2);
}

/// P(i,j) for a pair at distance R (cm) with the given axis angle.
inline double pair_correlation(const Pulse& p, const InteractionKernel& kernel, double r_cm,
                               double cos_theta, double tau, const CorrelationOptions& opt = {}) {
    const double k = coupling_from_distance(kernel, p.duration_s(), r_cm, cos_theta);
    return pair_correlation_k(p, k, tau, opt);
}

struct CorrelationCurve {
    std::vector<double> r_um;
    std::vector<double> k;
    std::vector<double> p;
    PulseSpec pulse;
    InteractionKernel kernel;
    double tau = 0.0;
};

/// P(i,j) over a grid of pair separations (micrometres). Grid points are
/// independent work items with deterministic output order.
inline CorrelationCurve correlation_scan(const Pulse& p, const InteractionKernel& kernel,
                                         std::span<const double> r_grid_um, double tau,
                                         const CorrelationOptions& opt = {},
                                         double cos_theta = 0.0) {
    for (std::size_t i = 0; i + 1 < r_grid_um.size(); ++i)
        if (!(r_grid_um[i] < r_grid_um[i + 1]))
            throw std::invalid_argument("correlation_scan: r grid must be strictly increasing");
    if (!r_grid_um.empty() && !(r_grid_um.front() > 0.0))
        throw std::invalid_argument("correlation_scan: r grid must be positive");

    CorrelationCurve curve;
    curve.pulse = p.spec();
    curve.kernel = kernel;
    curve.tau = tau;
    curve.r_um.assign(r_grid_um.begin(), r_grid_um.end());
    curve.k.resize(r_grid_um.size());
    curve.p.resize(r_grid_um.size());
    parallel_for(r_grid_um.size(), opt.workers, [&](std::size_t i) {
        const double r_cm = r_grid_um[i] * 1e-4;
        curve.k[i] = coupling_from_distance(kernel, p.duration_s(), r_cm, cos_theta);
        curve.p[i] = pair_correlation_k(p, curve.k[i], tau, opt);
    });
    return curve;
}

/// Default Fig.-3 style grid: log-spaced radii in micrometres.
inline std::vector<double> log_radius_grid_um(double r_min = 0.5, double r_max = 20.0,
                                              std::size_t n = 200) {
    std::vector<double> g(n);
    const double lr0 = std::log(r_min), lr1 = std::log(r_max);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(lr0 + (lr1 - lr0) * static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

struct CorrelationPeak {
    double r_um = 0.0;
    double p = 0.0;
};

/// Maximum of P(i,j) over [r_min, r_max] um: grid maximum followed by
/// golden-section refinement around the best grid point.
inline CorrelationPeak max_correlation(const Pulse& pulse, const InteractionKernel& kernel,
                                       double tau, double r_min_um = 0.5,
                                       double r_max_um = 20.0, std::size_t grid_n = 200,
                                       const CorrelationOptions& opt = {}) {
    const auto grid = log_radius_grid_um(r_min_um, r_max_um, grid_n);
    auto eval = [&](double r_um) {
        return pair_correlation(pulse, kernel, r_um * 1e-4, 0.0, tau, opt);
    };
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = eval(grid[i]);
        if (p > best_p) {
            best_p = p;
            best = i;
        }
    }
    // refine in log r between the neighbours of the best grid point
    double a = std::log(grid[best > 0 ? best - 1 : best]);
    double b = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = eval(std::exp(x1)), f2 = eval(std::exp(x2));
    for (int it = 0; it < 40 && b - a > 1e-10; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = eval(std::exp(x2));
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = eval(std::exp(x1));
        }
    }
    const double rx = std::exp(0.5 * (a + b));
    const double px = eval(rx);
    CorrelationPeak peak;
    if (px >= best_p) {
        peak.r_um = rx;
        peak.p = px;
    } else {
        peak.r_um = grid[best];
        peak.p = best_p;
    }
    return peak;
}

}  // namespace rydex
