#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rydex/interactions.hpp"
#include "rydex/parallel.hpp"
#include "rydex/pulse.hpp"
#include "rydex/quadrature.hpp"
#include "rydex/summation.hpp"

namespace rydex {

struct ExpansionOptions {
    double inner_tol = 1e-10;
    double outer_tol = 1e-9;
    std::size_t max_panels = 400000;
    // Above this |k| the oscillatory exponential is dropped and the analytic
    // k -> infinity limit is used, with relative error O(1/|k|).
    double asymptotic_threshold = 1e6;
    unsigned workers = 1;
};

/// Second-order excitation coefficient, |F(tau)|^2 / 4.
inline double second_order(const Pulse& p, double tau) {
    const std::complex<double> F = p.cumulative(tau);
    return 0.25 * std::norm(F);
}

/// Non-interacting fourth-order integral,
/// I41 = (1/4) Re int |F(t1)|^2 f*(t1) (F(tau) - F(t1)) dt1.
/// Exact for detuned and chirped pulses; reduces to
/// |F|^4/16 - Re[F/8 int f* F^2] on resonance.
inline double i41(const Pulse& p, double tau, const ExpansionOptions& opt = {}) {
    const std::complex<double> Ftau = p.cumulative(tau);
    QuadOptions q{opt.outer_tol, opt.max_panels, p.spec().phase_rate() + 1.0};
    auto integrand = [&](double t) {
        const std::complex<double> F1 = p.cumulative(t);
        return std::norm(F1) * std::conj(p.envelope(t)) * (Ftau - F1);
    };
    return 0.25 * integrate(integrand, p.tau0(), tau, q).value.real();
}

namespace detail {

// k -> infinity limit of the per-partner fourth-order term:
// -(1/8) Re int f(t1) (F(tau) - 2 F(t1)) F*(t1)^2 dt1   (= W^4/48 on resonance).
inline double i4_asymptotic(const Pulse& p, double tau, const ExpansionOptions& opt) {
    const std::complex<double> Ftau = p.cumulative(tau);
    QuadOptions q{opt.outer_tol, opt.max_panels, p.spec().phase_rate() + 1.0};
    auto integrand = [&](double t) {
        const std::complex<double> F1 = p.cumulative(t);
        return p.envelope(t) * (Ftau - 2.0 * F1) * std::conj(F1) * std::conj(F1);
    };
    return -0.125 * integrate(integrand, p.tau0(), tau, q).value.real();
}

// Per-partner term at finite coupling k:
// (1/4) Re int dt1 f(t1)(F(tau)-2F(t1)) int_{tau0}^{t1} dt2 f*(t2)F*(t2)(e^{ik(t1-t2)}-1).
// The inner integral is split as e^{ik t1} G(t1) - F*(t1)^2/2 with
// G(t1) = int f* F* e^{-ik t2}; G is a checkpointed cumulative so the whole
// pair costs one oscillation-resolved sweep.
inline double i4_pair(const Pulse& p, double k, double tau, const ExpansionOptions& opt) {
    if (k == 0.0) return 0.0;
    if (std::abs(k) >= opt.asymptotic_threshold) return i4_asymptotic(p, tau, opt);

    const double posc = p.spec().phase_rate() + 1.0;
    QuadOptions qg{opt.inner_tol, opt.max_panels, std::abs(k) + posc};
    Cumulative G(
        [&p, k](double t2) {
            const std::complex<double> fc = std::conj(p.envelope(t2));
            const std::complex<double> Fc = std::conj(p.cumulative(t2));
            return fc * Fc * std::polar(1.0, -k * t2);
        },
        p.tau0(), tau, qg);

    const std::complex<double> Ftau = p.cumulative(tau);
    QuadOptions qo{opt.outer_tol, opt.max_panels, std::abs(k) + posc};
    auto outer = [&](double t1) {
        const std::complex<double> F1 = p.cumulative(t1);
        const std::complex<double> inner =
            std::polar(1.0, k * t1) * G(t1) - 0.5 * std::conj(F1) * std::conj(F1);
        return p.envelope(t1) * (Ftau - 2.0 * F1) * inner;
    };
    return 0.25 * integrate(outer, p.tau0(), tau, qo).value.real();
}

}  // namespace detail

/// Interaction fourth-order term for one test atom with the given partner
/// couplings. Pair terms are independent work items; the final fold is a
/// compensated sum in partner order, so the result is identical for any
/// worker count.
inline double i4_finite(const Pulse& p, std::span<const double> couplings, double tau,
                        const ExpansionOptions& opt = {}) {
    if (couplings.empty()) return 0.0;
    std::vector<double> terms(couplings.size(), 0.0);
    std::optional<double> asym;  // the limit value is coupling-independent
    for (std::size_t j = 0; j < couplings.size(); ++j)
        if (couplings[j] != 0.0 && std::abs(couplings[j]) >= opt.asymptotic_threshold && !asym)
            asym = detail::i4_asymptotic(p, tau, opt);
    parallel_for(couplings.size(), opt.workers, [&](std::size_t j) {
        const double k = couplings[j];
        if (k == 0.0) return;
        if (std::abs(k) >= opt.asymptotic_threshold)
            terms[j] = *asym;
        else
            terms[j] = detail::i4_pair(p, k, tau, opt);
    });
    return compensated_total(terms);
}

/// lambda of the ensemble average int d^3R (e^{i k dt} - 1) = lambda
/// (|C_s| T dt)^{3/s}. Im lambda exists only for s = 6; for s = 3 the
/// large-R sine tail makes it divergent (isotropic) or conditionally
/// convergent (aligned), and it is flagged instead of regularized.
struct LambdaConstant {
    double re = 0.0;
    std::optional<double> im;  // empty where not absolutely convergent
};

namespace detail {

// Radial pieces int_0^inf (cos x - 1) x^{-q-1} dx and int_0^inf sin x
// x^{-q-1} dx for q = 3/s. Head by Kronrod panels (x = u^2 substitution
// regularizes the sine head for q = 1/2), tail by repeated integration by
// parts from A.
inline double radial_cos_minus_one(double q, const QuadOptions& qopt) {
    const double A = 200.0;
    // cos x - 1 = -2 sin^2(x/2), stable down to x = 0
    const double head = integrate_real(
        [q](double x) {
            if (x == 0.0) return q == 1.0 ? -0.5 : 0.0;
            const double s = std::sin(0.5 * x);
            return -2.0 * s * s * std::pow(x, -q - 1.0);
        },
        0.0, A, qopt);
    // tail: -int x^{-q-1} + int cos(x) x^{-q-1}
    double tail = -std::pow(A, -q) / q;
    // C(p) = int_A^inf x^{-p} cos x dx via C(p) = -A^{-p} sin A + p S(p+1),
    // S(p) = A^{-p} cos A - p C(p+1); truncate the descending recursion.
    double c = 0.0;
    for (int depth = 14; depth >= 0; --depth) {
        const double p_s = q + 1.0 + 2.0 * depth + 1.0;  // order of S at this depth
        const double p_c = q + 1.0 + 2.0 * depth;        // order of C at this depth
        const double s = std::pow(A, -p_s) * std::cos(A) - p_s * c;
        c = -std::pow(A, -p_c) * std::sin(A) + p_c * s;
    }
    return head + tail + c;
}

inline double radial_sin(double q, const QuadOptions& qopt) {
    const double A = 200.0;
    // head on [0, 1]: x = u^2 turns sin(x) x^{-q-1} dx into 2 sin(u^2) u^{-1-2q} du,
    // finite at u -> 0 for q <= 1/2
    const double head1 = integrate_real(
        [q](double u) {
            if (u < 1e-8) return 2.0 * std::pow(u, 1.0 - 2.0 * q);  // sin(u^2) ~ u^2
            return 2.0 * std::sin(u * u) * std::pow(u, -1.0 - 2.0 * q);
        },
        0.0, 1.0, qopt);
    const double head2 =
        integrate_real([q](double x) { return std::sin(x) * std::pow(x, -q - 1.0); }, 1.0, A, qopt);
    double s = 0.0;
    for (int depth = 14; depth >= 0; --depth) {
        const double p_c = q + 1.0 + 2.0 * depth + 1.0;
        const double p_s = q + 1.0 + 2.0 * depth;
        const double c = -std::pow(A, -p_c) * std::sin(A) + p_c * s;
        s = std::pow(A, -p_s) * std::cos(A) - p_s * c;
    }
    return head1 + head2 + s;
}

}  // namespace detail

inline LambdaConstant lambda_constant(const InteractionKernel& kernel,
                                      const ExpansionOptions& opt = {}) {
    kernel.validate();
    const double q = 3.0 / kernel.s;
    // one-time constants: integrate tighter than the surrounding tolerances,
    // with the unit oscillation rate of cos x / sin x made explicit
    QuadOptions qopt{std::min(opt.inner_tol, 1e-13), opt.max_panels, 1.0};
    const double r_re = detail::radial_cos_minus_one(q, qopt);
    const double sgn = kernel.c_au < 0.0 ? -1.0 : 1.0;
    const double pref = 2.0 * constants::pi / kernel.s * std::pow(2.0 * constants::pi, q);

    double angular = 2.0;  // int_{-1}^{1} |c(u)|^q du, isotropic
    if (kernel.angular == AngularForm::AlignedDipole) {
        const double um = 1.0 / std::sqrt(3.0);  // magic angle: 1 - 3u^2 = 0
        auto seg = [&](double a, double b) {
            return integrate_real(
                [q](double u) { return std::pow(std::abs(1.0 - 3.0 * u * u), q); }, a, b, qopt);
        };
        angular = seg(-1.0, -um) + seg(-um, um) + seg(um, 1.0);
    }

    LambdaConstant lam;
    lam.re = pref * angular * r_re;
    if (kernel.s == 6) {
        const double r_im = detail::radial_sin(q, qopt);
        lam.im = pref * angular * r_im * sgn;
    }
    return lam;
}

/// Ensemble-averaged interaction fourth-order term for a homogeneous gas,
/// (1/4) rho (|C_s| T)^{3/s} Re[ lambda J ] with
/// J = int dt1 f (F(tau) - 2F(t1)) int_{tau0}^{t1} dt2 f* F* (t1 - t2)^{3/s}.
/// Resonant pulses need only Re lambda; the complex case requires s = 6.
inline double i4_averaged(const Pulse& p, const InteractionKernel& kernel, double rho_cm3,
                          double tau, const ExpansionOptions& opt = {}) {
    kernel.validate();
    if (kernel.c_au == 0.0) return 0.0;
    const bool resonant = p.spec().resonant();
    if (!resonant && kernel.s != 6)
        throw std::domain_error(
            "i4_averaged: conditionally convergent ensemble average for s = 3 with a "
            "detuned or chirped pulse — use the Monte Carlo path");

    const double q = 3.0 / kernel.s;
    const double posc = p.spec().phase_rate() + 1.0;
    const std::complex<double> Ftau = p.cumulative(tau);

    auto inner = [&](double t1) -> std::complex<double> {
        QuadOptions qi{opt.inner_tol, opt.max_panels, posc};
        if (kernel.s == 6) {
            // t2 = t1 - v^2 removes the sqrt kink at t2 -> t1
            const double vmax = std::sqrt(t1 - p.tau0());
            return integrate(
                       [&](double v) {
                           const double t2 = t1 - v * v;
                           return 2.0 * v * v * std::conj(p.envelope(t2)) *
                                  std::conj(p.cumulative(t2));
                       },
                       0.0, vmax, qi)
                .value;
        }
        return integrate(
                   [&](double t2) {
                       return (t1 - t2) * std::conj(p.envelope(t2)) * std::conj(p.cumulative(t2));
                   },
                   p.tau0(), t1, qi)
            .value;
    };
    QuadOptions qo{opt.outer_tol, opt.max_panels, posc};
    const std::complex<double> J =
        integrate(
            [&](double t1) {
                return p.envelope(t1) * (Ftau - 2.0 * p.cumulative(t1)) * inner(t1);
            },
            p.tau0(), tau, qo)
            .value;

    const LambdaConstant lam = lambda_constant(kernel, opt);
    double re_lambda_j;
    if (resonant) {
        re_lambda_j = lam.re * J.real();
    } else {
        const std::complex<double> lamc(lam.re, lam.im.value());
        re_lambda_j = (lamc * J).real();
    }
    const double strength = std::pow(std::abs(kernel.c_hz_cms()) * p.duration_s(), q);
    return 0.25 * rho_cm3 * strength * re_lambda_j;
}

/// Table-I constant: gamma such that the averaged expansion reads
/// P = (pi^2/4) x - (pi^4/48)(1 + gamma rho (|C_s|T)^{3/s}) x^2 with
/// x = I/I_sat and omega W = pi sqrt(x). Independent of rho and C_s.
inline double gamma_constant(PulseShape shape, const InteractionKernel& kernel,
                             const ExpansionOptions& opt = {}) {
    kernel.validate();
    if (kernel.c_au == 0.0)
        throw std::invalid_argument("gamma_constant: needs a nonzero interaction strength");
    const PulseSpec spec = shape == PulseShape::Gaussian ? PulseSpec::gaussian(1.0)
                                                         : PulseSpec::square(1.0);
    const Pulse p(spec);
    const double rho_ref = 1.0;
    const double i4 = i4_averaged(p, kernel, rho_ref, p.tau_end(), opt);
    const double w = p.area();
    const double q = 3.0 / kernel.s;
    const double strength = std::pow(std::abs(kernel.c_hz_cms()) * p.duration_s(), q);
    return 48.0 * i4 / (w * w * w * w * rho_ref * strength);
}

struct PexcSeries {
    double value = 0.0;
    double first_term = 0.0;
    double second_term = 0.0;      // subtracted
    bool truncation_ok = true;     // false when the quadratic term exceeds half the linear one
};

/// Two-term ensemble-averaged excitation probability in I/I_sat.
inline PexcSeries pexc_series(double gamma, const InteractionKernel& kernel, double rho_cm3,
                              double duration_s, double i_over_isat) {
    if (i_over_isat < 0.0) throw std::invalid_argument("pexc_series: I/I_sat must be >= 0");
    const double q = 3.0 / kernel.s;
    const double x_int =
        kernel.c_au == 0.0
            ? 0.0
            : gamma * rho_cm3 * std::pow(std::abs(kernel.c_hz_cms()) * duration_s, q);
    const double pi2 = constants::pi * constants::pi;
    PexcSeries out;
    out.first_term = 0.25 * pi2 * i_over_isat;
    out.second_term = pi2 * pi2 / 48.0 * (1.0 + x_int) * i_over_isat * i_over_isat;
    out.value = out.first_term - out.second_term;
    out.truncation_ok = out.second_term <= 0.5 * out.first_term;
    return out;
}

inline PexcSeries pexc_series(const Pulse& p, const InteractionKernel& kernel, double rho_cm3,
                              double i_over_isat, const ExpansionOptions& opt = {}) {
    if (!p.spec().resonant())
        throw std::domain_error("pexc_series: the averaged expansion is defined for resonant "
                                "real pulses");
    const double gamma = kernel.c_au == 0.0 ? 0.0 : gamma_constant(p.shape(), kernel, opt);
    return pexc_series(gamma, kernel, rho_cm3, p.duration_s(), i_over_isat);
}

/// Per-order summary for one configuration. gamma/lambda are filled on the
/// ensemble-averaged path, i4_stderr on the Monte Carlo path.
struct ExpansionResult {
    double c2 = 0.0;
    double i41 = 0.0;
    double i4 = 0.0;
    double c4_total = 0.0;  // -(i41 + i4)
    std::optional<double> gamma;
    std::optional<double> lambda_re;
    std::optional<double> lambda_im;
    std::optional<double> i4_stderr;
};

inline ExpansionResult evaluate_expansion(const Pulse& p, std::span<const double> couplings,
                                          double tau, const ExpansionOptions& opt = {}) {
    ExpansionResult r;
    r.c2 = second_order(p, tau);
    r.i41 = i41(p, tau, opt);
    r.i4 = i4_finite(p, couplings, tau, opt);
    r.c4_total = -(r.i41 + r.i4);
    return r;
}

/// Ensemble-averaged orders for a homogeneous gas, with the lambda and gamma
/// constants of the kernel attached.
inline ExpansionResult evaluate_expansion_averaged(const Pulse& p,
                                                   const InteractionKernel& kernel,
                                                   double rho_cm3, double tau,
                                                   const ExpansionOptions& opt = {}) {
    ExpansionResult r;
    r.c2 = second_order(p, tau);
    r.i41 = i41(p, tau, opt);
    r.i4 = i4_averaged(p, kernel, rho_cm3, tau, opt);
    r.c4_total = -(r.i41 + r.i4);
    const LambdaConstant lam = lambda_constant(kernel, opt);
    r.lambda_re = lam.re;
    r.lambda_im = lam.im;
    if (p.spec().resonant() && kernel.c_au != 0.0)
        r.gamma = gamma_constant(p.shape(), kernel, opt);
    return r;
}

/// Truncated series value at dimensionless Rabi frequency omega.
inline double pexc_from_orders(const ExpansionResult& r, double omega) {
    const double w2 = omega * omega;
    return r.c2 * w2 + r.c4_total * w2 * w2;
}

struct McOptions {
    Geometry geometry = Geometry::Sphere;
    std::size_t n_atoms = 500;
    unsigned workers = 1;
    double padding_factor = 5.0;  // minimum half extent in blockade radii
};

struct McResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_atoms = 0;
};

/// Monte Carlo ensemble average of i4_finite with a central test atom.
/// Deterministic for a fixed seed and independent of the worker count.
inline McResult i4_montecarlo(const Pulse& p, const InteractionKernel& kernel, double rho_cm3,
                              std::size_t n_samples, std::uint64_t seed, const McOptions& mc = {},
                              ExpansionOptions opt = {}) {
    kernel.validate();
    if (n_samples < 2) throw std::invalid_argument("i4_montecarlo: need at least 2 samples");
    if (!(rho_cm3 > 0.0)) throw std::invalid_argument("i4_montecarlo: rho must be positive");

    const double volume = static_cast<double>(mc.n_atoms) / rho_cm3;
    const double rb = blockade_radius_cm(kernel, p.duration_s());
    const double he = half_extent_cm(mc.geometry, volume);
    if (kernel.c_au != 0.0 && he < mc.padding_factor * rb)
        throw std::invalid_argument(
            "i4_montecarlo: geometry half extent " + std::to_string(he) + " cm is below " +
            std::to_string(mc.padding_factor) + " blockade radii (" +
            std::to_string(mc.padding_factor * rb) + " cm); enlarge the sample");

    opt.workers = 1;  // parallelism lives at the sample level
    const double tau = p.tau_end();
    std::vector<double> values(n_samples, 0.0);
    parallel_for(n_samples, mc.workers, [&](std::size_t s) {
        std::uint64_t state = seed + 0x632be59bd9b4e019ULL * (s + 1);
        const std::uint64_t sample_seed = detail::splitmix64(state);
        const AtomEnsemble ens =
            sample_ensemble(rho_cm3, mc.geometry, volume, sample_seed);
        std::vector<double> ks;
        ks.reserve(ens.positions.size());
        const Vec3 centre{0.0, 0.0, 0.0};
        for (const auto& pos : ens.positions) {
            if (pos.norm2() == 0.0) continue;
            ks.push_back(coupling(kernel, p.duration_s(), centre, pos));
        }
        values[s] = i4_finite(p, ks, tau, opt);
    });

    CompensatedSum sum;
    for (double v : values) sum.add(v);
    const double mean = sum.value() / static_cast<double>(n_samples);
    CompensatedSum var;
    for (double v : values) var.add((v - mean) * (v - mean));
    const double n = static_cast<double>(n_samples);
    McResult out;
    out.mean = mean;
    out.std_error = std::sqrt(var.value() / (n * (n - 1.0)));
    out.n_samples = n_samples;
    out.n_atoms = mc.n_atoms;
    return out;
}

}  // namespace rydex
