#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydex/constants.hpp"
#include "rydex/summation.hpp"

namespace rydex {

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved, double requested)
        : std::runtime_error(what), achieved_error(achieved), requested_error(requested) {}
    double achieved_error;
    double requested_error;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    std::size_t max_panels = 400000;
    // Known oscillation rate |d phase/dt| of the integrand. Seed panels are
    // capped at pi/osc_rate so a 15-point Kronrod rule sees at most half a
    // period and its error estimate stays trustworthy.
    double osc_rate = 0.0;
};

struct QuadResult {
    std::complex<double> value;
    double error = 0.0;
    std::size_t panels = 0;
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights (QUADPACK dqk15).
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelEstimate {
    std::complex<double> value;
    double error;
};

template <class F>
PanelEstimate gk15(F&& f, double a, double b) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);

    std::complex<double> fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * gk_nodes[i]);
        fv[14 - i] = f(c + h * gk_nodes[i]);
    }
    fv[7] = f(c);

    std::complex<double> resk = gk_wk[7] * fv[7];
    std::complex<double> resg = gk_wg[3] * fv[7];
    double resabs = gk_wk[7] * std::abs(fv[7]);
    for (int i = 0; i < 7; ++i) {
        resk += gk_wk[i] * (fv[i] + fv[14 - i]);
        resabs += gk_wk[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
        if (i % 2 == 1) resg += gk_wg[i / 2] * (fv[i] + fv[14 - i]);
    }

    const std::complex<double> mean = resk * 0.5;
    double resasc = gk_wk[7] * std::abs(fv[7] - mean);
    for (int i = 0; i < 7; ++i)
        resasc += gk_wk[i] * (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));

    resabs *= std::abs(h);
    resasc *= std::abs(h);
    double err = std::abs(resk - resg) * std::abs(h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * resabs);
    return {resk * h, err};
}

struct Interval {
    double a, b;
    std::complex<double> value;
    double error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of a complex-valued integrand on [a,b].
/// Throws QuadratureError carrying the achieved estimate when the panel
/// budget runs out before the requested absolute tolerance is met.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
    if (!(b > a)) return {0.0, 0.0, 0};

    std::size_t seeds = 1;
    if (opt.osc_rate > 0.0) {
        const double cap = constants::pi / opt.osc_rate;
        seeds = static_cast<std::size_t>(std::ceil((b - a) / cap));
        seeds = std::clamp<std::size_t>(seeds, 1, opt.max_panels);
    }

    std::priority_queue<detail::Interval> heap;
    double total_err = 0.0;
    std::size_t panels = 0;

    const double w = (b - a) / static_cast<double>(seeds);
    for (std::size_t i = 0; i < seeds; ++i) {
        const double x0 = a + w * static_cast<double>(i);
        const double x1 = (i + 1 == seeds) ? b : x0 + w;
        auto est = detail::gk15(f, x0, x1);
        heap.push({x0, x1, est.value, est.error});
        total_err += est.error;
        ++panels;
    }

    bool stalled = false;
    while (total_err > opt.abs_tol && panels < opt.max_panels) {
        detail::Interval worst = heap.top();
        if (worst.b - worst.a <= (std::abs(worst.a) + std::abs(worst.b)) * 1e-15 + 1e-300) {
            stalled = true;  // roundoff-limited interval width
            break;
        }
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        total_err += left.error + right.error - worst.error;
        heap.push({worst.a, mid, left.value, left.error});
        heap.push({mid, worst.b, right.value, right.error});
        ++panels;
    }

    // Fold in ascending interval order: the result is independent of the
    // refinement history details and reproducible across runs.
    std::vector<detail::Interval> ivs;
    ivs.reserve(heap.size());
    while (!heap.empty()) {
        ivs.push_back(heap.top());
        heap.pop();
    }
    std::sort(ivs.begin(), ivs.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
    ComplexCompensatedSum acc;
    CompensatedSum errs;
    for (const auto& iv : ivs) {
        acc.add(iv.value);
        errs.add(iv.error);
    }
    const double err = errs.value();
    const bool budget_fail = err > opt.abs_tol && panels >= opt.max_panels;
    const bool stall_fail = stalled && err > opt.abs_tol * 1000.0;
    if (budget_fail || stall_fail)
        throw QuadratureError("quadrature did not converge: achieved error estimate " +
                                  std::to_string(err) + ", requested " +
                                  std::to_string(opt.abs_tol),
                              err, opt.abs_tol);
    return {acc.value(), err, panels};
}

template <class F>
double integrate_real(F&& f, double a, double b, const QuadOptions& opt = {}) {
    return integrate([&](double x) { return std::complex<double>(f(x), 0.0); }, a, b, opt)
        .value.real();
}

/// Prefix integral G(t) = int_a^t f with precomputed checkpoints; one
/// evaluation then costs a single short Kronrod panel. Checkpoint spacing
/// respects the oscillation cap.
class Cumulative {
public:
    Cumulative() = default;

    template <class F>
    Cumulative(F f, double a, double b, const QuadOptions& opt = {},
               std::size_t min_checkpoints = 64)
        : a_(a), b_(b), fn_(std::move(f)), opt_(opt) {
        std::size_t n = min_checkpoints;
        if (opt.osc_rate > 0.0) {
            const double need = (b - a) * opt.osc_rate * 2.0 / constants::pi;
            n = std::max<std::size_t>(n, static_cast<std::size_t>(std::ceil(need)));
        }
        n = std::min<std::size_t>(n, std::size_t{8} << 20);
        step_ = (b - a) / static_cast<double>(n);
        QuadOptions seg = opt_;
        seg.abs_tol = opt_.abs_tol / static_cast<double>(n);
        seg.max_panels = 4096;
        seg.osc_rate = 0.0;  // segments are already at most half a period
        if (opt_.osc_rate > 0.0 && step_ * opt_.osc_rate > constants::pi)
            seg.osc_rate = opt_.osc_rate;
        prefix_.resize(n + 1);
        prefix_[0] = 0.0;
        ComplexCompensatedSum acc;
        for (std::size_t i = 0; i < n; ++i) {
            const double x0 = a_ + step_ * static_cast<double>(i);
            const double x1 = (i + 1 == n) ? b : x0 + step_;
            acc.add(integrate(fn_, x0, x1, seg).value);
            prefix_[i + 1] = acc.value();
        }
        eval_tol_ = std::max(opt_.abs_tol / static_cast<double>(n), 1e-15);
    }

    std::complex<double> operator()(double t) const {
        if (t <= a_) return 0.0;
        if (t >= b_) return prefix_.back();
        auto i = static_cast<std::size_t>((t - a_) / step_);
        i = std::min(i, prefix_.size() - 2);
        const double x0 = a_ + step_ * static_cast<double>(i);
        if (t <= x0) return prefix_[i];
        auto est = detail::gk15(fn_, x0, t);
        if (est.error <= eval_tol_) return prefix_[i] + est.value;
        QuadOptions seg = opt_;
        seg.abs_tol = eval_tol_;
        seg.max_panels = 512;
        return prefix_[i] + integrate(fn_, x0, t, seg).value;
    }

    std::complex<double> total() const { return prefix_.back(); }
    bool valid() const { return !prefix_.empty(); }

private:
    double a_ = 0.0, b_ = 0.0, step_ = 0.0, eval_tol_ = 1e-15;
    std::function<std::complex<double>(double)> fn_;
    QuadOptions opt_;
    std::vector<std::complex<double>> prefix_;
};

/// exp(i x) - 1, stable for small |x|.
inline std::complex<double> cis_minus_one(double x) {
    const double s = std::sin(0.5 * x);
    return {-2.0 * s * s, std::sin(x)};
}

}  // namespace rydex
