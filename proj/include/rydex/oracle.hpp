#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydex/expansion.hpp"
#include "rydex/pulse.hpp"
#include "rydex/summation.hpp"

namespace rydex {

struct OracleOptions {
    double tol = 1e-10;        // error per unit scaled time
    int max_atoms = 14;
    double min_step = 1e-13;
    double norm_tolerance = 1e-9;
};

/// State over the 2^N occupation basis (bit i set = atom i excited),
/// in the scaled frame shared with the expansion formulas.
struct OracleState {
    double tau = 0.0;
    int n_atoms = 0;
    std::vector<std::complex<double>> amplitudes;
};

struct Observables {
    std::vector<double> excitation;  // per-atom P_i
    std::vector<double> pair;        // <n_i n_j>, row-major n x n
    double norm = 0.0;
};

inline Observables observables(const OracleState& st) {
    const int n = st.n_atoms;
    Observables obs;
    obs.excitation.assign(n, 0.0);
    obs.pair.assign(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<CompensatedSum> pi(n);
    std::vector<CompensatedSum> pij(static_cast<std::size_t>(n) * n);
    CompensatedSum norm;
    for (std::size_t b = 0; b < st.amplitudes.size(); ++b) {
        const double w = std::norm(st.amplitudes[b]);
        norm.add(w);
        for (int i = 0; i < n; ++i) {
            if (!((b >> i) & 1u)) continue;
            pi[i].add(w);
            for (int j = i + 1; j < n; ++j)
                if ((b >> j) & 1u) pij[static_cast<std::size_t>(i) * n + j].add(w);
        }
    }
    obs.norm = norm.value();
    for (int i = 0; i < n; ++i) obs.excitation[i] = pi[i].value();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = pij[static_cast<std::size_t>(i) * n + j].value();
            obs.pair[static_cast<std::size_t>(i) * n + j] = v;
            obs.pair[static_cast<std::size_t>(j) * n + i] = v;
        }
    return obs;
}

inline double mean_excitation(const OracleState& st) {
    const Observables obs = observables(st);
    CompensatedSum s;
    for (double p : obs.excitation) s.add(p);
    return s.value() / static_cast<double>(st.n_atoms);
}

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace detail

/// Exact many-body propagation of the scaled-frame Hamiltonian
/// H(tau) = (omega/2) sum_i (f(tau) sigma_eg^i + h.c.) + sum_{i<j} k_ij n_i n_j
/// from the all-ground state, using an adaptive embedded Runge-Kutta in the
/// interaction picture of the diagonal part (applied exactly as phases).
class ManyBodyPropagator {
public:
    ManyBodyPropagator(int n_atoms, std::span<const double> couplings, const Pulse& pulse,
                       double omega, const OracleOptions& opt = {})
        : n_(n_atoms), pulse_(pulse), omega_(omega), opt_(opt) {
        if (n_atoms < 1) throw std::invalid_argument("oracle: need at least one atom");
        if (n_atoms > opt.max_atoms)
            throw std::invalid_argument("oracle: N = " + std::to_string(n_atoms) +
                                        " exceeds the configured maximum " +
                                        std::to_string(opt.max_atoms));
        const auto nn = static_cast<std::size_t>(n_atoms);
        if (couplings.size() != nn * nn)
            throw std::invalid_argument("oracle: coupling matrix must be N x N");
        for (std::size_t i = 0; i < nn; ++i) {
            if (couplings[i * nn + i] != 0.0)
                throw std::invalid_argument("oracle: coupling matrix diagonal must be zero");
            for (std::size_t j = 0; j < i; ++j)
                if (couplings[i * nn + j] != couplings[j * nn + i])
                    throw std::invalid_argument("oracle: coupling matrix must be symmetric");
        }
        dim_ = std::size_t{1} << n_atoms;
        energy_.assign(dim_, 0.0);
        for (std::size_t b = 0; b < dim_; ++b) {
            double e = 0.0;
            for (int i = 0; i < n_atoms; ++i) {
                if (!((b >> i) & 1u)) continue;
                for (int j = i + 1; j < n_atoms; ++j)
                    if ((b >> j) & 1u) e += couplings[static_cast<std::size_t>(i) * nn + j];
            }
            energy_[b] = e;
        }
        // frequency of the pair (b, b|bit_i): E(b with i) - E(b without i)
        dE_.assign(nn * (dim_ >> 1), 0.0);
        for (int i = 0; i < n_atoms; ++i) {
            std::size_t idx = 0;
            for (std::size_t b = 0; b < dim_; ++b) {
                if ((b >> i) & 1u) continue;
                dE_[static_cast<std::size_t>(i) * (dim_ >> 1) + idx] =
                    energy_[b | (std::size_t{1} << i)] - energy_[b];
                ++idx;
            }
        }
    }

    /// States at the requested times (clamped to the pulse window,
    /// ascending). Norm drift beyond opt.norm_tolerance is an error.
    std::vector<OracleState> propagate(std::span<const double> output_taus) const {
        std::vector<double> taus(output_taus.begin(), output_taus.end());
        for (double& t : taus) t = std::clamp(t, pulse_.tau0(), pulse_.tau_end());
        if (!std::is_sorted(taus.begin(), taus.end()))
            throw std::invalid_argument("oracle: output times must be ascending");

        std::vector<std::complex<double>> y(dim_, 0.0), ynew(dim_), yerr(dim_);
        std::array<std::vector<std::complex<double>>, 7> k;
        for (auto& v : k) v.resize(dim_);
        y[0] = 1.0;

        std::vector<OracleState> out;
        out.reserve(taus.size());
        double tau = pulse_.tau0();
        const double range = pulse_.tau_end() - pulse_.tau0();
        double h_ctrl = range * 1e-3;
        rhs(tau, y, k[0]);  // FSAL seed
        std::size_t next_out = 0;
        while (next_out < taus.size() && taus[next_out] <= tau + 1e-15)
            emit(out, tau, y), ++next_out;

        using D = detail::Dopri;
        while (next_out < taus.size()) {
            if (h_ctrl < opt_.min_step)
                throw std::runtime_error("oracle: step size underflow at tau = " +
                                         std::to_string(tau));
            const double target = taus[next_out];
            if (target - tau <= opt_.min_step) {
                // within roundoff of the requested time
                emit(out, target, y);
                ++next_out;
                continue;
            }
            const double h = std::min(h_ctrl, target - tau);
            const bool clipped = h < h_ctrl;

            stage(y, k[0], D::a21 * h, ynew);
            rhs(tau + D::c2 * h, ynew, k[1]);
            stage2(y, k[0], k[1], D::a31 * h, D::a32 * h, ynew);
            rhs(tau + D::c3 * h, ynew, k[2]);
            stage3(y, k[0], k[1], k[2], D::a41 * h, D::a42 * h, D::a43 * h, ynew);
            rhs(tau + D::c4 * h, ynew, k[3]);
            stage4(y, k, D::a51 * h, D::a52 * h, D::a53 * h, D::a54 * h, ynew);
            rhs(tau + D::c5 * h, ynew, k[4]);
            stage5(y, k, D::a61 * h, D::a62 * h, D::a63 * h, D::a64 * h, D::a65 * h, ynew);
            rhs(tau + h, ynew, k[5]);
            for (std::size_t b = 0; b < dim_; ++b)
                ynew[b] = y[b] + h * (D::b1 * k[0][b] + D::b3 * k[2][b] + D::b4 * k[3][b] +
                                      D::b5 * k[4][b] + D::b6 * k[5][b]);
            rhs(tau + h, ynew, k[6]);

            double err2 = 0.0;
            for (std::size_t b = 0; b < dim_; ++b) {
                const std::complex<double> e =
                    h * (D::e1 * k[0][b] + D::e3 * k[2][b] + D::e4 * k[3][b] + D::e5 * k[4][b] +
                         D::e6 * k[5][b] + D::e7 * k[6][b]);
                err2 += std::norm(e);
            }
            const double err = std::sqrt(err2);
            // roundoff floor: the embedded difference of a unit-norm state
            // cannot be resolved below ~100 eps
            const double tol_step =
                std::max(opt_.tol * h, 100.0 * std::numeric_limits<double>::epsilon());
            const bool accept = err <= tol_step || h <= opt_.min_step;
            if (accept) {
                tau += h;
                y.swap(ynew);
                k[0].swap(k[6]);  // FSAL
                while (next_out < taus.size() && taus[next_out] <= tau + 1e-15) {
                    emit(out, tau, y);
                    ++next_out;
                }
            }
            const double safety = err > 0.0 ? 0.9 * std::pow(tol_step / err, 0.2) : 5.0;
            const double h_new = h * std::clamp(safety, 0.2, 5.0);
            // a step clipped to an output time should not shrink the controller
            h_ctrl = (clipped && accept) ? std::max(h_ctrl, h_new) : h_new;
            h_ctrl = std::min(h_ctrl, range);
        }
        return out;
    }

private:
    void rhs(double tau, const std::vector<std::complex<double>>& phi,
             std::vector<std::complex<double>>& dphi) const {
        std::fill(dphi.begin(), dphi.end(), std::complex<double>(0.0, 0.0));
        const std::complex<double> drive = std::complex<double>(0.0, -0.5 * omega_) *
                                           pulse_.envelope(tau);
        if (drive == std::complex<double>(0.0, 0.0)) return;
        const std::complex<double> drive_c = -std::conj(drive);  // -i w/2 f*
        // dphi_b1 += -i w/2 f  e^{+i dE (tau - tau0)} phi_b0
        // dphi_b0 += -i w/2 f* e^{-i dE (tau - tau0)} phi_b1
        const double dt = tau - pulse_.tau0();
        const std::size_t half = dim_ >> 1;
        for (int i = 0; i < n_; ++i) {
            const std::size_t bit = std::size_t{1} << i;
            const double* de_row = dE_.data() + static_cast<std::size_t>(i) * half;
            std::size_t idx = 0;
            for (std::size_t b0 = 0; b0 < dim_; ++b0) {
                if (b0 & bit) continue;
                const std::size_t b1 = b0 | bit;
                const double de = de_row[idx++];
                const std::complex<double> ph = std::polar(1.0, de * dt);
                dphi[b1] += drive * ph * phi[b0];
                dphi[b0] += drive_c * std::conj(ph) * phi[b1];
            }
        }
    }

    void emit(std::vector<OracleState>& out, double tau,
              const std::vector<std::complex<double>>& phi) const {
        OracleState st;
        st.tau = tau;
        st.n_atoms = n_;
        st.amplitudes.resize(dim_);
        const double dt = tau - pulse_.tau0();
        CompensatedSum norm;
        for (std::size_t b = 0; b < dim_; ++b) {
            st.amplitudes[b] = phi[b] * std::polar(1.0, -energy_[b] * dt);
            norm.add(std::norm(phi[b]));
        }
        if (std::abs(norm.value() - 1.0) > opt_.norm_tolerance)
            throw std::runtime_error("oracle: norm drift " +
                                     std::to_string(std::abs(norm.value() - 1.0)) +
                                     " exceeds tolerance");
        out.push_back(std::move(st));
    }

    static void stage(const std::vector<std::complex<double>>& y,
                      const std::vector<std::complex<double>>& k1, double a1,
                      std::vector<std::complex<double>>& out) {
        for (std::size_t b = 0; b < y.size(); ++b) out[b] = y[b] + a1 * k1[b];
    }
    static void stage2(const std::vector<std::complex<double>>& y,
                       const std::vector<std::complex<double>>& k1,
                       const std::vector<std::complex<double>>& k2, double a1, double a2,
                       std::vector<std::complex<double>>& out) {
        for (std::size_t b = 0; b < y.size(); ++b) out[b] = y[b] + a1 * k1[b] + a2 * k2[b];
    }
    static void stage3(const std::vector<std::complex<double>>& y,
                       const std::vector<std::complex<double>>& k1,
                       const std::vector<std::complex<double>>& k2,
                       const std::vector<std::complex<double>>& k3, double a1, double a2,
                       double a3, std::vector<std::complex<double>>& out) {
        for (std::size_t b = 0; b < y.size(); ++b)
            out[b] = y[b] + a1 * k1[b] + a2 * k2[b] + a3 * k3[b];
    }
    static void stage4(const std::vector<std::complex<double>>& y,
                       const std::array<std::vector<std::complex<double>>, 7>& k, double a1,
                       double a2, double a3, double a4,
                       std::vector<std::complex<double>>& out) {
        for (std::size_t b = 0; b < y.size(); ++b)
            out[b] = y[b] + a1 * k[0][b] + a2 * k[1][b] + a3 * k[2][b] + a4 * k[3][b];
    }
    static void stage5(const std::vector<std::complex<double>>& y,
                       const std::array<std::vector<std::complex<double>>, 7>& k, double a1,
                       double a2, double a3, double a4, double a5,
                       std::vector<std::complex<double>>& out) {
        for (std::size_t b = 0; b < y.size(); ++b)
            out[b] = y[b] + a1 * k[0][b] + a2 * k[1][b] + a3 * k[2][b] + a4 * k[3][b] +
                     a5 * k[4][b];
    }

    int n_;
    std::size_t dim_ = 0;
    Pulse pulse_;
    double omega_;
    OracleOptions opt_;
    std::vector<double> energy_;
    std::vector<double> dE_;
};

inline std::vector<OracleState> propagate(int n_atoms, std::span<const double> couplings,
                                          const Pulse& pulse, double omega,
                                          std::span<const double> output_taus,
                                          const OracleOptions& opt = {}) {
    return ManyBodyPropagator(n_atoms, couplings, pulse, omega, opt).propagate(output_taus);
}

/// Uniform all-to-all coupling matrix.
inline std::vector<double> uniform_couplings(int n_atoms, double k) {
    std::vector<double> m(static_cast<std::size_t>(n_atoms) * n_atoms, k);
    for (int i = 0; i < n_atoms; ++i) m[static_cast<std::size_t>(i) * n_atoms + i] = 0.0;
    return m;
}

struct ResidualFit {
    double order = 0.0;      // exponent p of |P_exact - P_series| ~ A omega^p
    double amplitude = 0.0;  // A
    std::size_t points = 0;
};

/// Fits the residual between the exact mean excitation and the fourth-order
/// series over a range of omega. Exactness through omega^4 shows up as an
/// order >= 5.5 (parity pushes the true residual to omega^6).
inline ResidualFit expansion_residual(int n_atoms, std::span<const double> couplings,
                                      const Pulse& pulse, std::span<const double> omega_list,
                                      const OracleOptions& opt = {},
                                      const ExpansionOptions& exp_opt = {}) {
    if (omega_list.size() < 4)
        throw std::invalid_argument("expansion_residual: need at least 4 omega values");
    double wmin = omega_list[0], wmax = omega_list[0];
    for (double w : omega_list) {
        wmin = std::min(wmin, std::abs(w));
        wmax = std::max(wmax, std::abs(w));
    }
    if (!(wmax >= 9.999 * wmin))
        throw std::invalid_argument("expansion_residual: omega list must span >= 1 decade");

    const double tau = pulse.tau_end();
    const auto nn = static_cast<std::size_t>(n_atoms);
    const double c2 = second_order(pulse, tau);
    const double v41 = i41(pulse, tau, exp_opt);
    CompensatedSum i4_mean;
    for (std::size_t i = 0; i < nn; ++i) {
        std::vector<double> row;
        row.reserve(nn - 1);
        for (std::size_t j = 0; j < nn; ++j)
            if (j != i) row.push_back(couplings[i * nn + j]);
        i4_mean.add(i4_finite(pulse, row, tau, exp_opt));
    }
    const double c4_total = -(v41 + i4_mean.value() / static_cast<double>(n_atoms));

    std::vector<double> lx, ly;
    const double out_tau[1] = {tau};
    for (double w : omega_list) {
        const auto states = propagate(n_atoms, couplings, pulse, w, out_tau, opt);
        const double exact = mean_excitation(states.back());
        const double series = c2 * w * w + c4_total * w * w * w * w;
        const double resid = std::abs(exact - series);
        if (resid < 1e-13) continue;  // at the noise floor, uninformative
        lx.push_back(std::log(std::abs(w)));
        ly.push_back(std::log(resid));
    }
    if (lx.size() < 4)
        throw std::runtime_error("expansion_residual: fit ill-conditioned, too few usable points");

    const auto n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12)
        throw std::runtime_error("expansion_residual: fit ill-conditioned");
    ResidualFit fit;
    fit.order = (n * sxy - sx * sy) / denom;
    fit.amplitude = std::exp((sy - fit.order * sx) / n);
    fit.points = lx.size();
    return fit;
}

}  // namespace rydex
