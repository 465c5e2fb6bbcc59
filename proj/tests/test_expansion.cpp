#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "rydex/expansion.hpp"
#include "rydex/pulse.hpp"

using namespace rydex;
using std::complex;

namespace {

const double PI = constants::pi;

// Independent check for the pair term: composite-Simpson double integral of
// (1/4) Re int dt1 f(t1)(F - 2F(t1)) int_{t0}^{t1} dt2 f*(t2) F*(t2) (e^{ik dt} - 1),
// sharing nothing with the adaptive Gauss-Kronrod path. Outer nodes run over
// even grid indices so every inner slice has a valid Simpson parity.
double i4_pair_simpson(const Pulse& p, double k, int n) {
    n -= n % 4;
    const double a = p.tau0(), b = p.tau_end();
    const double h = (b - a) / n;
    std::vector<complex<double>> f(n + 1), F(n + 1);
    for (int i = 0; i <= n; ++i) {
        double t = a + i * h;
        if (i == n) t = b - 1e-12;  // interior limit at a square-pulse edge
        f[i] = p.envelope(t);
        F[i] = p.cumulative(a + i * h);
    }
    const complex<double> Ftau = F[n];
    double total = 0.0;
    for (int i = 2; i <= n; i += 2) {
        complex<double> inner = 0.0;
        for (int j = 0; j <= i; ++j) {
            const double wj = (j == 0 || j == i) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            const double dt = (i - j) * h;
            inner += wj * std::conj(f[j]) * std::conj(F[j]) *
                     (std::polar(1.0, k * dt) - 1.0);
        }
        inner *= h / 3.0;
        const double wi = (i == n) ? 1.0 : ((i / 2) % 2 == 1 ? 4.0 : 2.0);
        total += wi * (f[i] * (Ftau - 2.0 * F[i]) * inner).real();
    }
    return 0.25 * total * (2.0 * h) / 3.0;
}

}  // namespace

TEST_CASE("second order") {
    const Pulse sq(PulseSpec::square(1e-8));
    CHECK(second_order(sq, 1.0) == doctest::Approx(0.25).epsilon(1e-12));

    const Pulse g(PulseSpec::gaussian(1e-8));
    CHECK(second_order(g, 4.0) == doctest::Approx(PI / 4.0).epsilon(1e-6));

    const Pulse g2(PulseSpec::gaussian(1e-8, 2.0));
    const double expected = std::pow(std::sqrt(PI) * std::exp(-1.0), 2) / 4.0;
    CHECK(second_order(g2, 4.0) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("i41") {
    SUBCASE("square resonant value 1/48") {
        const Pulse sq(PulseSpec::square(1e-8));
        CHECK(i41(sq, 1.0) == doctest::Approx(1.0 / 48.0).epsilon(1e-10));
    }

    SUBCASE("omega series matches the Rabi formula through omega^4") {
        for (PulseShape shape : {PulseShape::Square, PulseShape::Gaussian}) {
            const Pulse p(shape == PulseShape::Square ? PulseSpec::square(1e-8)
                                                      : PulseSpec::gaussian(1e-8));
            const double W = p.area();
            const double c2 = second_order(p, p.tau_end());
            const double v41 = i41(p, p.tau_end());
            // sin^2(wW/2) = (W^2/4) w^2 - (W^4/48) w^4 + O(w^6)
            CHECK(c2 == doctest::Approx(W * W / 4.0).epsilon(1e-9));
            CHECK(v41 == doctest::Approx(W * W * W * W / 48.0).epsilon(1e-8));
        }
    }

    SUBCASE("partially integrated resonant form agrees") {
        // |F|^4/16 - Re[F/8 int f* F^2] equals the recurrence form on resonance
        const Pulse g(PulseSpec::gaussian(1e-8));
        const double tau = g.tau_end();
        const complex<double> Ftau = g.cumulative(tau);
        QuadOptions q{1e-11, 400000, 1.0};
        const complex<double> z = integrate(
                                      [&](double t) {
                                          const complex<double> F1 = g.cumulative(t);
                                          return std::conj(g.envelope(t)) * F1 * F1;
                                      },
                                      g.tau0(), tau, q)
                                      .value;
        const double closed = std::norm(Ftau) * std::norm(Ftau) / 16.0 -
                              (Ftau * z / 8.0).real();
        CHECK(i41(g, tau) == doctest::Approx(closed).epsilon(1e-8));
    }
}

TEST_CASE("i4_finite limits") {
    const Pulse sq(PulseSpec::square(1e-8));

    SUBCASE("no couplings, zero couplings") {
        CHECK(i4_finite(sq, {}, 1.0) == 0.0);
        const std::vector<double> zeros{0.0, 0.0, 0.0};
        CHECK(i4_finite(sq, zeros, 1.0) == 0.0);
    }

    SUBCASE("single blockaded pair gives W^4/48") {
        const std::vector<double> k{1e6};
        CHECK(i4_finite(sq, k, 1.0) == doctest::Approx(1.0 / 48.0).epsilon(1e-9));
    }

    SUBCASE("N-1 blockaded partners give the collective coefficient") {
        for (int n : {2, 5, 10}) {
            const std::vector<double> ks(n - 1, 1e6);
            const double i4 = i4_finite(sq, ks, 1.0);
            CHECK(i4 == doctest::Approx((n - 1) / 48.0).epsilon(1e-9));
            // total c4 = -(I41 + I4) = -N/48, the sqrt(N)-Rabi coefficient
            const double c4 = -(i41(sq, 1.0) + i4);
            CHECK(c4 == doctest::Approx(-n / 48.0).epsilon(1e-8));
        }
    }

    SUBCASE("square resonant pair term has elementary closed form") {
        // psi(k) = (1/4)[1/12 + sin(k)/k^3 + 2(cos(k)-1)/k^4]; values frozen
        // from that form evaluated independently
        const double frozen[][2] = {{0.5, 3.449056647214510e-04},
                                    {3.0, 9.856095774625651e-03},
                                    {10.0, 2.060537447915717e-02},
                                    {100.0, 2.083320605351742e-02}};
        for (const auto& kv : frozen) {
            const std::vector<double> ks{kv[0]};
            CHECK(i4_finite(sq, ks, 1.0) == doctest::Approx(kv[1]).epsilon(1e-7));
        }
    }

    SUBCASE("moderate k against an independent Simpson oracle") {
        for (double k : {0.5, 3.0, 10.0}) {
            const std::vector<double> ks{k};
            const double mine = i4_finite(sq, ks, 1.0);
            const double ref = i4_pair_simpson(sq, k, 4000);
            CHECK(mine == doctest::Approx(ref).epsilon(5e-5));
        }
        // detuned chirped gaussian: the general path against the same oracle
        const Pulse g(PulseSpec::gaussian(1e-8, 0.7, 0.4));
        const std::vector<double> ks{3.3};
        CHECK(i4_finite(g, ks, 4.0) ==
              doctest::Approx(i4_pair_simpson(g, 3.3, 4000)).epsilon(5e-4));
    }

    SUBCASE("workers do not change the result") {
        const std::vector<double> ks{0.3, 2.0, 7.7, 31.0, 1e6};
        ExpansionOptions one, four;
        one.workers = 1;
        four.workers = 4;
        CHECK(i4_finite(sq, ks, 1.0, one) == i4_finite(sq, ks, 1.0, four));
    }

    SUBCASE("starved panel budget reports the achieved error") {
        ExpansionOptions tight;
        tight.max_panels = 8;
        tight.inner_tol = 1e-14;
        tight.outer_tol = 1e-14;
        const std::vector<double> ks{250.0};
        bool threw = false;
        try {
            (void)i4_finite(sq, ks, 1.0, tight);
        } catch (const QuadratureError& e) {
            threw = true;
            CHECK(e.achieved_error > 0.0);
        }
        CHECK(threw);
    }
}

TEST_CASE("lambda constants") {
    ExpansionOptions opt;

    SUBCASE("s=3 isotropic: Re lambda = -4 pi^3 / 3, Im divergent") {
        const auto lam = lambda_constant(InteractionKernel::dipole(1.0), opt);
        CHECK(lam.re == doctest::Approx(-4.0 * PI * PI * PI / 3.0).epsilon(1e-8));
        CHECK(!lam.im.has_value());
    }

    SUBCASE("s=6: lambda = (4 pi^2/3)(-1 + i sign)") {
        const auto rep = lambda_constant(InteractionKernel::vdw(1.0), opt);
        const double mag = 4.0 * PI * PI / 3.0;
        CHECK(rep.re == doctest::Approx(-mag).epsilon(1e-8));
        REQUIRE(rep.im.has_value());
        CHECK(*rep.im == doctest::Approx(mag).epsilon(1e-8));
        const auto att = lambda_constant(InteractionKernel::vdw(-1.0), opt);
        CHECK(att.re == doctest::Approx(-mag).epsilon(1e-8));
        CHECK(*att.im == doctest::Approx(-mag).epsilon(1e-8));
    }

    SUBCASE("aligned dipole: Re lambda = -16 pi^3 / (9 sqrt 3)") {
        const auto lam = lambda_constant(InteractionKernel::aligned_dipole(1.0), opt);
        CHECK(lam.re == doctest::Approx(-16.0 * std::pow(PI, 3) / (9.0 * std::sqrt(3.0)))
                            .epsilon(1e-8));
        CHECK(!lam.im.has_value());
    }

    SUBCASE("lambda is strength independent") {
        const auto a = lambda_constant(InteractionKernel::vdw(1.0), opt);
        const auto b = lambda_constant(InteractionKernel::vdw(64.0), opt);
        CHECK(a.re == b.re);
        CHECK(*a.im == *b.im);
    }

    SUBCASE("dirichlet check: int (1-cos x)/x^2 = pi/2") {
        QuadOptions q{1e-12, 400000, 0.0};
        CHECK(-detail::radial_cos_minus_one(1.0, q) == doctest::Approx(PI / 2.0).epsilon(1e-10));
    }
}

TEST_CASE("i4_averaged") {
    SUBCASE("square resonant s=3: tau double integral equals -1/40") {
        // i4_averaged = (1/4) lambda rho (|C|T) * J with J = -1/40
        const Pulse sq(PulseSpec::square(1.0));
        const InteractionKernel k3 = InteractionKernel::dipole(1.0);
        const double rho = 2.0;
        const double i4 = i4_averaged(sq, k3, rho, 1.0);
        const double lam = -4.0 * PI * PI * PI / 3.0;
        const double strength = k3.c_hz_cms() * 1.0;  // T = 1 s
        const double expect = 0.25 * lam * rho * strength * (-1.0 / 40.0);
        CHECK(i4 == doctest::Approx(expect).epsilon(1e-8));
    }

    SUBCASE("zero strength") {
        const Pulse sq(PulseSpec::square(1.0));
        CHECK(i4_averaged(sq, InteractionKernel::vdw(0.0), 1e10, 1.0) == 0.0);
    }

    SUBCASE("s=3 with complex pulse refuses") {
        const Pulse det(PulseSpec::gaussian(1.0, 1.5));
        CHECK_THROWS_AS(i4_averaged(det, InteractionKernel::dipole(1.0), 1.0, 4.0),
                        std::domain_error);
        CHECK_THROWS_AS(i4_averaged(det, InteractionKernel::aligned_dipole(1.0), 1.0, 4.0),
                        std::domain_error);
    }

    SUBCASE("s=6 with complex pulse uses both lambda parts") {
        const Pulse det(PulseSpec::gaussian(1.0, 1.5, 0.3));
        const double v = i4_averaged(det, InteractionKernel::vdw(1.0), 1.0, 4.0);
        CHECK(std::isfinite(v));
        // sign flip of C6 flips Im lambda; values must differ materially
        const double v2 = i4_averaged(det, InteractionKernel::vdw(-1.0), 1.0, 4.0);
        CHECK(std::abs(v - v2) > 0.1 * std::abs(v));
    }
}

TEST_CASE("gamma constants reproduce the tabulated values") {
    ExpansionOptions opt;

    SUBCASE("square pulse closed forms to 1e-6 relative") {
        CHECK(gamma_constant(PulseShape::Square, InteractionKernel::dipole(1.0), opt) ==
              doctest::Approx(2.0 * std::pow(PI, 3) / 5.0).epsilon(1e-6));
        CHECK(gamma_constant(PulseShape::Square, InteractionKernel::aligned_dipole(1.0), opt) ==
              doctest::Approx(8.0 * std::pow(PI, 3) / (15.0 * std::sqrt(3.0))).epsilon(1e-6));
        CHECK(gamma_constant(PulseShape::Square, InteractionKernel::vdw(1.0), opt) ==
              doctest::Approx(128.0 * PI * PI / 189.0).epsilon(1e-6));
    }

    SUBCASE("gaussian pulse values to 1e-3 absolute") {
        CHECK(std::abs(gamma_constant(PulseShape::Gaussian, InteractionKernel::dipole(1.0), opt) -
                       32.1138) < 1e-3);
        CHECK(std::abs(gamma_constant(PulseShape::Gaussian,
                                      InteractionKernel::aligned_dipole(1.0), opt) -
                       24.7212) < 1e-3);
        CHECK(std::abs(gamma_constant(PulseShape::Gaussian, InteractionKernel::vdw(1.0), opt) -
                       10.8627) < 1e-3);
    }

    SUBCASE("invariant under interaction rescaling") {
        const double g1 =
            gamma_constant(PulseShape::Square, InteractionKernel::vdw(1e-3), opt);
        const double g2 = gamma_constant(PulseShape::Square, InteractionKernel::vdw(1.0), opt);
        const double g3 = gamma_constant(PulseShape::Square, InteractionKernel::vdw(1e3), opt);
        CHECK(std::abs(g1 - g2) / g2 < 1e-9);
        CHECK(std::abs(g3 - g2) / g2 < 1e-9);
    }

    SUBCASE("angular relation gamma_aligned = 4/(3 sqrt 3) gamma_iso") {
        for (PulseShape shape : {PulseShape::Square, PulseShape::Gaussian}) {
            const double gi = gamma_constant(shape, InteractionKernel::dipole(1.0), opt);
            const double ga = gamma_constant(shape, InteractionKernel::aligned_dipole(1.0), opt);
            CHECK(ga / gi == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-4));
        }
    }
}

TEST_CASE("pexc series") {
    const InteractionKernel none = InteractionKernel::vdw(0.0);

    SUBCASE("direct formula at C=0") {
        const auto p = pexc_series(0.0, none, 0.0, 1e-8, 0.01);
        CHECK(p.value == doctest::Approx(PI * PI / 4.0 * 0.01 -
                                         std::pow(PI, 4) / 48.0 * 1e-4)
                             .epsilon(1e-14));
        CHECK(p.truncation_ok);
    }

    SUBCASE("series maximum equals the truncated saturation estimate") {
        // max of a x - b x^2 is a^2/(4b); with x_int = 26.3 this is (3/4)/27.3
        const double x_int = 26.3;
        const double a = PI * PI / 4.0;
        const double b = std::pow(PI, 4) / 48.0 * (1.0 + x_int);
        const double pmax = a * a / (4.0 * b);
        CHECK(pmax == doctest::Approx(0.75 / 27.3).epsilon(1e-12));
    }

    SUBCASE("rho to zero recovers the isolated expansion") {
        const InteractionKernel vdw = InteractionKernel::vdw(1e21);
        const auto with = pexc_series(10.8627, vdw, 0.0, 1e-8, 0.02);
        const auto free = pexc_series(0.0, none, 0.0, 1e-8, 0.02);
        CHECK(with.value == doctest::Approx(free.value).epsilon(1e-14));
    }

    SUBCASE("truncation warning fires at large x") {
        const auto p = pexc_series(0.0, none, 0.0, 1e-8, 2.0);
        CHECK(!p.truncation_ok);
    }

    SUBCASE("series is even in omega by construction") {
        ExpansionResult r;
        r.c2 = 0.25;
        r.c4_total = -1.0 / 24.0;
        for (double w : {0.1, 0.7, 2.0})
            CHECK(pexc_from_orders(r, w) == pexc_from_orders(r, -w));
    }

    SUBCASE("resonance required") {
        const Pulse det(PulseSpec::gaussian(1e-8, 1.0));
        CHECK_THROWS_AS(pexc_series(det, InteractionKernel::vdw(1e21), 1e10, 0.01),
                        std::domain_error);
    }
}

TEST_CASE("evaluate_expansion invariants") {
    const Pulse g(PulseSpec::gaussian(1e-8, 0.5, 0.2));
    const std::vector<double> ks{0.0, 0.0};
    const auto r = evaluate_expansion(g, ks, g.tau_end());
    CHECK(r.c2 >= 0.0);
    CHECK(r.i4 == 0.0);  // zero couplings: no interaction effect at this order
    CHECK(r.c4_total == -(r.i41 + r.i4));
}

TEST_CASE("averaged expansion record carries lambda and gamma") {
    const Pulse sq(PulseSpec::square(1e-8));
    const auto r = evaluate_expansion_averaged(sq, InteractionKernel::vdw(1.5e26), 1e7,
                                               sq.tau_end());
    CHECK(r.c2 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.i41 == doctest::Approx(1.0 / 48.0).epsilon(1e-9));
    REQUIRE(r.gamma.has_value());
    CHECK(*r.gamma == doctest::Approx(128.0 * PI * PI / 189.0).epsilon(1e-6));
    REQUIRE(r.lambda_re.has_value());
    CHECK(*r.lambda_re == doctest::Approx(-4.0 * PI * PI / 3.0).epsilon(1e-8));
    REQUIRE(r.lambda_im.has_value());
    // consistency: i4 equals the suppression-parameter form gamma rho (CT)^(1/2) W^4/48
    const InteractionKernel k6 = InteractionKernel::vdw(1.5e26);
    const double x = *r.gamma * 1e7 * std::sqrt(k6.c_hz_cms() * 1e-8);
    CHECK(r.i4 == doctest::Approx(x / 48.0).epsilon(1e-7));
}
