#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "rydex/constants.hpp"
#include "rydex/interactions.hpp"

using namespace rydex;

TEST_CASE("coupling examples") {
    const InteractionKernel vdw = InteractionKernel::vdw(4.97e22);
    const double T = 37.5e-9;

    SUBCASE("power law") {
        const double k1 = coupling_from_distance(vdw, T, 5e-4);
        const double k2 = coupling_from_distance(vdw, T, 10e-4);
        CHECK(k1 / k2 == doctest::Approx(64.0).epsilon(1e-12));
    }

    SUBCASE("self-consistency of the unit conversion") {
        // direct formula vs separately converted constants (different op order)
        const double r = 5e-4;  // 5 um in cm
        const double direct = coupling_from_distance(vdw, T, r);
        const double c_hz = 4.97e22 * constants::hartree_over_h_hz *
                            std::pow(constants::bohr_radius_cm, 6);
        const double again = 2.0 * constants::pi * T * (c_hz / std::pow(r, 6));
        CHECK(direct == doctest::Approx(again).epsilon(1e-12));
    }

    SUBCASE("magic angle zeroes the aligned form") {
        const InteractionKernel ali = InteractionKernel::aligned_dipole(1e10);
        const double k = coupling_from_distance(ali, T, 3e-4, 1.0 / std::sqrt(3.0));
        CHECK(std::abs(k) < 1e-12 * std::abs(coupling_from_distance(ali, T, 3e-4, 0.0)));
    }

    SUBCASE("symmetry and linear scaling") {
        const Vec3 a{1e-4, -2e-4, 0.5e-4}, b{-0.3e-4, 1e-4, 2e-4};
        CHECK(coupling(vdw, T, a, b) == coupling(vdw, T, b, a));
        const InteractionKernel ali = InteractionKernel::aligned_dipole(1e10);
        CHECK(coupling(ali, T, a, b) == coupling(ali, T, b, a));
        InteractionKernel twice = vdw;
        twice.c_au *= 2.0;
        CHECK(coupling(twice, T, a, b) == doctest::Approx(2.0 * coupling(vdw, T, a, b)));
        CHECK(coupling(vdw, 2.0 * T, a, b) == doctest::Approx(2.0 * coupling(vdw, T, a, b)));
    }

    SUBCASE("coincident positions rejected") {
        const Vec3 a{1e-4, 1e-4, 1e-4};
        CHECK_THROWS_AS(coupling(vdw, T, a, a), std::invalid_argument);
    }

    SUBCASE("kernel validation") {
        InteractionKernel bad{4, 1.0, AngularForm::Isotropic};
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        InteractionKernel bad2{6, 1.0, AngularForm::AlignedDipole};
        CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
    }
}

TEST_CASE("ensemble sampling determinism and containment") {
    const double rho = 1e10;
    const double volume = 100.0 / rho;
    const AtomEnsemble e1 = sample_ensemble(rho, Geometry::Box, volume, 42);
    const AtomEnsemble e2 = sample_ensemble(rho, Geometry::Box, volume, 42);
    CHECK(e1.positions.size() == 100);
    REQUIRE(e1.positions.size() == e2.positions.size());
    for (std::size_t i = 0; i < e1.positions.size(); ++i) {
        CHECK(e1.positions[i].x == e2.positions[i].x);
        CHECK(e1.positions[i].y == e2.positions[i].y);
        CHECK(e1.positions[i].z == e2.positions[i].z);
    }
    const double half = 0.5 * std::cbrt(volume);
    for (const auto& p : e1.positions) {
        CHECK(std::abs(p.x) <= half);
        CHECK(std::abs(p.y) <= half);
        CHECK(std::abs(p.z) <= half);
    }

    const AtomEnsemble s = sample_ensemble(rho, Geometry::Sphere, volume, 7);
    const double radius = std::cbrt(volume * 3.0 / (4.0 * constants::pi));
    for (const auto& p : s.positions) CHECK(p.norm() <= radius);

    CHECK_THROWS_AS(sample_ensemble(rho, Geometry::Box, 1e3, 1), std::invalid_argument);
}

namespace {

// Pair-distance CDF of two independent uniform points in a unit-radius ball:
// F(r) = r^3 - (9/16) r^4 + (1/32) r^6 for r in [0, 2].
double ball_pair_cdf(double r) {
    return std::pow(r, 3) - 9.0 / 16.0 * std::pow(r, 4) + std::pow(r, 6) / 32.0;
}

// Asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
double kolmogorov_q(double lambda) {
    double q = 0.0;
    for (int j = 1; j <= 100; ++j)
        q += 2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    return std::clamp(q, 0.0, 1.0);
}

}  // namespace

TEST_CASE("pair distances in a ball match the analytic distribution") {
    const double rho = 1e4;
    const double volume = 1.0;  // 1e4 atoms in a unit volume
    const AtomEnsemble e = sample_ensemble(rho, Geometry::Sphere, volume, 2024);
    const double radius = std::cbrt(volume * 3.0 / (4.0 * constants::pi));

    // disjoint pairs (2i, 2i+1) are fully independent
    std::vector<double> d;
    for (std::size_t i = 0; i + 1 < e.positions.size(); i += 2)
        d.push_back((e.positions[i] - e.positions[i + 1]).norm() / radius);
    std::sort(d.begin(), d.end());

    double ks = 0.0;
    const double n = static_cast<double>(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double cdf = ball_pair_cdf(d[i]);
        ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    const double p_value = kolmogorov_q(ks * std::sqrt(n));
    CHECK(p_value > 0.01);
}

TEST_CASE("solid-angle average of the aligned-dipole factor vanishes") {
    detail::UniformRng rng(99);
    const std::size_t n = 2000000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = 2.0 * rng.next() - 1.0;  // cos(theta) uniform on [-1,1]
        const double v = 1.0 - 3.0 * u * u;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n) - mean * mean;
    const double sigma = std::sqrt(var / static_cast<double>(n));
    CHECK(std::abs(mean) < 3.0 * sigma);
}

TEST_CASE("blockade radius") {
    const InteractionKernel vdw = InteractionKernel::vdw(-3.08e21);
    const double T = 3.12e-9;
    const double rb = blockade_radius_cm(vdw, T);
    CHECK(std::abs(coupling_from_distance(vdw, T, rb)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ensemble csv serialization") {
    const AtomEnsemble e = sample_ensemble(1e9, Geometry::Box, 5.0 / 1e9, 11);
    std::ostringstream os;
    write_csv(e, os);
    std::ostringstream os2;
    write_csv(sample_ensemble(1e9, Geometry::Box, 5.0 / 1e9, 11), os2);
    const std::string body = os.str();
    CHECK(body == os2.str());
    CHECK(body.rfind("x_cm,y_cm,z_cm\n", 0) == 0);
    CHECK(std::count(body.begin(), body.end(), '\n') == 6);  // header + 5 atoms
}
