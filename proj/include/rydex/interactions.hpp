#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <stdexcept>
#include <vector>

#include "rydex/constants.hpp"

namespace rydex {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
};

enum class AngularForm { Isotropic, AlignedDipole };

inline const char* to_string(AngularForm a) {
    return a == AngularForm::Isotropic ? "isotropic" : "aligned";
}

/// Pair interaction V(R) = C_s / R^s, with the (1 - 3 cos^2 theta) factor
/// for aligned dipoles. C_s is signed: negative = attractive level shift.
struct InteractionKernel {
    int s = 6;
    double c_au = 0.0;  // atomic units of energy * length^s
    AngularForm angular = AngularForm::Isotropic;

    static InteractionKernel vdw(double c6_au) { return {6, c6_au, AngularForm::Isotropic}; }
    static InteractionKernel dipole(double c3_au) { return {3, c3_au, AngularForm::Isotropic}; }
    static InteractionKernel aligned_dipole(double u3_au) {
        return {3, u3_au, AngularForm::AlignedDipole};
    }

    double c_hz_cms() const { return constants::cs_au_to_hz_cms(c_au, s); }
    bool attractive() const { return c_au < 0.0; }

    void validate() const {
        if (s != 3 && s != 6) throw std::invalid_argument("interaction exponent s must be 3 or 6");
        if (angular == AngularForm::AlignedDipole && s != 3)
            throw std::invalid_argument("aligned-dipole angular form requires s = 3");
    }
};

/// Dimensionless coupling for a pair at distance R with axis angle theta:
/// k = 2 pi (C_s/h) T / R^s, times (1 - 3 cos^2 theta) for aligned dipoles.
inline double coupling_from_distance(const InteractionKernel& kernel, double duration_s,
                                     double r_cm, double cos_theta = 0.0) {
    kernel.validate();
    if (!(r_cm > 0.0)) throw std::invalid_argument("coupling: coincident atom positions");
    double k = 2.0 * constants::pi * kernel.c_hz_cms() * duration_s / std::pow(r_cm, kernel.s);
    if (kernel.angular == AngularForm::AlignedDipole)
        k *= 1.0 - 3.0 * cos_theta * cos_theta;
    return k;
}

inline double coupling(const InteractionKernel& kernel, double duration_s, const Vec3& ri,
                       const Vec3& rj, const Vec3& axis = {0.0, 0.0, 1.0}) {
    const Vec3 d = rj - ri;
    const double r = d.norm();
    if (!(r > 0.0)) throw std::invalid_argument("coupling: coincident atom positions");
    double cos_theta = 0.0;
    if (kernel.angular == AngularForm::AlignedDipole) {
        const double an = axis.norm();
        if (!(an > 0.0)) throw std::invalid_argument("coupling: zero alignment axis");
        cos_theta = d.dot(axis) / (r * an);
    }
    return coupling_from_distance(kernel, duration_s, r, cos_theta);
}

/// Distance where |k| = 1.
inline double blockade_radius_cm(const InteractionKernel& kernel, double duration_s) {
    kernel.validate();
    const double a = 2.0 * constants::pi * std::abs(kernel.c_hz_cms()) * duration_s;
    return std::pow(a, 1.0 / kernel.s);
}

enum class Geometry { Box, Sphere };

inline const char* to_string(Geometry g) { return g == Geometry::Box ? "box" : "sphere"; }

struct AtomEnsemble {
    std::vector<Vec3> positions;  // cm
    double rho_cm3 = 0.0;
    Geometry geometry = Geometry::Box;
    double volume_cm3 = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

// splitmix64: cheap, well-mixed per-sample seeding.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro-free uniform in [0,1): top 53 bits of splitmix64 output. Bit-exact
// across platforms, unlike std::uniform_real_distribution.
class UniformRng {
public:
    explicit UniformRng(std::uint64_t seed) : state_(seed) {}
    double next() {
        return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

}  // namespace detail

/// Uniform i.i.d. positions in a box or ball of the given volume, centred
/// at the origin. Deterministic for a fixed seed.
inline AtomEnsemble sample_ensemble(double rho_cm3, Geometry geometry, double volume_cm3,
                                    std::uint64_t seed, std::size_t max_atoms = 2000000) {
    if (!(rho_cm3 > 0.0)) throw std::invalid_argument("sample_ensemble: rho must be positive");
    if (!(volume_cm3 > 0.0)) throw std::invalid_argument("sample_ensemble: volume must be positive");
    const double n_real = rho_cm3 * volume_cm3;
    if (n_real > static_cast<double>(max_atoms))
        throw std::invalid_argument("sample_ensemble: atom count " + std::to_string(n_real) +
                                    " exceeds maximum " + std::to_string(max_atoms));
    const auto n = static_cast<std::size_t>(std::llround(n_real));

    AtomEnsemble ens;
    ens.rho_cm3 = rho_cm3;
    ens.geometry = geometry;
    ens.volume_cm3 = volume_cm3;
    ens.seed = seed;
    ens.positions.reserve(n);

    detail::UniformRng rng(seed);
    if (geometry == Geometry::Box) {
        const double half = 0.5 * std::cbrt(volume_cm3);
        for (std::size_t i = 0; i < n; ++i)
            ens.positions.push_back({half * (2.0 * rng.next() - 1.0),
                                     half * (2.0 * rng.next() - 1.0),
                                     half * (2.0 * rng.next() - 1.0)});
    } else {
        const double radius = std::cbrt(volume_cm3 * 3.0 / (4.0 * constants::pi));
        while (ens.positions.size() < n) {
            const Vec3 p = {radius * (2.0 * rng.next() - 1.0), radius * (2.0 * rng.next() - 1.0),
                            radius * (2.0 * rng.next() - 1.0)};
            if (p.norm2() <= radius * radius) ens.positions.push_back(p);
        }
    }
    return ens;
}

/// Largest distance from the origin still inside the geometry.
inline double half_extent_cm(Geometry g, double volume_cm3) {
    if (g == Geometry::Box) return 0.5 * std::cbrt(volume_cm3);
    return std::cbrt(volume_cm3 * 3.0 / (4.0 * constants::pi));
}

inline double half_extent_cm(const AtomEnsemble& e) {
    return half_extent_cm(e.geometry, e.volume_cm3);
}

inline void write_csv(const AtomEnsemble& e, std::ostream& os) {
    os << "x_cm,y_cm,z_cm\n";
    char buf[96];
    for (const auto& p : e.positions) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", p.x, p.y, p.z);
        os << buf;
    }
}

}  // namespace rydex
