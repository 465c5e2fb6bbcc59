#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace rydex {

/// Neumaier compensated accumulator. Summation order fixed by the caller,
/// so a serial fold over a per-item buffer is reproducible bit-for-bit
/// no matter how many workers produced the items.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

class ComplexCompensatedSum {
public:
    void add(std::complex<double> z) {
        re_.add(z.real());
        im_.add(z.imag());
    }
    std::complex<double> value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

inline double compensated_total(std::span<const double> xs) {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

}  // namespace rydex
