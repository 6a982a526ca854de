#pragma once

// Exact-arithmetic reference for the fixed-point paths: quantization is
// recomputed with arbitrary-precision rationals, independent of the
// integer-shift implementation it checks.

#include <boost/multiprecision/cpp_int.hpp>

#include "nmrv/fixed.hpp"

namespace oracle {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Int floor_div(const Int& n, const Int& d) {
    Int q = n / d; // truncates toward zero
    if (n % d != 0 && (n < 0) != (d < 0))
        --q;
    return q;
}

// Round-to-nearest-even of an exact rational to an integer.
inline Int round_half_even(const Rational& x) {
    const Int n = boost::multiprecision::numerator(x);
    const Int d = boost::multiprecision::denominator(x); // canonical, > 0
    const Int fl = floor_div(n, d);
    const Rational rem = x - Rational(fl);
    if (rem > Rational(1, 2))
        return fl + 1;
    if (rem < Rational(1, 2))
        return fl;
    return (fl % 2 == 0) ? fl : fl + 1;
}

// Quantize an exact real value to a format: RNE then clamp.
inline int32_t quantize(const Rational& x, const nmrv::QFormat& fmt) {
    const Rational scaled = x * Rational(Int(1) << fmt.frac_bits());
    Int q = round_half_even(scaled);
    if (q < fmt.raw_min())
        return fmt.raw_min();
    if (q > fmt.raw_max())
        return fmt.raw_max();
    return static_cast<int32_t>(q);
}

inline Rational value_of(const nmrv::Fixed& f) {
    return Rational(f.raw, Int(1) << f.fmt.frac_bits());
}

inline int32_t mul_expected(const nmrv::Fixed& a, const nmrv::Fixed& b, const nmrv::QFormat& out) {
    return quantize(value_of(a) * value_of(b), out);
}

inline int32_t add_expected(const nmrv::Fixed& a, const nmrv::Fixed& b) {
    return quantize(value_of(a) + value_of(b), a.fmt);
}

inline int32_t sub_expected(const nmrv::Fixed& a, const nmrv::Fixed& b) {
    return quantize(value_of(a) - value_of(b), a.fmt);
}

inline int32_t convert_expected(const nmrv::Fixed& a, const nmrv::QFormat& out) {
    return quantize(value_of(a), out);
}

} // namespace oracle
