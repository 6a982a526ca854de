#include "nmrv/fixed.hpp"

#include <cfenv>
#include <cmath>
#include <stdexcept>

namespace nmrv {

QFormat::QFormat(int int_bits, int frac_bits, int total_bits)
    : int_bits_(static_cast<int8_t>(int_bits)),
      frac_bits_(static_cast<int8_t>(frac_bits)),
      total_bits_(static_cast<int8_t>(total_bits)) {
    const bool q4_11 = int_bits == 4 && frac_bits == 11 && total_bits == 16;
    const bool q7_8 = int_bits == 7 && frac_bits == 8 && total_bits == 16;
    const bool q15_16 = int_bits == 15 && frac_bits == 16 && total_bits == 32;
    if (!q4_11 && !q7_8 && !q15_16)
        throw std::invalid_argument("unsupported Q format Q" + std::to_string(int_bits) + "." +
                                    std::to_string(frac_bits) + "/" + std::to_string(total_bits));
}

int32_t QFormat::raw_min() const {
    return total_bits_ == 16 ? INT32_C(-32768) : INT32_MIN;
}

int32_t QFormat::raw_max() const {
    return total_bits_ == 16 ? INT32_C(32767) : INT32_MAX;
}

std::string QFormat::name() const {
    return "Q" + std::to_string(int_bits_) + "." + std::to_string(frac_bits_);
}

double Fixed::to_real() const {
    return static_cast<double>(raw) / std::ldexp(1.0, fmt.frac_bits());
}

std::string Fixed::to_string() const {
    // raw / 2^n has an exact decimal expansion with n digits (scale by 5^n).
    const int n = fmt.frac_bits();
    const bool neg = raw < 0;
    uint64_t mag = neg ? -static_cast<int64_t>(raw) : static_cast<int64_t>(raw);
    uint64_t ipart = mag >> n;
    uint64_t fbits = mag & ((UINT64_C(1) << n) - 1);
    uint64_t pow5 = 1;
    for (int i = 0; i < n; ++i)
        pow5 *= 5;
    uint64_t fdec = fbits * pow5; // n decimal digits
    std::string frac(static_cast<size_t>(n), '0');
    for (int i = n - 1; i >= 0; --i) {
        frac[static_cast<size_t>(i)] = static_cast<char>('0' + fdec % 10);
        fdec /= 10;
    }
    while (frac.size() > 1 && frac.back() == '0')
        frac.pop_back();
    std::string val = (neg ? "-" : "") + std::to_string(ipart) + "." + frac;
    return "raw=" + std::to_string(raw) + " fmt=" + fmt.name() + " val=" + val;
}

Fixed fixed_from_raw(int32_t raw, QFormat fmt) {
    if (raw < fmt.raw_min() || raw > fmt.raw_max())
        throw std::out_of_range("raw " + std::to_string(raw) + " outside " + fmt.name());
    return Fixed{raw, fmt};
}

Fixed from_real(double x, QFormat fmt) {
    if (!std::isfinite(x))
        throw std::out_of_range("non-finite value for " + fmt.name());
    // Scaling by a power of two is exact, so nearbyint under the default
    // FE_TONEAREST mode yields true round-to-nearest-even of x * 2^n.
    const double scaled = std::ldexp(x, fmt.frac_bits());
    const double rounded = std::nearbyint(scaled);
    if (rounded < static_cast<double>(fmt.raw_min()) || rounded > static_cast<double>(fmt.raw_max()))
        throw std::out_of_range("value " + std::to_string(x) + " out of range for " + fmt.name());
    return Fixed{static_cast<int32_t>(rounded), fmt};
}

int64_t rne_shift(int64_t value, int s) {
    if (s <= 0)
        return value << -s;
    const int64_t floor = value >> s;
    const int64_t rem = value - (floor << s); // in [0, 2^s)
    const int64_t half = INT64_C(1) << (s - 1);
    if (rem > half)
        return floor + 1;
    if (rem < half)
        return floor;
    return floor + (floor & 1); // tie: round to even
}

int32_t saturate_raw(int64_t value, QFormat fmt) {
    const int64_t lo = fmt.raw_min();
    const int64_t hi = fmt.raw_max();
    if (value < lo)
        return static_cast<int32_t>(lo);
    if (value > hi)
        return static_cast<int32_t>(hi);
    return static_cast<int32_t>(value);
}

Fixed mul(Fixed a, Fixed b, QFormat out) {
    const int64_t prod = static_cast<int64_t>(a.raw) * static_cast<int64_t>(b.raw);
    const int s = a.fmt.frac_bits() + b.fmt.frac_bits() - out.frac_bits();
    if (s >= 0)
        return Fixed{saturate_raw(rne_shift(prod, s), out), out};
    const __int128 widened = static_cast<__int128>(prod) << -s;
    if (widened < out.raw_min())
        return Fixed{out.raw_min(), out};
    if (widened > out.raw_max())
        return Fixed{out.raw_max(), out};
    return Fixed{static_cast<int32_t>(widened), out};
}

Fixed add(Fixed a, Fixed b) {
    if (a.fmt != b.fmt)
        throw std::invalid_argument("add: format mismatch " + a.fmt.name() + " vs " + b.fmt.name());
    return Fixed{saturate_raw(static_cast<int64_t>(a.raw) + b.raw, a.fmt), a.fmt};
}

Fixed sub(Fixed a, Fixed b) {
    if (a.fmt != b.fmt)
        throw std::invalid_argument("sub: format mismatch " + a.fmt.name() + " vs " + b.fmt.name());
    return Fixed{saturate_raw(static_cast<int64_t>(a.raw) - b.raw, a.fmt), a.fmt};
}

Fixed convert(Fixed a, QFormat out) {
    const int s = a.fmt.frac_bits() - out.frac_bits();
    if (s >= 0)
        return Fixed{saturate_raw(rne_shift(a.raw, s), out), out};
    return Fixed{saturate_raw(static_cast<int64_t>(a.raw) << -s, out), out};
}

Fixed shr(Fixed a, int k) {
    if (k < 1 || k > 9)
        throw std::invalid_argument("shr: shift amount " + std::to_string(k) + " outside [1,9]");
    return Fixed{a.raw >> k, a.fmt};
}

} // namespace nmrv
