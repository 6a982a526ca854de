#pragma once

#include <cstdint>
#include <string>

namespace nmrv {

// Signed fixed-point formats used by the instruction set. "Qm.n" is one
// sign bit, m integer bits and n fraction bits in a (1+m+n)-bit word.
// Only the three formats the hardware defines are constructible.
class QFormat {
public:
    QFormat(int int_bits, int frac_bits, int total_bits);

    int int_bits() const { return int_bits_; }
    int frac_bits() const { return frac_bits_; }
    int total_bits() const { return total_bits_; }

    // Raw-value bounds of the format (two's complement).
    int32_t raw_min() const;
    int32_t raw_max() const;

    bool operator==(const QFormat& o) const {
        return int_bits_ == o.int_bits_ && frac_bits_ == o.frac_bits_;
    }
    bool operator!=(const QFormat& o) const { return !(*this == o); }

    std::string name() const; // "Q7.8"

private:
    int8_t int_bits_;
    int8_t frac_bits_;
    int8_t total_bits_;
};

inline const QFormat Q4_11{4, 11, 16};
inline const QFormat Q7_8{7, 8, 16};
inline const QFormat Q15_16{15, 16, 32};

// A fixed-point value: raw two's-complement integer plus its format.
// Value represented = raw / 2^frac_bits.
struct Fixed {
    int32_t raw;
    QFormat fmt;

    double to_real() const;

    // Debug/test-vector rendering: "raw=<int> fmt=Q<m>.<n> val=<decimal>"
    // with the exact finite decimal expansion of raw / 2^n.
    std::string to_string() const;
};

// Constructs a Fixed from an in-range raw integer. Out-of-range raw is a
// usage error.
Fixed fixed_from_raw(int32_t raw, QFormat fmt);

// Quantizes x to fmt with round-to-nearest-even. Out-of-range x (after
// rounding) throws; quantization never wraps silently.
Fixed from_real(double x, QFormat fmt);

// Exact full-width product of the raws, rescaled to `out` with
// round-to-nearest-even and saturation at the format bounds.
Fixed mul(Fixed a, Fixed b, QFormat out);

// Raw-wise add/sub with saturation. Operands must share a format.
Fixed add(Fixed a, Fixed b);
Fixed sub(Fixed a, Fixed b);

// Rescales to `out` with round-to-nearest-even and saturation.
Fixed convert(Fixed a, QFormat out);

// Arithmetic right shift of the raw by k in [1, 9] (floor semantics),
// format unchanged. Mirrors the hardware's shift network.
Fixed shr(Fixed a, int k);

// Round-to-nearest-even right shift of a wide intermediate by s >= 0 bits.
// Shared by the width-reducing paths above and the NPU accumulator.
int64_t rne_shift(int64_t value, int s);

// Clamp a wide value to the raw range of fmt.
int32_t saturate_raw(int64_t value, QFormat fmt);

} // namespace nmrv
