#include "nmrv/dcu.hpp"

#include <array>
#include <cstdlib>
#include <stdexcept>

namespace nmrv {

namespace {

// Shift combos per divider, indexed by d-2. Each realizes the closest
// sum of 2^-k (k in 1..9) to 1/d.
constexpr std::array<std::array<int, 4>, 7> kCombos = {{
    {1, 0, 0, 0}, // /2
    {2, 4, 6, 8}, // /3
    {2, 0, 0, 0}, // /4
    {3, 4, 7, 8}, // /5
    {3, 5, 7, 9}, // /6
    {3, 6, 9, 0}, // /7
    {3, 0, 0, 0}, // /8
}};

constexpr std::array<int, 7> kComboLen = {1, 4, 1, 4, 4, 3, 1};

} // namespace

DividerSelect::DividerSelect(int d) : d_(d) {
    if (d < 2 || d > 8)
        throw std::invalid_argument("divider " + std::to_string(d) + " outside [2,8]");
}

std::span<const int> shift_combo(DividerSelect d) {
    const int idx = d.value() - 2;
    return {kCombos[static_cast<size_t>(idx)].data(), static_cast<size_t>(kComboLen[static_cast<size_t>(idx)])};
}

int32_t approx_divide(int32_t raw, DividerSelect d) {
    int32_t sum = 0;
    for (int k : shift_combo(d))
        sum += raw >> k;
    return sum;
}

ApproxError approximation_error(DividerSelect d) {
    // combo = N / 512 with N = sum of 2^(9-k); AE% = |N*d - 512| * 100 / 512.
    int64_t n = 0;
    for (int k : shift_combo(d))
        n += INT64_C(1) << (9 - k);
    return ApproxError{std::abs(n * d.value() - 512) * 100, 512};
}

double combo_value(DividerSelect d) {
    int64_t n = 0;
    for (int k : shift_combo(d))
        n += INT64_C(1) << (9 - k);
    return static_cast<double>(n) / 512.0;
}

int32_t decay_step(int32_t i_syn_raw, DividerSelect d, bool h_fast) {
    const int h_shift = h_fast ? 3 : 1;
    const int32_t delta = approx_divide(i_syn_raw, d) >> h_shift;
    return saturate_raw(static_cast<int64_t>(i_syn_raw) - delta, Q15_16);
}

Fixed decay_step(Fixed i_syn, DividerSelect d, bool h_fast) {
    return Fixed{decay_step(i_syn.raw, d, h_fast), Q15_16};
}

} // namespace nmrv
