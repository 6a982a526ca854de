#pragma once

#include <cstdint>
#include <span>

#include "nmrv/fixed.hpp"

namespace nmrv {

// Divider selector for the decay unit's shift-and-add division
// approximator. Only /2 .. /8 are realizable by the shift network.
class DividerSelect {
public:
    explicit DividerSelect(int d);
    int value() const { return d_; }

private:
    int d_;
};

// The shift amounts whose summed powers of two approximate 1/d.
std::span<const int> shift_combo(DividerSelect d);

// Shift-and-add approximation of raw/d: the sum of arithmetic right
// shifts of `raw` by the combo amounts.
int32_t approx_divide(int32_t raw, DividerSelect d);

// Relative approximation error of the combo against 1/d, exact:
// |combo - 1/d| / (1/d) * 100 = num/den percent.
struct ApproxError {
    int64_t num;
    int64_t den;
    double percent() const { return static_cast<double>(num) / static_cast<double>(den); }
};
ApproxError approximation_error(DividerSelect d);

// Combo value as an exact dyadic rational (sum of 2^-k), e.g. 73/512 for /7.
double combo_value(DividerSelect d);

// One exponential-decay step of a Q15.16 synaptic current: returns the
// decayed current i - (i/d)*h, with the division approximated by the
// shift network and h realized as a right shift by 1 (0.5 ms) or
// 3 (0.125 ms).
int32_t decay_step(int32_t i_syn_raw, DividerSelect d, bool h_fast);

Fixed decay_step(Fixed i_syn, DividerSelect d, bool h_fast);

} // namespace nmrv
