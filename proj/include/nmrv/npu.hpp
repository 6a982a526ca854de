#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nmrv/fixed.hpp"

namespace nmrv {

// Izhikevich neuron parameters in the register formats the load
// instruction expects: a, b, d in Q4.11, c (the reset voltage) in Q7.8.
struct NeuronParams {
    Fixed a{0, Q4_11};
    Fixed b{0, Q4_11};
    Fixed c{0, Q7_8};
    Fixed d{0, Q4_11};
};

NeuronParams make_params(double a, double b, double c, double d);

// The neuron-unit configuration registers: parameters plus the timestep
// select (set -> 0.125 ms, realized as >>3; clear -> 0.5 ms, >>1) and the
// pin bit that caps the post-update voltage at the reset potential.
struct NmConfig {
    NeuronParams params;
    bool h_fast = false;
    bool pin = false;

    double h_ms() const { return h_fast ? 0.125 : 0.5; }
    int h_shift() const { return h_fast ? 3 : 1; }
};

NmConfig load_params(NmConfig cfg, Fixed a, Fixed b, Fixed c, Fixed d);
NmConfig load_h(NmConfig cfg, bool h_fast, bool pin);

// Packed neuron state: v in bits 31..16, u in bits 15..0, both Q7.8.
struct VUWord {
    uint32_t word = 0;

    static VUWord pack(Fixed v, Fixed u);
    static VUWord pack_raw(int16_t v_raw, int16_t u_raw);
    int16_t v_raw() const { return static_cast<int16_t>(word >> 16); }
    int16_t u_raw() const { return static_cast<int16_t>(word & 0xffff); }
    Fixed v() const { return Fixed{v_raw(), Q7_8}; }
    Fixed u() const { return Fixed{u_raw(), Q7_8}; }

    bool operator==(const VUWord&) const = default;
};

struct StepResult {
    VUWord vu;
    bool spike = false;
};

// Spike threshold: +30.0 in Q7.8.
inline constexpr int32_t kVThRaw = 30 * 256;

// One fixed-point Euler step of the Izhikevich model. Spike detection
// precedes integration: input v above threshold resets (v <- c,
// u <- u + d) and ignores i_syn; otherwise
//   v' = (0.04 v^2 + 5 v + 140 - u + i_syn) * h + v
//   u' = a h (b v - u) + u
// evaluated in a wide accumulator that is exact up to the final
// round-to-nearest-even conversion to Q7.8. With the pin bit set, a
// non-spiking v' below c is clamped to c.
StepResult izh_step(VUWord vu, Fixed i_syn, const NmConfig& cfg);

// Double-precision reference for the same update and reset rules.
struct OracleParams {
    double a, b, c, d;
};

struct OracleResult {
    double v, u;
    bool spike;
};

OracleResult izh_step_oracle(double v, double u, double i_syn, const OracleParams& p, double h,
                             bool pin = false);

// Test-vector file: one line per case,
//   vu_in i_syn cfg vu_out spike
// as hexadecimal raws, cfg rendered as ba:dc:flags (flags bit0 = h,
// bit1 = pin). Used for cross-checking guest-mode execution.
struct TestVector {
    VUWord vu_in;
    int32_t i_syn_raw;
    NmConfig cfg;
    VUWord vu_out;
    bool spike;
};

void write_test_vectors(std::ostream& os, const std::vector<TestVector>& vecs);
std::vector<TestVector> read_test_vectors(std::istream& is);

} // namespace nmrv
