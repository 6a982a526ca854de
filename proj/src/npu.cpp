#include "nmrv/npu.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nmrv {

namespace {

// Model constants for the v-update, held so the accumulator chain stays
// exact until the final conversion: 5 and 140 are exact integers; 0.04
// is carried with 21 fraction bits (raw 83886, value 0.039999961...),
// fine enough that its bias never exceeds a fraction of one Q7.8 LSB
// over the representable state range.
constexpr int64_t kCoeffSq = 83886; // 0.04 at 21 fraction bits
constexpr int kCoeffSqFrac = 21;

int16_t sat16(int64_t v) {
    if (v < -32768)
        return -32768;
    if (v > 32767)
        return 32767;
    return static_cast<int16_t>(v);
}

} // namespace

NeuronParams make_params(double a, double b, double c, double d) {
    return NeuronParams{from_real(a, Q4_11), from_real(b, Q4_11), from_real(c, Q7_8),
                        from_real(d, Q4_11)};
}

NmConfig load_params(NmConfig cfg, Fixed a, Fixed b, Fixed c, Fixed d) {
    if (a.fmt != Q4_11 || b.fmt != Q4_11 || c.fmt != Q7_8 || d.fmt != Q4_11)
        throw std::invalid_argument("load_params: operand format mismatch");
    cfg.params = NeuronParams{a, b, c, d};
    return cfg;
}

NmConfig load_h(NmConfig cfg, bool h_fast, bool pin) {
    cfg.h_fast = h_fast;
    cfg.pin = pin;
    return cfg;
}

VUWord VUWord::pack(Fixed v, Fixed u) {
    if (v.fmt != Q7_8 || u.fmt != Q7_8)
        throw std::invalid_argument("VUWord: v and u must be Q7.8");
    return pack_raw(static_cast<int16_t>(v.raw), static_cast<int16_t>(u.raw));
}

VUWord VUWord::pack_raw(int16_t v_raw, int16_t u_raw) {
    return VUWord{(static_cast<uint32_t>(static_cast<uint16_t>(v_raw)) << 16) |
                  static_cast<uint16_t>(u_raw)};
}

StepResult izh_step(VUWord vu, Fixed i_syn, const NmConfig& cfg) {
    if (i_syn.fmt != Q15_16)
        throw std::invalid_argument("izh_step: i_syn must be Q15.16");

    const int16_t v = vu.v_raw();
    const int16_t u = vu.u_raw();
    const NeuronParams& p = cfg.params;

    if (v > kVThRaw) {
        // Reset: v <- c, u <- u + d with d aligned to Q7.8 once so the
        // increment is the same quantized amount for every u.
        const int16_t d_q78 = sat16(rne_shift(p.d.raw, 3));
        const int16_t u_next = sat16(static_cast<int64_t>(u) + d_q78);
        return StepResult{VUWord::pack_raw(static_cast<int16_t>(p.c.raw), u_next), true};
    }

    const int h_shift = cfg.h_shift();

    // dv = 0.04 v^2 + 5 v + 140 - u + i_syn, accumulated at 37 fraction
    // bits; multiplying by h = 2^-h_shift just deepens the binary point,
    // so the chain is exact until the final conversion.
    int64_t acc = kCoeffSq * (static_cast<int64_t>(v) * v); // frac 21+16 = 37
    acc += (INT64_C(5) * v) << 29;                          // 5v, frac 8 -> 37
    acc += INT64_C(140) << 37;
    acc -= static_cast<int64_t>(u) << 29;
    acc += static_cast<int64_t>(i_syn.raw) << 21; // frac 16 -> 37
    const int fv = 37 + h_shift;
    acc += static_cast<int64_t>(v) << (fv - 8);
    int16_t v_next = sat16(rne_shift(acc, fv - 8));

    // du = a (b v - u), at 30 fraction bits before the h shift.
    int64_t bv = static_cast<int64_t>(p.b.raw) * v;       // frac 19
    int64_t rec = bv - (static_cast<int64_t>(u) << 11);   // frac 19
    int64_t du = static_cast<int64_t>(p.a.raw) * rec;     // frac 30
    const int fu = 30 + h_shift;
    du += static_cast<int64_t>(u) << (fu - 8);
    const int16_t u_next = sat16(rne_shift(du, fu - 8));

    if (cfg.pin && v_next < p.c.raw)
        v_next = static_cast<int16_t>(p.c.raw);

    return StepResult{VUWord::pack_raw(v_next, u_next), false};
}

OracleResult izh_step_oracle(double v, double u, double i_syn, const OracleParams& p, double h,
                             bool pin) {
    if (v > 30.0)
        return OracleResult{p.c, u + p.d, true};
    double v_next = (0.04 * v * v + 5.0 * v + 140.0 - u + i_syn) * h + v;
    const double u_next = p.a * h * (p.b * v - u) + u;
    if (pin && v_next < p.c)
        v_next = p.c;
    return OracleResult{v_next, u_next, false};
}

void write_test_vectors(std::ostream& os, const std::vector<TestVector>& vecs) {
    char buf[96];
    for (const TestVector& t : vecs) {
        const uint32_t ba = (static_cast<uint32_t>(static_cast<uint16_t>(t.cfg.params.b.raw)) << 16) |
                            static_cast<uint16_t>(t.cfg.params.a.raw);
        const uint32_t dc = (static_cast<uint32_t>(static_cast<uint16_t>(t.cfg.params.d.raw)) << 16) |
                            static_cast<uint16_t>(t.cfg.params.c.raw);
        const unsigned flags = (t.cfg.h_fast ? 1u : 0u) | (t.cfg.pin ? 2u : 0u);
        std::snprintf(buf, sizeof buf, "%08x %08x %08x:%08x:%x %08x %d\n", t.vu_in.word,
                      static_cast<uint32_t>(t.i_syn_raw), ba, dc, flags, t.vu_out.word,
                      t.spike ? 1 : 0);
        os << buf;
    }
}

std::vector<TestVector> read_test_vectors(std::istream& is) {
    std::vector<TestVector> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string vu_in, isyn, cfg, vu_out;
        int spike = 0;
        if (!(ls >> vu_in >> isyn >> cfg >> vu_out >> spike))
            throw std::runtime_error("malformed test-vector line: " + line);
        uint32_t ba = 0, dc = 0;
        unsigned flags = 0;
        if (std::sscanf(cfg.c_str(), "%x:%x:%x", &ba, &dc, &flags) != 3)
            throw std::runtime_error("malformed cfg field: " + cfg);
        TestVector t;
        t.vu_in.word = static_cast<uint32_t>(std::stoul(vu_in, nullptr, 16));
        t.i_syn_raw = static_cast<int32_t>(std::stoul(isyn, nullptr, 16));
        t.cfg.params.a = Fixed{static_cast<int16_t>(ba & 0xffff), Q4_11};
        t.cfg.params.b = Fixed{static_cast<int16_t>(ba >> 16), Q4_11};
        t.cfg.params.c = Fixed{static_cast<int16_t>(dc & 0xffff), Q7_8};
        t.cfg.params.d = Fixed{static_cast<int16_t>(dc >> 16), Q4_11};
        t.cfg.h_fast = flags & 1;
        t.cfg.pin = flags & 2;
        t.vu_out.word = static_cast<uint32_t>(std::stoul(vu_out, nullptr, 16));
        t.spike = spike != 0;
        out.push_back(t);
    }
    return out;
}

} // namespace nmrv
