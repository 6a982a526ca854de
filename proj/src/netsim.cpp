#include "nmrv/netsim.hpp"

#include <algorithm>
#include <cmath>

namespace nmrv {

namespace {

int32_t quantize_q1516(double x) {
    const double scaled = std::nearbyint(x * 65536.0);
    if (scaled <= static_cast<double>(INT32_MIN))
        return INT32_MIN;
    if (scaled >= static_cast<double>(INT32_MAX))
        return INT32_MAX;
    return static_cast<int32_t>(scaled);
}

int32_t sat_add_q1516(int32_t a, int32_t b) {
    return saturate_raw(static_cast<int64_t>(a) + b, Q15_16);
}

// External drive for one neuron this tick; draws must happen in the same
// order in both simulation paths.
double draw_input(const InputDrive& d, Rng& rng) {
    double x = d.bias;
    if (d.gauss_scale != 0.0)
        x += d.gauss_scale * rng.gaussian();
    if (d.uniform_hi != 0.0)
        x += rng.uniform(d.uniform_hi);
    return x;
}

} // namespace

NetState init_state(const NetworkSpec& spec) {
    NetState st;
    st.vu.reserve(static_cast<size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i)
        st.vu.push_back(VUWord::pack(from_real(spec.v0, Q7_8), from_real(spec.u0[static_cast<size_t>(i)], Q7_8)));
    st.i_syn.assign(static_cast<size_t>(spec.n), 0);
    st.fired_prev.assign(static_cast<size_t>(spec.n), 0);
    return st;
}

OracleNetState init_oracle_state(const NetworkSpec& spec) {
    OracleNetState st;
    st.v.assign(static_cast<size_t>(spec.n), spec.v0);
    st.u = spec.u0;
    st.i_syn.assign(static_cast<size_t>(spec.n), 0.0);
    st.fired_prev.assign(static_cast<size_t>(spec.n), 0);
    return st;
}

std::vector<int> step_network(const NetworkSpec& spec, NetState& st, Rng& input_rng) {
    const int n = spec.n;
    if (spec.decay_divider) {
        const DividerSelect d(*spec.decay_divider);
        for (int i = 0; i < n; ++i)
            st.i_syn[static_cast<size_t>(i)] = decay_step(st.i_syn[static_cast<size_t>(i)], d, spec.h_fast);
    } else {
        std::fill(st.i_syn.begin(), st.i_syn.end(), 0);
    }
    for (int i = 0; i < n; ++i) {
        const InputDrive& d = spec.drive[static_cast<size_t>(i)];
        if (d.any())
            st.i_syn[static_cast<size_t>(i)] =
                sat_add_q1516(st.i_syn[static_cast<size_t>(i)], quantize_q1516(draw_input(d, input_rng)));
    }
    for (int j = 0; j < n; ++j) {
        if (!st.fired_prev[static_cast<size_t>(j)])
            continue;
        const int32_t* col = &spec.weights_q[static_cast<size_t>(j) * n];
        for (int i = 0; i < n; ++i)
            st.i_syn[static_cast<size_t>(i)] = sat_add_q1516(st.i_syn[static_cast<size_t>(i)], col[i]);
    }

    std::vector<int> fired;
    std::fill(st.fired_prev.begin(), st.fired_prev.end(), 0);
    for (int i = 0; i < n; ++i) {
        const NmConfig cfg{spec.params[static_cast<size_t>(i)], spec.h_fast, spec.pin};
        const Fixed isyn{st.i_syn[static_cast<size_t>(i)], Q15_16};
        for (int s = 0; s < spec.substeps; ++s) {
            const StepResult r = izh_step(st.vu[static_cast<size_t>(i)], isyn, cfg);
            st.vu[static_cast<size_t>(i)] = r.vu;
            if (r.spike) {
                fired.push_back(i);
                st.fired_prev[static_cast<size_t>(i)] = 1;
                break;
            }
        }
    }
    ++st.t;
    return fired;
}

std::vector<int> step_network_oracle(const NetworkSpec& spec, OracleNetState& st, Rng& input_rng) {
    const int n = spec.n;
    const double h = spec.h_fast ? 0.125 : 0.5;
    if (spec.decay_divider) {
        const double d = *spec.decay_divider;
        for (int i = 0; i < n; ++i)
            st.i_syn[static_cast<size_t>(i)] -= st.i_syn[static_cast<size_t>(i)] / d * h;
    } else {
        std::fill(st.i_syn.begin(), st.i_syn.end(), 0.0);
    }
    for (int i = 0; i < n; ++i) {
        const InputDrive& d = spec.drive[static_cast<size_t>(i)];
        if (d.any())
            st.i_syn[static_cast<size_t>(i)] += draw_input(d, input_rng);
    }
    for (int j = 0; j < n; ++j) {
        if (!st.fired_prev[static_cast<size_t>(j)])
            continue;
        const double* col = &spec.weights_real[static_cast<size_t>(j) * n];
        for (int i = 0; i < n; ++i)
            st.i_syn[static_cast<size_t>(i)] += col[i];
    }

    std::vector<int> fired;
    std::fill(st.fired_prev.begin(), st.fired_prev.end(), 0);
    for (int i = 0; i < n; ++i) {
        const RealParams& p = spec.params_real[static_cast<size_t>(i)];
        const OracleParams op{p.a, p.b, p.c, p.d};
        for (int s = 0; s < spec.substeps; ++s) {
            const OracleResult r = izh_step_oracle(st.v[static_cast<size_t>(i)], st.u[static_cast<size_t>(i)],
                                                   st.i_syn[static_cast<size_t>(i)], op, h, spec.pin);
            st.v[static_cast<size_t>(i)] = r.v;
            st.u[static_cast<size_t>(i)] = r.u;
            if (r.spike) {
                fired.push_back(i);
                st.fired_prev[static_cast<size_t>(i)] = 1;
                break;
            }
        }
    }
    ++st.t;
    return fired;
}

size_t SpikeRaster::count_in(uint32_t t_begin, uint32_t t_end) const {
    auto lo = std::lower_bound(events.begin(), events.end(), std::make_pair(t_begin, 0u));
    auto hi = std::lower_bound(events.begin(), events.end(), std::make_pair(t_end, 0u));
    return static_cast<size_t>(hi - lo);
}

SpikeRaster run_simulation(const NetworkSpec& spec, uint32_t ticks, SimMode mode) {
    Rng rng(spec.input_seed);
    SpikeRaster raster;
    if (mode == SimMode::Fixed) {
        NetState st = init_state(spec);
        for (uint32_t t = 0; t < ticks; ++t)
            for (int i : step_network(spec, st, rng))
                raster.events.emplace_back(t, static_cast<uint32_t>(i));
    } else {
        OracleNetState st = init_oracle_state(spec);
        for (uint32_t t = 0; t < ticks; ++t)
            for (int i : step_network_oracle(spec, st, rng))
                raster.events.emplace_back(t, static_cast<uint32_t>(i));
    }
    return raster;
}

std::vector<double> isi_histogram(const SpikeRaster& r, double bin_ms, double max_ms) {
    const size_t nbins = static_cast<size_t>(std::ceil(max_ms / bin_ms));
    std::vector<double> hist(nbins, 0.0);
    uint32_t max_neuron = 0;
    for (const auto& [t, i] : r.events)
        max_neuron = std::max(max_neuron, i);
    std::vector<int64_t> last(max_neuron + 1, -1);
    size_t total = 0;
    for (const auto& [t, i] : r.events) {
        if (last[i] >= 0) {
            const double isi = static_cast<double>(t - static_cast<uint64_t>(last[i]));
            const size_t bin = static_cast<size_t>(isi / bin_ms);
            if (bin < nbins) {
                hist[bin] += 1.0;
                ++total;
            }
        }
        last[i] = t;
    }
    if (total > 0)
        for (double& h : hist)
            h /= static_cast<double>(total);
    return hist;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    const size_t n = std::max(a.size(), b.size());
    for (size_t i = 0; i < n; ++i)
        d += std::abs((i < a.size() ? a[i] : 0.0) - (i < b.size() ? b[i] : 0.0));
    return d;
}

NetworkSpec build_8020(uint64_t seed) {
    constexpr int kN = 1000;
    constexpr int kExc = 800;
    NetworkSpec spec;
    spec.n = kN;
    spec.n_excitatory = kExc;
    spec.substeps = 2;
    spec.h_fast = false;
    spec.pin = false;
    spec.v0 = -65.0;

    Rng rng(seed);
    spec.params.reserve(kN);
    spec.params_real.reserve(kN);
    spec.u0.reserve(kN);
    spec.drive.reserve(kN);
    for (int i = 0; i < kN; ++i) {
        const double r = rng.uniform();
        RealParams p{};
        if (i < kExc) {
            p = {0.02, 0.2, -65.0 + 15.0 * r * r, 8.0 - 6.0 * r * r};
            spec.drive.push_back(InputDrive{0.0, 5.0, 0.0});
        } else {
            p = {0.02 + 0.08 * r, 0.25 - 0.05 * r, -65.0, 2.0};
            spec.drive.push_back(InputDrive{0.0, 2.0, 0.0});
        }
        spec.params_real.push_back(p);
        spec.params.push_back(make_params(p.a, p.b, p.c, p.d));
        spec.u0.push_back(p.b * spec.v0);
    }
    spec.weights_q.resize(static_cast<size_t>(kN) * kN);
    spec.weights_real.resize(static_cast<size_t>(kN) * kN);
    for (int j = 0; j < kN; ++j) {
        for (int i = 0; i < kN; ++i) {
            const double u = rng.uniform();
            const double w = j < kExc ? 0.5 * u : -u;
            spec.weights_real[static_cast<size_t>(j) * kN + i] = w;
            spec.weights_q[static_cast<size_t>(j) * kN + i] = quantize_q1516(w);
        }
    }
    spec.input_seed = rng.next_u64();
    return spec;
}

} // namespace nmrv
