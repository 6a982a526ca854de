#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nmrv/dcu.hpp"
#include "nmrv/npu.hpp"
#include "nmrv/rng.hpp"

namespace nmrv {

// Per-neuron external current, drawn fresh every 1 ms tick:
// bias + gauss_scale * N(0,1) + U(0, uniform_hi).
struct InputDrive {
    double bias = 0.0;
    double gauss_scale = 0.0;
    double uniform_hi = 0.0;

    bool any() const { return bias != 0.0 || gauss_scale != 0.0 || uniform_hi != 0.0; }
};

struct RealParams {
    double a, b, c, d;
};

// Network topology and constants, kept both in the instruction-set
// Q-formats (fixed path) and as the raw construction values (double
// oracle path). Weights are column-major: column j holds the fan-out of
// presynaptic neuron j.
struct NetworkSpec {
    int n = 0;
    std::vector<NeuronParams> params;
    std::vector<RealParams> params_real;
    std::vector<int32_t> weights_q; // Q15.16 raw, [j * n + i]
    std::vector<double> weights_real;
    std::vector<InputDrive> drive;
    std::optional<int> decay_divider; // 2..8; absent: currents rebuilt each tick
    int substeps = 2;
    bool h_fast = false;
    bool pin = false;
    double v0 = -65.0;
    std::vector<double> u0;
    int n_excitatory = 0;
    uint64_t input_seed = 0;

    int32_t weight_q(int post, int pre) const { return weights_q[static_cast<size_t>(pre) * n + post]; }
    double weight_real(int post, int pre) const {
        return weights_real[static_cast<size_t>(pre) * n + post];
    }
};

struct NetState {
    std::vector<VUWord> vu;
    std::vector<int32_t> i_syn; // Q15.16 raw
    std::vector<uint8_t> fired_prev;
    uint64_t t = 0;
};

struct OracleNetState {
    std::vector<double> v;
    std::vector<double> u;
    std::vector<double> i_syn;
    std::vector<uint8_t> fired_prev;
    uint64_t t = 0;
};

NetState init_state(const NetworkSpec& spec);
OracleNetState init_oracle_state(const NetworkSpec& spec);

// Advances one 1 ms tick: decay (or clear) the synaptic accumulators,
// add external drive and the previous tick's spike fan-in (saturating
// Q15.16, ascending presynaptic index), then run `substeps` neuron
// updates; a spiking neuron skips its remaining substeps. Returns the
// indices that fired, ascending. `input_rng` must be the stream seeded
// from spec.input_seed and shared across ticks.
std::vector<int> step_network(const NetworkSpec& spec, NetState& st, Rng& input_rng);
std::vector<int> step_network_oracle(const NetworkSpec& spec, OracleNetState& st, Rng& input_rng);

// (tick, neuron) events, sorted by tick then neuron index.
struct SpikeRaster {
    std::vector<std::pair<uint32_t, uint32_t>> events;

    size_t count_in(uint32_t t_begin, uint32_t t_end) const;
};

enum class SimMode { Fixed, Oracle };

SpikeRaster run_simulation(const NetworkSpec& spec, uint32_t ticks, SimMode mode);

// Pooled per-neuron inter-spike intervals, binned at bin_ms up to max_ms
// and normalized to unit mass (all-zero when there are no intervals).
std::vector<double> isi_histogram(const SpikeRaster& r, double bin_ms, double max_ms);

double l1_distance(const std::vector<double>& a, const std::vector<double>& b);

// The 1000-neuron cortical benchmark: 800 excitatory neurons
// (a=0.02, b=0.2, c=-65+15r^2, d=8-6r^2), 200 inhibitory
// (a=0.02+0.08r, b=0.25-0.05r, c=-65, d=2), all-to-all weights
// (0.5 U(0,1) excitatory, -U(0,1) inhibitory columns), Gaussian thalamic
// drive (5 exc / 2 inh), two 0.5 ms substeps per tick, no decay.
NetworkSpec build_8020(uint64_t seed);

} // namespace nmrv
