#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "nmrv/netsim.hpp"
#include "nmrv/sudoku.hpp"
#include "sudoku_oracle.hpp"

using namespace nmrv;

TEST_CASE("build_8020 reproduces the documented parameter formulas") {
    const NetworkSpec spec = build_8020(42);
    REQUIRE(spec.n == 1000);
    REQUIRE(spec.n_excitatory == 800);
    CHECK(spec.substeps == 2);
    CHECK(!spec.h_fast);
    CHECK(!spec.pin);
    CHECK(!spec.decay_divider.has_value());

    // Re-derive the per-neuron draws: one uniform per neuron, in index
    // order, from the seed stream.
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const double r = rng.uniform();
        const RealParams& p = spec.params_real[static_cast<size_t>(i)];
        if (i < 800) {
            CHECK(p.a == 0.02);
            CHECK(p.b == 0.2);
            CHECK(p.c == -65.0 + 15.0 * r * r);
            CHECK(p.d == 8.0 - 6.0 * r * r);
        } else {
            CHECK(p.a == 0.02 + 0.08 * r);
            CHECK(p.b == 0.25 - 0.05 * r);
            CHECK(p.c == -65.0);
            CHECK(p.d == 2.0);
        }
        CHECK(spec.params[static_cast<size_t>(i)].a.raw == from_real(p.a, Q4_11).raw);
        CHECK(spec.params[static_cast<size_t>(i)].c.raw == from_real(p.c, Q7_8).raw);
        CHECK(spec.u0[static_cast<size_t>(i)] == p.b * -65.0);
    }
}

TEST_CASE("build_8020 weight signs per population column") {
    const NetworkSpec spec = build_8020(7);
    for (int j = 0; j < 1000; j += 13) {
        for (int i = 0; i < 1000; i += 7) {
            const int32_t w = spec.weight_q(i, j);
            const double wr = spec.weight_real(i, j);
            if (j < 800) {
                CHECK(w >= 0);
                CHECK(wr >= 0.0);
                CHECK(wr <= 0.5);
            } else {
                CHECK(w <= 0);
                CHECK(wr >= -1.0);
            }
        }
    }
}

TEST_CASE("build_8020 is deterministic in the seed") {
    const NetworkSpec a = build_8020(123);
    const NetworkSpec b = build_8020(123);
    const NetworkSpec c = build_8020(124);
    CHECK(a.input_seed == b.input_seed);
    CHECK(a.weights_q == b.weights_q);
    CHECK(a.input_seed != c.input_seed);
    bool all_equal = true;
    for (size_t k = 0; k < a.weights_q.size(); k += 997)
        all_equal = all_equal && a.weights_q[k] == c.weights_q[k];
    CHECK(!all_equal);
}

namespace {

NetworkSpec tiny_spec(int n) {
    NetworkSpec spec;
    spec.n = n;
    spec.substeps = 2;
    spec.v0 = -65.0;
    const RealParams rs{0.02, 0.2, -65.0, 8.0};
    spec.params.assign(static_cast<size_t>(n), make_params(rs.a, rs.b, rs.c, rs.d));
    spec.params_real.assign(static_cast<size_t>(n), rs);
    spec.u0.assign(static_cast<size_t>(n), rs.b * spec.v0);
    spec.weights_q.assign(static_cast<size_t>(n) * n, 0);
    spec.weights_real.assign(static_cast<size_t>(n) * n, 0.0);
    spec.drive.assign(static_cast<size_t>(n), InputDrive{});
    spec.input_seed = 99;
    return spec;
}

} // namespace

TEST_CASE("decoupled quiet network stays silent and relaxes") {
    NetworkSpec spec = tiny_spec(3);
    NetState st = init_state(spec);
    Rng rng(spec.input_seed);
    int spikes = 0;
    for (int t = 0; t < 100; ++t)
        spikes += static_cast<int>(step_network(spec, st, rng).size());
    CHECK(spikes == 0);
    // v0 = -65 with u = -13 sits above the -70 rest: v must drift down.
    const double v_end = st.vu[0].v().to_real();
    CHECK(v_end < -65.0);
    CHECK(v_end > -75.0);
}

TEST_CASE("constant drive produces periodic spiking near the oracle rate") {
    NetworkSpec spec = tiny_spec(1);
    spec.drive[0].bias = 10.0;
    const SpikeRaster fx = run_simulation(spec, 2000, SimMode::Fixed);
    const SpikeRaster od = run_simulation(spec, 2000, SimMode::Oracle);
    REQUIRE(fx.events.size() > 10);
    REQUIRE(od.events.size() > 10);
    const double rate_fx = static_cast<double>(fx.events.size()) / 2.0;  // Hz
    const double rate_od = static_cast<double>(od.events.size()) / 2.0;
    CHECK(std::abs(rate_fx - rate_od) / rate_od < 0.15);

    // Tonic regime: intervals take at most a couple of adjacent values,
    // so the two heaviest bins carry nearly all the mass.
    auto hist = isi_histogram(fx, 1.0, 200.0);
    std::sort(hist.begin(), hist.end(), std::greater<>());
    CHECK(hist[0] + hist[1] > 0.9);
}

TEST_CASE("one presynaptic spike adds exactly the quantized weight") {
    NetworkSpec spec = tiny_spec(2);
    spec.weights_q[0 * 2 + 1] = 6 << 16; // 0 -> 1, +6.0
    spec.weights_real[0 * 2 + 1] = 6.0;
    NetState st = init_state(spec);
    st.fired_prev[0] = 1;
    Rng rng(1);
    step_network(spec, st, rng);
    CHECK(st.i_syn[1] == (6 << 16));
    CHECK(st.i_syn[0] == 0);
}

TEST_CASE("weight-sign preservation under accumulation") {
    const NetworkSpec spec = build_8020(5);
    NetState st = init_state(spec);
    // Force an excitatory and an inhibitory presynaptic spike and
    // compare accumulator movement against a no-spike baseline.
    NetState base = st;
    NetState moved = st;
    moved.fired_prev[3] = 1;   // excitatory column
    moved.fired_prev[900] = 1; // inhibitory column
    Rng ra(7), rb(7);
    step_network(spec, base, ra);
    step_network(spec, moved, rb);
    for (int i = 0; i < spec.n; ++i) {
        const int64_t delta = static_cast<int64_t>(moved.i_syn[static_cast<size_t>(i)]) -
                              base.i_syn[static_cast<size_t>(i)];
        const int64_t expected = static_cast<int64_t>(spec.weight_q(i, 3)) + spec.weight_q(i, 900);
        if (delta != expected)
            REQUIRE(delta == expected);
    }
}

TEST_CASE("raster is deterministic and well-formed") {
    const NetworkSpec spec = build_8020(2024);
    const SpikeRaster a = run_simulation(spec, 50, SimMode::Fixed);
    const SpikeRaster b = run_simulation(spec, 50, SimMode::Fixed);
    CHECK(a.events == b.events);
    for (size_t k = 1; k < a.events.size(); ++k)
        REQUIRE(a.events[k - 1] < a.events[k]); // sorted, no duplicates
    CHECK(run_simulation(spec, 0, SimMode::Fixed).events.empty());
}

TEST_CASE("isi histogram basics") {
    SpikeRaster r;
    for (uint32_t t = 0; t <= 90; t += 10)
        r.events.emplace_back(t, 0);
    const auto hist = isi_histogram(r, 1.0, 20.0);
    REQUIRE(hist.size() == 20);
    CHECK(hist[10] == 1.0);
    for (size_t k = 0; k < hist.size(); ++k)
        if (k != 10)
            CHECK(hist[k] == 0.0);

    const auto empty = isi_histogram(SpikeRaster{}, 1.0, 20.0);
    CHECK(std::all_of(empty.begin(), empty.end(), [](double m) { return m == 0.0; }));

    CHECK(l1_distance(hist, hist) == 0.0);
    CHECK(l1_distance(hist, empty) == 1.0);
}

TEST_CASE("sudoku puzzle parsing") {
    const std::string blank(81, '.');
    CHECK_NOTHROW(SudokuPuzzle::parse_line(blank));
    CHECK_THROWS(SudokuPuzzle::parse_line(std::string(80, '.')));
    CHECK_THROWS(SudokuPuzzle::parse_line(std::string(81, 'x')));

    std::string conflict(81, '.');
    conflict[0] = '5';
    conflict[1] = '5'; // same row
    CHECK_THROWS(SudokuPuzzle::parse_line(conflict));

    std::istringstream file("# comment\n" + blank + "\n" + std::string(80, '.') + "\n" + conflict +
                            "\n");
    const PuzzleFile pf = load_puzzle_file(file);
    CHECK(pf.puzzles.size() == 1);
    REQUIRE(pf.errors.size() == 2);
    CHECK(pf.errors[0].line == 3);
    CHECK(pf.errors[1].line == 4);
}

TEST_CASE("sudoku network inhibition structure") {
    const SudokuPuzzle empty = SudokuPuzzle::parse_line(std::string(81, '.'));
    const SudokuTuning tuning = SudokuTuning::defaults();
    const NetworkSpec spec = build_sudoku(empty, tuning, 1);
    REQUIRE(spec.n == 729);
    CHECK(spec.pin);

    // Every neuron inhibits exactly 28 targets: 8 in-cell, 20 cross-cell.
    for (int src = 0; src < 729; ++src) {
        int out = 0;
        for (int dst = 0; dst < 729; ++dst) {
            const int32_t w = spec.weight_q(dst, src);
            if (w != 0) {
                CHECK(w < 0);
                ++out;
            }
        }
        if (out != 28)
            REQUIRE(out == 28);
    }

    // The spec'd example neuron (0,0,5): 8 in-cell, 8 row, 8 column and 4
    // box-remainder targets.
    const int src = sudoku_neuron(0, 0, 5);
    std::set<int> expected;
    for (int d = 1; d <= 9; ++d)
        if (d != 5)
            expected.insert(sudoku_neuron(0, 0, d));
    CHECK(expected.size() == 8);
    for (int k = 1; k < 9; ++k) {
        expected.insert(sudoku_neuron(0, k, 5));
        expected.insert(sudoku_neuron(k, 0, 5));
    }
    for (int r = 1; r < 3; ++r)
        for (int c = 1; c < 3; ++c)
            expected.insert(sudoku_neuron(r, c, 5));
    CHECK(expected.size() == 28);
    for (int dst = 0; dst < 729; ++dst) {
        const bool has_edge = spec.weight_q(dst, src) != 0;
        CHECK(has_edge == (expected.count(dst) > 0));
    }
}

TEST_CASE("sudoku drive assignment") {
    std::string line(81, '.');
    line[0] = '5';
    const SudokuPuzzle p = SudokuPuzzle::parse_line(line);
    const SudokuTuning tuning = SudokuTuning::defaults();
    const NetworkSpec spec = build_sudoku(p, tuning, 1);

    CHECK(spec.drive[static_cast<size_t>(sudoku_neuron(0, 0, 5))].bias == tuning.clue_bias);
    CHECK(spec.drive[static_cast<size_t>(sudoku_neuron(0, 0, 5))].uniform_hi == 0.0);
    for (int d = 1; d <= 9; ++d)
        if (d != 5)
            CHECK(!spec.drive[static_cast<size_t>(sudoku_neuron(0, 0, d))].any());
    CHECK(spec.drive[static_cast<size_t>(sudoku_neuron(4, 4, 1))].uniform_hi == tuning.noise_hi);

    // Empty puzzle: all neurons noise-driven, none biased.
    const NetworkSpec free_spec =
        build_sudoku(SudokuPuzzle::parse_line(std::string(81, '.')), tuning, 1);
    for (int i = 0; i < 729; ++i) {
        CHECK(free_spec.drive[static_cast<size_t>(i)].bias == 0.0);
        CHECK(free_spec.drive[static_cast<size_t>(i)].uniform_hi == tuning.noise_hi);
    }
}

TEST_CASE("extract_solution and validate_solution") {
    std::string line(81, '.');
    line[0] = '5';
    const SudokuPuzzle p = SudokuPuzzle::parse_line(line);

    SpikeRaster r;
    // A raster in which cell 0 votes digit 5 and every other cell votes
    // digit (cell % 9) + 1: not a valid sudoku, but structurally complete.
    for (uint32_t t = 0; t < 10; ++t)
        for (int cell = 0; cell < 81; ++cell) {
            const int digit = cell == 0 ? 5 : cell % 9 + 1;
            r.events.emplace_back(t, static_cast<uint32_t>(cell * 9 + digit - 1));
        }
    const auto grid = extract_solution(r, 0, 10, p);
    REQUIRE(grid.has_value());
    CHECK((*grid)[0] == 5);
    CHECK((*grid)[1] == 2);
    CHECK(!validate_solution(*grid, p));

    // A window in which some cell is silent is inconclusive.
    SpikeRaster sparse;
    sparse.events.emplace_back(0, 0);
    CHECK(!extract_solution(sparse, 0, 10, p).has_value());

    // A genuine solution passes and clue changes fail.
    std::array<uint8_t, 81> solved{};
    REQUIRE(oracle::SudokuSolver::count_solutions(p.cells, &solved, 1) >= 1);
    SudokuGrid good;
    std::copy(solved.begin(), solved.end(), good.begin());
    CHECK(validate_solution(good, p));
    SudokuGrid tampered = good;
    tampered[0] = tampered[0] == 9 ? 1 : static_cast<uint8_t>(tampered[0] + 1);
    CHECK(!validate_solution(tampered, p));
    SudokuGrid dup = good;
    dup[1] = good[0]; // duplicate in row 0
    CHECK(!validate_solution(dup, p));
}

TEST_CASE("a fully-clued puzzle converges immediately") {
    std::array<uint8_t, 81> solved{};
    const SudokuPuzzle blank = SudokuPuzzle::parse_line(std::string(81, '.'));
    REQUIRE(oracle::SudokuSolver::count_solutions(blank.cells, &solved, 1) >= 1);
    std::string line;
    for (uint8_t v : solved)
        line += static_cast<char>('0' + v);
    const SudokuPuzzle full = SudokuPuzzle::parse_line(line);
    REQUIRE(full.complete());

    SudokuTuning tuning = SudokuTuning::defaults();
    const SudokuSolveResult res = solve_sudoku(full, tuning, 3);
    REQUIRE(res.solved);
    CHECK(res.ticks == static_cast<uint32_t>(tuning.window_ticks * tuning.stability_windows));
    for (int i = 0; i < 81; ++i)
        CHECK(res.grid[static_cast<size_t>(i)] == full.cells[static_cast<size_t>(i)]);
}

TEST_CASE("tuning file round-trips") {
    const SudokuTuning t = SudokuTuning::defaults();
    std::stringstream ss;
    t.save(ss);
    const SudokuTuning back = SudokuTuning::load(ss);
    CHECK(back.inhib_weight == t.inhib_weight);
    CHECK(back.clue_bias == t.clue_bias);
    CHECK(back.noise_hi == t.noise_hi);
    CHECK(back.decay_divider == t.decay_divider);
    CHECK(back.window_ticks == t.window_ticks);
    CHECK(back.max_ticks == t.max_ticks);
    CHECK(back.a == t.a);
    CHECK(back.d == t.d);
}

TEST_CASE("an easy puzzle is solved and matches the backtracking oracle") {
    // 30 clues; unique solution.
    const std::string line = "53..7....6..195....98....6.8...6...34..8.3..17...2...6.6....28....419..5....8..79";
    const SudokuPuzzle p = SudokuPuzzle::parse_line(line);
    std::array<uint8_t, 81> expect{};
    REQUIRE(oracle::SudokuSolver::count_solutions(p.cells, &expect, 2) == 1);

    const SudokuSolveResult res = solve_sudoku(p, SudokuTuning::defaults(), 17);
    REQUIRE(res.solved);
    CHECK(validate_solution(res.grid, p));
    for (int i = 0; i < 81; ++i)
        REQUIRE(res.grid[static_cast<size_t>(i)] == expect[static_cast<size_t>(i)]);

    const SudokuSolveResult res2 = solve_sudoku(p, SudokuTuning::defaults(), 17);
    CHECK(res2.ticks == res.ticks); // deterministic in the seed
}
