#include "nmrv/sudoku.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nmrv {

namespace {

bool clues_consistent(const std::array<uint8_t, 81>& cells) {
    for (int unit = 0; unit < 27; ++unit) {
        bool seen[10] = {};
        for (int k = 0; k < 9; ++k) {
            int idx;
            if (unit < 9) { // row
                idx = unit * 9 + k;
            } else if (unit < 18) { // column
                idx = k * 9 + (unit - 9);
            } else { // box
                const int box = unit - 18;
                const int r0 = box / 3 * 3, c0 = box % 3 * 3;
                idx = (r0 + k / 3) * 9 + c0 + k % 3;
            }
            const uint8_t v = cells[static_cast<size_t>(idx)];
            if (v == 0)
                continue;
            if (seen[v])
                return false;
            seen[v] = true;
        }
    }
    return true;
}

} // namespace

SudokuPuzzle SudokuPuzzle::parse_line(const std::string& line) {
    if (line.size() != 81)
        throw std::invalid_argument("puzzle line must be 81 characters, got " +
                                    std::to_string(line.size()));
    SudokuPuzzle p;
    for (size_t i = 0; i < 81; ++i) {
        const char c = line[i];
        if (c == '.' || c == '0')
            p.cells[i] = 0;
        else if (c >= '1' && c <= '9')
            p.cells[i] = static_cast<uint8_t>(c - '0');
        else
            throw std::invalid_argument(std::string("bad puzzle character '") + c + "'");
    }
    if (!clues_consistent(p.cells))
        throw std::invalid_argument("puzzle clues are inconsistent");
    return p;
}

bool SudokuPuzzle::complete() const {
    return std::all_of(cells.begin(), cells.end(), [](uint8_t v) { return v != 0; });
}

SudokuTuning SudokuTuning::load(std::istream& is) {
    SudokuTuning t;
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("bad tuning line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end())
            throw std::runtime_error(std::string("tuning key missing: ") + key);
        return it->second;
    };
    t.version = std::stoi(get("version"));
    t.inhib_weight = std::stod(get("inhib_weight"));
    t.clue_bias = std::stod(get("clue_bias"));
    t.noise_hi = std::stod(get("noise_hi"));
    t.decay_divider = std::stoi(get("decay_divider"));
    t.h_fast = std::stoi(get("h_fast")) != 0;
    t.substeps = std::stoi(get("substeps"));
    t.window_ticks = std::stoi(get("window_ticks"));
    t.stability_windows = std::stoi(get("stability_windows"));
    t.max_ticks = static_cast<uint32_t>(std::stoul(get("max_ticks")));
    t.a = std::stod(get("a"));
    t.b = std::stod(get("b"));
    t.c = std::stod(get("c"));
    t.d = std::stod(get("d"));
    return t;
}

void SudokuTuning::save(std::ostream& os) const {
    os << "version=" << version << "\n"
       << "inhib_weight=" << inhib_weight << "\n"
       << "clue_bias=" << clue_bias << "\n"
       << "noise_hi=" << noise_hi << "\n"
       << "decay_divider=" << decay_divider << "\n"
       << "h_fast=" << (h_fast ? 1 : 0) << "\n"
       << "substeps=" << substeps << "\n"
       << "window_ticks=" << window_ticks << "\n"
       << "stability_windows=" << stability_windows << "\n"
       << "max_ticks=" << max_ticks << "\n"
       << "a=" << a << "\n"
       << "b=" << b << "\n"
       << "c=" << c << "\n"
       << "d=" << d << "\n";
}

NetworkSpec build_sudoku(const SudokuPuzzle& p, const SudokuTuning& tuning, uint64_t seed) {
    if (!clues_consistent(p.cells))
        throw std::invalid_argument("puzzle clues are inconsistent");

    constexpr int kN = 729;
    NetworkSpec spec;
    spec.n = kN;
    spec.substeps = tuning.substeps;
    spec.h_fast = tuning.h_fast;
    spec.pin = true;
    spec.decay_divider = tuning.decay_divider;
    spec.v0 = tuning.c;
    spec.input_seed = seed;

    const RealParams rp{tuning.a, tuning.b, tuning.c, tuning.d};
    const NeuronParams qp = make_params(rp.a, rp.b, rp.c, rp.d);
    spec.params.assign(kN, qp);
    spec.params_real.assign(kN, rp);
    spec.u0.assign(kN, rp.b * spec.v0);

    spec.weights_q.assign(static_cast<size_t>(kN) * kN, 0);
    spec.weights_real.assign(static_cast<size_t>(kN) * kN, 0.0);
    const int32_t w_q = saturate_raw(
        static_cast<int64_t>(std::nearbyint(tuning.inhib_weight * 65536.0)), Q15_16);
    for (int row = 0; row < 9; ++row) {
        for (int col = 0; col < 9; ++col) {
            for (int digit = 1; digit <= 9; ++digit) {
                const int src = sudoku_neuron(row, col, digit);
                std::set<int> targets;
                for (int other = 1; other <= 9; ++other)
                    if (other != digit)
                        targets.insert(sudoku_neuron(row, col, other));
                for (int k = 0; k < 9; ++k) {
                    if (k != col)
                        targets.insert(sudoku_neuron(row, k, digit));
                    if (k != row)
                        targets.insert(sudoku_neuron(k, col, digit));
                }
                const int r0 = row / 3 * 3, c0 = col / 3 * 3;
                for (int r = r0; r < r0 + 3; ++r)
                    for (int c = c0; c < c0 + 3; ++c)
                        if (r != row || c != col)
                            targets.insert(sudoku_neuron(r, c, digit));
                for (int dst : targets) {
                    spec.weights_real[static_cast<size_t>(src) * kN + dst] = tuning.inhib_weight;
                    spec.weights_q[static_cast<size_t>(src) * kN + dst] = w_q;
                }
            }
        }
    }

    spec.drive.assign(kN, InputDrive{});
    for (int cell = 0; cell < 81; ++cell) {
        const int row = cell / 9, col = cell % 9;
        const uint8_t clue = p.cells[static_cast<size_t>(cell)];
        for (int digit = 1; digit <= 9; ++digit) {
            InputDrive& d = spec.drive[static_cast<size_t>(sudoku_neuron(row, col, digit))];
            if (clue == 0)
                d.uniform_hi = tuning.noise_hi;
            else if (digit == clue)
                d.bias = tuning.clue_bias;
            // in-cell competitors of a clue stay undriven
        }
    }
    return spec;
}

std::optional<SudokuGrid> extract_solution(const SpikeRaster& r, uint32_t t_begin, uint32_t t_end,
                                           const SudokuPuzzle&) {
    std::array<uint32_t, 729> counts{};
    auto lo = std::lower_bound(r.events.begin(), r.events.end(), std::make_pair(t_begin, 0u));
    auto hi = std::lower_bound(r.events.begin(), r.events.end(), std::make_pair(t_end, 0u));
    for (auto it = lo; it != hi; ++it)
        counts[it->second] += 1;

    SudokuGrid grid{};
    for (int cell = 0; cell < 81; ++cell) {
        uint32_t best_count = 0;
        int best_digit = 0;
        for (int digit = 1; digit <= 9; ++digit) {
            const uint32_t c = counts[static_cast<size_t>(cell * 9 + digit - 1)];
            if (c > best_count) {
                best_count = c;
                best_digit = digit;
            }
        }
        if (best_digit == 0)
            return std::nullopt; // a silent cell: nothing to induce
        grid[static_cast<size_t>(cell)] = static_cast<uint8_t>(best_digit);
    }
    return grid;
}

bool validate_solution(const SudokuGrid& grid, const SudokuPuzzle& p) {
    for (int i = 0; i < 81; ++i) {
        if (grid[static_cast<size_t>(i)] < 1 || grid[static_cast<size_t>(i)] > 9)
            return false;
        if (p.cells[static_cast<size_t>(i)] != 0 && grid[static_cast<size_t>(i)] != p.cells[static_cast<size_t>(i)])
            return false;
    }
    std::array<uint8_t, 81> cells;
    std::copy(grid.begin(), grid.end(), cells.begin());
    return clues_consistent(cells);
}

SudokuSolveResult solve_sudoku(const SudokuPuzzle& p, const SudokuTuning& tuning, uint64_t seed) {
    const NetworkSpec spec = build_sudoku(p, tuning, seed);
    NetState st = init_state(spec);
    Rng rng(spec.input_seed);
    SpikeRaster raster;

    SudokuSolveResult result;
    std::optional<SudokuGrid> stable_grid;
    int streak = 0;
    const uint32_t w = static_cast<uint32_t>(tuning.window_ticks);
    for (uint32_t t = 0; t < tuning.max_ticks; ++t) {
        for (int i : step_network(spec, st, rng))
            raster.events.emplace_back(t, static_cast<uint32_t>(i));
        if ((t + 1) % w != 0)
            continue;
        const auto grid = extract_solution(raster, t + 1 - w, t + 1, p);
        if (grid && validate_solution(*grid, p)) {
            if (stable_grid && *stable_grid == *grid)
                ++streak;
            else
                streak = 1;
            stable_grid = grid;
            if (streak >= tuning.stability_windows) {
                result.solved = true;
                result.grid = *grid;
                result.ticks = t + 1;
                return result;
            }
        } else {
            streak = 0;
            stable_grid.reset();
        }
    }
    result.ticks = tuning.max_ticks;
    return result;
}

PuzzleFile load_puzzle_file(std::istream& is) {
    PuzzleFile out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        try {
            out.puzzles.push_back(SudokuPuzzle::parse_line(line));
        } catch (const std::exception& e) {
            out.errors.push_back({line_no, e.what()});
        }
    }
    return out;
}

} // namespace nmrv
