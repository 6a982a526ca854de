#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nmrv/netsim.hpp"

namespace nmrv {

// 81 cells, row-major; 0 = blank, 1..9 = clue.
struct SudokuPuzzle {
    std::array<uint8_t, 81> cells{};

    // Parses an 81-character line (digits, '.' or '0' for blanks) and
    // checks that the clues are mutually consistent.
    static SudokuPuzzle parse_line(const std::string& line);

    bool complete() const;
};

using SudokuGrid = std::array<uint8_t, 81>;

// Tuned drive constants for the winner-takes-all network, kept in a
// versioned key-value file so runs are reproducible.
struct SudokuTuning {
    int version = 1;
    double inhib_weight = -60.0;
    double clue_bias = 24.0;
    double noise_hi = 8.0;
    int decay_divider = 2;
    bool h_fast = false;
    int substeps = 2;
    int window_ticks = 50;
    int stability_windows = 3;
    uint32_t max_ticks = 50000;
    double a = 0.1, b = 0.2, c = -65.0, d = 2.0;

    static SudokuTuning defaults() { return SudokuTuning{}; }
    static SudokuTuning load(std::istream& is);
    void save(std::ostream& os) const;
};

// Neuron index for (row, col, digit): one nine-neuron array per cell.
inline int sudoku_neuron(int row, int col, int digit) {
    return (row * 9 + col) * 9 + (digit - 1);
}

// 729-neuron WTA network: every neuron inhibits the other digits of its
// cell and the same digit in its row, column and 3x3 box (28 targets).
// Clue neurons get a constant bias, their in-cell competitors no drive
// at all, all other neurons uniform noise.
NetworkSpec build_sudoku(const SudokuPuzzle& p, const SudokuTuning& tuning, uint64_t seed);

// The digit whose neuron spiked most per cell over [t_begin, t_end);
// nullopt when some cell had no spikes at all.
std::optional<SudokuGrid> extract_solution(const SpikeRaster& r, uint32_t t_begin, uint32_t t_end,
                                           const SudokuPuzzle& p);

// Completeness, row/column/box uniqueness, clue preservation.
bool validate_solution(const SudokuGrid& grid, const SudokuPuzzle& p);

struct SudokuSolveResult {
    bool solved = false;
    SudokuGrid grid{};
    uint32_t ticks = 0; // ticks consumed (to convergence, or the cap)
};

// Runs the network until the extracted grid is complete, valid and
// stable for `stability_windows` consecutive windows, or the tick cap.
SudokuSolveResult solve_sudoku(const SudokuPuzzle& p, const SudokuTuning& tuning, uint64_t seed);

// One puzzle per 81-character line; malformed lines are reported and
// skipped.
struct PuzzleFile {
    std::vector<SudokuPuzzle> puzzles;
    struct Error {
        int line;
        std::string message;
    };
    std::vector<Error> errors;
};

PuzzleFile load_puzzle_file(std::istream& is);

} // namespace nmrv
