#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nmrv/assembler.hpp"
#include "nmrv/dcu.hpp"
#include "nmrv/machine.hpp"
#include "nmrv/netsim.hpp"
#include "nmrv/sudoku.hpp"

namespace fs = std::filesystem;
using namespace nmrv;

namespace {

constexpr const char* kVersion = "1.0.0";

// Shared ISI binning for the workload reports.
constexpr double kIsiBinMs = 10.0;
constexpr double kIsiMaxMs = 200.0;

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string default_out_dir(const std::string& subcommand) {
    if (const char* env = std::getenv("NMRV_OUT_DIR"))
        return std::string(env) + "/" + subcommand;
    return "out-" + subcommand;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    os << contents;
}

// Every run leaves a manifest with the full configuration, a hash of it,
// and the tool version, so identical configs are diffable.
void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const std::vector<std::pair<std::string, std::string>>& config) {
    std::string body;
    body += "tool=nmrv " + std::string(kVersion) + "\n";
    body += "subcommand=" + subcommand + "\n";
    for (const auto& [k, v] : config)
        body += k + "=" + v + "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    body += "config_hash=" + std::string(buf) + "\n";
    write_file(dir / "manifest.txt", body);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string raster_csv(const SpikeRaster& r) {
    std::string out = "t,neuron\n";
    for (const auto& [t, i] : r.events)
        out += std::to_string(t) + "," + std::to_string(i) + "\n";
    return out;
}

std::string isi_csv(const std::vector<double>& hist) {
    std::string out = "bin_start_ms,mass\n";
    for (size_t k = 0; k < hist.size(); ++k) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g,%.9f\n", static_cast<double>(k) * kIsiBinMs, hist[k]);
        out += buf;
    }
    return out;
}

struct RateSummary {
    size_t exc_spikes = 0;
    size_t inh_spikes = 0;
    double exc_rate_hz = 0.0;
    double inh_rate_hz = 0.0;
};

RateSummary rates(const SpikeRaster& r, const NetworkSpec& spec, uint32_t ticks) {
    RateSummary s;
    for (const auto& [t, i] : r.events) {
        if (static_cast<int>(i) < spec.n_excitatory)
            ++s.exc_spikes;
        else
            ++s.inh_spikes;
    }
    const double seconds = ticks / 1000.0;
    if (seconds > 0) {
        s.exc_rate_hz = static_cast<double>(s.exc_spikes) / spec.n_excitatory / seconds;
        s.inh_rate_hz = static_cast<double>(s.inh_spikes) / (spec.n - spec.n_excitatory) / seconds;
    }
    return s;
}

int cmd_run_8020(uint64_t seed, uint32_t ticks, const std::string& mode, const std::string& out) {
    const fs::path dir(out);
    fs::create_directories(dir);
    write_manifest(dir, "run-8020",
                   {{"seed", std::to_string(seed)},
                    {"ticks", std::to_string(ticks)},
                    {"mode", mode},
                    {"isi_bin_ms", format_double(kIsiBinMs)},
                    {"isi_max_ms", format_double(kIsiMaxMs)}});

    const NetworkSpec spec = build_8020(seed);
    std::string summary;
    summary += "network neurons=" + std::to_string(spec.n) +
               " excitatory=" + std::to_string(spec.n_excitatory) + "\n";
    summary += "ticks=" + std::to_string(ticks) + "\n";

    SpikeRaster fixed_r, oracle_r;
    const bool want_fixed = mode == "fixed" || mode == "both";
    const bool want_oracle = mode == "oracle" || mode == "both";
    if (want_fixed) {
        fixed_r = run_simulation(spec, ticks, SimMode::Fixed);
        write_file(dir / (mode == "both" ? "raster_fixed.csv" : "raster.csv"),
                   raster_csv(fixed_r));
        const auto hist = isi_histogram(fixed_r, kIsiBinMs, kIsiMaxMs);
        write_file(dir / (mode == "both" ? "isi_fixed.csv" : "isi.csv"), isi_csv(hist));
        const RateSummary s = rates(fixed_r, spec, ticks);
        summary += "fixed spikes=" + std::to_string(fixed_r.events.size()) +
                   " exc_rate_hz=" + format_double(s.exc_rate_hz) +
                   " inh_rate_hz=" + format_double(s.inh_rate_hz) + "\n";
    }
    if (want_oracle) {
        oracle_r = run_simulation(spec, ticks, SimMode::Oracle);
        write_file(dir / (mode == "both" ? "raster_oracle.csv" : "raster.csv"),
                   raster_csv(oracle_r));
        const auto hist = isi_histogram(oracle_r, kIsiBinMs, kIsiMaxMs);
        write_file(dir / (mode == "both" ? "isi_oracle.csv" : "isi.csv"), isi_csv(hist));
        const RateSummary s = rates(oracle_r, spec, ticks);
        summary += "oracle spikes=" + std::to_string(oracle_r.events.size()) +
                   " exc_rate_hz=" + format_double(s.exc_rate_hz) +
                   " inh_rate_hz=" + format_double(s.inh_rate_hz) + "\n";
    }
    if (mode == "both") {
        const double d = l1_distance(isi_histogram(fixed_r, kIsiBinMs, kIsiMaxMs),
                                     isi_histogram(oracle_r, kIsiBinMs, kIsiMaxMs));
        summary += "isi_l1_distance=" + format_double(d) + "\n";
    }
    write_file(dir / "summary.txt", summary);
    std::cout << summary;
    return 0;
}

int cmd_solve_sudoku(const std::string& puzzles_path, uint64_t seed, uint32_t max_ticks_override,
                     const std::string& net_config, const std::string& out) {
    const fs::path dir(out);
    fs::create_directories(dir);

    SudokuTuning tuning = SudokuTuning::defaults();
    if (!net_config.empty()) {
        std::ifstream is(net_config);
        if (!is) {
            std::cerr << "error: cannot open net config " << net_config << "\n";
            return 1;
        }
        tuning = SudokuTuning::load(is);
    }
    if (max_ticks_override)
        tuning.max_ticks = max_ticks_override;

    write_manifest(dir, "solve-sudoku",
                   {{"seed", std::to_string(seed)},
                    {"puzzles", puzzles_path},
                    {"max_ticks", std::to_string(tuning.max_ticks)},
                    {"inhib_weight", format_double(tuning.inhib_weight)},
                    {"clue_bias", format_double(tuning.clue_bias)},
                    {"noise_hi", format_double(tuning.noise_hi)},
                    {"decay_divider", std::to_string(tuning.decay_divider)}});

    std::ifstream is(puzzles_path);
    if (!is) {
        std::cerr << "error: cannot open puzzle file " << puzzles_path << "\n";
        return 1;
    }
    const PuzzleFile pf = load_puzzle_file(is);
    for (const auto& e : pf.errors)
        std::cerr << "puzzle file line " << e.line << ": " << e.message << "\n";

    std::string results = "puzzle,solved,ticks,valid\n";
    std::string solutions;
    size_t solved = 0, valid = 0;
    for (size_t k = 0; k < pf.puzzles.size(); ++k) {
        const SudokuSolveResult res = solve_sudoku(pf.puzzles[k], tuning, seed + k);
        const bool ok = res.solved && validate_solution(res.grid, pf.puzzles[k]);
        if (res.solved)
            ++solved;
        if (ok)
            ++valid;
        results += std::to_string(k) + "," + (res.solved ? "1" : "0") + "," +
                   std::to_string(res.ticks) + "," + (ok ? "1" : "0") + "\n";
        if (res.solved) {
            for (uint8_t v : res.grid)
                solutions += static_cast<char>('0' + v);
            solutions += "\n";
        } else {
            solutions += std::string(81, '.') + "\n";
        }
        std::cout << "puzzle " << k << ": "
                  << (res.solved ? "solved in " + std::to_string(res.ticks) + " ticks"
                                 : "unconverged after " + std::to_string(res.ticks) + " ticks")
                  << (!ok && res.solved ? " (INVALID)" : "") << "\n";
    }
    write_file(dir / "results.csv", results);
    write_file(dir / "solutions.txt", solutions);
    std::cout << "solved " << solved << "/" << pf.puzzles.size() << ", valid " << valid << "/"
              << pf.puzzles.size() << "\n";
    const bool all_ok = pf.errors.empty() && solved == pf.puzzles.size() &&
                        valid == pf.puzzles.size() && !pf.puzzles.empty();
    return all_ok ? 0 : 1;
}

int cmd_run_asm(const std::string& source_path, bool verbose, uint64_t max_instr,
                const std::string& out) {
    std::ifstream is(source_path);
    if (!is) {
        std::cerr << "error: cannot open " << source_path << "\n";
        return 1;
    }
    std::stringstream buf;
    buf << is.rdbuf();

    Program prog;
    try {
        prog = assemble(buf.str());
    } catch (const AssemblyError& e) {
        for (const auto& d : e.diagnostics())
            std::cerr << source_path << ":" << d.line << ": " << d.message << "\n";
        return 1;
    }
    if (prog.words.empty()) {
        std::cerr << "error: no instructions\n";
        return 1;
    }

    Machine m;
    m.load_program(prog);
    Machine::TraceSink sink;
    if (verbose)
        sink = [](uint64_t cycle, uint32_t pc, uint32_t word, const std::string& disasm) {
            std::printf("%8llu %08x %08x %s\n", static_cast<unsigned long long>(cycle), pc, word,
                        disasm.c_str());
        };
    const RunResult r = m.run(max_instr, sink);

    if (r.status == RunStatus::Trapped)
        std::cout << "trap: " << r.trap_message << "\n";
    else if (r.status == RunStatus::BudgetExhausted)
        std::cout << "instruction budget exhausted\n";

    std::cout << "registers:\n";
    for (unsigned i = 0; i < 32; i += 4) {
        for (unsigned k = i; k < i + 4; ++k)
            std::printf("  %-4s %08x", reg_name(k).c_str(), m.reg(k));
        std::printf("\n");
    }
    std::printf("  pc   %08x\n", m.pc());
    std::cout << "counters:\n" << counters_table(m.counters());

    if (!out.empty()) {
        const fs::path dir(out);
        fs::create_directories(dir);
        write_manifest(dir, "run-asm",
                       {{"source", source_path}, {"max_instructions", std::to_string(max_instr)}});
        write_file(dir / "counters.csv", counters_csv(m.counters()));
    }
    return r.status == RunStatus::Trapped ? 2 : 0;
}

int cmd_dcu_table(const std::string& out) {
    std::string text = "divider  shift combo            approx value   AE%\n";
    std::string csv = "divider,combo,approx_value,ae_percent\n";
    for (int d = 2; d <= 8; ++d) {
        const DividerSelect sel(d);
        std::string combo;
        for (int k : shift_combo(sel))
            combo += (combo.empty() ? "" : "+") + std::string(">>") + std::to_string(k);
        char line[128];
        std::snprintf(line, sizeof line, "x/%d      %-22s %.9f    %.4f%s\n", d, combo.c_str(),
                      combo_value(sel), approximation_error(sel).percent(), d == 6 ? " *" : "");
        text += line;
        std::snprintf(line, sizeof line, "%d,%s,%.9f,%.6f\n", d, combo.c_str(), combo_value(sel),
                      approximation_error(sel).percent());
        csv += line;
    }
    text += "* analytic error of the {3,5,7,9} combination; the 12.1093 figure\n"
            "  quoted for this row elsewhere does not follow from the combination.\n";
    std::cout << text;
    if (!out.empty()) {
        const fs::path dir(out);
        fs::create_directories(dir);
        write_manifest(dir, "dcu-table", {});
        write_file(dir / "dcu_table.csv", csv);
        write_file(dir / "dcu_table.txt", text);
    }
    return 0;
}

int cmd_encode(const std::string& source_path, const std::string& inst, const std::string& format,
               const std::string& out_path) {
    std::string source;
    if (!inst.empty()) {
        source = inst + "\n";
    } else {
        std::ifstream is(source_path);
        if (!is) {
            std::cerr << "error: cannot open " << source_path << "\n";
            return 1;
        }
        std::stringstream buf;
        buf << is.rdbuf();
        source = buf.str();
    }
    Program prog;
    try {
        prog = assemble(source);
    } catch (const AssemblyError& e) {
        for (const auto& d : e.diagnostics())
            std::cerr << "line " << d.line << ": " << d.message << "\n";
        return 1;
    }
    if (format == "bin") {
        const std::vector<uint8_t> bin = to_flat_binary(prog);
        if (out_path.empty()) {
            std::cerr << "error: --format bin requires -o\n";
            return 1;
        }
        std::ofstream os(out_path, std::ios::binary);
        os.write(reinterpret_cast<const char*>(bin.data()),
                 static_cast<std::streamsize>(bin.size()));
        return os ? 0 : 1;
    }
    const std::string hex = to_hex_image(prog);
    if (out_path.empty())
        std::cout << hex;
    else
        write_file(out_path, hex);
    return 0;
}

int cmd_decode(const std::vector<std::string>& words, const std::string& image_path) {
    std::vector<uint32_t> ws;
    if (!image_path.empty()) {
        std::ifstream is(image_path);
        if (!is) {
            std::cerr << "error: cannot open " << image_path << "\n";
            return 1;
        }
        std::string line;
        while (std::getline(is, line))
            if (!line.empty())
                ws.push_back(static_cast<uint32_t>(std::stoul(line, nullptr, 16)));
    }
    for (const std::string& w : words)
        ws.push_back(static_cast<uint32_t>(std::stoul(w, nullptr, 16)));
    for (uint32_t w : ws)
        std::printf("%08x  %s\n", w, disassemble(w).c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RV32IM simulator with spiking-neuron instructions and SNN workloads"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    uint32_t ticks = 1000;
    std::string mode = "fixed";
    std::string out;
    std::string puzzles;
    uint32_t max_ticks = 0;
    std::string net_config;
    bool verbose = false;
    uint64_t max_instr = 10000000;
    std::string source;
    std::string inst;
    std::string format = "hex";
    std::string out_file;
    std::string image;
    std::vector<std::string> words;

    auto* c8020 = app.add_subcommand("run-8020", "simulate the 1000-neuron cortical benchmark");
    c8020->add_option("--seed", seed, "construction seed");
    c8020->add_option("--ticks", ticks, "1 ms ticks to simulate");
    c8020->add_option("--mode", mode, "fixed|oracle|both")
        ->check(CLI::IsMember({"fixed", "oracle", "both"}));
    c8020->add_option("--out", out, "output directory");

    auto* csud = app.add_subcommand("solve-sudoku", "solve puzzles with the WTA network");
    csud->add_option("--puzzles", puzzles, "puzzle file, one 81-char line each")->required();
    csud->add_option("--seed", seed, "noise seed");
    csud->add_option("--max-ticks", max_ticks, "override the tick cap");
    csud->add_option("--net-config", net_config, "tuning key-value file");
    csud->add_option("--out", out, "output directory");

    auto* casm = app.add_subcommand("run-asm", "assemble and execute a program");
    casm->add_option("source", source, "assembly source file")->required();
    casm->add_flag("--verbose", verbose, "trace each retired instruction");
    casm->add_option("--max-instr", max_instr, "instruction budget");
    casm->add_option("--out", out, "output directory for counters.csv");

    auto* cdcu = app.add_subcommand("dcu-table", "print the decay-divider approximation table");
    cdcu->add_option("--out", out, "output directory");

    auto* cenc = app.add_subcommand("encode", "assemble to a hex or binary image");
    cenc->add_option("source", source, "assembly source file");
    cenc->add_option("--inst", inst, "encode a single instruction given as text");
    cenc->add_option("--format", format, "hex|bin")->check(CLI::IsMember({"hex", "bin"}));
    cenc->add_option("-o,--output", out_file, "output file (stdout for hex)");

    auto* cdec = app.add_subcommand("decode", "disassemble hex words");
    cdec->add_option("words", words, "32-bit hex words");
    cdec->add_option("--image", image, "hex-text image file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c8020->parsed()) {
            if (out.empty())
                out = default_out_dir("run-8020");
            return cmd_run_8020(seed, ticks, mode, out);
        }
        if (csud->parsed()) {
            if (out.empty())
                out = default_out_dir("solve-sudoku");
            return cmd_solve_sudoku(puzzles, seed, max_ticks, net_config, out);
        }
        if (casm->parsed())
            return cmd_run_asm(source, verbose, max_instr, out);
        if (cdcu->parsed())
            return cmd_dcu_table(out);
        if (cenc->parsed()) {
            if (source.empty() && inst.empty()) {
                std::cerr << "error: encode needs a source file or --inst\n";
                return 1;
            }
            return cmd_encode(source, inst, format, out_file);
        }
        if (cdec->parsed()) {
            if (words.empty() && image.empty()) {
                std::cerr << "error: decode needs hex words or --image\n";
                return 1;
            }
            return cmd_decode(words, image);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
