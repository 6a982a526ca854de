#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nmrv/assembler.hpp"
#include "nmrv/isa.hpp"
#include "nmrv/npu.hpp"

namespace nmrv {

// Retired-instruction counters for the single-issue timing model.
struct PerfCounters {
    uint64_t n_cycles = 0;
    uint64_t n_instr = 0;
    uint64_t n_reginstr = 0;
    uint64_t n_updates = 0;      // nmpn retirements
    uint64_t n_decays = 0;       // nmdec retirements
    uint64_t n_config_instr = 0; // nmldl/nmldh retirements
    uint64_t n_hazard_stalls = 0;
};

// Equivalent scalar operations credited per neuron update (v/u step plus
// current decay).
inline constexpr uint64_t kIzhOps = 19;

double ipc(const PerfCounters& c);
double ipc_eff(const PerfCounters& c);

// Stall cycles between two back-to-back instructions: `stall_cycles`
// when any source register of `next` equals the destination register of
// `prev` (x0 never counts), else 0.
uint64_t cycle_model(const Instruction& prev, const Instruction& next, uint64_t stall_cycles = 1);

enum class StepOutcome { Retired, Halted, Trapped };

enum class RunStatus { Halted, Trapped, BudgetExhausted };

struct RunResult {
    RunStatus status;
    std::string trap_message; // set when status == Trapped
    PerfCounters counters;
};

// RV32IM core with the custom-0 neuron extension, flat little-endian
// memory, and a 3-stage-pipeline cycle model (1 cycle per retired
// instruction, configurable hazard stall, fixed pipeline-fill cost).
class Machine {
public:
    explicit Machine(size_t mem_bytes = 4u << 20);

    void load_program(const Program& p);
    void load_hex_image(const std::string& text, uint32_t base);
    void load_flat_binary(const std::vector<uint8_t>& bytes, uint32_t base);

    uint32_t reg(unsigned idx) const { return x_[idx & 31]; }
    void set_reg(unsigned idx, uint32_t value);
    uint32_t pc() const { return pc_; }
    void set_pc(uint32_t pc) { pc_ = pc; }

    NmConfig& nm_config() { return nm_; }
    const NmConfig& nm_config() const { return nm_; }

    uint32_t read_word(uint32_t addr) const;
    void write_word(uint32_t addr, uint32_t value);
    size_t mem_size() const { return mem_.size(); }

    bool halted() const { return halted_; }
    const std::string& trap_message() const { return trap_message_; }
    bool trapped() const { return trapped_; }

    const PerfCounters& counters() const { return counters_; }

    // Trace sink receives "cycle pc word disasm" fields per retired
    // instruction.
    using TraceSink = std::function<void(uint64_t cycle, uint32_t pc, uint32_t word,
                                         const std::string& disasm)>;

    StepOutcome step();
    RunResult run(uint64_t max_instructions, const TraceSink& trace = nullptr);

    // Timing-model knobs.
    uint64_t stall_cycles = 1;
    uint64_t pipeline_fill = 2;
    std::optional<uint32_t> halt_address;

private:
    void trap(const std::string& message);
    bool check_mem(uint32_t addr, uint32_t size, const char* what);
    void retire(const Instruction& inst, uint32_t next_pc);

    std::vector<uint8_t> mem_;
    uint32_t x_[32] = {};
    uint32_t pc_ = 0;
    NmConfig nm_;
    bool halted_ = false;
    bool trapped_ = false;
    std::string trap_message_;
    PerfCounters counters_;
    std::optional<Instruction> last_retired_;
};

// Counter report emitters.
std::string counters_csv(const PerfCounters& c);
std::string counters_table(const PerfCounters& c);

} // namespace nmrv
