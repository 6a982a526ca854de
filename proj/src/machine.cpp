#include "nmrv/machine.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "nmrv/dcu.hpp"

namespace nmrv {

namespace {

// Source/destination register usage per op, for the hazard rule.
struct RegUse {
    bool rs1 = false;
    bool rs2 = false;
    bool rd_source = false; // nmpn reads rd as the store address
    bool rd_dest = false;
};

RegUse reg_use(Op op) {
    switch (op) {
    case Op::Lui:
    case Op::Auipc:
    case Op::Jal:
        return {false, false, false, true};
    case Op::Jalr:
    case Op::Lb:
    case Op::Lh:
    case Op::Lw:
    case Op::Lbu:
    case Op::Lhu:
    case Op::Addi:
    case Op::Slti:
    case Op::Sltiu:
    case Op::Xori:
    case Op::Ori:
    case Op::Andi:
    case Op::Slli:
    case Op::Srli:
    case Op::Srai:
        return {true, false, false, true};
    case Op::Beq:
    case Op::Bne:
    case Op::Blt:
    case Op::Bge:
    case Op::Bltu:
    case Op::Bgeu:
        return {true, true, false, false};
    case Op::Sb:
    case Op::Sh:
    case Op::Sw:
        return {true, true, false, false};
    case Op::Fence:
    case Op::Ecall:
    case Op::Ebreak:
        return {false, false, false, false};
    case Op::Nmldh:
        return {true, false, false, true};
    case Op::Nmpn:
        return {true, true, true, true};
    case Op::Nmldl:
    case Op::Nmdec:
        return {true, true, false, true};
    default: // R-type arithmetic incl. M extension
        return {true, true, false, true};
    }
}

int32_t sext16(uint32_t v) {
    return static_cast<int32_t>(static_cast<int16_t>(v & 0xffff));
}

} // namespace

double ipc(const PerfCounters& c) {
    if (c.n_cycles == 0)
        throw std::invalid_argument("ipc: zero cycles");
    return static_cast<double>(c.n_instr) / static_cast<double>(c.n_cycles);
}

double ipc_eff(const PerfCounters& c) {
    if (c.n_cycles == 0)
        throw std::invalid_argument("ipc_eff: zero cycles");
    return static_cast<double>(c.n_reginstr + c.n_updates * kIzhOps) /
           static_cast<double>(c.n_cycles);
}

uint64_t cycle_model(const Instruction& prev, const Instruction& next, uint64_t stall_cycles) {
    const RegUse prev_use = reg_use(prev.op);
    if (!prev_use.rd_dest || prev.rd == 0)
        return 0;
    const RegUse next_use = reg_use(next.op);
    const bool hazard = (next_use.rs1 && next.rs1 == prev.rd) ||
                        (next_use.rs2 && next.rs2 == prev.rd) ||
                        (next_use.rd_source && next.rd == prev.rd);
    return hazard ? stall_cycles : 0;
}

Machine::Machine(size_t mem_bytes) : mem_(mem_bytes, 0) {}

void Machine::set_reg(unsigned idx, uint32_t value) {
    idx &= 31;
    if (idx != 0)
        x_[idx] = value;
}

void Machine::load_program(const Program& p) {
    for (const Program::Entry& e : p.words)
        write_word(e.addr, e.word);
    pc_ = p.entry;
}

void Machine::load_hex_image(const std::string& text, uint32_t base) {
    std::istringstream in(text);
    std::string line;
    uint32_t addr = base;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        write_word(addr, static_cast<uint32_t>(std::stoul(line, nullptr, 16)));
        addr += 4;
    }
    pc_ = base;
}

void Machine::load_flat_binary(const std::vector<uint8_t>& bytes, uint32_t base) {
    if (base + bytes.size() > mem_.size())
        throw std::out_of_range("binary image does not fit in memory");
    std::copy(bytes.begin(), bytes.end(), mem_.begin() + base);
    pc_ = base;
}

uint32_t Machine::read_word(uint32_t addr) const {
    if (addr % 4 != 0 || addr + 4 > mem_.size())
        throw std::out_of_range("word read outside memory");
    return static_cast<uint32_t>(mem_[addr]) | static_cast<uint32_t>(mem_[addr + 1]) << 8 |
           static_cast<uint32_t>(mem_[addr + 2]) << 16 | static_cast<uint32_t>(mem_[addr + 3]) << 24;
}

void Machine::write_word(uint32_t addr, uint32_t value) {
    if (addr % 4 != 0 || addr + 4 > mem_.size())
        throw std::out_of_range("word write outside memory");
    mem_[addr] = static_cast<uint8_t>(value);
    mem_[addr + 1] = static_cast<uint8_t>(value >> 8);
    mem_[addr + 2] = static_cast<uint8_t>(value >> 16);
    mem_[addr + 3] = static_cast<uint8_t>(value >> 24);
}

void Machine::trap(const std::string& message) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", pc_);
    trapped_ = true;
    halted_ = true;
    trap_message_ = message + " at pc=" + buf;
}

bool Machine::check_mem(uint32_t addr, uint32_t size, const char* what) {
    if (addr % size != 0) {
        trap(std::string("misaligned ") + what + " address");
        return false;
    }
    if (static_cast<uint64_t>(addr) + size > mem_.size()) {
        trap(std::string(what) + " address out of range");
        return false;
    }
    return true;
}

void Machine::retire(const Instruction& inst, uint32_t next_pc) {
    if (counters_.n_instr == 0)
        counters_.n_cycles += pipeline_fill;
    counters_.n_instr += 1;
    counters_.n_cycles += 1;
    switch (inst.op) {
    case Op::Nmpn:
        counters_.n_updates += 1;
        break;
    case Op::Nmdec:
        counters_.n_decays += 1;
        break;
    case Op::Nmldl:
    case Op::Nmldh:
        counters_.n_config_instr += 1;
        break;
    default:
        counters_.n_reginstr += 1;
        break;
    }
    if (last_retired_) {
        const uint64_t stalls = cycle_model(*last_retired_, inst, stall_cycles);
        counters_.n_hazard_stalls += stalls;
        counters_.n_cycles += stalls;
    }
    last_retired_ = inst;
    pc_ = next_pc;
}

StepOutcome Machine::step() {
    if (halted_)
        throw std::logic_error("step on a halted machine");
    if (halt_address && pc_ == *halt_address) {
        halted_ = true;
        return StepOutcome::Halted;
    }
    if (pc_ % 4 != 0 || pc_ + 4 > mem_.size()) {
        trap("instruction fetch outside memory");
        return StepOutcome::Trapped;
    }
    const uint32_t word = read_word(pc_);
    Instruction inst;
    try {
        inst = decode(word);
    } catch (const IllegalInstruction& e) {
        trap(e.what());
        return StepOutcome::Trapped;
    }

    uint32_t next_pc = pc_ + 4;
    const uint32_t a = x_[inst.rs1];
    const uint32_t b = x_[inst.rs2];
    const int32_t sa = static_cast<int32_t>(a);
    const int32_t sb = static_cast<int32_t>(b);

    switch (inst.op) {
    case Op::Lui:
        set_reg(inst.rd, static_cast<uint32_t>(inst.imm) << 12);
        break;
    case Op::Auipc:
        set_reg(inst.rd, pc_ + (static_cast<uint32_t>(inst.imm) << 12));
        break;
    case Op::Jal: {
        const uint32_t target = pc_ + static_cast<uint32_t>(inst.imm);
        if (target % 4 != 0) {
            trap("misaligned jump target");
            return StepOutcome::Trapped;
        }
        set_reg(inst.rd, pc_ + 4);
        next_pc = target;
        break;
    }
    case Op::Jalr: {
        const uint32_t target = (a + static_cast<uint32_t>(inst.imm)) & ~1u;
        if (target % 4 != 0) {
            trap("misaligned jump target");
            return StepOutcome::Trapped;
        }
        set_reg(inst.rd, pc_ + 4);
        next_pc = target;
        break;
    }
    case Op::Beq:
    case Op::Bne:
    case Op::Blt:
    case Op::Bge:
    case Op::Bltu:
    case Op::Bgeu: {
        bool taken = false;
        switch (inst.op) {
        case Op::Beq:
            taken = a == b;
            break;
        case Op::Bne:
            taken = a != b;
            break;
        case Op::Blt:
            taken = sa < sb;
            break;
        case Op::Bge:
            taken = sa >= sb;
            break;
        case Op::Bltu:
            taken = a < b;
            break;
        default:
            taken = a >= b;
            break;
        }
        if (taken) {
            const uint32_t target = pc_ + static_cast<uint32_t>(inst.imm);
            if (target % 4 != 0) {
                trap("misaligned branch target");
                return StepOutcome::Trapped;
            }
            next_pc = target;
        }
        break;
    }
    case Op::Lb:
    case Op::Lh:
    case Op::Lw:
    case Op::Lbu:
    case Op::Lhu: {
        const uint32_t addr = a + static_cast<uint32_t>(inst.imm);
        const uint32_t size = inst.op == Op::Lw ? 4 : (inst.op == Op::Lh || inst.op == Op::Lhu) ? 2 : 1;
        if (!check_mem(addr, size, "load"))
            return StepOutcome::Trapped;
        uint32_t v = 0;
        for (uint32_t i = 0; i < size; ++i)
            v |= static_cast<uint32_t>(mem_[addr + i]) << (8 * i);
        if (inst.op == Op::Lb)
            v = static_cast<uint32_t>(static_cast<int32_t>(static_cast<int8_t>(v)));
        else if (inst.op == Op::Lh)
            v = static_cast<uint32_t>(sext16(v));
        set_reg(inst.rd, v);
        break;
    }
    case Op::Sb:
    case Op::Sh:
    case Op::Sw: {
        const uint32_t addr = a + static_cast<uint32_t>(inst.imm);
        const uint32_t size = inst.op == Op::Sw ? 4 : inst.op == Op::Sh ? 2 : 1;
        if (!check_mem(addr, size, "store"))
            return StepOutcome::Trapped;
        for (uint32_t i = 0; i < size; ++i)
            mem_[addr + i] = static_cast<uint8_t>(b >> (8 * i));
        break;
    }
    case Op::Addi:
        set_reg(inst.rd, a + static_cast<uint32_t>(inst.imm));
        break;
    case Op::Slti:
        set_reg(inst.rd, sa < inst.imm ? 1 : 0);
        break;
    case Op::Sltiu:
        set_reg(inst.rd, a < static_cast<uint32_t>(inst.imm) ? 1 : 0);
        break;
    case Op::Xori:
        set_reg(inst.rd, a ^ static_cast<uint32_t>(inst.imm));
        break;
    case Op::Ori:
        set_reg(inst.rd, a | static_cast<uint32_t>(inst.imm));
        break;
    case Op::Andi:
        set_reg(inst.rd, a & static_cast<uint32_t>(inst.imm));
        break;
    case Op::Slli:
        set_reg(inst.rd, a << (inst.imm & 31));
        break;
    case Op::Srli:
        set_reg(inst.rd, a >> (inst.imm & 31));
        break;
    case Op::Srai:
        set_reg(inst.rd, static_cast<uint32_t>(sa >> (inst.imm & 31)));
        break;
    case Op::Add:
        set_reg(inst.rd, a + b);
        break;
    case Op::Sub:
        set_reg(inst.rd, a - b);
        break;
    case Op::Sll:
        set_reg(inst.rd, a << (b & 31));
        break;
    case Op::Slt:
        set_reg(inst.rd, sa < sb ? 1 : 0);
        break;
    case Op::Sltu:
        set_reg(inst.rd, a < b ? 1 : 0);
        break;
    case Op::Xor:
        set_reg(inst.rd, a ^ b);
        break;
    case Op::Srl:
        set_reg(inst.rd, a >> (b & 31));
        break;
    case Op::Sra:
        set_reg(inst.rd, static_cast<uint32_t>(sa >> (b & 31)));
        break;
    case Op::Or:
        set_reg(inst.rd, a | b);
        break;
    case Op::And:
        set_reg(inst.rd, a & b);
        break;
    case Op::Mul:
        set_reg(inst.rd, a * b);
        break;
    case Op::Mulh:
        set_reg(inst.rd, static_cast<uint32_t>(
                             (static_cast<int64_t>(sa) * static_cast<int64_t>(sb)) >> 32));
        break;
    case Op::Mulhsu:
        set_reg(inst.rd, static_cast<uint32_t>(
                             (static_cast<int64_t>(sa) * static_cast<uint64_t>(b)) >> 32));
        break;
    case Op::Mulhu:
        set_reg(inst.rd, static_cast<uint32_t>(
                             (static_cast<uint64_t>(a) * static_cast<uint64_t>(b)) >> 32));
        break;
    case Op::Div:
        if (b == 0)
            set_reg(inst.rd, UINT32_MAX);
        else if (sa == INT32_MIN && sb == -1)
            set_reg(inst.rd, static_cast<uint32_t>(INT32_MIN));
        else
            set_reg(inst.rd, static_cast<uint32_t>(sa / sb));
        break;
    case Op::Divu:
        set_reg(inst.rd, b == 0 ? UINT32_MAX : a / b);
        break;
    case Op::Rem:
        if (b == 0)
            set_reg(inst.rd, a);
        else if (sa == INT32_MIN && sb == -1)
            set_reg(inst.rd, 0);
        else
            set_reg(inst.rd, static_cast<uint32_t>(sa % sb));
        break;
    case Op::Remu:
        set_reg(inst.rd, b == 0 ? a : a % b);
        break;
    case Op::Fence:
        break;
    case Op::Ecall:
        trap("ecall is not supported");
        return StepOutcome::Trapped;
    case Op::Ebreak:
        halted_ = true;
        retire(inst, pc_ + 4);
        return StepOutcome::Halted;
    case Op::Nmldl: {
        // rs1: b (hi, Q4.11) | a (lo, Q4.11); rs2: d (hi, Q4.11) | c (lo, Q7.8)
        nm_.params.a = Fixed{sext16(a & 0xffff), Q4_11};
        nm_.params.b = Fixed{sext16(a >> 16), Q4_11};
        nm_.params.c = Fixed{sext16(b & 0xffff), Q7_8};
        nm_.params.d = Fixed{sext16(b >> 16), Q4_11};
        set_reg(inst.rd, 1);
        break;
    }
    case Op::Nmldh:
        nm_.h_fast = a & 1;
        nm_.pin = a & 2;
        set_reg(inst.rd, 1);
        break;
    case Op::Nmpn: {
        // rs1 holds the VU word, rs2 i_syn (Q15.16), rd the VU address on
        // entry and the spike flag after writeback.
        const uint32_t addr = x_[inst.rd];
        if (!check_mem(addr, 4, "neuron-state store"))
            return StepOutcome::Trapped; // no side effects on trap
        const StepResult r = izh_step(VUWord{a}, Fixed{static_cast<int32_t>(b), Q15_16}, nm_);
        write_word(addr, r.vu.word);
        set_reg(inst.rd, r.spike ? 1 : 0);
        break;
    }
    case Op::Nmdec: {
        const int32_t tau = static_cast<int32_t>(b);
        if (tau < 2 || tau > 8) {
            trap("nmdec divider select " + std::to_string(tau) + " outside [2,8]");
            return StepOutcome::Trapped;
        }
        set_reg(inst.rd, static_cast<uint32_t>(
                             decay_step(static_cast<int32_t>(a), DividerSelect(tau), nm_.h_fast)));
        break;
    }
    }

    retire(inst, next_pc);
    return StepOutcome::Retired;
}

RunResult Machine::run(uint64_t max_instructions, const TraceSink& trace) {
    for (uint64_t n = 0; n < max_instructions; ++n) {
        if (halt_address && pc_ == *halt_address) {
            halted_ = true;
            return {RunStatus::Halted, "", counters_};
        }
        const uint32_t fetch_pc = pc_;
        const StepOutcome out = step();
        if (out == StepOutcome::Trapped)
            return {RunStatus::Trapped, trap_message_, counters_};
        if (trace) {
            const uint32_t word = read_word(fetch_pc);
            trace(counters_.n_cycles, fetch_pc, word, disassemble(word));
        }
        if (out == StepOutcome::Halted)
            return {RunStatus::Halted, "", counters_};
    }
    return {RunStatus::BudgetExhausted, "", counters_};
}

std::string counters_csv(const PerfCounters& c) {
    std::string out = "metric,value\n";
    out += "n_cycles," + std::to_string(c.n_cycles) + "\n";
    out += "n_instr," + std::to_string(c.n_instr) + "\n";
    out += "n_reginstr," + std::to_string(c.n_reginstr) + "\n";
    out += "n_updates," + std::to_string(c.n_updates) + "\n";
    out += "n_decays," + std::to_string(c.n_decays) + "\n";
    out += "n_config_instr," + std::to_string(c.n_config_instr) + "\n";
    out += "n_hazard_stalls," + std::to_string(c.n_hazard_stalls) + "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "ipc,%.6f\n", ipc(c));
    out += buf;
    std::snprintf(buf, sizeof buf, "ipc_eff,%.6f\n", ipc_eff(c));
    out += buf;
    return out;
}

std::string counters_table(const PerfCounters& c) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "  cycles          %12llu\n"
                  "  instructions    %12llu\n"
                  "  regular         %12llu\n"
                  "  neuron updates  %12llu\n"
                  "  decays          %12llu\n"
                  "  config          %12llu\n"
                  "  hazard stalls   %12llu\n"
                  "  ipc             %12.6f\n"
                  "  ipc_eff         %12.6f\n",
                  static_cast<unsigned long long>(c.n_cycles),
                  static_cast<unsigned long long>(c.n_instr),
                  static_cast<unsigned long long>(c.n_reginstr),
                  static_cast<unsigned long long>(c.n_updates),
                  static_cast<unsigned long long>(c.n_decays),
                  static_cast<unsigned long long>(c.n_config_instr),
                  static_cast<unsigned long long>(c.n_hazard_stalls), ipc(c), ipc_eff(c));
    return buf;
}

} // namespace nmrv
