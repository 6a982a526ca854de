#include "nmrv/assembler.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace nmrv {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<unsigned> parse_reg(const std::string& tok) {
    static const std::unordered_map<std::string, unsigned> abi = [] {
        std::unordered_map<std::string, unsigned> m;
        for (unsigned i = 0; i < 32; ++i) {
            m["x" + std::to_string(i)] = i;
            m[reg_name(i)] = i;
        }
        m["fp"] = 8;
        return m;
    }();
    auto it = abi.find(tok);
    if (it == abi.end())
        return std::nullopt;
    return it->second;
}

std::optional<int64_t> parse_int(const std::string& tok) {
    if (tok.empty())
        return std::nullopt;
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(tok.c_str(), &end, 0);
    if (errno != 0 || end != tok.c_str() + tok.size())
        return std::nullopt;
    return v;
}

// Splits "imm(reg)" / "(reg)" memory operands.
bool parse_mem_operand(const std::string& tok, std::string& imm, std::string& reg) {
    size_t open = tok.find('(');
    size_t close = tok.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close != tok.size() - 1 ||
        close <= open)
        return false;
    imm = trim(tok.substr(0, open));
    reg = trim(tok.substr(open + 1, close - open - 1));
    if (imm.empty())
        imm = "0";
    return true;
}

std::vector<std::string> split_operands(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cur = trim(cur);
    if (!cur.empty() || !out.empty())
        out.push_back(cur);
    return out;
}

enum class Form {
    R,        // rd, rs1, rs2
    Nmldh,    // rd, rs1
    IArith,   // rd, rs1, imm
    Shift,    // rd, rs1, shamt
    Load,     // rd, imm(rs1)
    Store,    // rs2, imm(rs1)
    Branch,   // rs1, rs2, target
    Jal,      // rd, target | target
    Jalr,     // rd, imm(rs1) | rd, rs1, imm
    Upper,    // rd, imm20
    None,     // fence/ecall/ebreak
    Li,       // rd, imm32
    Mv,       // rd, rs
    Nop,      //
    J,        // target
};

struct MnemonicInfo {
    Form form;
    Op op;
};

const std::unordered_map<std::string, MnemonicInfo>& mnemonics() {
    static const std::unordered_map<std::string, MnemonicInfo> m = {
        {"add", {Form::R, Op::Add}},       {"sub", {Form::R, Op::Sub}},
        {"sll", {Form::R, Op::Sll}},       {"slt", {Form::R, Op::Slt}},
        {"sltu", {Form::R, Op::Sltu}},     {"xor", {Form::R, Op::Xor}},
        {"srl", {Form::R, Op::Srl}},       {"sra", {Form::R, Op::Sra}},
        {"or", {Form::R, Op::Or}},         {"and", {Form::R, Op::And}},
        {"mul", {Form::R, Op::Mul}},       {"mulh", {Form::R, Op::Mulh}},
        {"mulhsu", {Form::R, Op::Mulhsu}}, {"mulhu", {Form::R, Op::Mulhu}},
        {"div", {Form::R, Op::Div}},       {"divu", {Form::R, Op::Divu}},
        {"rem", {Form::R, Op::Rem}},       {"remu", {Form::R, Op::Remu}},
        {"nmldl", {Form::R, Op::Nmldl}},   {"nmldh", {Form::Nmldh, Op::Nmldh}},
        {"nmpn", {Form::R, Op::Nmpn}},     {"nmdec", {Form::R, Op::Nmdec}},
        {"addi", {Form::IArith, Op::Addi}}, {"slti", {Form::IArith, Op::Slti}},
        {"sltiu", {Form::IArith, Op::Sltiu}}, {"xori", {Form::IArith, Op::Xori}},
        {"ori", {Form::IArith, Op::Ori}},  {"andi", {Form::IArith, Op::Andi}},
        {"slli", {Form::Shift, Op::Slli}}, {"srli", {Form::Shift, Op::Srli}},
        {"srai", {Form::Shift, Op::Srai}}, {"lb", {Form::Load, Op::Lb}},
        {"lh", {Form::Load, Op::Lh}},      {"lw", {Form::Load, Op::Lw}},
        {"lbu", {Form::Load, Op::Lbu}},    {"lhu", {Form::Load, Op::Lhu}},
        {"sb", {Form::Store, Op::Sb}},     {"sh", {Form::Store, Op::Sh}},
        {"sw", {Form::Store, Op::Sw}},     {"beq", {Form::Branch, Op::Beq}},
        {"bne", {Form::Branch, Op::Bne}},  {"blt", {Form::Branch, Op::Blt}},
        {"bge", {Form::Branch, Op::Bge}},  {"bltu", {Form::Branch, Op::Bltu}},
        {"bgeu", {Form::Branch, Op::Bgeu}}, {"jal", {Form::Jal, Op::Jal}},
        {"jalr", {Form::Jalr, Op::Jalr}},  {"lui", {Form::Upper, Op::Lui}},
        {"auipc", {Form::Upper, Op::Auipc}}, {"fence", {Form::None, Op::Fence}},
        {"ecall", {Form::None, Op::Ecall}}, {"ebreak", {Form::None, Op::Ebreak}},
        {"li", {Form::Li, Op::Addi}},      {"mv", {Form::Mv, Op::Addi}},
        {"nop", {Form::Nop, Op::Addi}},    {"j", {Form::J, Op::Jal}},
    };
    return m;
}

// li expansion, identical in both passes.
std::vector<Instruction> expand_li(unsigned rd, int64_t value) {
    const int32_t v = static_cast<int32_t>(value);
    if (v >= -2048 && v <= 2047)
        return {Instruction{Op::Addi, static_cast<uint8_t>(rd), 0, 0, v}};
    const int32_t hi = static_cast<int32_t>((static_cast<int64_t>(v) + 0x800) >> 12);
    const int32_t lo = static_cast<int32_t>(v - (static_cast<int64_t>(hi) << 12));
    std::vector<Instruction> out;
    out.push_back(Instruction{Op::Lui, static_cast<uint8_t>(rd), 0, 0, hi & 0xfffff});
    if (lo != 0)
        out.push_back(
            Instruction{Op::Addi, static_cast<uint8_t>(rd), static_cast<uint8_t>(rd), 0, lo});
    return out;
}

struct SourceLine {
    int line_no;
    std::string mnemonic;
    std::vector<std::string> operands;
    uint32_t addr = 0;
    int n_words = 0;
    bool is_word_directive = false;
    int64_t word_value = 0;
};

class Assembler {
public:
    explicit Assembler(uint32_t base) : loc_(base) {}

    Program run(const std::string& source) {
        std::istringstream in(source);
        std::string raw;
        int line_no = 0;
        bool entry_set = false;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = raw;
            if (size_t h = line.find('#'); h != std::string::npos)
                line.resize(h);
            line = trim(line);
            // Peel off label definitions.
            while (true) {
                size_t colon = line.find(':');
                if (colon == std::string::npos)
                    break;
                std::string label = trim(line.substr(0, colon));
                if (label.empty() || label.find(' ') != std::string::npos ||
                    label.find('\t') != std::string::npos) {
                    error(line_no, "malformed label definition");
                    break;
                }
                if (!prog_.symbols.emplace(label, loc_).second)
                    error(line_no, "duplicate label '" + label + "'");
                line = trim(line.substr(colon + 1));
            }
            if (line.empty())
                continue;
            parse_statement(line_no, line, entry_set);
        }
        resolve_and_encode();
        if (!diags_.empty())
            throw AssemblyError(std::move(diags_));
        return std::move(prog_);
    }

private:
    void error(int line, std::string msg) { diags_.push_back({line, std::move(msg)}); }

    void parse_statement(int line_no, const std::string& line, bool& entry_set) {
        size_t sp = line.find_first_of(" \t");
        std::string mnem = line.substr(0, sp);
        std::string rest = sp == std::string::npos ? "" : trim(line.substr(sp));
        std::vector<std::string> ops = rest.empty() ? std::vector<std::string>{} : split_operands(rest);

        if (mnem == ".org") {
            auto v = ops.size() == 1 ? parse_int(ops[0]) : std::nullopt;
            if (!v || *v < 0 || *v > UINT32_MAX)
                return error(line_no, ".org expects one address operand");
            if (*v % 4 != 0)
                return error(line_no, ".org address must be word-aligned");
            if (has_words_ && static_cast<uint32_t>(*v) < loc_)
                return error(line_no, ".org may not move backwards");
            loc_ = static_cast<uint32_t>(*v);
            return;
        }
        SourceLine sl;
        sl.line_no = line_no;
        sl.addr = loc_;
        if (mnem == ".word") {
            auto v = ops.size() == 1 ? parse_int(ops[0]) : std::nullopt;
            if (!v || *v < INT32_MIN || *v > static_cast<int64_t>(UINT32_MAX))
                return error(line_no, ".word expects one 32-bit value");
            sl.is_word_directive = true;
            sl.word_value = *v;
            sl.n_words = 1;
        } else {
            auto it = mnemonics().find(mnem);
            if (it == mnemonics().end())
                return error(line_no, "unknown mnemonic '" + mnem + "'");
            sl.mnemonic = mnem;
            sl.operands = ops;
            sl.n_words = 1;
            if (it->second.form == Form::Li) {
                // Sizing needs the literal now.
                if (ops.size() == 2) {
                    if (auto v = parse_int(ops[1]))
                        sl.n_words = static_cast<int>(expand_li(0, *v).size());
                }
            }
        }
        if (!entry_set) {
            prog_.entry = loc_;
            entry_set = true;
        }
        has_words_ = true;
        loc_ += static_cast<uint32_t>(sl.n_words) * 4;
        lines_.push_back(std::move(sl));
    }

    unsigned want_reg(const SourceLine& sl, size_t idx) {
        if (idx >= sl.operands.size()) {
            error(sl.line_no, "missing register operand");
            return 0;
        }
        auto r = parse_reg(sl.operands[idx]);
        if (!r) {
            error(sl.line_no, "bad register '" + sl.operands[idx] + "'");
            return 0;
        }
        return *r;
    }

    int64_t want_int(const SourceLine& sl, const std::string& tok, int64_t lo, int64_t hi) {
        auto v = parse_int(tok);
        if (!v) {
            error(sl.line_no, "bad immediate '" + tok + "'");
            return 0;
        }
        if (*v < lo || *v > hi) {
            error(sl.line_no, "immediate " + tok + " out of range [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
            return 0;
        }
        return *v;
    }

    // Branch/jump target: numeric relative offset or label.
    int32_t want_target(const SourceLine& sl, const std::string& tok, int64_t lo, int64_t hi) {
        int64_t off;
        if (auto v = parse_int(tok)) {
            off = *v;
        } else {
            auto it = prog_.symbols.find(tok);
            if (it == prog_.symbols.end()) {
                error(sl.line_no, "undefined label '" + tok + "'");
                return 0;
            }
            off = static_cast<int64_t>(it->second) - sl.addr;
        }
        if (off % 2 != 0)
            error(sl.line_no, "branch target offset must be even");
        if (off < lo || off > hi)
            error(sl.line_no, "branch target out of range");
        return static_cast<int32_t>(off);
    }

    void expect_operands(const SourceLine& sl, size_t n) {
        if (sl.operands.size() != n)
            error(sl.line_no, "expected " + std::to_string(n) + " operands, got " +
                                  std::to_string(sl.operands.size()));
    }

    void resolve_and_encode() {
        for (const SourceLine& sl : lines_) {
            if (sl.is_word_directive) {
                emit(sl.addr, static_cast<uint32_t>(sl.word_value));
                continue;
            }
            const size_t diag_mark = diags_.size();
            const MnemonicInfo& info = mnemonics().at(sl.mnemonic);
            std::vector<Instruction> insts;
            switch (info.form) {
            case Form::R: {
                expect_operands(sl, 3);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                i.rs1 = static_cast<uint8_t>(want_reg(sl, 1));
                i.rs2 = static_cast<uint8_t>(want_reg(sl, 2));
                insts.push_back(i);
                break;
            }
            case Form::Nmldh: {
                expect_operands(sl, 2);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                i.rs1 = static_cast<uint8_t>(want_reg(sl, 1));
                insts.push_back(i);
                break;
            }
            case Form::IArith: {
                expect_operands(sl, 3);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                i.rs1 = static_cast<uint8_t>(want_reg(sl, 1));
                if (sl.operands.size() == 3)
                    i.imm = static_cast<int32_t>(want_int(sl, sl.operands[2], -2048, 2047));
                insts.push_back(i);
                break;
            }
            case Form::Shift: {
                expect_operands(sl, 3);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                i.rs1 = static_cast<uint8_t>(want_reg(sl, 1));
                if (sl.operands.size() == 3)
                    i.imm = static_cast<int32_t>(want_int(sl, sl.operands[2], 0, 31));
                insts.push_back(i);
                break;
            }
            case Form::Load: {
                expect_operands(sl, 2);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                std::string imm, reg;
                if (sl.operands.size() == 2 && parse_mem_operand(sl.operands[1], imm, reg)) {
                    auto r = parse_reg(reg);
                    if (!r)
                        error(sl.line_no, "bad register '" + reg + "'");
                    i.rs1 = static_cast<uint8_t>(r.value_or(0));
                    i.imm = static_cast<int32_t>(want_int(sl, imm, -2048, 2047));
                } else if (sl.operands.size() == 2) {
                    error(sl.line_no, "expected imm(reg) operand");
                }
                insts.push_back(i);
                break;
            }
            case Form::Store: {
                expect_operands(sl, 2);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rs2 = static_cast<uint8_t>(want_reg(sl, 0));
                std::string imm, reg;
                if (sl.operands.size() == 2 && parse_mem_operand(sl.operands[1], imm, reg)) {
                    auto r = parse_reg(reg);
                    if (!r)
                        error(sl.line_no, "bad register '" + reg + "'");
                    i.rs1 = static_cast<uint8_t>(r.value_or(0));
                    i.imm = static_cast<int32_t>(want_int(sl, imm, -2048, 2047));
                } else if (sl.operands.size() == 2) {
                    error(sl.line_no, "expected imm(reg) operand");
                }
                insts.push_back(i);
                break;
            }
            case Form::Branch: {
                expect_operands(sl, 3);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rs1 = static_cast<uint8_t>(want_reg(sl, 0));
                i.rs2 = static_cast<uint8_t>(want_reg(sl, 1));
                if (sl.operands.size() == 3)
                    i.imm = want_target(sl, sl.operands[2], -4096, 4094);
                insts.push_back(i);
                break;
            }
            case Form::Jal: {
                Instruction i{Op::Jal, 0, 0, 0, 0};
                if (sl.operands.size() == 1) {
                    i.rd = 1;
                    i.imm = want_target(sl, sl.operands[0], -(1 << 20), (1 << 20) - 2);
                } else if (sl.operands.size() == 2) {
                    i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                    i.imm = want_target(sl, sl.operands[1], -(1 << 20), (1 << 20) - 2);
                } else {
                    error(sl.line_no, "jal expects 1 or 2 operands");
                }
                insts.push_back(i);
                break;
            }
            case Form::J: {
                expect_operands(sl, 1);
                Instruction i{Op::Jal, 0, 0, 0, 0};
                if (sl.operands.size() == 1)
                    i.imm = want_target(sl, sl.operands[0], -(1 << 20), (1 << 20) - 2);
                insts.push_back(i);
                break;
            }
            case Form::Jalr: {
                Instruction i{Op::Jalr, 0, 0, 0, 0};
                if (sl.operands.size() == 2) {
                    i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                    std::string imm, reg;
                    if (parse_mem_operand(sl.operands[1], imm, reg)) {
                        auto r = parse_reg(reg);
                        if (!r)
                            error(sl.line_no, "bad register '" + reg + "'");
                        i.rs1 = static_cast<uint8_t>(r.value_or(0));
                        i.imm = static_cast<int32_t>(want_int(sl, imm, -2048, 2047));
                    } else {
                        error(sl.line_no, "expected imm(reg) operand");
                    }
                } else if (sl.operands.size() == 3) {
                    i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                    i.rs1 = static_cast<uint8_t>(want_reg(sl, 1));
                    i.imm = static_cast<int32_t>(want_int(sl, sl.operands[2], -2048, 2047));
                } else {
                    error(sl.line_no, "jalr expects 2 or 3 operands");
                }
                insts.push_back(i);
                break;
            }
            case Form::Upper: {
                expect_operands(sl, 2);
                Instruction i{info.op, 0, 0, 0, 0};
                i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                if (sl.operands.size() == 2)
                    i.imm = static_cast<int32_t>(want_int(sl, sl.operands[1], 0, 0xfffff));
                insts.push_back(i);
                break;
            }
            case Form::None: {
                expect_operands(sl, 0);
                if (info.op == Op::Fence)
                    insts.push_back(Instruction{Op::Fence, 0, 0, 0, 0x0ff});
                else
                    insts.push_back(Instruction{info.op, 0, 0, 0, 0});
                break;
            }
            case Form::Li: {
                expect_operands(sl, 2);
                unsigned rd = want_reg(sl, 0);
                int64_t v = 0;
                if (sl.operands.size() == 2)
                    v = want_int(sl, sl.operands[1], INT32_MIN, static_cast<int64_t>(UINT32_MAX));
                insts = expand_li(rd, v);
                break;
            }
            case Form::Mv: {
                expect_operands(sl, 2);
                Instruction i{Op::Addi, 0, 0, 0, 0};
                i.rd = static_cast<uint8_t>(want_reg(sl, 0));
                i.rs1 = static_cast<uint8_t>(want_reg(sl, 1));
                insts.push_back(i);
                break;
            }
            case Form::Nop: {
                expect_operands(sl, 0);
                insts.push_back(Instruction{Op::Addi, 0, 0, 0, 0});
                break;
            }
            }
            if (diags_.size() != diag_mark)
                continue;
            uint32_t addr = sl.addr;
            for (const Instruction& i : insts) {
                emit(addr, encode(i));
                addr += 4;
            }
        }
    }

    void emit(uint32_t addr, uint32_t word) { prog_.words.push_back({addr, word}); }

    Program prog_;
    std::vector<SourceLine> lines_;
    std::vector<Diagnostic> diags_;
    uint32_t loc_;
    bool has_words_ = false;
};

} // namespace

AssemblyError::AssemblyError(std::vector<Diagnostic> diags)
    : std::runtime_error([&diags] {
          std::string msg = "assembly failed:";
          for (const Diagnostic& d : diags)
              msg += "\n  line " + std::to_string(d.line) + ": " + d.message;
          return msg;
      }()),
      diags_(std::move(diags)) {}

Program assemble(const std::string& source, uint32_t base_addr) {
    return Assembler(base_addr).run(source);
}

std::string to_hex_image(const Program& p) {
    std::string out;
    char buf[16];
    uint32_t next = p.words.empty() ? 0 : p.words.front().addr;
    for (const Program::Entry& e : p.words) {
        for (; next < e.addr; next += 4)
            out += "00000000\n";
        std::snprintf(buf, sizeof buf, "%08x\n", e.word);
        out += buf;
        next = e.addr + 4;
    }
    return out;
}

std::vector<uint8_t> to_flat_binary(const Program& p) {
    std::vector<uint8_t> out;
    if (p.words.empty())
        return out;
    const uint32_t base = p.words.front().addr;
    for (const Program::Entry& e : p.words) {
        const size_t off = e.addr - base;
        if (out.size() < off + 4)
            out.resize(off + 4, 0);
        out[off] = static_cast<uint8_t>(e.word);
        out[off + 1] = static_cast<uint8_t>(e.word >> 8);
        out[off + 2] = static_cast<uint8_t>(e.word >> 16);
        out[off + 3] = static_cast<uint8_t>(e.word >> 24);
    }
    return out;
}

} // namespace nmrv
