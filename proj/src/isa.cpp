#include "nmrv/isa.hpp"

#include <array>
#include <cstdio>

namespace nmrv {

namespace {

constexpr uint32_t OPC_LUI = 0b0110111;
constexpr uint32_t OPC_AUIPC = 0b0010111;
constexpr uint32_t OPC_JAL = 0b1101111;
constexpr uint32_t OPC_JALR = 0b1100111;
constexpr uint32_t OPC_BRANCH = 0b1100011;
constexpr uint32_t OPC_LOAD = 0b0000011;
constexpr uint32_t OPC_STORE = 0b0100011;
constexpr uint32_t OPC_OPIMM = 0b0010011;
constexpr uint32_t OPC_OP = 0b0110011;
constexpr uint32_t OPC_MISCMEM = 0b0001111;
constexpr uint32_t OPC_SYSTEM = 0b1110011;

constexpr std::array<const char*, 32> kAbiNames = {
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0",
    "a1",   "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5",
    "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};

uint32_t bits(uint32_t w, int hi, int lo) {
    return (w >> lo) & ((1u << (hi - lo + 1)) - 1);
}

int32_t imm_i(uint32_t w) {
    return static_cast<int32_t>(w) >> 20;
}

int32_t imm_s(uint32_t w) {
    return static_cast<int32_t>((bits(w, 31, 25) << 5 | bits(w, 11, 7)) << 20) >> 20;
}

int32_t imm_b(uint32_t w) {
    uint32_t v = bits(w, 31, 31) << 12 | bits(w, 7, 7) << 11 | bits(w, 30, 25) << 5 |
                 bits(w, 11, 8) << 1;
    return static_cast<int32_t>(v << 19) >> 19;
}

int32_t imm_u(uint32_t w) {
    return static_cast<int32_t>(bits(w, 31, 12));
}

int32_t imm_j(uint32_t w) {
    uint32_t v = bits(w, 31, 31) << 20 | bits(w, 19, 12) << 12 | bits(w, 20, 20) << 11 |
                 bits(w, 30, 21) << 1;
    return static_cast<int32_t>(v << 11) >> 11;
}

uint32_t enc_r(uint32_t opc, uint32_t f3, uint32_t f7, uint32_t rd, uint32_t rs1, uint32_t rs2) {
    return f7 << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opc;
}

uint32_t enc_i(uint32_t opc, uint32_t f3, uint32_t rd, uint32_t rs1, int32_t imm) {
    return static_cast<uint32_t>(imm & 0xfff) << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opc;
}

uint32_t enc_s(uint32_t opc, uint32_t f3, uint32_t rs1, uint32_t rs2, int32_t imm) {
    uint32_t u = static_cast<uint32_t>(imm);
    return bits(u, 11, 5) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | bits(u, 4, 0) << 7 | opc;
}

uint32_t enc_b(uint32_t opc, uint32_t f3, uint32_t rs1, uint32_t rs2, int32_t imm) {
    uint32_t u = static_cast<uint32_t>(imm);
    return bits(u, 12, 12) << 31 | bits(u, 10, 5) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 |
           bits(u, 4, 1) << 8 | bits(u, 11, 11) << 7 | opc;
}

uint32_t enc_u(uint32_t opc, uint32_t rd, int32_t imm) {
    return static_cast<uint32_t>(imm & 0xfffff) << 12 | rd << 7 | opc;
}

uint32_t enc_j(uint32_t opc, uint32_t rd, int32_t imm) {
    uint32_t u = static_cast<uint32_t>(imm);
    return bits(u, 20, 20) << 31 | bits(u, 10, 1) << 21 | bits(u, 11, 11) << 20 |
           bits(u, 19, 12) << 12 | rd << 7 | opc;
}

} // namespace

IllegalInstruction::IllegalInstruction(uint32_t word)
    : std::runtime_error([word] {
          char buf[48];
          std::snprintf(buf, sizeof buf, "illegal instruction 0x%08x", word);
          return std::string(buf);
      }()),
      word_(word) {}

bool is_custom(Op op) {
    return op == Op::Nmldl || op == Op::Nmldh || op == Op::Nmpn || op == Op::Nmdec;
}

std::string reg_name(unsigned idx) {
    return kAbiNames[idx & 31];
}

Instruction decode(uint32_t word) {
    const uint32_t opc = bits(word, 6, 0);
    const uint32_t f3 = bits(word, 14, 12);
    const uint32_t f7 = bits(word, 31, 25);
    const uint8_t rd = static_cast<uint8_t>(bits(word, 11, 7));
    const uint8_t rs1 = static_cast<uint8_t>(bits(word, 19, 15));
    const uint8_t rs2 = static_cast<uint8_t>(bits(word, 24, 20));

    switch (opc) {
    case OPC_LUI:
        return {Op::Lui, rd, 0, 0, imm_u(word)};
    case OPC_AUIPC:
        return {Op::Auipc, rd, 0, 0, imm_u(word)};
    case OPC_JAL:
        return {Op::Jal, rd, 0, 0, imm_j(word)};
    case OPC_JALR:
        if (f3 != 0)
            throw IllegalInstruction(word);
        return {Op::Jalr, rd, rs1, 0, imm_i(word)};
    case OPC_BRANCH: {
        static constexpr std::array<Op, 8> ops = {Op::Beq, Op::Bne,  Op::Beq /*inv*/,
                                                  Op::Beq /*inv*/, Op::Blt, Op::Bge,
                                                  Op::Bltu, Op::Bgeu};
        if (f3 == 2 || f3 == 3)
            throw IllegalInstruction(word);
        return {ops[f3], 0, rs1, rs2, imm_b(word)};
    }
    case OPC_LOAD: {
        switch (f3) {
        case 0:
            return {Op::Lb, rd, rs1, 0, imm_i(word)};
        case 1:
            return {Op::Lh, rd, rs1, 0, imm_i(word)};
        case 2:
            return {Op::Lw, rd, rs1, 0, imm_i(word)};
        case 4:
            return {Op::Lbu, rd, rs1, 0, imm_i(word)};
        case 5:
            return {Op::Lhu, rd, rs1, 0, imm_i(word)};
        default:
            throw IllegalInstruction(word);
        }
    }
    case OPC_STORE: {
        switch (f3) {
        case 0:
            return {Op::Sb, 0, rs1, rs2, imm_s(word)};
        case 1:
            return {Op::Sh, 0, rs1, rs2, imm_s(word)};
        case 2:
            return {Op::Sw, 0, rs1, rs2, imm_s(word)};
        default:
            throw IllegalInstruction(word);
        }
    }
    case OPC_OPIMM: {
        switch (f3) {
        case 0:
            return {Op::Addi, rd, rs1, 0, imm_i(word)};
        case 1:
            if (f7 != 0)
                throw IllegalInstruction(word);
            return {Op::Slli, rd, rs1, 0, static_cast<int32_t>(rs2)};
        case 2:
            return {Op::Slti, rd, rs1, 0, imm_i(word)};
        case 3:
            return {Op::Sltiu, rd, rs1, 0, imm_i(word)};
        case 4:
            return {Op::Xori, rd, rs1, 0, imm_i(word)};
        case 5:
            if (f7 == 0)
                return {Op::Srli, rd, rs1, 0, static_cast<int32_t>(rs2)};
            if (f7 == 0b0100000)
                return {Op::Srai, rd, rs1, 0, static_cast<int32_t>(rs2)};
            throw IllegalInstruction(word);
        case 6:
            return {Op::Ori, rd, rs1, 0, imm_i(word)};
        case 7:
            return {Op::Andi, rd, rs1, 0, imm_i(word)};
        }
        throw IllegalInstruction(word);
    }
    case OPC_OP: {
        if (f7 == 0b0000001) {
            static constexpr std::array<Op, 8> ops = {Op::Mul,  Op::Mulh, Op::Mulhsu, Op::Mulhu,
                                                      Op::Div,  Op::Divu, Op::Rem,    Op::Remu};
            return {ops[f3], rd, rs1, rs2, 0};
        }
        if (f7 == 0) {
            static constexpr std::array<Op, 8> ops = {Op::Add, Op::Sll, Op::Slt, Op::Sltu,
                                                      Op::Xor, Op::Srl, Op::Or,  Op::And};
            return {ops[f3], rd, rs1, rs2, 0};
        }
        if (f7 == 0b0100000) {
            if (f3 == 0)
                return {Op::Sub, rd, rs1, rs2, 0};
            if (f3 == 5)
                return {Op::Sra, rd, rs1, rs2, 0};
        }
        throw IllegalInstruction(word);
    }
    case OPC_MISCMEM:
        if (f3 != 0)
            throw IllegalInstruction(word);
        return {Op::Fence, rd, rs1, 0, imm_i(word)};
    case OPC_SYSTEM: {
        if (f3 != 0 || rd != 0 || rs1 != 0)
            throw IllegalInstruction(word);
        const int32_t imm = imm_i(word);
        if (imm == 0)
            return {Op::Ecall, 0, 0, 0, 0};
        if (imm == 1)
            return {Op::Ebreak, 0, 0, 0, 0};
        throw IllegalInstruction(word);
    }
    case kCustom0Opcode: {
        // funct3 000..011 -> nmldl/nmldh/nmpn/nmdec; funct7 is don't-care.
        switch (f3) {
        case 0:
            return {Op::Nmldl, rd, rs1, rs2, 0};
        case 1:
            return {Op::Nmldh, rd, rs1, rs2, 0};
        case 2:
            return {Op::Nmpn, rd, rs1, rs2, 0};
        case 3:
            return {Op::Nmdec, rd, rs1, rs2, 0};
        default:
            throw IllegalInstruction(word);
        }
    }
    default:
        throw IllegalInstruction(word);
    }
}

uint32_t encode(const Instruction& i) {
    switch (i.op) {
    case Op::Lui:
        return enc_u(OPC_LUI, i.rd, i.imm);
    case Op::Auipc:
        return enc_u(OPC_AUIPC, i.rd, i.imm);
    case Op::Jal:
        return enc_j(OPC_JAL, i.rd, i.imm);
    case Op::Jalr:
        return enc_i(OPC_JALR, 0, i.rd, i.rs1, i.imm);
    case Op::Beq:
        return enc_b(OPC_BRANCH, 0, i.rs1, i.rs2, i.imm);
    case Op::Bne:
        return enc_b(OPC_BRANCH, 1, i.rs1, i.rs2, i.imm);
    case Op::Blt:
        return enc_b(OPC_BRANCH, 4, i.rs1, i.rs2, i.imm);
    case Op::Bge:
        return enc_b(OPC_BRANCH, 5, i.rs1, i.rs2, i.imm);
    case Op::Bltu:
        return enc_b(OPC_BRANCH, 6, i.rs1, i.rs2, i.imm);
    case Op::Bgeu:
        return enc_b(OPC_BRANCH, 7, i.rs1, i.rs2, i.imm);
    case Op::Lb:
        return enc_i(OPC_LOAD, 0, i.rd, i.rs1, i.imm);
    case Op::Lh:
        return enc_i(OPC_LOAD, 1, i.rd, i.rs1, i.imm);
    case Op::Lw:
        return enc_i(OPC_LOAD, 2, i.rd, i.rs1, i.imm);
    case Op::Lbu:
        return enc_i(OPC_LOAD, 4, i.rd, i.rs1, i.imm);
    case Op::Lhu:
        return enc_i(OPC_LOAD, 5, i.rd, i.rs1, i.imm);
    case Op::Sb:
        return enc_s(OPC_STORE, 0, i.rs1, i.rs2, i.imm);
    case Op::Sh:
        return enc_s(OPC_STORE, 1, i.rs1, i.rs2, i.imm);
    case Op::Sw:
        return enc_s(OPC_STORE, 2, i.rs1, i.rs2, i.imm);
    case Op::Addi:
        return enc_i(OPC_OPIMM, 0, i.rd, i.rs1, i.imm);
    case Op::Slti:
        return enc_i(OPC_OPIMM, 2, i.rd, i.rs1, i.imm);
    case Op::Sltiu:
        return enc_i(OPC_OPIMM, 3, i.rd, i.rs1, i.imm);
    case Op::Xori:
        return enc_i(OPC_OPIMM, 4, i.rd, i.rs1, i.imm);
    case Op::Ori:
        return enc_i(OPC_OPIMM, 6, i.rd, i.rs1, i.imm);
    case Op::Andi:
        return enc_i(OPC_OPIMM, 7, i.rd, i.rs1, i.imm);
    case Op::Slli:
        return enc_r(OPC_OPIMM, 1, 0, i.rd, i.rs1, static_cast<uint32_t>(i.imm & 31));
    case Op::Srli:
        return enc_r(OPC_OPIMM, 5, 0, i.rd, i.rs1, static_cast<uint32_t>(i.imm & 31));
    case Op::Srai:
        return enc_r(OPC_OPIMM, 5, 0b0100000, i.rd, i.rs1, static_cast<uint32_t>(i.imm & 31));
    case Op::Add:
        return enc_r(OPC_OP, 0, 0, i.rd, i.rs1, i.rs2);
    case Op::Sub:
        return enc_r(OPC_OP, 0, 0b0100000, i.rd, i.rs1, i.rs2);
    case Op::Sll:
        return enc_r(OPC_OP, 1, 0, i.rd, i.rs1, i.rs2);
    case Op::Slt:
        return enc_r(OPC_OP, 2, 0, i.rd, i.rs1, i.rs2);
    case Op::Sltu:
        return enc_r(OPC_OP, 3, 0, i.rd, i.rs1, i.rs2);
    case Op::Xor:
        return enc_r(OPC_OP, 4, 0, i.rd, i.rs1, i.rs2);
    case Op::Srl:
        return enc_r(OPC_OP, 5, 0, i.rd, i.rs1, i.rs2);
    case Op::Sra:
        return enc_r(OPC_OP, 5, 0b0100000, i.rd, i.rs1, i.rs2);
    case Op::Or:
        return enc_r(OPC_OP, 6, 0, i.rd, i.rs1, i.rs2);
    case Op::And:
        return enc_r(OPC_OP, 7, 0, i.rd, i.rs1, i.rs2);
    case Op::Mul:
        return enc_r(OPC_OP, 0, 1, i.rd, i.rs1, i.rs2);
    case Op::Mulh:
        return enc_r(OPC_OP, 1, 1, i.rd, i.rs1, i.rs2);
    case Op::Mulhsu:
        return enc_r(OPC_OP, 2, 1, i.rd, i.rs1, i.rs2);
    case Op::Mulhu:
        return enc_r(OPC_OP, 3, 1, i.rd, i.rs1, i.rs2);
    case Op::Div:
        return enc_r(OPC_OP, 4, 1, i.rd, i.rs1, i.rs2);
    case Op::Divu:
        return enc_r(OPC_OP, 5, 1, i.rd, i.rs1, i.rs2);
    case Op::Rem:
        return enc_r(OPC_OP, 6, 1, i.rd, i.rs1, i.rs2);
    case Op::Remu:
        return enc_r(OPC_OP, 7, 1, i.rd, i.rs1, i.rs2);
    case Op::Fence:
        return enc_i(OPC_MISCMEM, 0, i.rd, i.rs1, i.imm);
    case Op::Ecall:
        return enc_i(OPC_SYSTEM, 0, 0, 0, 0);
    case Op::Ebreak:
        return enc_i(OPC_SYSTEM, 0, 0, 0, 1);
    case Op::Nmldl:
        return enc_r(kCustom0Opcode, 0, 0, i.rd, i.rs1, i.rs2);
    case Op::Nmldh:
        return enc_r(kCustom0Opcode, 1, 0, i.rd, i.rs1, i.rs2);
    case Op::Nmpn:
        return enc_r(kCustom0Opcode, 2, 0, i.rd, i.rs1, i.rs2);
    case Op::Nmdec:
        return enc_r(kCustom0Opcode, 3, 0, i.rd, i.rs1, i.rs2);
    }
    throw std::logic_error("encode: unhandled op");
}

namespace {

std::string fmt_r(const char* m, const Instruction& i) {
    return std::string(m) + " " + reg_name(i.rd) + ", " + reg_name(i.rs1) + ", " + reg_name(i.rs2);
}

std::string fmt_load(const char* m, const Instruction& i) {
    return std::string(m) + " " + reg_name(i.rd) + ", " + std::to_string(i.imm) + "(" +
           reg_name(i.rs1) + ")";
}

std::string fmt_store(const char* m, const Instruction& i) {
    return std::string(m) + " " + reg_name(i.rs2) + ", " + std::to_string(i.imm) + "(" +
           reg_name(i.rs1) + ")";
}

std::string fmt_imm(const char* m, const Instruction& i) {
    return std::string(m) + " " + reg_name(i.rd) + ", " + reg_name(i.rs1) + ", " +
           std::to_string(i.imm);
}

std::string fmt_branch(const char* m, const Instruction& i) {
    return std::string(m) + " " + reg_name(i.rs1) + ", " + reg_name(i.rs2) + ", " +
           std::to_string(i.imm);
}

} // namespace

std::string disassemble(uint32_t word) {
    Instruction i;
    try {
        i = decode(word);
    } catch (const IllegalInstruction&) {
        char buf[24];
        std::snprintf(buf, sizeof buf, ".word 0x%08x", word);
        return buf;
    }
    switch (i.op) {
    case Op::Lui:
        return "lui " + reg_name(i.rd) + ", " + std::to_string(i.imm);
    case Op::Auipc:
        return "auipc " + reg_name(i.rd) + ", " + std::to_string(i.imm);
    case Op::Jal:
        return "jal " + reg_name(i.rd) + ", " + std::to_string(i.imm);
    case Op::Jalr:
        return "jalr " + reg_name(i.rd) + ", " + std::to_string(i.imm) + "(" + reg_name(i.rs1) +
               ")";
    case Op::Beq:
        return fmt_branch("beq", i);
    case Op::Bne:
        return fmt_branch("bne", i);
    case Op::Blt:
        return fmt_branch("blt", i);
    case Op::Bge:
        return fmt_branch("bge", i);
    case Op::Bltu:
        return fmt_branch("bltu", i);
    case Op::Bgeu:
        return fmt_branch("bgeu", i);
    case Op::Lb:
        return fmt_load("lb", i);
    case Op::Lh:
        return fmt_load("lh", i);
    case Op::Lw:
        return fmt_load("lw", i);
    case Op::Lbu:
        return fmt_load("lbu", i);
    case Op::Lhu:
        return fmt_load("lhu", i);
    case Op::Sb:
        return fmt_store("sb", i);
    case Op::Sh:
        return fmt_store("sh", i);
    case Op::Sw:
        return fmt_store("sw", i);
    case Op::Addi:
        if (i.rd == 0 && i.rs1 == 0 && i.imm == 0)
            return "nop";
        return fmt_imm("addi", i);
    case Op::Slti:
        return fmt_imm("slti", i);
    case Op::Sltiu:
        return fmt_imm("sltiu", i);
    case Op::Xori:
        return fmt_imm("xori", i);
    case Op::Ori:
        return fmt_imm("ori", i);
    case Op::Andi:
        return fmt_imm("andi", i);
    case Op::Slli:
        return fmt_imm("slli", i);
    case Op::Srli:
        return fmt_imm("srli", i);
    case Op::Srai:
        return fmt_imm("srai", i);
    case Op::Add:
        return fmt_r("add", i);
    case Op::Sub:
        return fmt_r("sub", i);
    case Op::Sll:
        return fmt_r("sll", i);
    case Op::Slt:
        return fmt_r("slt", i);
    case Op::Sltu:
        return fmt_r("sltu", i);
    case Op::Xor:
        return fmt_r("xor", i);
    case Op::Srl:
        return fmt_r("srl", i);
    case Op::Sra:
        return fmt_r("sra", i);
    case Op::Or:
        return fmt_r("or", i);
    case Op::And:
        return fmt_r("and", i);
    case Op::Mul:
        return fmt_r("mul", i);
    case Op::Mulh:
        return fmt_r("mulh", i);
    case Op::Mulhsu:
        return fmt_r("mulhsu", i);
    case Op::Mulhu:
        return fmt_r("mulhu", i);
    case Op::Div:
        return fmt_r("div", i);
    case Op::Divu:
        return fmt_r("divu", i);
    case Op::Rem:
        return fmt_r("rem", i);
    case Op::Remu:
        return fmt_r("remu", i);
    case Op::Fence:
        if (i.rd == 0 && i.rs1 == 0 && i.imm == 0x0ff)
            return "fence";
        {
            char buf[24];
            std::snprintf(buf, sizeof buf, ".word 0x%08x", word);
            return buf;
        }
    case Op::Ecall:
        return "ecall";
    case Op::Ebreak:
        return "ebreak";
    case Op::Nmldl:
        return fmt_r("nmldl", i);
    case Op::Nmldh:
        return "nmldh " + reg_name(i.rd) + ", " + reg_name(i.rs1);
    case Op::Nmpn:
        return fmt_r("nmpn", i);
    case Op::Nmdec:
        return fmt_r("nmdec", i);
    }
    return "";
}

} // namespace nmrv
