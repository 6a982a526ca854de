#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nmrv {

// RV32IM plus the four custom-0 neuron instructions.
enum class Op {
    Lui,
    Auipc,
    Jal,
    Jalr,
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    Sb,
    Sh,
    Sw,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
    Fence,
    Ecall,
    Ebreak,
    // custom-0, opcode 0001011, funct3 000..011
    Nmldl,
    Nmldh,
    Nmpn,
    Nmdec,
};

struct Instruction {
    Op op;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    int32_t imm = 0;

    bool operator==(const Instruction&) const = default;
};

inline constexpr uint32_t kCustom0Opcode = 0b0001011;

class IllegalInstruction : public std::runtime_error {
public:
    explicit IllegalInstruction(uint32_t word);
    uint32_t word() const { return word_; }

private:
    uint32_t word_;
};

bool is_custom(Op op);

// Decodes a 32-bit word; throws IllegalInstruction for unknown opcodes
// or unassigned funct3 slots. Custom-0 funct7 bits are don't-care.
Instruction decode(uint32_t word);

// Encodes an instruction; decode(encode(i)) == i for every representable
// instruction. Custom-0 funct7 encodes as zero.
uint32_t encode(const Instruction& inst);

// Canonical text for a word; words that do not decode render as
// ".word 0x........".
std::string disassemble(uint32_t word);

// ABI register name (x0 -> "zero", x10 -> "a0", ...).
std::string reg_name(unsigned idx);

} // namespace nmrv
