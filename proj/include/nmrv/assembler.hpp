#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmrv/isa.hpp"

namespace nmrv {

// Assembled image: word-aligned, strictly increasing addresses.
struct Program {
    struct Entry {
        uint32_t addr;
        uint32_t word;
    };
    std::vector<Entry> words;
    uint32_t entry = 0;
    std::map<std::string, uint32_t> symbols;
};

struct Diagnostic {
    int line;
    std::string message;
};

class AssemblyError : public std::runtime_error {
public:
    explicit AssemblyError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

// Assembles RV32IM source plus the nm* mnemonics. Syntax: one instruction
// per line, `#` comments, `label:` definitions, `.word`/`.org` directives,
// li/mv/nop/j pseudo-instructions. Custom mnemonics take `rd, rs1, rs2`
// operand order (nmldh: `rd, rs1`). Throws AssemblyError with
// line-numbered diagnostics.
Program assemble(const std::string& source, uint32_t base_addr = 0);

// Program image emitters: one hex word per line, or flat little-endian
// binary (gaps zero-filled from the first address).
std::string to_hex_image(const Program& p);
std::vector<uint8_t> to_flat_binary(const Program& p);

} // namespace nmrv
