#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "nmrv/dcu.hpp"
#include "nmrv/machine.hpp"
#include "nmrv/rng.hpp"

using namespace nmrv;

namespace {

Machine run_source(const std::string& src, uint64_t budget = 100000) {
    Machine m;
    m.load_program(assemble(src));
    const RunResult r = m.run(budget);
    REQUIRE(r.status == RunStatus::Halted);
    return m;
}

} // namespace

TEST_CASE("x0 is hardwired to zero") {
    Machine m = run_source("li x0, 123\naddi x0, x0, 7\nebreak\n");
    CHECK(m.reg(0) == 0);
}

TEST_CASE("alu and branch semantics") {
    Machine m = run_source(R"(
        li a0, 0        # sum
        li a1, 10       # i
    loop:
        add a0, a0, a1
        addi a1, a1, -1
        bne a1, zero, loop
        li t0, -7
        srai t1, t0, 1
        sltiu t2, zero, 1
        xori t3, t0, -1
        ebreak
    )");
    CHECK(m.reg(10) == 55);
    CHECK(static_cast<int32_t>(m.reg(6)) == -4);
    CHECK(m.reg(7) == 1);
    CHECK(m.reg(28) == 6);
}

TEST_CASE("mul/div corner semantics") {
    Machine m = run_source(R"(
        li a0, -7
        li a1, 2
        div a2, a0, a1      # -3
        rem a3, a0, a1      # -1
        li a4, 0
        div a5, a0, a4      # -1 (divide by zero)
        rem s2, a0, a4      # dividend
        li s3, 0x80000000
        li s4, -1
        div s5, s3, s4      # INT_MIN
        rem s6, s3, s4      # 0
        mulh s7, s3, s4
        ebreak
    )");
    CHECK(static_cast<int32_t>(m.reg(12)) == -3);
    CHECK(static_cast<int32_t>(m.reg(13)) == -1);
    CHECK(m.reg(15) == UINT32_MAX);
    CHECK(static_cast<int32_t>(m.reg(18)) == -7);
    CHECK(m.reg(21) == 0x80000000u);
    CHECK(m.reg(22) == 0);
    CHECK(m.reg(23) == 0); // (-2^31 * -1) >> 32
}

TEST_CASE("loads and stores with sign extension") {
    Machine m = run_source(R"(
        li a0, 0x1000
        li a1, -2
        sw a1, 0(a0)
        lb a2, 0(a0)
        lbu a3, 0(a0)
        lh a4, 0(a0)
        lhu a5, 0(a0)
        lw a6, 0(a0)
        sh a1, 8(a0)
        lw a7, 8(a0)
        ebreak
    )");
    CHECK(static_cast<int32_t>(m.reg(12)) == -2);
    CHECK(m.reg(13) == 0xfe);
    CHECK(static_cast<int32_t>(m.reg(14)) == -2);
    CHECK(m.reg(15) == 0xfffe);
    CHECK(m.reg(16) == 0xfffffffeu);
    CHECK(m.reg(17) == 0x0000fffeu);
}

TEST_CASE("empty program: a lone ebreak retires once") {
    Machine m;
    m.load_program(assemble("ebreak"));
    const RunResult r = m.run(10);
    CHECK(r.status == RunStatus::Halted);
    CHECK(r.counters.n_instr == 1);
    CHECK(r.counters.n_reginstr == 1);
}

TEST_CASE("straight line, no hazards: cycles = instructions + fill") {
    // Ten instructions with disjoint registers.
    Machine m;
    m.load_program(assemble(R"(
        addi a0, zero, 1
        addi a1, zero, 2
        addi a2, zero, 3
        addi a3, zero, 4
        addi a4, zero, 5
        addi a5, zero, 6
        addi s2, zero, 7
        addi s3, zero, 8
        addi s4, zero, 9
        ebreak
    )"));
    const RunResult r = m.run(100);
    CHECK(r.counters.n_instr == 10);
    CHECK(r.counters.n_hazard_stalls == 0);
    CHECK(r.counters.n_cycles == 10 + m.pipeline_fill);
    CHECK(ipc(r.counters) <= 1.0);
}

TEST_CASE("hazard rule: RAW dependencies stall") {
    const Instruction produce{Op::Add, 1, 2, 3, 0};
    CHECK(cycle_model(produce, Instruction{Op::Add, 4, 1, 5, 0}) == 1);
    CHECK(cycle_model(produce, Instruction{Op::Add, 4, 5, 6, 0}) == 0);
    CHECK(cycle_model(Instruction{Op::Add, 0, 2, 3, 0}, Instruction{Op::Add, 4, 0, 5, 0}) == 0);
    // Stores have no destination.
    CHECK(cycle_model(Instruction{Op::Sw, 0, 1, 2, 0}, Instruction{Op::Add, 4, 1, 2, 0}) == 0);
    // nmpn reads its rd field.
    CHECK(cycle_model(Instruction{Op::Addi, 12, 0, 0, 0}, Instruction{Op::Nmpn, 12, 16, 17, 0}) ==
          1);
    CHECK(cycle_model(produce, Instruction{Op::Add, 4, 1, 5, 0}, 3) == 3);

    Machine m;
    m.load_program(assemble(R"(
        addi a0, zero, 1
        addi a1, a0, 1     # RAW on a0
        addi a2, zero, 1
        addi a3, a2, 1     # RAW on a2
        ebreak
    )"));
    const RunResult r = m.run(100);
    CHECK(r.counters.n_hazard_stalls == 2);
    CHECK(r.counters.n_cycles == 5 + 2 + m.pipeline_fill);
}

TEST_CASE("load-use dependency stalls") {
    Machine m;
    m.load_program(assemble(R"(
        li a0, 0x2000
        sw zero, 0(a0)
        lw a7, 0(a0)
        add a7, a7, a0    # uses the loaded a7 back to back
        ebreak
    )"));
    const RunResult r = m.run(100);
    CHECK(r.counters.n_hazard_stalls >= 1);
}

TEST_CASE("traps: misaligned and out-of-range accesses halt with diagnostics") {
    {
        Machine m;
        m.load_program(assemble("li a0, 2\nlw a1, 0(a0)\nebreak\n"));
        const RunResult r = m.run(10);
        CHECK(r.status == RunStatus::Trapped);
        CHECK(r.trap_message.find("misaligned") != std::string::npos);
    }
    {
        Machine m;
        m.load_program(assemble("li a0, 0x70000000\nsw a0, 0(a0)\nebreak\n"));
        const RunResult r = m.run(10);
        CHECK(r.status == RunStatus::Trapped);
        CHECK(r.trap_message.find("out of range") != std::string::npos);
    }
    {
        Machine m;
        m.load_program(assemble(".word 0xffffffff\n"));
        const RunResult r = m.run(10);
        CHECK(r.status == RunStatus::Trapped);
        CHECK(r.trap_message.find("illegal instruction") != std::string::npos);
    }
    {
        Machine m;
        m.load_program(assemble("ecall\n"));
        const RunResult r = m.run(10);
        CHECK(r.status == RunStatus::Trapped);
    }
}

TEST_CASE("budget exhaustion is distinct from traps") {
    Machine m;
    m.load_program(assemble("loop: j loop\n"));
    const RunResult r = m.run(100);
    CHECK(r.status == RunStatus::BudgetExhausted);
    CHECK(r.counters.n_instr == 100);
}

TEST_CASE("nmldl loads the configuration registers and acknowledges") {
    const Fixed a = from_real(0.02, Q4_11);
    const Fixed b = from_real(0.2, Q4_11);
    const Fixed c = from_real(-65.0, Q7_8);
    const Fixed d = from_real(8.0, Q4_11);
    const uint32_t ba = (static_cast<uint32_t>(static_cast<uint16_t>(b.raw)) << 16) |
                        static_cast<uint16_t>(a.raw);
    const uint32_t dc = (static_cast<uint32_t>(static_cast<uint16_t>(d.raw)) << 16) |
                        static_cast<uint16_t>(c.raw);
    Machine m;
    m.load_program(assemble("nmldl a0, a1, a2\nebreak\n"));
    m.set_reg(11, ba);
    m.set_reg(12, dc);
    REQUIRE(m.run(10).status == RunStatus::Halted);
    CHECK(m.reg(10) == 1);
    CHECK(m.nm_config().params.a.raw == a.raw);
    CHECK(m.nm_config().params.b.raw == b.raw);
    CHECK(m.nm_config().params.c.raw == c.raw);
    CHECK(m.nm_config().params.d.raw == d.raw);
}

TEST_CASE("nmldh sets timestep and pin bits") {
    Machine m;
    m.load_program(assemble("nmldh a0, a1\nebreak\n"));
    m.set_reg(11, 0b11);
    REQUIRE(m.run(10).status == RunStatus::Halted);
    CHECK(m.reg(10) == 1);
    CHECK(m.nm_config().h_fast);
    CHECK(m.nm_config().pin);
}

TEST_CASE("nmdec applies the decay unit") {
    Machine m;
    m.load_program(assemble("nmdec a0, a1, a2\nebreak\n"));
    m.set_reg(11, static_cast<uint32_t>(16 << 16));
    m.set_reg(12, 2);
    REQUIRE(m.run(10).status == RunStatus::Halted);
    CHECK(static_cast<int32_t>(m.reg(10)) ==
          decay_step(16 << 16, DividerSelect(2), false));

    Machine bad;
    bad.load_program(assemble("nmdec a0, a1, a2\nebreak\n"));
    bad.set_reg(12, 9); // reserved select
    const RunResult r = bad.run(10);
    CHECK(r.status == RunStatus::Trapped);
    CHECK(r.trap_message.find("divider") != std::string::npos);
}

TEST_CASE("nmpn trap leaves rd and memory untouched") {
    Machine m;
    m.load_program(assemble("nmpn a2, a6, a7\nebreak\n"));
    m.set_reg(12, 0x7ffffff0); // far outside memory
    m.set_reg(16, VUWord::pack(from_real(10.0, Q7_8), from_real(0.0, Q7_8)).word);
    const RunResult r = m.run(10);
    CHECK(r.status == RunStatus::Trapped);
    CHECK(m.reg(12) == 0x7ffffff0); // rd unchanged
    CHECK(r.counters.n_updates == 0);
    CHECK(r.counters.n_instr == 0);
}

namespace {

// Guest-mode neuron-update kernel: parameter block at a3, thalamic word
// at a4, current word at a0; h/pin flags preloaded in t0.
const char* kGuestKernel = R"(
    nmldh x0, t0
    lw a6, 4(a3)
    lw a7, 8(a3)
    nmldl x0, a6, a7
    lw t5, (a4)
    lw a7, (a0)
    lw a6, (a3)
    add a7, a7, t5
    add a2, x0, a3
    nmpn a2, a6, a7
    ebreak
)";

struct GuestResult {
    uint32_t vu_word;
    uint32_t spike;
    PerfCounters counters;
};

GuestResult run_guest(const NmConfig& cfg, VUWord vu, int32_t thalamic_raw, int32_t current_raw) {
    Machine m;
    m.load_program(assemble(kGuestKernel, 0));
    constexpr uint32_t kBlock = 0x1000, kThal = 0x2000, kCur = 0x3000;
    m.write_word(kBlock, vu.word);
    const uint32_t ba = (static_cast<uint32_t>(static_cast<uint16_t>(cfg.params.b.raw)) << 16) |
                        static_cast<uint16_t>(cfg.params.a.raw);
    const uint32_t dc = (static_cast<uint32_t>(static_cast<uint16_t>(cfg.params.d.raw)) << 16) |
                        static_cast<uint16_t>(cfg.params.c.raw);
    m.write_word(kBlock + 4, ba);
    m.write_word(kBlock + 8, dc);
    m.write_word(kThal, static_cast<uint32_t>(thalamic_raw));
    m.write_word(kCur, static_cast<uint32_t>(current_raw));
    m.set_reg(13, kBlock);
    m.set_reg(14, kThal);
    m.set_reg(10, kCur);
    m.set_reg(5, (cfg.h_fast ? 1u : 0u) | (cfg.pin ? 2u : 0u));
    const RunResult r = m.run(100);
    REQUIRE(r.status == RunStatus::Halted);
    return GuestResult{m.read_word(kBlock), m.reg(12), r.counters};
}

} // namespace

TEST_CASE("guest and golden paths agree bit for bit") {
    Rng rng(20240809);
    for (int n = 0; n < 1000; ++n) {
        NmConfig cfg;
        cfg.params.a = Fixed{static_cast<int32_t>(rng.next_u64() % 1024), Q4_11};
        cfg.params.b = Fixed{static_cast<int32_t>(rng.next_u64() % 1024), Q4_11};
        cfg.params.c = Fixed{static_cast<int32_t>(rng.next_u64() % 8192) - 20000, Q7_8};
        cfg.params.d = Fixed{static_cast<int32_t>(rng.next_u64() % 32768), Q4_11};
        cfg.h_fast = rng.next_u64() & 1;
        cfg.pin = rng.next_u64() & 1;
        const VUWord vu = VUWord::pack_raw(static_cast<int16_t>(rng.next_u64()),
                                           static_cast<int16_t>(rng.next_u64()));
        const int32_t thal = static_cast<int32_t>(rng.next_u64() % (80u << 16)) - (40 << 16);
        const int32_t cur = static_cast<int32_t>(rng.next_u64() % (80u << 16)) - (40 << 16);

        const GuestResult g = run_guest(cfg, vu, thal, cur);
        const int32_t isyn = static_cast<int32_t>(static_cast<uint32_t>(cur) +
                                                  static_cast<uint32_t>(thal));
        const StepResult direct = izh_step(vu, Fixed{isyn, Q15_16}, cfg);
        if (g.vu_word != direct.vu.word || g.spike != (direct.spike ? 1u : 0u)) {
            CAPTURE(n);
            REQUIRE(g.vu_word == direct.vu.word);
            REQUIRE(g.spike == (direct.spike ? 1u : 0u));
        }
    }
}

TEST_CASE("kernel counters split by instruction class") {
    const GuestResult g = run_guest(NmConfig{make_params(0.02, 0.2, -65.0, 8.0), false, false},
                                    VUWord::pack(from_real(-65.0, Q7_8), from_real(-13.0, Q7_8)),
                                    0, 0);
    CHECK(g.counters.n_instr == 11);
    CHECK(g.counters.n_updates == 1);
    CHECK(g.counters.n_config_instr == 2);
    CHECK(g.counters.n_decays == 0);
    CHECK(g.counters.n_reginstr == 8);
    CHECK(g.counters.n_instr == g.counters.n_reginstr + g.counters.n_updates +
                                    g.counters.n_decays + g.counters.n_config_instr);
    CHECK(g.counters.n_cycles >= g.counters.n_instr);
}

TEST_CASE("counters replay identically") {
    const GuestResult a = run_guest(NmConfig{make_params(0.02, 0.2, -65.0, 8.0), false, false},
                                    VUWord::pack(from_real(0.0, Q7_8), from_real(0.0, Q7_8)), 7, 9);
    const GuestResult b = run_guest(NmConfig{make_params(0.02, 0.2, -65.0, 8.0), false, false},
                                    VUWord::pack(from_real(0.0, Q7_8), from_real(0.0, Q7_8)), 7, 9);
    CHECK(a.counters.n_cycles == b.counters.n_cycles);
    CHECK(a.counters.n_hazard_stalls == b.counters.n_hazard_stalls);
}

TEST_CASE("ipc formulas") {
    PerfCounters c;
    c.n_instr = 10;
    c.n_cycles = 20;
    CHECK(ipc(c) == 0.5);

    PerfCounters e;
    e.n_reginstr = 100;
    e.n_updates = 10;
    e.n_cycles = 200;
    e.n_instr = 110;
    CHECK(ipc_eff(e) == doctest::Approx(1.45));
    CHECK(ipc_eff(e) > 1.0);

    PerfCounters all_regular;
    all_regular.n_instr = 50;
    all_regular.n_reginstr = 50;
    all_regular.n_cycles = 60;
    CHECK(ipc_eff(all_regular) == ipc(all_regular));

    PerfCounters zero;
    CHECK_THROWS_AS(ipc(zero), std::invalid_argument);
    CHECK_THROWS_AS(ipc_eff(zero), std::invalid_argument);
}

TEST_CASE("trace log emits cycle, pc, word and disassembly") {
    Machine m;
    m.load_program(assemble("addi a0, zero, 1\nebreak\n"));
    std::vector<std::string> lines;
    const RunResult r = m.run(10, [&](uint64_t cycle, uint32_t pc, uint32_t word,
                                      const std::string& disasm) {
        lines.push_back(std::to_string(cycle) + " " + std::to_string(pc) + " " +
                        std::to_string(word) + " " + disasm);
    });
    REQUIRE(r.status == RunStatus::Halted);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].find("addi a0, zero, 1") != std::string::npos);
    CHECK(lines[1].find("ebreak") != std::string::npos);
}

TEST_CASE("halt address stops the machine cleanly") {
    Machine m;
    m.load_program(assemble("addi a0, zero, 1\naddi a1, zero, 2\nnop\n"));
    m.halt_address = 8;
    const RunResult r = m.run(100);
    CHECK(r.status == RunStatus::Halted);
    CHECK(r.counters.n_instr == 2);
    CHECK(m.reg(10) == 1);
    CHECK(m.reg(11) == 2);
}

TEST_CASE("hex and binary image loaders") {
    const Program p = assemble("addi a0, zero, 42\nebreak\n");
    {
        Machine m;
        m.load_hex_image(to_hex_image(p), 0);
        REQUIRE(m.run(10).status == RunStatus::Halted);
        CHECK(m.reg(10) == 42);
    }
    {
        Machine m;
        m.load_flat_binary(to_flat_binary(p), 0x400);
        REQUIRE(m.run(10).status == RunStatus::Halted);
        CHECK(m.reg(10) == 42);
    }
}
