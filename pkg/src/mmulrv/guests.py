"""Guest program kernels for the benchmark configurations.

Everything here is built by the in-package program builder so instruction
counts are deterministic.  Each kernel exists in three flavors selected by
the configuration:

  BA     - software Montgomery multiplication only (no MMUL encodings),
  CI-AE  - one atomic MMUL per modular multiplication,
  CI-PE  - partial mode, n_bits MMUL issues per multiplication.

Guest register conventions: x1 ra, x2 mailbox pointer (never clobbered),
x10..x13 subroutine arguments (a_ptr, b_ptr, n_ptr, p_ptr), x3..x9/x14/x15
caller-saved scratch.
"""

from dataclasses import dataclass, field

from .asm import Asm
from .errors import GuestNotFound, InvalidConfig
from .machine import (CODE_BASE, DATA_BASE, MIE, MIP, MMUL_MODE, MSTATUS)

MCYCLE = 0xB00

CONFIGS = ("BA", "CI-AE", "CI-PE")

P25519 = (1 << 255) - 19
P128 = (1 << 127) - 1  # Mersenne prime, 4 words
A24 = 121665


@dataclass(frozen=True)
class FieldContext:
    """Odd modulus plus the Montgomery constants for R = 2^(32*words)."""

    modulus: int
    words: int

    def __post_init__(self):
        if self.modulus % 2 == 0:
            raise InvalidConfig("field modulus must be odd")
        if self.modulus >= 1 << self.n_bits:
            raise InvalidConfig("modulus does not fit in words*32 bits")

    @property
    def n_bits(self):
        return 32 * self.words

    @property
    def r_mod_n(self):
        return (1 << self.n_bits) % self.modulus

    @property
    def r2_mod_n(self):
        return pow(1 << self.n_bits, 2, self.modulus)


class DataLayout:
    def __init__(self, base=DATA_BASE):
        self.next = base
        self.symbols = {}
        self.init = []

    def alloc(self, name, words, value=None):
        addr = self.next
        self.symbols[name] = (addr, words)
        self.next += 4 * words
        if value is not None:
            self.init.append((addr, int(value).to_bytes(4 * words, "little")))
        return addr

    def addr(self, name):
        return self.symbols[name][0]


@dataclass
class GuestProgram:
    name: str
    config: str
    code: bytes
    entry: int
    data: dict
    data_init: list
    listing: str
    budget_hint: int
    meta: dict = field(default_factory=dict)

    def load(self, machine):
        machine.load_image(self.code, self.entry)
        for addr, blob in self.data_init:
            machine.load_image(blob, addr)
        machine.pc = self.entry

    def read_value(self, machine, symbol):
        addr, words = self.data[symbol]
        return machine.mem.read(addr, 4 * words)

    def code_words(self):
        return [int.from_bytes(self.code[i:i + 4], "little")
                for i in range(0, len(self.code), 4)]


# ---------------------------------------------------------------------------
# modular multiplication subroutines ('montmul', args x10..x13)
# ---------------------------------------------------------------------------

def _emit_add_into_s(a, tag, s_addr, words):
    """S[0..W] += *x9 over W words, carry propagated into S[W]."""
    a.li(8, s_addr)
    a.li(4, 0)
    a.li(6, words)
    a.label(tag)
    a.lw(5, 8, 0)
    a.lw(14, 9, 0)
    a.add(5, 5, 14)
    a.sltu(14, 5, 14)
    a.add(5, 5, 4)
    a.sltu(15, 5, 4)
    a.or_(4, 14, 15)
    a.sw(5, 8, 0)
    a.addi(8, 8, 4)
    a.addi(9, 9, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, tag)
    a.lw(5, 8, 0)
    a.add(5, 5, 4)
    a.sw(5, 8, 0)


def emit_software_montmul(a, dl, ctx):
    """Bit-serial shift/add Montgomery multiply in pure RV32E code.

    Same memory contract as the MMUL engine: multiword little-endian
    operands at the addresses in x10 (A), x11 (B), x12 (N); result to x13.
    Uses an accumulator of words+1 machine words in scratch memory.
    """
    W = ctx.words
    if "mm_s_scratch" not in dl.symbols:
        dl.alloc("mm_s_scratch", W + 1)
    s_addr = dl.addr("mm_s_scratch")
    a.label("montmul")
    # S = 0
    a.li(5, s_addr)
    a.li(6, W + 1)
    a.label("mm_zero")
    a.sw(0, 5, 0)
    a.addi(5, 5, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "mm_zero")
    a.li(3, ctx.n_bits)
    a.li(7, 0)  # bit counter
    a.label("mm_outer")
    # x5 = bit i of A
    a.srli(5, 7, 5)
    a.slli(5, 5, 2)
    a.add(5, 5, 10)
    a.lw(5, 5, 0)
    a.andi(6, 7, 31)
    a.srl(5, 5, 6)
    a.andi(5, 5, 1)
    a.beq(5, 0, "mm_no_b")
    a.mv(9, 11)
    _emit_add_into_s(a, "mm_addb", s_addr, W)
    a.label("mm_no_b")
    a.li(8, s_addr)
    a.lw(5, 8, 0)
    a.andi(5, 5, 1)
    a.beq(5, 0, "mm_no_n")
    a.mv(9, 12)
    _emit_add_into_s(a, "mm_addn", s_addr, W)
    a.label("mm_no_n")
    # S >>= 1
    a.li(8, s_addr)
    a.li(6, W)
    a.label("mm_shr")
    a.lw(5, 8, 0)
    a.lw(14, 8, 4)
    a.srli(5, 5, 1)
    a.slli(14, 14, 31)
    a.or_(5, 5, 14)
    a.sw(5, 8, 0)
    a.addi(8, 8, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "mm_shr")
    a.lw(5, 8, 0)
    a.srli(5, 5, 1)
    a.sw(5, 8, 0)
    a.addi(7, 7, 1)
    a.bne(7, 3, "mm_outer")
    # final conditional subtraction: write S - N to P, keep S if S < N
    a.li(8, s_addr)
    a.mv(9, 12)
    a.mv(15, 13)
    a.li(4, 0)
    a.li(6, W)
    a.label("mm_sub")
    a.lw(5, 8, 0)
    a.lw(14, 9, 0)
    a.sltu(3, 5, 14)
    a.sub(5, 5, 14)
    a.sltu(14, 5, 4)
    a.sub(5, 5, 4)
    a.or_(4, 3, 14)
    a.sw(5, 15, 0)
    a.addi(8, 8, 4)
    a.addi(9, 9, 4)
    a.addi(15, 15, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "mm_sub")
    a.lw(5, 8, 0)  # top accumulator word: nonzero means S >= 2^n > N
    a.bne(5, 0, "mm_done")
    a.beq(4, 0, "mm_done")  # no borrow: S >= N, difference stands
    a.li(8, s_addr)
    a.mv(15, 13)
    a.li(6, W)
    a.label("mm_copy")
    a.lw(5, 8, 0)
    a.sw(5, 15, 0)
    a.addi(8, 8, 4)
    a.addi(15, 15, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "mm_copy")
    a.label("mm_done")
    a.ret()


def emit_mmul_atomic_subroutine(a, ctx):
    a.label("montmul")
    a.mmul(13, 10, 11, 12, ctx.words)
    a.ret()


def emit_mmul_partial_subroutine(a, ctx):
    """n_bits identical MMUL issues; mode bit is set once by the caller."""
    a.label("montmul")
    for _ in range(ctx.n_bits):
        a.mmul(13, 10, 11, 12, ctx.words)
    a.ret()


def emit_montmul_subroutine(a, dl, ctx, config):
    if config == "BA":
        emit_software_montmul(a, dl, ctx)
    elif config == "CI-AE":
        emit_mmul_atomic_subroutine(a, ctx)
    elif config == "CI-PE":
        emit_mmul_partial_subroutine(a, ctx)
    else:
        raise InvalidConfig(f"unknown configuration {config!r}")


# ---------------------------------------------------------------------------
# inline fragments (for instruction-count and equivalence checks)
# ---------------------------------------------------------------------------

def emit_mmul_atomic(a, dl, ctx, sym_a, sym_b, sym_p, sym_n="modulus"):
    """Address setup (4 constant loads) + one MMUL."""
    a.li(10, dl.addr(sym_a))
    a.li(11, dl.addr(sym_b))
    a.li(12, dl.addr(sym_n))
    a.li(13, dl.addr(sym_p))
    a.mmul(13, 10, 11, 12, ctx.words)


def emit_mmul_partial_unrolled(a, dl, ctx, sym_a, sym_b, sym_p,
                               sym_n="modulus"):
    """csr write to enter partial mode, n_bits unrolled MMULs, csr clear."""
    a.csrrwi(0, MMUL_MODE, 1)
    a.li(10, dl.addr(sym_a))
    a.li(11, dl.addr(sym_b))
    a.li(12, dl.addr(sym_n))
    a.li(13, dl.addr(sym_p))
    for _ in range(ctx.n_bits):
        a.mmul(13, 10, 11, 12, ctx.words)
    a.csrrwi(0, MMUL_MODE, 0)


# ---------------------------------------------------------------------------
# field add/sub/cswap subroutines for the ladder
# ---------------------------------------------------------------------------

def emit_field_add(a, dl, ctx):
    """fadd: *x13 = (*x10 + *x11) mod N."""
    W = ctx.words
    if "fa_scratch" not in dl.symbols:
        dl.alloc("fa_scratch", W)
    t_addr = dl.addr("fa_scratch")
    n_addr = dl.addr("modulus")
    a.label("fadd")
    a.mv(7, 10)
    a.mv(9, 11)
    a.li(8, t_addr)
    a.li(4, 0)
    a.li(6, W)
    a.label("fa_add")
    a.lw(5, 7, 0)
    a.lw(14, 9, 0)
    a.add(5, 5, 14)
    a.sltu(14, 5, 14)
    a.add(5, 5, 4)
    a.sltu(15, 5, 4)
    a.or_(4, 14, 15)
    a.sw(5, 8, 0)
    a.addi(7, 7, 4)
    a.addi(9, 9, 4)
    a.addi(8, 8, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "fa_add")
    # x4 = carry out; t - N into dst, borrow in x3
    a.li(8, t_addr)
    a.li(9, n_addr)
    a.mv(15, 13)
    a.li(3, 0)
    a.li(6, W)
    a.label("fa_sub")
    a.lw(5, 8, 0)
    a.lw(14, 9, 0)
    a.sltu(7, 5, 14)
    a.sub(5, 5, 14)
    a.sltu(14, 5, 3)
    a.sub(5, 5, 3)
    a.or_(3, 7, 14)
    a.sw(5, 15, 0)
    a.addi(8, 8, 4)
    a.addi(9, 9, 4)
    a.addi(15, 15, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "fa_sub")
    a.bne(4, 0, "fa_done")  # carry out: sum >= 2^n > N, keep difference
    a.beq(3, 0, "fa_done")  # no borrow: sum >= N, keep difference
    a.li(8, t_addr)
    a.mv(15, 13)
    a.li(6, W)
    a.label("fa_copy")
    a.lw(5, 8, 0)
    a.sw(5, 15, 0)
    a.addi(8, 8, 4)
    a.addi(15, 15, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "fa_copy")
    a.label("fa_done")
    a.ret()


def emit_field_sub(a, dl, ctx):
    """fsub: *x13 = (*x10 - *x11) mod N."""
    W = ctx.words
    n_addr = dl.addr("modulus")
    a.label("fsub")
    a.mv(7, 10)
    a.mv(9, 11)
    a.mv(8, 13)
    a.li(4, 0)
    a.li(6, W)
    a.label("fs_sub")
    a.lw(5, 7, 0)
    a.lw(14, 9, 0)
    a.sltu(3, 5, 14)
    a.sub(5, 5, 14)
    a.sltu(14, 5, 4)
    a.sub(5, 5, 4)
    a.or_(4, 3, 14)
    a.sw(5, 8, 0)
    a.addi(7, 7, 4)
    a.addi(9, 9, 4)
    a.addi(8, 8, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "fs_sub")
    a.beq(4, 0, "fs_done")
    # borrowed: add N back
    a.mv(8, 13)
    a.li(9, n_addr)
    a.li(4, 0)
    a.li(6, W)
    a.label("fs_fix")
    a.lw(5, 8, 0)
    a.lw(14, 9, 0)
    a.add(5, 5, 14)
    a.sltu(14, 5, 14)
    a.add(5, 5, 4)
    a.sltu(15, 5, 4)
    a.or_(4, 14, 15)
    a.sw(5, 8, 0)
    a.addi(8, 8, 4)
    a.addi(9, 9, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "fs_fix")
    a.label("fs_done")
    a.ret()


def emit_cswap(a, dl, ctx):
    """cswap: if x10 != 0, swap (x2||z2) with (x3||z3) in memory."""
    W = ctx.words
    a.label("cswap")
    a.beq(10, 0, "cw_done")
    a.li(8, dl.addr("lad_x2"))
    a.li(9, dl.addr("lad_x3"))
    a.li(6, 2 * W)  # x2/z2 and x3/z3 are allocated contiguously
    a.label("cw_loop")
    a.lw(5, 8, 0)
    a.lw(14, 9, 0)
    a.sw(14, 8, 0)
    a.sw(5, 9, 0)
    a.addi(8, 8, 4)
    a.addi(9, 9, 4)
    a.addi(6, 6, -1)
    a.bne(6, 0, "cw_loop")
    a.label("cw_done")
    a.ret()


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def _call_montmul(a, dl, sym_a, sym_b, sym_p, sym_n="modulus"):
    a.li(10, dl.addr(sym_a))
    a.li(11, dl.addr(sym_b))
    a.li(12, dl.addr(sym_n))
    a.li(13, dl.addr(sym_p))
    a.jal(1, "montmul")


def _call2(a, dl, target, sym_a, sym_b, sym_p):
    a.li(10, dl.addr(sym_a))
    a.li(11, dl.addr(sym_b))
    a.li(13, dl.addr(sym_p))
    a.jal(1, target)


def _prologue(a, dl, config, with_irq_harness=False):
    """Entry stub: mailbox pointer, optional trap handler, mode select.

    When the interrupt harness is enabled the layout is:
      entry: j start / handler: ... / start: ...
    so the handler address is known without a second pass.
    """
    a.li(2, dl.addr("mailbox"))
    if with_irq_harness:
        a.j("hx_start")
        a.label("hx_handler")
        a.sw(5, 2, 8)
        a.csrrs(5, MCYCLE, 0)
        a.sw(5, 2, 0)  # mailbox[0] = service timestamp
        a.lw(5, 2, 4)
        a.addi(5, 5, 1)
        a.sw(5, 2, 4)  # mailbox[1] = interrupt count
        a.sw(6, 2, 12)
        a.addi(6, 0, 1)
        a.slli(6, 6, 11)
        a.csrrc(0, MIP, 6)  # acknowledge the external line
        a.lw(6, 2, 12)
        a.lw(5, 2, 8)
        a.mret()
        a.label("hx_start")
        a.li(5, a.labels["hx_handler"])
        a.csrrw(0, 0x305, 5)  # mtvec
        a.addi(5, 0, 1)
        a.slli(5, 5, 11)
        a.csrrw(0, MIE, 5)
        a.csrrwi(0, MSTATUS, 8)  # MIE
    if config == "CI-PE":
        a.csrrwi(0, MMUL_MODE, 1)


def _halt(a):
    a.li(10, 0)
    a.ecall()


def emit_modexp(ctx, exponent_bits, base, exponent, config,
                with_irq_harness=False, name="modexp"):
    """Left-to-right square-and-multiply in the Montgomery domain."""
    if exponent_bits < 1 or exponent_bits > 32:
        raise InvalidConfig("exponent_bits must be in 1..32 at desk scale")
    dl = DataLayout()
    W = ctx.words
    dl.alloc("mailbox", 4)
    dl.alloc("modulus", W, ctx.modulus)
    dl.alloc("r2", W, ctx.r2_mod_n)
    dl.alloc("one", W, 1)
    dl.alloc("base", W, base % ctx.modulus)
    dl.alloc("exponent", 1, exponent & 0xFFFFFFFF)
    dl.alloc("acc", W)
    dl.alloc("base_mont", W)
    dl.alloc("result", W)
    dl.alloc("idx", 1)

    a = Asm(base=CODE_BASE)
    _prologue(a, dl, config, with_irq_harness)
    _call_montmul(a, dl, "one", "r2", "acc")          # acc = R mod N
    _call_montmul(a, dl, "base", "r2", "base_mont")   # to Montgomery domain
    a.li(5, dl.addr("idx"))
    a.li(6, exponent_bits)
    a.sw(6, 5, 0)
    a.label("mx_loop")
    a.li(5, dl.addr("idx"))
    a.lw(6, 5, 0)
    a.addi(6, 6, -1)
    a.sw(6, 5, 0)
    _call_montmul(a, dl, "acc", "acc", "acc")         # square
    a.li(5, dl.addr("idx"))
    a.lw(6, 5, 0)
    a.li(5, dl.addr("exponent"))
    a.lw(5, 5, 0)
    a.srl(5, 5, 6)
    a.andi(5, 5, 1)
    a.beq(5, 0, "mx_skip")
    _call_montmul(a, dl, "acc", "base_mont", "acc")   # multiply
    a.label("mx_skip")
    a.li(5, dl.addr("idx"))
    a.lw(6, 5, 0)
    a.bne(6, 0, "mx_loop")
    _call_montmul(a, dl, "acc", "one", "result")      # leave the domain
    _halt(a)
    emit_montmul_subroutine(a, dl, ctx, config)

    return GuestProgram(
        name=name, config=config, code=a.assemble(), entry=CODE_BASE,
        data=dict(dl.symbols), data_init=list(dl.init), listing=a.dump(),
        budget_hint=200_000_000 if config == "BA" else 5_000_000,
        meta={"modulus": ctx.modulus, "words": W, "base": base,
              "exponent": exponent, "exponent_bits": exponent_bits,
              "result_symbols": ["result"]})


def emit_ladder_x25519_field(scalar, u, config, scalar_bits=None,
                             name="x25519_ladder"):
    """Montgomery-ladder scalar multiplication over the 2^255 - 19 field.

    Outputs the projective x-coordinate pair (out_x, out_z); the host-side
    oracle runs the identical ladder on plain integers.
    """
    ctx = FieldContext(P25519, 8)
    if scalar_bits is None:
        scalar_bits = max(scalar.bit_length(), 1)
    if scalar_bits > 32:
        raise InvalidConfig("desk-scale ladder keeps the scalar in one word")
    W = ctx.words
    dl = DataLayout()
    dl.alloc("mailbox", 4)
    dl.alloc("modulus", W, ctx.modulus)
    dl.alloc("r2", W, ctx.r2_mod_n)
    dl.alloc("one", W, 1)
    dl.alloc("u", W, u % ctx.modulus)
    dl.alloc("scalar", 1, scalar & 0xFFFFFFFF)
    dl.alloc("a24", W, A24)
    dl.alloc("a24_mont", W)
    dl.alloc("x1_mont", W)
    dl.alloc("lad_x2", W)
    dl.alloc("lad_z2", W)  # contiguous with lad_x2 for cswap
    dl.alloc("lad_x3", W)
    dl.alloc("lad_z3", W)  # contiguous with lad_x3
    for t in ("t_a", "t_aa", "t_b", "t_bb", "t_e", "t_c", "t_d",
              "t_da", "t_cb", "t_0", "t_1"):
        dl.alloc(t, W)
    dl.alloc("out_x", W)
    dl.alloc("out_z", W)
    dl.alloc("idx", 1)
    dl.alloc("swapv", 1, 0)

    a = Asm(base=CODE_BASE)
    _prologue(a, dl, config)
    _call_montmul(a, dl, "u", "r2", "x1_mont")
    _call_montmul(a, dl, "one", "r2", "lad_x2")   # x2 = 1 (domain)
    _call_montmul(a, dl, "u", "r2", "lad_x3")     # x3 = u (domain)
    _call_montmul(a, dl, "one", "r2", "lad_z3")   # z3 = 1 (domain)
    _call_montmul(a, dl, "a24", "r2", "a24_mont")
    a.li(5, dl.addr("idx"))
    a.li(6, scalar_bits)
    a.sw(6, 5, 0)
    a.label("ld_loop")
    a.li(5, dl.addr("idx"))
    a.lw(6, 5, 0)
    a.addi(6, 6, -1)
    a.sw(6, 5, 0)
    # conditional-swap bookkeeping: swap ^= k_t; cswap(swap); swap = k_t
    a.li(5, dl.addr("scalar"))
    a.lw(5, 5, 0)
    a.srl(5, 5, 6)
    a.andi(5, 5, 1)
    a.li(6, dl.addr("swapv"))
    a.lw(7, 6, 0)
    a.xor(7, 7, 5)
    a.sw(5, 6, 0)
    a.mv(10, 7)
    a.jal(1, "cswap")
    _call2(a, dl, "fadd", "lad_x2", "lad_z2", "t_a")
    _call_montmul(a, dl, "t_a", "t_a", "t_aa")
    _call2(a, dl, "fsub", "lad_x2", "lad_z2", "t_b")
    _call_montmul(a, dl, "t_b", "t_b", "t_bb")
    _call2(a, dl, "fsub", "t_aa", "t_bb", "t_e")
    _call2(a, dl, "fadd", "lad_x3", "lad_z3", "t_c")
    _call2(a, dl, "fsub", "lad_x3", "lad_z3", "t_d")
    _call_montmul(a, dl, "t_d", "t_a", "t_da")
    _call_montmul(a, dl, "t_c", "t_b", "t_cb")
    _call2(a, dl, "fadd", "t_da", "t_cb", "t_0")
    _call_montmul(a, dl, "t_0", "t_0", "lad_x3")
    _call2(a, dl, "fsub", "t_da", "t_cb", "t_1")
    _call_montmul(a, dl, "t_1", "t_1", "t_1")
    _call_montmul(a, dl, "x1_mont", "t_1", "lad_z3")
    _call_montmul(a, dl, "t_aa", "t_bb", "lad_x2")
    _call_montmul(a, dl, "a24_mont", "t_e", "t_0")
    _call2(a, dl, "fadd", "t_aa", "t_0", "t_0")
    _call_montmul(a, dl, "t_e", "t_0", "lad_z2")
    a.li(5, dl.addr("idx"))
    a.lw(6, 5, 0)
    a.bne(6, 0, "ld_loop")
    a.li(6, dl.addr("swapv"))
    a.lw(10, 6, 0)
    a.jal(1, "cswap")
    _call_montmul(a, dl, "lad_x2", "one", "out_x")
    _call_montmul(a, dl, "lad_z2", "one", "out_z")
    _halt(a)
    emit_montmul_subroutine(a, dl, ctx, config)
    emit_field_add(a, dl, ctx)
    emit_field_sub(a, dl, ctx)
    emit_cswap(a, dl, ctx)

    return GuestProgram(
        name=name, config=config, code=a.assemble(), entry=CODE_BASE,
        data=dict(dl.symbols), data_init=list(dl.init), listing=a.dump(),
        budget_hint=400_000_000 if config == "BA" else 10_000_000,
        meta={"modulus": ctx.modulus, "words": W, "scalar": scalar,
              "scalar_bits": scalar_bits, "u": u,
              "result_symbols": ["out_x", "out_z"]})


def ladder_reference(u, scalar, scalar_bits, p=P25519):
    """Host-side oracle: the same x-only ladder on plain integers.

    Returns the projective pair (x2, z2) the guest stores to out_x/out_z.
    """
    x1 = u % p
    x2, z2, x3, z3 = 1, 0, x1, 1
    swap = 0
    for t in reversed(range(scalar_bits)):
        kt = (scalar >> t) & 1
        swap ^= kt
        if swap:
            x2, x3 = x3, x2
            z2, z3 = z3, z2
        swap = kt
        aa_ = (x2 + z2) % p
        asq = aa_ * aa_ % p
        bb_ = (x2 - z2) % p
        bsq = bb_ * bb_ % p
        e = (asq - bsq) % p
        c = (x3 + z3) % p
        d = (x3 - z3) % p
        da = d * aa_ % p
        cb = c * bb_ % p
        x3 = (da + cb) * (da + cb) % p
        z3 = x1 * ((da - cb) * (da - cb) % p) % p
        x2 = asq * bsq % p
        z2 = e * ((asq + A24 * e) % p) % p
    if swap:
        x2, x3 = x3, x2
        z2, z3 = z3, z2
    return x2, z2


def emit_single_montmul(ctx, a_val, b_val, config, with_irq_harness=False,
                        name="montmul_once"):
    """One modular multiplication on fixed operands; the interrupt-latency
    sweep target."""
    dl = DataLayout()
    W = ctx.words
    dl.alloc("mailbox", 4)
    dl.alloc("modulus", W, ctx.modulus)
    dl.alloc("op_a", W, a_val % ctx.modulus)
    dl.alloc("op_b", W, b_val % ctx.modulus)
    dl.alloc("result", W)
    a = Asm(base=CODE_BASE)
    _prologue(a, dl, config, with_irq_harness)
    _call_montmul(a, dl, "op_a", "op_b", "result")
    _halt(a)
    emit_montmul_subroutine(a, dl, ctx, config)
    return GuestProgram(
        name=name, config=config, code=a.assemble(), entry=CODE_BASE,
        data=dict(dl.symbols), data_init=list(dl.init), listing=a.dump(),
        budget_hint=50_000_000 if config == "BA" else 1_000_000,
        meta={"modulus": ctx.modulus, "words": W, "a": a_val, "b": b_val,
              "result_symbols": ["result"]})


def emit_interrupt_harness(inner_builder, config, **kwargs):
    """Wrap a kernel with the timestamping trap handler."""
    return inner_builder(config=config, with_irq_harness=True, **kwargs)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_IRQ_A = 0x1234567890ABCDEF1122334455667788 * (1 << 124) + 987654321
_IRQ_B = 0x0FEDCBA987654321AABBCCDDEEFF0011 * (1 << 120) + 123456789


def build_guest(name, config, params=None):
    """Build a registered guest by name for one configuration."""
    p = dict(params or {})
    if config not in CONFIGS:
        raise InvalidConfig(f"unknown configuration {config!r}")
    if name == "modexp128":
        ctx = FieldContext(p.get("modulus", P128), 4)
        return emit_modexp(ctx, p.get("exponent_bits", 16),
                           p.get("base", 3), p.get("exponent", 0xB105),
                           config, name=name)
    if name == "modexp256":
        ctx = FieldContext(p.get("modulus", P25519), 8)
        return emit_modexp(ctx, p.get("exponent_bits", 16),
                           p.get("base", 5), p.get("exponent", 0xC0DE),
                           config, name=name)
    if name == "x25519_ladder":
        return emit_ladder_x25519_field(
            p.get("scalar", 0x2B), p.get("u", 9), config,
            scalar_bits=p.get("scalar_bits"), name=name)
    if name == "irq_sweep_atomic":
        if config != "CI-AE":
            raise InvalidConfig("irq_sweep_atomic requires config CI-AE")
        ctx = FieldContext(p.get("modulus", P25519), 8)
        return emit_single_montmul(ctx, p.get("a", _IRQ_A),
                                   p.get("b", _IRQ_B), config,
                                   with_irq_harness=True, name=name)
    if name == "irq_sweep_partial":
        if config != "CI-PE":
            raise InvalidConfig("irq_sweep_partial requires config CI-PE")
        ctx = FieldContext(p.get("modulus", P25519), 8)
        return emit_single_montmul(ctx, p.get("a", _IRQ_A),
                                   p.get("b", _IRQ_B), config,
                                   with_irq_harness=True, name=name)
    if name == "montmul_once":
        ctx = FieldContext(p.get("modulus", P25519),
                           p.get("words", 8))
        return emit_single_montmul(ctx, p.get("a", _IRQ_A),
                                   p.get("b", _IRQ_B), config,
                                   with_irq_harness=p.get("irq", False),
                                   name=name)
    raise GuestNotFound(name)


GUEST_NAMES = ("modexp128", "modexp256", "x25519_ladder",
               "irq_sweep_atomic", "irq_sweep_partial", "montmul_once")
