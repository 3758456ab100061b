"""Radix-2 Montgomery multiplication functional unit.

Bit-serial recurrence at 2 cycles per processed bit plus one cycle for the
final (unconditional, constant-time) subtraction.  Operands are multiword
little-endian arrays in simulated memory; the engine latches their addresses,
pulls them through the machine's load/store unit, and writes the result back.

Two execution shapes:
  * atomic - one call runs the whole multiplication;
  * partial - one call per bit; the first call loads operands, the last call
    performs the final subtraction and stores the result.  State persists in
    the engine between calls so interrupts can be serviced in between.
"""

from dataclasses import dataclass

from .errors import (EvenModulus, LengthExceedsHardwareMax, MisalignedAccess,
                     OperandTooLarge)


def r2mm_reference(a, b, n_mod, n_bits):
    """Executable specification: returns a * b * 2^(-n_bits) mod n_mod.

    S <- 0; for each bit i of a: S += a_i * b; if S odd: S += n_mod;
    S >>= 1.  After the loop a single conditional subtraction brings S
    below n_mod.  Inputs must be below 2^n_bits and the modulus odd.
    """
    if n_mod % 2 == 0:
        raise EvenModulus(f"modulus {n_mod} is even; gcd(R, N) != 1")
    limit = 1 << n_bits
    if a >= limit or b >= limit or n_mod >= limit:
        raise OperandTooLarge(f"operand does not fit in {n_bits} bits")
    s = 0
    for i in range(n_bits):
        if (a >> i) & 1:
            s += b
        if s & 1:
            s += n_mod
        s >>= 1
    if s >= n_mod:
        s -= n_mod
    return s


@dataclass(frozen=True)
class MmulOperands:
    addr_a: int
    addr_b: int
    addr_n: int
    addr_p: int
    words: int

    @property
    def n_bits(self):
        return 32 * self.words


@dataclass(frozen=True)
class AtomicResult:
    cycles: int          # total engine occupancy incl. memory operations
    compute_cycles: int  # 2 * n_bits + 1, data-independent
    loads: int
    stores: int


@dataclass(frozen=True)
class PartialCallResult:
    retired: bool
    call_kind: str  # first | middle | last
    cycles: int


def address_generate(base, word_offset):
    """ALU address path: base + 4 * word_offset, wrapping 32-bit."""
    return (base + 4 * word_offset) & 0xFFFFFFFF


class MmulEngine:
    """Sub-state of one machine; single-threaded stepping only."""

    def __init__(self, max_words=8):
        self.max_words = max_words
        self.reset()

    def reset(self):
        self.phase = "idle"
        self.s_accum = 0
        self.bit_index = 0
        self.q_bit = 0
        self.latched = None
        self.buf_a = 0
        self.buf_b = 0
        self.buf_n = 0
        self.partial_mode = False

    @property
    def busy(self):
        return self.phase != "idle"

    def status_word(self):
        """Read-only status CSR: busy in bit 0, bit index in bits 8..15."""
        return (1 if self.busy else 0) | ((self.bit_index & 0xFF) << 8)

    # -- memory traffic ----------------------------------------------------

    def _load_operands(self, machine, ops):
        """3 * words loads through the LSU; returns their cycle cost."""
        cycles = 0
        bufs = []
        for base in (ops.addr_a, ops.addr_b, ops.addr_n):
            value = 0
            for j in range(ops.words):
                word, lat = machine.load_word(address_generate(base, j))
                value |= word << (32 * j)
                cycles += lat
            bufs.append(value)
        self.buf_a, self.buf_b, self.buf_n = bufs
        return cycles

    def _store_result(self, machine, ops):
        """words stores of the accumulator; returns their cycle cost."""
        cycles = 0
        for j in range(ops.words):
            word = (self.s_accum >> (32 * j)) & 0xFFFFFFFF
            cycles += machine.store_word(address_generate(ops.addr_p, j), word)
        return cycles

    def _check_length(self, ops):
        if ops.words > self.max_words:
            raise LengthExceedsHardwareMax(
                f"words={ops.words} exceeds hardware limit {self.max_words}")
        if ops.words < 1:
            raise LengthExceedsHardwareMax("words must be >= 1")
        for addr in (ops.addr_a, ops.addr_b, ops.addr_n, ops.addr_p):
            if addr & 3:
                raise MisalignedAccess(f"operand address 0x{addr:08x}")

    # -- per-bit datapath --------------------------------------------------

    def _process_bit(self):
        i = self.bit_index
        if (self.buf_a >> i) & 1:
            self.s_accum += self.buf_b
        self.q_bit = self.s_accum & 1
        if self.q_bit:
            self.s_accum += self.buf_n
        self.s_accum >>= 1
        self.bit_index = i + 1

    def _final_subtract(self):
        if self.s_accum >= self.buf_n:
            self.s_accum -= self.buf_n

    # -- execution modes ---------------------------------------------------

    def execute_atomic(self, machine, ops):
        """Whole multiplication in one non-interruptible call.

        Occupancy is (2 * n_bits + 1) compute cycles plus the full latency
        of 3*words loads and words stores; the compute portion is
        data-independent by construction.
        """
        assert not self.busy, "engine must be idle for atomic execution"
        self._check_length(ops)
        self.latched = ops
        self.phase = "loading"
        cycles = self._load_operands(machine, ops)
        if self.buf_n % 2 == 0:
            self.reset()
            raise EvenModulus("modulus loaded from memory is even")
        self.phase = "iterating"
        self.s_accum = 0
        self.bit_index = 0
        n_bits = ops.n_bits
        for _ in range(n_bits):
            self._process_bit()
        cycles += 2 * n_bits
        self.phase = "final_subtract"
        self._final_subtract()
        cycles += 1
        self.phase = "storing"
        cycles += self._store_result(machine, ops)
        compute = 2 * n_bits + 1
        self.reset()
        return AtomicResult(cycles=cycles, compute_cycles=compute,
                            loads=3 * ops.words, stores=ops.words)

    def execute_partial_call(self, machine, ops):
        """One bit of progress; n_bits calls complete a multiplication.

        The first call latches the operand addresses and loads the buffers
        (3*words loads + 2 cycles); middle calls take exactly 2 cycles; the
        last call adds the final subtraction and the result stores (words
        stores + 3 cycles).  Calls after the first ignore their register
        operands: the latched operation drives progress.
        """
        if not self.busy:
            self._check_length(ops)
            self.latched = ops
            self.partial_mode = True
            self.phase = "loading"
            cycles = self._load_operands(machine, ops)
            if self.buf_n % 2 == 0:
                self.reset()
                raise EvenModulus("modulus loaded from memory is even")
            self.s_accum = 0
            self.bit_index = 0
            self.phase = "iterating"
            self._process_bit()
            cycles += 2
            if self.latched.n_bits == 1:  # degenerate, not reachable via R4
                return self._finish_partial(machine, cycles)
            return PartialCallResult(True, "first", cycles)
        ops = self.latched
        self._process_bit()
        if self.bit_index == ops.n_bits:
            return self._finish_partial(machine, 2)
        return PartialCallResult(True, "middle", 2)

    def _finish_partial(self, machine, bit_cycles):
        ops = self.latched
        self.phase = "final_subtract"
        self._final_subtract()
        self.phase = "storing"
        cycles = bit_cycles + 1 + self._store_result(machine, ops)
        self.reset()
        return PartialCallResult(True, "last", cycles)
