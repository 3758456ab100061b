import pytest

from conftest import mont_oracle, run_guest
from mmulrv import guests
from mmulrv.encoding import OPCODE_CUSTOM0
from mmulrv.guests import (CONFIGS, FieldContext, build_guest,
                           emit_mmul_atomic, emit_mmul_partial_unrolled,
                           emit_modexp, ladder_reference)
from mmulrv.asm import Asm
from mmulrv.errors import GuestNotFound, InvalidConfig
from mmulrv.guests import DataLayout
from mmulrv import isa


def _mmul_count(words_list):
    return sum(1 for w in words_list if w & 0x7F == OPCODE_CUSTOM0)


class TestFieldContext:
    def test_montgomery_constants(self):
        ctx = FieldContext(239, 1)
        assert ctx.n_bits == 32
        assert ctx.r_mod_n == (1 << 32) % 239
        assert ctx.r2_mod_n == pow(1 << 32, 2, 239)

    def test_even_modulus_rejected(self):
        with pytest.raises(InvalidConfig):
            FieldContext(240, 1)

    def test_oversized_modulus_rejected(self):
        with pytest.raises(InvalidConfig):
            FieldContext((1 << 40) + 1, 1)


class TestSingleMultiplication:
    """The software kernel and the engine agree bit for bit."""

    @pytest.mark.parametrize("config", CONFIGS)
    def test_small_field(self, config):
        guest = build_guest("montmul_once", config,
                            {"modulus": 239, "words": 1, "a": 100, "b": 55})
        machine, stats = run_guest(guest)
        assert stats.stop_reason == "halt"
        assert guest.read_value(machine, "result") == \
            mont_oracle(100, 55, 239, 32)

    @pytest.mark.parametrize("config", CONFIGS)
    def test_two_words(self, config):
        n = (1 << 61) - 1
        a, b = 0x123456789ABCDEF, 0xFEDCBA987654321
        guest = build_guest("montmul_once", config,
                            {"modulus": n, "words": 2, "a": a, "b": b})
        machine, stats = run_guest(guest)
        assert stats.stop_reason == "halt"
        assert guest.read_value(machine, "result") == mont_oracle(a, b, n, 64)

    def test_full_width_default_operands(self):
        results = set()
        for config in ("CI-AE", "CI-PE"):
            guest = build_guest("montmul_once", config)
            machine, stats = run_guest(guest)
            assert stats.stop_reason == "halt"
            results.add(guest.read_value(machine, "result"))
        a = guest.meta["a"] % guest.meta["modulus"]
        b = guest.meta["b"] % guest.meta["modulus"]
        results.add(mont_oracle(a, b, guest.meta["modulus"], 256))
        assert len(results) == 1

    def test_partial_costs_one_extra_cycle_per_bit(self):
        runs = {}
        for config in ("CI-AE", "CI-PE"):
            guest = build_guest("montmul_once", config)
            _, stats = run_guest(guest)
            runs[config] = stats
        # same engine occupancy either way
        assert runs["CI-AE"].mmul_engine_cycles == \
            runs["CI-PE"].mmul_engine_cycles
        # 255 extra instruction issues plus one mode-select csr write
        delta = runs["CI-PE"].total_cycles - runs["CI-AE"].total_cycles
        assert delta == 256


class TestModexp:
    def test_known_answer_small(self):
        ctx = FieldContext(239, 1)
        for config in CONFIGS:
            guest = emit_modexp(ctx, 4, 2, 10, config)
            machine, stats = run_guest(guest, config=config)
            assert stats.stop_reason == "halt"
            assert guest.read_value(machine, "result") == 68  # 2^10 mod 239

    @pytest.mark.parametrize("config", ("CI-AE", "CI-PE"))
    def test_modexp128_registry(self, config):
        guest = build_guest("modexp128", config)
        machine, stats = run_guest(guest)
        assert stats.stop_reason == "halt"
        expect = pow(guest.meta["base"], guest.meta["exponent"],
                     guest.meta["modulus"])
        assert guest.read_value(machine, "result") == expect

    def test_modexp128_software_matches(self):
        guest = build_guest("modexp128", "BA")
        machine, stats = run_guest(guest)
        assert stats.stop_reason == "halt"
        assert guest.read_value(machine, "result") == \
            pow(guest.meta["base"], guest.meta["exponent"],
                guest.meta["modulus"])
        assert stats.mmul_invocations == 0

    @pytest.mark.parametrize("config", ("CI-AE", "CI-PE"))
    def test_modexp256_registry(self, config):
        guest = build_guest("modexp256", config)
        machine, stats = run_guest(guest)
        assert stats.stop_reason == "halt"
        expect = pow(guest.meta["base"], guest.meta["exponent"],
                     guest.meta["modulus"])
        assert guest.read_value(machine, "result") == expect

    def test_exponent_width_guard(self):
        with pytest.raises(InvalidConfig):
            emit_modexp(FieldContext(239, 1), 40, 2, 3, "BA")


class TestLadder:
    @pytest.mark.parametrize("config", ("CI-AE", "CI-PE"))
    def test_matches_host_ladder(self, config):
        guest = build_guest("x25519_ladder", config)
        machine, stats = run_guest(guest)
        assert stats.stop_reason == "halt"
        x2, z2 = ladder_reference(guest.meta["u"], guest.meta["scalar"],
                                  guest.meta["scalar_bits"])
        assert guest.read_value(machine, "out_x") == x2
        assert guest.read_value(machine, "out_z") == z2
        # projective pair reduces to the expected affine coordinate
        p = guests.P25519
        affine = x2 * pow(z2, -1, p) % p
        got = guest.read_value(machine, "out_x") * \
            pow(guest.read_value(machine, "out_z"), -1, p) % p
        assert got == affine

    def test_trivial_scalar_software(self):
        guest = build_guest("x25519_ladder", "BA", {"scalar": 1})
        machine, stats = run_guest(guest)
        assert stats.stop_reason == "halt"
        x2, z2 = ladder_reference(9, 1, 1)
        assert guest.read_value(machine, "out_x") == x2
        assert guest.read_value(machine, "out_z") == z2
        p = guests.P25519
        assert x2 * pow(z2, -1, p) % p == 9  # 1 * P has u-coordinate 9

    def test_scalar_width_guard(self):
        with pytest.raises(InvalidConfig):
            build_guest("x25519_ladder", "BA", {"scalar": 1 << 40})


class TestCodeShape:
    def test_software_kernels_have_no_custom_encodings(self):
        for name in ("modexp128", "x25519_ladder"):
            guest = build_guest(name, "BA")
            assert _mmul_count(guest.code_words()) == 0

    def test_atomic_kernel_has_one_mmul_per_multiplication(self):
        guest = build_guest("montmul_once", "CI-AE")
        assert _mmul_count(guest.code_words()) == 1

    def test_partial_kernel_has_one_mmul_per_bit(self):
        guest = build_guest("montmul_once", "CI-PE",
                            {"modulus": 239, "words": 1})
        assert _mmul_count(guest.code_words()) == 32

    def test_atomic_fragment_shape(self):
        ctx = FieldContext(239, 1)
        dl = DataLayout()
        for sym in ("modulus", "fr_a", "fr_b", "fr_p"):
            dl.alloc(sym, 1)
        a = Asm()
        emit_mmul_atomic(a, dl, ctx, "fr_a", "fr_b", "fr_p")
        words = [int.from_bytes(a.assemble()[i:i + 4], "little")
                 for i in range(0, 4 * len(a.words), 4)]
        assert _mmul_count(words) == 1
        assert len(words) <= 9  # 4 li pseudos (<= 2 words each) + 1 mmul

    def test_partial_fragment_shape(self):
        ctx = FieldContext(239, 1)
        dl = DataLayout()
        for sym in ("modulus", "fr_a", "fr_b", "fr_p"):
            dl.alloc(sym, 1)
        a = Asm()
        emit_mmul_partial_unrolled(a, dl, ctx, "fr_a", "fr_b", "fr_p")
        words = [int.from_bytes(a.assemble()[i:i + 4], "little")
                 for i in range(0, 4 * len(a.words), 4)]
        assert _mmul_count(words) == ctx.n_bits
        csr_words = [w for w in words if w & 0x7F == 0x73]
        assert len(csr_words) == 2  # mode select on, mode select off

    @pytest.mark.parametrize("name", guests.GUEST_NAMES)
    def test_every_guest_decodes_cleanly(self, name):
        config = {"irq_sweep_atomic": "CI-AE",
                  "irq_sweep_partial": "CI-PE"}.get(name, "CI-AE")
        guest = build_guest(name, config)
        for w in guest.code_words():
            isa.decode(w)  # raises on any bad encoding


class TestRegistry:
    def test_unknown_guest(self):
        with pytest.raises(GuestNotFound):
            build_guest("nonesuch", "BA")

    def test_unknown_config(self):
        with pytest.raises(InvalidConfig):
            build_guest("modexp128", "TURBO")

    def test_sweep_guests_pin_their_config(self):
        with pytest.raises(InvalidConfig):
            build_guest("irq_sweep_atomic", "BA")
        with pytest.raises(InvalidConfig):
            build_guest("irq_sweep_partial", "CI-AE")
