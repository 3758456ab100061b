import random

import pytest

from mmulrv.guests import build_guest
from mmulrv.isa import Cpu
from mmulrv.machine import DATA_BASE, Machine, Memory


def make_machine(read_latency=1, write_latency=1, max_words=8):
    mem = Memory(read_latency=read_latency, write_latency=write_latency)
    return Machine(memory=mem, max_words=max_words)


def write_value(machine, addr, value, words):
    machine.load_image(int(value).to_bytes(4 * words, "little"), addr)


def read_value(machine, addr, words):
    return machine.mem.read(addr, 4 * words)


def operand_block(machine, a, b, n, words, base=DATA_BASE):
    """Lay A, B, N, P consecutively; returns their addresses."""
    stride = 4 * words
    write_value(machine, base, a, words)
    write_value(machine, base + stride, b, words)
    write_value(machine, base + 2 * stride, n, words)
    return base, base + stride, base + 2 * stride, base + 3 * stride


def run_guest(guest, config=None, irq=(), budget=None, **machine_kwargs):
    machine = make_machine(**machine_kwargs)
    guest.load(machine)
    cpu = Cpu(machine)
    stats = cpu.run(budget=budget or guest.budget_hint, irq_schedule=irq,
                    config=config or guest.config)
    return machine, stats


def mont_oracle(a, b, n, n_bits):
    """Independent big-integer computation of a * b * 2^(-n_bits) mod n."""
    return (a * b * pow(1 << n_bits, -1, n)) % n


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture
def machine():
    return make_machine()


__all__ = ["build_guest", "make_machine", "mont_oracle", "operand_block",
           "read_value", "run_guest", "write_value"]
