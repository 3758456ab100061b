"""Command-line front end: run guests, compare configurations, inspect
encodings, and self-test the engine against the big-integer oracle."""

import argparse
import dataclasses
import json
import os
import random
import sys

from . import encoding
from .engine import MmulOperands, r2mm_reference
from .errors import SimError
from .guests import (CONFIGS, GUEST_NAMES, FieldContext, build_guest)
from .isa import Cpu
from .machine import DATA_BASE, Machine, Memory
from .perf import (PowerModel, estimate_energy, interrupt_latency_report)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TRAP = 2
EXIT_BUDGET = 3


def _machine(args):
    mem = Memory(read_latency=args.read_latency,
                 write_latency=args.write_latency)
    return Machine(memory=mem, max_words=args.words)


def _parse_params(pairs):
    params = {}
    for item in pairs or ():
        key, _, value = item.partition("=")
        if not _:
            raise SimError(f"--set expects name=value, got {item!r}")
        params[key] = int(value, 0)
    return params


def _parse_sweep(spec):
    start, end, step = (int(x, 0) for x in spec.split(":"))
    if step <= 0 or end < start:
        raise SimError(f"bad sweep spec {spec!r}")
    return range(start, end, step)


def _execute(guest, args, config, irq_cycles=()):
    machine = _machine(args)
    guest.load(machine)
    cpu = Cpu(machine)
    stats = cpu.run(budget=args.budget or guest.budget_hint,
                    irq_schedule=irq_cycles, config=config)
    return machine, stats


def _run_one(args, config, irq_cycles=()):
    guest = build_guest(args.guest, config, _parse_params(args.set))
    if args.sweep:
        # one run per assert cycle; latencies aggregate across the sweep
        agg = None
        for at in _parse_sweep(args.sweep):
            _, stats = _execute(guest, args, config, irq_cycles=[at])
            if agg is None:
                agg = stats
            else:
                agg.total_cycles += stats.total_cycles
                agg.retired += stats.retired
                agg.mem_reads += stats.mem_reads
                agg.mem_writes += stats.mem_writes
                agg.fetch_cycles += stats.fetch_cycles
                agg.decode_cycles += stats.decode_cycles
                agg.alu_cycles += stats.alu_cycles
                agg.regfile_cycles += stats.regfile_cycles
                agg.mmul_cycles += stats.mmul_cycles
                agg.mmul_invocations += stats.mmul_invocations
                agg.mmul_engine_cycles += stats.mmul_engine_cycles
                agg.interrupt_latencies.extend(stats.interrupt_latencies)
                if stats.stop_reason != "halt":
                    agg.stop_reason = stats.stop_reason
                    agg.trap_cause = stats.trap_cause
        return guest, agg
    _, stats = _execute(guest, args, config, irq_cycles=irq_cycles)
    return guest, stats


def _report(stats, config, reference_energy=None, normalize=True):
    model = PowerModel()
    doc = stats.to_dict()
    if normalize:
        est = estimate_energy(stats, model, config,
                              reference_energy=reference_energy)
        doc["avg_power_watts"] = est.avg_power_watts
        doc["normalized_energy"] = est.normalized_energy
    else:
        est = estimate_energy(stats, model, config, reference_energy=1.0)
        est = dataclasses.replace(est, normalized_energy=None)
        doc["avg_power_watts"] = est.avg_power_watts
        doc["normalized_energy"] = None
    return doc, est


def _emit(doc, args):
    if args.format == "json":
        text = json.dumps(doc, indent=2)
    else:
        lines = [f"{'field':<24} value"]
        for key, value in doc.items():
            if key == "module_active_cycles":
                for mod, cyc in value.items():
                    lines.append(f"{'active.' + mod:<24} {cyc}")
            elif key == "interrupt_latencies":
                lats = [s - a for a, s in value]
                lines.append(f"{'irq.count':<24} {len(lats)}")
                if lats:
                    lines.append(f"{'irq.max_latency':<24} {max(lats)}")
            else:
                lines.append(f"{key:<24} {value}")
        text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _exit_code(stats):
    if stats.stop_reason == "halt" and stats.exit_code == 0:
        return EXIT_OK
    if stats.stop_reason == "budget":
        return EXIT_BUDGET
    return EXIT_TRAP


def cmd_run(args):
    config = args.config
    irq = [int(x, 0) for x in args.irq or ()]
    guest, stats = _run_one(args, config, irq_cycles=irq)
    reference_energy = None
    if config != "BA" and not args.sweep:
        try:
            _, ref_stats = _run_one(args, "BA")
            ref_doc, ref_est = _report(ref_stats, "BA")
            reference_energy = ref_est.energy
        except SimError:
            reference_energy = None
    normalize = config == "BA" or reference_energy is not None
    doc, _est = _report(stats, config, reference_energy=reference_energy,
                        normalize=normalize)
    if stats.interrupt_latencies:
        doc["interrupt_latency_report"] = interrupt_latency_report(stats)
    _emit(doc, args)
    return _exit_code(stats)


def cmd_compare(args):
    results = {}
    reference_energy = None
    configs = args.configs or list(CONFIGS)
    for config in configs:
        guest, stats = _run_one(args, config)
        doc, est = _report(stats, config,
                           reference_energy=reference_energy,
                           normalize=config == "BA"
                           or reference_energy is not None)
        if config == "BA":
            reference_energy = est.energy
        results[config] = (stats, est)
    base_cycles = results[configs[0]][0].total_cycles
    rows = []
    for config in configs:
        stats, est = results[config]
        speedup = base_cycles / stats.total_cycles
        rows.append({"config": config, "cycles": stats.total_cycles,
                     "speedup": round(speedup, 3),
                     "avg_power_watts": round(est.avg_power_watts, 4),
                     "normalized_energy":
                         None if est.normalized_energy is None
                         else round(est.normalized_energy, 5)})
    doc = {"guest": args.guest, "rows": rows}
    if args.format == "json":
        text = json.dumps(doc, indent=2)
    else:
        hdr = f"{'config':<8} {'cycles':>12} {'speedup':>9} " \
              f"{'power(W)':>9} {'norm.energy':>12}"
        lines = [f"guest: {args.guest}", hdr]
        for row in rows:
            ne = row["normalized_energy"]
            lines.append(f"{row['config']:<8} {row['cycles']:>12} "
                         f"{row['speedup']:>9} {row['avg_power_watts']:>9} "
                         f"{ne if ne is not None else '-':>12}")
        text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_selftest(args):
    seed = os.environ.get("MMULRV_SEED")
    rng = random.Random(int(seed, 0) if seed else 12345)
    vectors = args.vectors
    failures = 0
    for words in (1, 2, 4, 8):
        if words > args.words:
            continue
        n_bits = 32 * words
        for _ in range(vectors):
            n_mod = rng.getrandbits(n_bits) | 1
            if n_mod < 3:
                n_mod = 3
            a = rng.randrange(n_mod)
            b = rng.randrange(n_mod)
            expect = (a * b * pow(1 << n_bits, -1, n_mod)) % n_mod
            machine = _machine(args)
            base = DATA_BASE
            for i, val in enumerate((a, b, n_mod)):
                machine.load_image(val.to_bytes(4 * words, "little"),
                                   base + 4 * words * i)
            ops = MmulOperands(base, base + 4 * words, base + 8 * words,
                               base + 12 * words, words)
            machine.engine.execute_atomic(machine, ops)
            got = machine.mem.read(base + 12 * words, 4 * words)
            ref = r2mm_reference(a, b, n_mod, n_bits)
            if got != expect or ref != expect:
                failures += 1
                print(f"FAIL words={words} a={a:#x} b={b:#x} n={n_mod:#x}")
        print(f"words={words}: {vectors} vectors "
              f"{'ok' if failures == 0 else 'FAILED'}")
    print("selftest " + ("PASSED" if failures == 0 else
                         f"FAILED ({failures} vectors)"))
    return EXIT_OK if failures == 0 else EXIT_ERROR


def cmd_encode(args):
    word = encoding.encode_r4(args.rd, args.rs1, args.rs2, args.rs3,
                              args.op_words)
    print(f"encoding: 0x{word:08X}")
    print(f"directive: {encoding.insn_directive(args.rd, args.rs1, args.rs2, args.rs3, args.op_words)}")
    print(f"decoded: {encoding.decode_r4(word)}")
    print("format capacity (max operand bits):")
    for fmt in ("I", "R", "R4"):
        for xlen in (32, 64):
            cap = encoding.capacity(fmt, xlen)
            print(f"  {fmt:<3} xlen={xlen}: {cap.length_bits_available} bits "
                  f"({cap.length_unit}) -> {cap.max_operand_bits}")
    return EXIT_OK


def _add_machine_args(sp):
    sp.add_argument("--words", type=int, default=8,
                    help="hardware max operand length in 32-bit words")
    sp.add_argument("--read-latency", type=int, default=1)
    sp.add_argument("--write-latency", type=int, default=1)


def _add_run_args(sp):
    sp.add_argument("--guest", required=True, choices=GUEST_NAMES)
    sp.add_argument("--set", action="append", metavar="NAME=VALUE",
                    help="override a guest input (hex or decimal)")
    sp.add_argument("--budget", type=int, default=None,
                    help="cycle budget (defaults to a per-guest hint)")
    sp.add_argument("--format", choices=("json", "table"), default="json")
    sp.add_argument("--out", default=None)
    _add_machine_args(sp)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="mmulrv",
        description="Cycle-modeling RV32EC simulator with a Montgomery "
                    "multiplication custom instruction")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="run one guest under one configuration")
    _add_run_args(sp)
    sp.add_argument("--config", choices=CONFIGS, default="BA")
    sp.add_argument("--irq", action="append", metavar="CYCLE",
                    help="assert the external interrupt at this cycle")
    sp.add_argument("--sweep", metavar="START:END:STEP", default=None,
                    help="run once per assert cycle in the range")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare",
                        help="run the same guest under several configurations")
    _add_run_args(sp)
    sp.add_argument("--configs", nargs="+", choices=CONFIGS, default=None)
    sp.set_defaults(func=cmd_compare, sweep=None)

    sp = sub.add_parser("selftest",
                        help="engine vs big-integer oracle on random vectors")
    sp.add_argument("--vectors", type=int, default=250)
    _add_machine_args(sp)
    sp.set_defaults(func=cmd_selftest)

    sp = sub.add_parser("encode", help="inspect an MMUL encoding")
    sp.add_argument("rd", type=int)
    sp.add_argument("rs1", type=int)
    sp.add_argument("rs2", type=int)
    sp.add_argument("rs3", type=int)
    sp.add_argument("op_words", type=int)
    sp.set_defaults(func=cmd_encode)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
