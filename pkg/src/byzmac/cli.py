"""Command-line front end.

Senders are numbered from 1 on the command line.  Exit codes: 0 success,
1 a checked assertion failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import adversarial, capacity, entropic, simulator
from .channel import (
    CqMacChannel,
    InputDistribution,
    avc_view,
    constant_channel,
    example_channel,
    example_povms,
    factorized_channel,
    freeze_slots,
    load_channel,
    load_povm,
    local_povms,
    save_channel,
    save_povm,
)
from .errors import ByzmacError
from .states import DensityOperator

DIST_TOL = 1e-9


class UsageError(Exception):
    pass


# ------------------------------------------------------------ parsing helpers

def parse_dist(text: str, size: int | None = None) -> np.ndarray:
    try:
        p = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse distribution {text!r}") from None
    if np.any(p < 0):
        raise UsageError("distribution has negative entries")
    if abs(p.sum() - 1.0) > DIST_TOL:
        raise UsageError(f"distribution not normalized (sums to {p.sum():.12g})")
    if size is not None and p.size != size:
        raise UsageError(f"distribution has {p.size} entries, alphabet has {size}")
    return p / p.sum()


def parse_slot(text: str, k: int) -> int:
    try:
        s = int(text)
    except ValueError:
        raise UsageError(f"sender must be an integer, got {text!r}") from None
    if not 1 <= s <= k:
        raise UsageError(f"sender {s} out of range 1..{k}")
    return s - 1


def parse_symbol(ch: CqMacChannel, slot: int, text: str):
    for sym in ch.alphabets[slot]:
        if str(sym) == text:
            return sym
    raise UsageError(f"symbol {text!r} not in alphabet of sender {slot + 1}")


def parse_freeze(ch: CqMacChannel, items: list[str]) -> dict:
    """``SLOT=point:SYM``, ``SLOT=dist:P1,P2,..`` or ``SLOT=uniform``."""
    frozen = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--freeze expects SLOT=SPEC, got {item!r}")
        lhs, spec = item.split("=", 1)
        slot = parse_slot(lhs, ch.k)
        size = len(ch.alphabets[slot])
        if spec.startswith("point:"):
            frozen[slot] = parse_symbol(ch, slot, spec[6:])
        elif spec.startswith("dist:"):
            frozen[slot] = InputDistribution(slot, parse_dist(spec[5:], size))
        elif spec == "uniform":
            frozen[slot] = InputDistribution.uniform(slot, size)
        else:
            raise UsageError(f"unknown freeze spec {spec!r}")
    return frozen


def parse_order(text: str, k: int) -> tuple:
    order = tuple(parse_slot(x, k) for x in text.split(","))
    if sorted(order) != list(range(k)):
        raise UsageError(f"--order must be a permutation of 1..{k}")
    return order


def load_channel_spec(spec: str) -> CqMacChannel:
    """A JSON path, ``example``, ``factorized:S1,S2,..`` or ``constant:S1,S2,..``."""
    if spec == "example":
        return example_channel()
    for prefix, build in (("factorized:", factorized_channel), ("constant:", constant_channel)):
        if spec.startswith(prefix):
            try:
                sizes = [int(x) for x in spec[len(prefix):].split(",")]
            except ValueError:
                raise UsageError(f"bad fixture spec {spec!r}") from None
            return build(sizes)
    if not Path(spec).exists():
        raise UsageError(f"channel file {spec!r} not found")
    return load_channel(spec)


def single_letter_pgm(ch: CqMacChannel, slot: int):
    code = simulator.pgm_code(ch, slot, {x: (x,) for x in ch.alphabets[slot]})
    return code.base_povm


def load_stage_povm(spec: str, ch: CqMacChannel, slot: int):
    """``povm:PATH``, ``example:d1``/``example:d2``, ``local`` or ``pgm``."""
    if spec.startswith("povm:"):
        return load_povm(spec[5:])
    if spec in ("example:d1", "example:d2"):
        d1, d2 = example_povms()
        return d1 if spec.endswith("d1") else d2
    if spec == "local":
        sizes = [len(a) for a in ch.alphabets]
        return local_povms(sizes)[slot]
    if spec == "pgm":
        return single_letter_pgm(ch, slot)
    raise UsageError(f"unknown POVM source {spec!r}")


def emit(obj, fmt: str, table_lines: list[str]) -> None:
    if fmt == "json":
        print(json.dumps(obj, indent=2, sort_keys=True, default=str))
    else:
        print("\n".join(table_lines))


# ------------------------------------------------------------ subcommands

def cmd_demo(args) -> int:
    report = simulator.paper_example_demo()
    lines = [f"{'case':<5} {'order':<6} {'adversary':<10} {'symbol':<7} {'err1':>8} {'err2':>8}  stage dists         ok"]
    for r in report.rows:
        e1 = f"{r.errors[0]:.6f}" if 0 in r.errors else "-"
        e2 = f"{r.errors[1]:.6f}" if 1 in r.errors else "-"
        adv = "none" if r.adversary_slot is None else f"sender {r.adversary_slot + 1}"
        sym = "worst" if r.adversary_slot is not None and r.adversary_symbol is None else (r.adversary_symbol if r.adversary_symbol is not None else "-")
        dists = " ".join("(" + ",".join(f"{x:.3f}" for x in d) + ")" for d in r.stage_distributions) or "-"
        order = "->".join(str(s + 1) for s in r.order)
        lines.append(f"{r.case:<5} {order:<6} {adv:<10} {str(sym):<7} {e1:>8} {e2:>8}  {dists:<19} {'yes' if r.passed else 'NO'}")
    lines.append("all cases reproduced" if report.passed else "MISMATCH")
    emit(report.as_dict(), args.format, lines)
    return 0 if report.passed else 1


def _single_sender(args) -> tuple:
    ch = load_channel_spec(args.channel)
    slot = parse_slot(args.slot, ch.k)
    frozen = parse_freeze(ch, args.freeze)
    missing = set(range(ch.k)) - {slot} - set(frozen)
    if missing:
        raise UsageError(f"--freeze must fix senders {sorted(s + 1 for s in missing)}")
    if slot in frozen:
        raise UsageError("cannot freeze the evaluated sender")
    single = freeze_slots(ch, frozen) if frozen else ch
    size = len(ch.alphabets[slot])
    p = parse_dist(args.dist, size) if args.dist else np.full(size, 1.0 / size)
    return single, p


def cmd_entropy(args) -> int:
    single, p = _single_sender(args)
    avg = DensityOperator(np.tensordot(p, np.array([s.mat for s in single.states()]), axes=(0, 0)))
    out = {
        "conditional_entropy": entropic.conditional_entropy(single, p),
        "average_output_entropy": entropic.von_neumann_entropy(avg),
        "letter_entropies": [entropic.von_neumann_entropy(s) for s in single.states()],
    }
    emit(out, args.format, [f"S(V|P) = {out['conditional_entropy']:.6f} bits",
                            f"S(avg) = {out['average_output_entropy']:.6f} bits"])
    return 0


def cmd_holevo(args) -> int:
    single, p = _single_sender(args)
    chi = entropic.holevo(p, single)
    mi = entropic.mutual_info(p, single)
    emit({"holevo": chi, "mutual_info": mi}, args.format,
         [f"{chi:.6f}", f"(mutual information {mi:.6f})"])
    return 0


def cmd_region(args) -> int:
    ch = load_channel_spec(args.channel)
    if args.k is not None and args.k != ch.k:
        raise UsageError(f"--k {args.k} but the channel has {ch.k} senders")
    order = parse_order(args.order, ch.k) if args.order else tuple(range(ch.k))
    sources = [args.stage1, args.stage2, args.stage3]
    stage_povms = []
    for pos, slot in enumerate(order[:-1]):
        src = sources[pos] if pos < len(sources) and sources[pos] else args.default_stage
        stage_povms.append(load_stage_povm(src, ch, slot))
    cfg = capacity.OptimizerConfig(tolerance=args.tolerance, grid_resolution=args.grid,
                                   refinement_rounds=args.rounds)
    if ch.k == 2:
        region = capacity.region_2user(ch, order, stage_povms[0], cfg)
    else:
        region = capacity.region_kuser(ch, order, stage_povms, cfg, form=args.form)
    lines = [f"decode order {'->'.join(str(s + 1) for s in order)}"]
    for i in sorted(region.bounds):
        lines.append(f"R{i + 1} <= {region.bounds[i]:.3f} bits (binding adversary: sender {region.binding[i] + 1})")
    lines.append(f"max optimizer gap estimate {region.max_gap:.2e}")
    emit(region.as_dict(), args.format, lines)
    return 0


def cmd_symcheck(args) -> int:
    ch = load_channel_spec(args.channel)
    honest = parse_slot(args.honest, ch.k)
    if args.jammer:
        jammer = parse_slot(args.jammer, ch.k)
    elif ch.k == 2:
        jammer = 1 - honest
    else:
        raise UsageError("--jammer is required for channels with more than two senders")
    frozen = parse_freeze(ch, args.freeze)
    avc = avc_view(ch, honest, jammer, frozen)
    sym = adversarial.check_symmetrizable(avc)
    ortho = adversarial.check_orthogonally_symmetrizable(avc, args.budget, np.random.default_rng(args.seed))
    out = {
        "honest": honest + 1,
        "jammer": jammer + 1,
        "symmetrizable": sym.symmetrizable,
        "verdict": "Symmetrizable" if sym.symmetrizable else "NotSymmetrizable",
        "lp_optimum": sym.lp_optimum,
        "slack": sym.slack,
        "tau": {str(x): {str(t): v for t, v in row.items()} for x, row in sym.witness.as_dict(avc).items()},
        "orthogonal": ortho.verdict.value,
        "orthogonal_tau": None if ortho.tau is None else ortho.tau.tolist(),
        "blocking_pair": None if ortho.blocking_pair is None else list(ortho.blocking_pair),
    }
    lines = [f"honest sender {honest + 1}, jammer sender {jammer + 1}"]
    if sym.symmetrizable:
        lines.append(f"Symmetrizable (slack {sym.slack:.2e})")
        for x, row in out["tau"].items():
            lines.append(f"  tau(.|{x}) = " + ", ".join(f"{t}:{v:.4f}" for t, v in row.items()))
    else:
        lines.append(f"NotSymmetrizable (certified LP slack {sym.lp_optimum:.6f})")
    if ortho.verdict is adversarial.OrthoVerdict.CERTIFIED_NOT:
        lines.append(f"orthogonal: CertifiedNot (pair {ortho.blocking_pair} has vanishing overlaps)")
    elif ortho.verdict is adversarial.OrthoVerdict.WITNESS:
        lines.append(f"orthogonal: Witness (min pair trace {ortho.min_trace:.4g})")
    else:
        lines.append("orthogonal: Unknown (budget exhausted)")
    emit(out, args.format, lines)
    return 0


def _parse_adversary(ch: CqMacChannel, text: str, n: int):
    """``none``, ``SLOT:honest``, ``SLOT:fixed:S1,S2,..`` or ``SLOT:worst[:aware]``."""
    if text in (None, "none"):
        return None
    parts = text.split(":")
    slot = parse_slot(parts[0], ch.k)
    kind = parts[1] if len(parts) > 1 else "worst"
    if kind == "honest":
        return slot, simulator.Honest()
    if kind == "fixed":
        if len(parts) < 3:
            raise UsageError("fixed adversary needs a symbol sequence")
        seq = tuple(parse_symbol(ch, slot, s) for s in parts[2].split(","))
        if len(seq) == 1 and n > 1:
            seq = seq * n
        if len(seq) != n:
            raise UsageError(f"adversary sequence must have length {n}")
        return slot, simulator.FixedSequence(seq)
    if kind == "worst":
        return slot, simulator.WorstCaseSearch(gamma_aware=len(parts) > 2 and parts[2] == "aware")
    raise UsageError(f"unknown adversary strategy {kind!r}")


def build_setup(ch: CqMacChannel, order: tuple, n: int, perms: str, example: bool) -> simulator.Setup:
    """Codes for the CLI: the worked example's codes, or repetition codes with PGM decoders."""
    if example:
        if n != 1:
            raise UsageError("the example decoders are one-letter; use --n 1 or --decoder pgm")
        return simulator.example_setup(order)
    if perms == "cyclic":
        perm_list = [tuple((i + s) % n for i in range(n)) for s in range(n)]
    else:
        perm_list = [tuple(range(n))]
    codes = {}
    for slot in range(ch.k):
        words = {x: (x,) * n for x in ch.alphabets[slot]}
        codes[slot] = simulator.pgm_code(ch, slot, words, perm_list)
    return simulator.Setup(ch, codes, order)


def cmd_simulate(args) -> int:
    ch = load_channel_spec(args.channel)
    order = parse_order(args.order, ch.k) if args.order else tuple(range(ch.k))
    use_example = args.decoder == "example" or (args.decoder == "auto" and args.channel == "example" and args.n == 1)
    setup = build_setup(ch, order, args.n, args.perms, use_example)
    adv = _parse_adversary(ch, args.adversary, args.n)
    if adv is not None:
        setup = setup.with_adversary(*adv)
    transcripts = simulator.simulate(setup, args.trials, args.seed)
    est = simulator.error_probability(setup, args.trials, args.seed, transcripts)
    rows = simulator.summary_rows(setup, est, args.seed)
    if args.transcripts:
        Path(args.transcripts).write_text("".join(t.to_json() + "\n" for t in transcripts))
    if args.format == "csv":
        sys.stdout.write(simulator.rows_to_csv(rows))
    elif args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            exact = r["err_exact"] and f"{float(r['err_exact']):.6f}" or "n/a"
            print(f"sender {r['sender']}: err_mc {float(r['err_mc']):.5f} "
                  f"[{float(r['ci_low']):.5f}, {float(r['ci_high']):.5f}] exact {exact} ({r['trials']} trials)")
    return 0


def cmd_fixtures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d1, d2 = example_povms()
    save_channel(example_channel(), out / "example.json")
    save_povm(d1, out / "d1.json")
    save_povm(d2, out / "d2.json")
    print(f"wrote example.json, d1.json, d2.json to {out}")
    return 0


# ------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="byzmac", description="Byzantine multiple-access cq channel toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def fmt(p, choices=("table", "json")):
        p.add_argument("--format", choices=choices, default="table")

    p = sub.add_parser("demo-example", help="reproduce the six decoding-order cases exactly")
    fmt(p)
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the demo is exact")
    p.set_defaults(func=cmd_demo)

    for name, func in (("entropy", cmd_entropy), ("holevo", cmd_holevo)):
        p = sub.add_parser(name, help=f"{name} of one sender's channel")
        p.add_argument("--channel", required=True, help="JSON file, 'example' or 'factorized:S1,S2,..'")
        p.add_argument("--slot", required=True, help="evaluated sender (1-based)")
        p.add_argument("--dist", help="comma-separated input distribution (default uniform)")
        p.add_argument("--freeze", action="append", help="SLOT=point:SYM | SLOT=dist:P,.. | SLOT=uniform")
        fmt(p)
        p.set_defaults(func=func)

    p = sub.add_parser("region", help="max-min rate region for a decode order")
    p.add_argument("--channel", required=True)
    p.add_argument("--order", help="decode order, e.g. 1,2")
    p.add_argument("--k", type=int, help="expected number of senders")
    p.add_argument("--stage1", help="POVM source: povm:FILE | example:d1 | example:d2 | local | pgm")
    p.add_argument("--stage2")
    p.add_argument("--stage3")
    p.add_argument("--default-stage", default="pgm")
    p.add_argument("--form", choices=("derivation", "statement"), default="derivation")
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--grid", type=int, default=6)
    p.add_argument("--rounds", type=int, default=8)
    fmt(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("symcheck", help="symmetrizability and orthogonal symmetrizability")
    p.add_argument("--channel", required=True)
    p.add_argument("--honest", default="1")
    p.add_argument("--jammer")
    p.add_argument("--freeze", action="append")
    p.add_argument("--budget", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    fmt(p)
    p.set_defaults(func=cmd_symcheck)

    p = sub.add_parser("simulate", help="Monte Carlo decoding episodes")
    p.add_argument("--channel", default="example")
    p.add_argument("--order")
    p.add_argument("--adversary", default="none", help="none | SLOT:honest | SLOT:fixed:SYMS | SLOT:worst[:aware]")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decoder", choices=("auto", "example", "pgm"), default="auto")
    p.add_argument("--perms", choices=("identity", "cyclic"), default="cyclic")
    p.add_argument("--transcripts", help="write JSON-lines transcripts to this file")
    fmt(p, ("table", "json", "csv"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixtures", help="write the worked example channel and POVMs as JSON")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ByzmacError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
