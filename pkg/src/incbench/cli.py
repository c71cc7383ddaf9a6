"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad number, bad file, failed run),
2 usage error.  Every subcommand accepts ``--config file.json`` whose keys are
the long option names; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import IncbenchError

THREADS_ENV = "INCBENCH_THREADS"
RUN_SIDECAR = ".run.json"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(_dump(obj))


def _write_run_sidecar(out, command: str, args: argparse.Namespace, **extra) -> None:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "config") and not k.startswith("_")}
    meta = {"command": command, "resolved_config": cfg, "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    meta.update(extra)
    Path(f"{out}{RUN_SIDECAR}").write_text(_dump(meta))


def _is_sidecar(path) -> bool:
    """True for ``<x>.run.json`` and for ``<x>.json`` sitting next to a data file ``<x>``."""
    text = str(path)
    if text.endswith(RUN_SIDECAR):
        return True
    return text.endswith(".json") and Path(text[: -len(".json")]).is_file()


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _resolve_threads(value) -> int:
    if value is None:
        value = os.environ.get(THREADS_ENV, 1)
    try:
        threads = int(value)
    except ValueError:
        raise IncbenchError(f"invalid thread count {value!r}") from None
    if threads < 1:
        raise IncbenchError("thread count must be at least 1")
    return threads


# --- subcommands ------------------------------------------------------------


def cmd_gen(args) -> int:
    from .sources import SourceSpec, generate

    params = {}
    if args.kind == "qsim":
        params = {"protocol": args.protocol, "noise": args.noise}
    spec = SourceSpec(args.kind, args.seed, params)
    if args.kind != "file" and args.bits is None:
        raise _Usage("gen: --bits is required")
    bits = generate(spec, args.bits, args.out, input=args.input,
                    config={"kind": args.kind, "seed": args.seed, "bits": args.bits, **params})
    print(_dump({"out": str(args.out), "kind": args.kind, "seed": args.seed, "length_bits": len(bits)}), end="")
    return 0


def cmd_qsim(args) -> int:
    from .bitio import morphism_phi, write_rbf, write_rtf
    from .qsim import ConfusionMatrix, DriftParams, ProtocolSpec, outcome_distribution, run_generation, sample_trits

    spec = ProtocolSpec.named(args.protocol)
    noise = ConfusionMatrix.parse(args.noise)
    if args.mode == "run":
        drift = DriftParams.disabled() if args.no_drift else DriftParams(
            drift=args.drift, jitter=args.jitter, retrain_gain=args.retrain_gain, seed=args.seed)
        log = run_generation(spec, noise, drift, args.files, args.bits, args.out_dir,
                             seed=args.seed, emit_rbf=not args.no_rbf)
        print(_dump({"files": log.files, "recalibrations": log.recalibrations}), end="")
        return 0
    if args.out is None or args.trits is None:
        raise _Usage("qsim: --trits and --out are required")
    trits = sample_trits(spec, noise, args.trits, args.seed)
    meta = {"protocol": spec.variant, "seed": args.seed,
            "noise": None if noise is None else noise.as_list()}
    write_rtf(args.out, trits, **meta)
    if args.rbf:
        write_rbf(args.rbf, morphism_phi(trits), source="qsim", **meta)
    counts = [trits.trits.count(v) for v in range(3)]
    print(_dump({"out": str(args.out), "trits": len(trits), "counts": counts,
                 "expected": outcome_distribution(spec, noise).tolist()}), end="")
    return 0


def cmd_zscan(args) -> int:
    from .bitio import read_rbf, read_sidecar
    from .csstest import default_composites, scan
    from .figures import zscan_csv

    if args.input is None or args.out is None:
        raise _Usage("zscan: --input and --out are required")
    threads = _resolve_threads(args.threads)
    bits = read_rbf(args.input)
    source_id = args.source_id
    if source_id is None:
        side = read_sidecar(args.input) or {}
        source_id = side.get("source") or Path(args.input).stem
    composites = args.composites or default_composites()
    report = scan(bits, composites, args.step, threads=threads,
                  max_positions=args.max_positions, source_id=source_id)
    doc = report.as_dict()
    doc["input"] = Path(args.input).name
    _write_json(args.out, doc)
    if args.csv:
        zscan_csv(report, args.csv)
    _write_run_sidecar(args.out, "zscan", args, threads_used=threads)
    summary = {"out": str(args.out), "average_metric": report.average_metric,
               "counts": {str(n): c.zliar_count for n, c in report.per_composite.items()}}
    print(_dump(summary), end="")
    return 0


def cmd_liars(args) -> int:
    from .numth import euler_liars

    if args.n is None:
        raise _Usage("liars: --n is required")
    print(_dump(euler_liars(args.n).as_dict()), end="")
    return 0


def cmd_carmichael(args) -> int:
    from .numth import is_carmichael

    if args.max is None:
        raise _Usage("carmichael: --max is required")
    found = [n for n in range(5, args.max + 1, 2) if is_carmichael(n)]
    print(_dump({"max": args.max, "carmichael": found}), end="")
    return 0


def cmd_compare(args) -> int:
    from .csstest import ZScanReport
    from .figures import write_comparison_outputs
    from .stats import aggregate

    if not args.reports or args.out is None:
        raise _Usage("compare: --reports and --out are required")
    groups: dict[str, list] = {}
    for path in sorted(set(args.reports), key=_natural_key):
        if _is_sidecar(path):
            continue  # shell globs like a/*.json also match sidecars
        try:
            rep = ZScanReport.from_dict(json.loads(Path(path).read_text()))
        except (KeyError, json.JSONDecodeError) as exc:
            raise IncbenchError(f"{path}: not a zscan report ({exc})") from exc
        groups.setdefault(rep.source_id, []).append(rep)
    labels = [s for s in (args.labels or "").split(",") if s] or sorted(groups)
    missing = [s for s in labels if s not in groups]
    if missing:
        raise IncbenchError(f"no reports for label(s) {missing}; found sources {sorted(groups)}")
    cmp = aggregate({s: groups[s] for s in labels})
    _write_json(args.out, cmp.as_dict())
    out_dir = Path(args.csv_dir) if args.csv_dir else Path(args.out).parent
    written = write_comparison_outputs(cmp, out_dir, figures=not args.no_figures)
    _write_run_sidecar(args.out, "compare", args, outputs=[str(p) for p in written])
    print(_dump({"out": str(args.out), "significant": [list(p) for p in cmp.significant],
                 "pvalues": {f"{a}|{b}": r.p_value for (a, b), r in cmp.pairwise_p.items()}}), end="")
    return 0


def cmd_verify_unitary(args) -> int:
    import numpy as np

    from .qsim import factor_residual, u_x

    u = u_x().entries
    unitarity = float(np.abs(u @ u.conj().T - np.eye(3)).max())
    residual, phase = factor_residual()
    ok = unitarity <= 1e-12 and residual <= args.tolerance
    print(_dump({"unitarity_deviation": unitarity, "factor_residual": residual,
                 "global_phase": [phase.real, phase.imag], "tolerance": args.tolerance,
                 "ok": ok}), end="")
    return 0 if ok else 1


def cmd_morphism(args) -> int:
    from .bitio import morphism_phi, read_rtf, read_sidecar, write_rbf

    if args.input is None or args.out is None:
        raise _Usage("morphism: --in and --out are required")
    bits = morphism_phi(read_rtf(args.input))
    side = read_sidecar(args.input) or {}
    write_rbf(args.out, bits, source=side.get("source", "qsim"), seed=side.get("seed"),
              origin=str(args.input))
    print(_dump({"out": str(args.out), "length_bits": len(bits), "ones": bits.count_ones()}), end="")
    return 0


# --- parser -----------------------------------------------------------------


class _Usage(Exception):
    pass


def _natural_key(path: str):
    import re

    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", str(path))]


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="incbench", description="CSS4 incomputability test bench")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs: dict[str, argparse.ArgumentParser] = {}

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="JSON file of option defaults")
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("gen", cmd_gen, "write bits from a reference source to .rbf")
    p.add_argument("--kind", choices=["mt19937", "hashctr", "champernowne", "file", "qsim"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", type=int)
    p.add_argument("--out")
    p.add_argument("--input", help="source .rbf for --kind file")
    p.add_argument("--protocol", default="fig2", help="qsim protocol (fig1|fig2)")
    p.add_argument("--noise", default="default", help="qsim noise: default|none|<json>")

    p = add("qsim", cmd_qsim, "simulate the qutrit QRNG")
    p.add_argument("mode", nargs="?", choices=["sample", "run"], default="sample")
    p.add_argument("--protocol", default="fig2")
    p.add_argument("--noise", default="default")
    p.add_argument("--trits", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output .rtf (sample mode)")
    p.add_argument("--rbf", help="also write the morphism-applied bits here (sample mode)")
    p.add_argument("--files", type=int, default=750, help="run mode: stop before this run index")
    p.add_argument("--bits", type=int, default=1 << 26, help="run mode: trits per file")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--drift", type=float, default=0.002)
    p.add_argument("--jitter", type=float, default=0.004)
    p.add_argument("--retrain-gain", type=float, default=0.001)
    p.add_argument("--no-drift", action="store_true")
    p.add_argument("--no-rbf", action="store_true")

    p = add("zscan", cmd_zscan, "count Z-liars in a bit file")
    p.add_argument("--input")
    p.add_argument("--composites", type=_int_list)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--threads", type=int)
    p.add_argument("--source-id")
    p.add_argument("--max-positions", type=int, default=1000)

    p = add("liars", cmd_liars, "list the Euler liars of an odd composite")
    p.add_argument("--n", type=int)

    p = add("carmichael", cmd_carmichael, "enumerate Carmichael numbers up to --max")
    p.add_argument("--max", type=int)

    p = add("compare", cmd_compare, "KS-compare zscan reports grouped by source")
    p.add_argument("--reports", nargs="+")
    p.add_argument("--labels")
    p.add_argument("--out")
    p.add_argument("--csv-dir")
    p.add_argument("--no-figures", action="store_true")

    p = add("verify-unitary", cmd_verify_unitary, "check U_x and its factorisation")
    p.add_argument("--tolerance", type=float, default=1e-10)

    p = add("morphism", cmd_morphism, "map an .rtf trit file to an .rbf bit file")
    p.add_argument("--in", dest="input")
    p.add_argument("--out")
    return parser, subs


def _apply_config(parser, subs, argv, args):
    sub = subs[args.command]
    try:
        cfg = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise IncbenchError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IncbenchError(f"config {args.config} is not valid JSON: {exc}") from exc
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest == "in":
            dest = "input"
        if dest not in known:
            sub.error(f"unknown config key {key!r}")
        if dest == "composites" and not isinstance(value, list):
            value = _int_list(value)
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        if args.config:
            args = _apply_config(parser, subs, argv, args)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except _Usage as exc:
        subs[args.command].print_usage(sys.stderr)
        print(f"incbench: error: {exc}", file=sys.stderr)
        return 2
    except (IncbenchError, OSError) as exc:
        print(f"incbench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
