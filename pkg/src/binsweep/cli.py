"""Command-line driver: ``binsweep <subcommand> ...``.

Exit status is 0 on success, 2 on invalid input, 3 when a resource cap is
hit and 1 on a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .ergodicity import check_ergodic
from .errors import InvalidInputError, NumericalError, ResourceCapError
from .kernels import ALL_RULES, AcceptanceRule, SweepKernel, SweepOrder
from .matrix import MATRIX_CAP, save_matrix, spectral_gap, sweep_matrix
from .model import (DEFAULT_TIE_TOL, IsingLattice, bitstring, check_tie_condition,
                    model_from_spec, parse_bitstring)
from .proofgraph import (EXHAUSTIVE_CAP, adversarial_masks, check_subsets, edge_set,
                         exhaustive_masks, find_cycle, mask_to_subset, random_masks,
                         subset_to_mask)
from .rng import make_rng
from .sim import detect_period, horizontal_stripes, render_grid, run_chain, start_state, triangle

CSV_COLUMNS = ("J", "rule", "order", "gap", "lambda2_modulus", "note")
DEFAULT_MODEL = '{"variant": "ising", "rows": 3, "cols": 3, "periodic": true, "J": 1.0}'

EXIT_OK, EXIT_NUMERIC, EXIT_INVALID, EXIT_CAP = 0, 1, 2, 3


def j_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid, with ``0.0`` inserted if the range spans it."""
    if not step > 0 or stop < start:
        raise InvalidInputError("J grid needs step > 0 and stop >= start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    grid = [round(start + k * step, 12) for k in range(count)]
    if start <= 0.0 <= stop and 0.0 not in grid:
        grid.append(0.0)
    return sorted(set(grid))


def _list_arg(values, default):
    # custom permutations contain commas themselves, so never split them
    items = []
    for v in values or default:
        if v.startswith("custom:"):
            items.append(v)
        else:
            items.extend(s.strip() for s in v.split(",") if s.strip())
    return items


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _emit(text: str, path) -> None:
    fh, close = _open_out(path)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()


def _with_coupling(model, J):
    if J is None:
        return model
    if not isinstance(model, IsingLattice):
        raise InvalidInputError("--J only applies to ising models")
    return model.with_coupling(J)


# -- spectral-gap ----------------------------------------------------------

def _gap_row(model, J, rule, order_text, tol, dump_dir):
    row = {"J": "" if J is None else J, "rule": rule, "order": order_text,
           "gap": "", "lambda2_modulus": "", "note": "exact-zero" if J == 0.0 else ""}
    try:
        m = _with_coupling(model, J)
        kernel = SweepKernel.build(m, AcceptanceRule.parse(rule, tol), order_text)
        T = sweep_matrix(kernel)
        rep = spectral_gap(T)
    except ResourceCapError as exc:
        row["note"] = f"resource-cap: {exc}"
        return row, True
    row["gap"] = rep.gap
    row["lambda2_modulus"] = rep.lambda2_modulus
    if dump_dir is not None:
        tag = "na" if J is None else f"{J:g}"
        save_matrix(Path(dump_dir) / f"T_J{tag}_{rule}_{order_text.replace(':', '-')}.bswt", T)
    return row, False


def cmd_spectral_gap(args) -> int:
    model = model_from_spec(args.model)
    rules = _list_arg(args.rule, ALL_RULES)
    orders = _list_arg(args.order, ["linear"])
    grid = j_grid(args.J_start, args.J_stop, args.J_step) if isinstance(model, IsingLattice) else [None]
    if args.dump_dir:
        Path(args.dump_dir).mkdir(parents=True, exist_ok=True)
    tasks = [(J, r, o) for J in grid for r in rules for o in orders]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(
            lambda t: _gap_row(model, t[0], t[1], t[2], args.tol, args.dump_dir), tasks))
    rows = [r for r, _ in results]
    capped = any(c for _, c in results)
    if args.format == "json":
        text = json.dumps({"schema": "binsweep.spectral-gap/1", "model": model.to_spec(),
                           "rows": rows}, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_CAP if capped else EXIT_OK


# -- check-ergodic -----------------------------------------------------------

def cmd_check_ergodic(args) -> int:
    model = _with_coupling(model_from_spec(args.model), args.J)
    if model.n > MATRIX_CAP:
        raise ResourceCapError(f"n={model.n} exceeds the dense cap n <= {MATRIX_CAP}")
    reports = []
    for rule in _list_arg(args.rule, ALL_RULES):
        for order in _list_arg(args.order, ["linear"]):
            kernel = SweepKernel.build(model, AcceptanceRule.parse(rule, args.tol), order)
            rep = check_ergodic(kernel)
            reports.append({"rule": rule, "order": order, **rep.to_json()})
    doc = {"schema": "binsweep.check-ergodic/1", "model": model.to_spec(),
           "ties": check_tie_condition(model, args.tol).to_json(), "reports": reports}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return EXIT_OK


# -- proof-graph -------------------------------------------------------------

def _proof_masks(args) -> np.ndarray:
    n = args.n
    if args.subset:
        masks = []
        for spec in args.subset:
            states = [parse_bitstring(s.strip()) for s in spec.split(",") if s.strip()]
            if any(len(s.strip()) != n for s in spec.split(",") if s.strip()):
                raise InvalidInputError(f"subset states must be {n}-bit strings: {spec!r}")
            masks.append(subset_to_mask(states))
        full = (1 << (1 << n)) - 1
        if any(m in (0, full) for m in masks):
            raise InvalidInputError("subsets must be proper and nonempty")
        return np.array(masks, dtype=np.uint64)
    if args.random:
        return random_masks(n, args.random, make_rng(args.seed))
    if args.adversarial:
        return adversarial_masks(n)
    if n > EXHAUSTIVE_CAP:
        raise ResourceCapError(f"exhaustive enumeration supports n <= {EXHAUSTIVE_CAP}; "
                               "use --random or --adversarial")
    return exhaustive_masks(n)


def cmd_proof_graph(args) -> int:
    n = args.n
    masks = _proof_masks(args)
    bal, bal_set, cyc = check_subsets(masks, n)
    fh, close = _open_out(args.out)
    try:
        for m, b, bs, c in zip(masks.tolist(), bal.tolist(), bal_set.tolist(), cyc.tolist()):
            states = mask_to_subset(m, n)
            rec = {"mask": m, "subset": [bitstring(x, n) for x in states],
                   "balanced": b, "balanced_as_set": bs, "cyclic": c}
            if args.witness:
                cycle = find_cycle(edge_set(states, n))
                rec["cycle"] = None if cycle is None else [bitstring(x, n) for x in cycle]
            fh.write(json.dumps(rec) + "\n")
        summary = {"n": n, "subsets": int(masks.size), "balanced": int(bal.sum()),
                   "balanced_as_set": int(bal_set.sum()), "cyclic": int(cyc.sum())}
        fh.write(json.dumps({"summary": summary}) + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


# -- counterexample ----------------------------------------------------------

def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise InvalidInputError(f"bad size {text!r}; use L or RxC") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 2:
        raise InvalidInputError(f"bad size {text!r}")
    return dims[0], dims[1]


def counterexample_setup(name: str, rows: int, cols: int, J: float, periodic: bool,
                         rule: str = "standard"):
    """Kernel and start state of a named locking example."""
    model = IsingLattice(rows, cols, periodic, J)
    if name == "chessboard-stripes":
        if rows % 2 or cols % 2:
            raise InvalidInputError("chessboard-stripes needs even dimensions")
        return SweepKernel.build(model, rule, SweepOrder.chessboard(rows, cols)), \
            horizontal_stripes(rows, cols)
    if name == "linear-triangle":
        if rows != cols:
            raise InvalidInputError("linear-triangle needs a square lattice")
        return SweepKernel.build(model, rule, "linear"), triangle(rows)
    raise InvalidInputError(f"unknown counterexample {name!r}")


def cmd_counterexample(args) -> int:
    rows, cols = _parse_size(args.size)
    kernel, x0 = counterexample_setup(args.name, rows, cols, args.J, not args.open, args.rule)
    traj, _ = run_chain(kernel, args.sweeps, burn_in=0, seed=args.seed, start=x0,
                        record_substeps=True)
    full = traj.full()
    period = detect_period(full)
    phases = traj.phase_states()
    doc = {"schema": "binsweep.counterexample/1", "name": args.name, "rows": rows,
           "cols": cols, "periodic_lattice": not args.open, "J": args.J,
           "rule": kernel.rule.name, "order": kernel.order.name, "seed": args.seed,
           "sweeps": args.sweeps, "states": full.tolist(), "phase_states": phases,
           "periodic": period is not None, "period": period,
           "distinct_states": len(set(full.tolist()))}
    if args.format == "json":
        _emit(json.dumps(doc) + "\n", args.out)
    else:
        per = len(kernel.order.phases)
        shown = phases[:1 + per * min(args.sweeps, args.show)]
        lines = [f"{args.name} {rows}x{cols} J={args.J:g} rule={kernel.rule.name} "
                 f"order={kernel.order.name}"]
        for k, x in enumerate(shown):
            label = "start" if k == 0 else f"sweep {(k - 1) // per + 1}, phase {(k - 1) % per + 1}"
            lines += ["", f"[{label}] state={x}", render_grid(x, rows, cols)]
        verdict = (f"periodic: yes period={period}" if period is not None else "periodic: no")
        lines += ["", f"{verdict} distinct_states={doc['distinct_states']} sweeps={args.sweeps}"]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# -- sample ----------------------------------------------------------------

def cmd_sample(args) -> int:
    model = _with_coupling(model_from_spec(args.model), args.J)
    rule = _list_arg(args.rule, ["modified"])
    order = _list_arg(args.order, ["linear"])
    if len(rule) != 1 or len(order) != 1:
        raise InvalidInputError("sample takes exactly one rule and one order")
    kernel = SweepKernel.build(model, AcceptanceRule.parse(rule[0], args.tol), order[0])
    x0 = start_state(args.start, model)
    _, summary = run_chain(kernel, args.sweeps, args.burn_in, args.seed, x0)
    doc = {"schema": "binsweep.sample/1", "model": model.to_spec(), "rule": rule[0],
           "order": order[0], "seed": args.seed, "start": x0, **summary.to_json()}
    if args.format == "text":
        tv = "n/a" if summary.tv_distance is None else f"{summary.tv_distance:.6g}"
        _emit(f"samples={doc['samples']} distinct_states={doc['distinct_states']} tv={tv}\n",
              args.out)
    else:
        _emit(json.dumps(doc) + "\n", args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="binsweep", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_choices, fmt_default, model=True):
        if model:
            sp.add_argument("--model", default=DEFAULT_MODEL,
                            help="JSON model spec, inline or a file path")
            sp.add_argument("--rule", action="append",
                            help="standard, modified or gibbs (repeatable or comma list)")
            sp.add_argument("--order", action="append",
                            help="linear, chessboard or custom:<perm> (repeatable)")
            sp.add_argument("--tol", type=float, default=DEFAULT_TIE_TOL,
                            help="tie tolerance of the modified rule")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=fmt_choices, default=fmt_default)

    sp = sub.add_parser("spectral-gap", help="gap of the sweep matrix over a J grid")
    common(sp, ["csv", "json"], "csv")
    sp.add_argument("--J-start", type=float, default=0.0)
    sp.add_argument("--J-stop", type=float, default=2.0)
    sp.add_argument("--J-step", type=float, default=0.05)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--dump-dir", help="also write each sweep matrix as a binary dump")
    sp.set_defaults(func=cmd_spectral_gap)

    sp = sub.add_parser("check-ergodic", help="irreducibility and aperiodicity report")
    common(sp, ["json"], "json")
    sp.add_argument("--J", type=float)
    sp.set_defaults(func=cmd_check_ergodic)

    sp = sub.add_parser("proof-graph", help="degree balance and cycles of G(S)")
    common(sp, ["jsonl"], "jsonl", model=False)
    sp.add_argument("--n", type=int, required=True)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--subset", action="append",
                     help="comma list of site-1-first bit strings (repeatable)")
    src.add_argument("--random", type=int, metavar="K", help="K random subsets")
    src.add_argument("--adversarial", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-witness", dest="witness", action="store_false")
    sp.set_defaults(func=cmd_proof_graph)

    sp = sub.add_parser("counterexample", help="deterministic locking trajectories")
    common(sp, ["text", "json"], "text", model=False)
    sp.add_argument("name", choices=["chessboard-stripes", "linear-triangle"])
    sp.add_argument("--size", default="4x4")
    sp.add_argument("--J", type=float, default=1.0)
    sp.add_argument("--rule", default="standard", choices=list(ALL_RULES))
    sp.add_argument("--open", action="store_true", help="non-periodic boundary")
    sp.add_argument("--sweeps", type=int, default=4)
    sp.add_argument("--show", type=int, default=2, help="sweeps rendered in text mode")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_counterexample)

    sp = sub.add_parser("sample", help="simulate a chain and summarize visits")
    common(sp, ["json", "text"], "json")
    sp.add_argument("--J", type=float)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sweeps", type=int, default=10_000)
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--start", default="0", help="index, bit string, h-stripes or triangle")
    sp.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"binsweep: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ResourceCapError as exc:
        print(f"binsweep: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NumericalError as exc:
        print(f"binsweep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
