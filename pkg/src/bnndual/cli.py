"""Command-line entry point: ``bnndual <subcommand> ...``.

Exit status is 0 on success, 1 when the outcome is infeasible or a fit does
not converge (reports are still written), and 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import bnn, model
from .autodiff import Rule, field
from .dualfit import FitConfig, MatchSamples, MaximizeAt, fit, fit_to_samples, refine
from .errors import BnnDualError, NotCertified
from .pwl import Interval, PwlFunction
from .rational import as_fraction, fmt, parse_range
from .solve import solve_mip, value_sweep
from .subadditive import Mode, check_dual_feasible, dual_constraints, weak_duality_gap

VALUE_FLAGS = {"--grid", "--sweep", "--epsilon", "--at", "--direction", "--window"}
_NEGATIVE = re.compile(r"^-[0-9]")


class InputError(Exception):
    pass


def _prepare_argv(argv):
    """Glue ``--grid -2:2:1/8`` into ``--grid=-2:2:1/8`` so argparse accepts it."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _emit(args, text: str):
    """Write machine output to ``--out`` (or stdout when absent)."""
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)


def _sibling(out: str, suffix: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + suffix)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def _load_model(path: str):
    return model.loads(_read(path), source=path)


def _load_dataset(path: str):
    return bnn.load_dataset(_read(path), source=path)


def _direction(args, mip):
    if args.direction:
        d = [as_fraction(v) for v in args.direction.split(",")]
        if len(d) != mip.num_rows:
            raise InputError(f"--direction has {len(d)} entries, model has {mip.num_rows} rows")
        return d
    if mip.num_rows != 1:
        raise InputError("--direction is required for models with several rows")
    return [Fraction(1)]


def _window(text: str) -> Interval:
    lo, hi = text.split(":")
    return Interval(as_fraction(lo), as_fraction(hi))


def _grid_window(text: str):
    lo, hi, step = text.split(":")
    return Interval(as_fraction(lo), as_fraction(hi)), as_fraction(step)


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    mip = _load_model(args.model)
    problems = model.validate(mip)
    doc = {"valid": not problems, "violations": [{"kind": v.kind, "message": v.message} for v in problems]}
    if not problems and mip.has_finite_bounds():
        nice = model.check_nice(mip)
        doc.update(primal_feasible=nice.primal_feasible, relaxation_dual_feasible=nice.relaxation_dual_feasible,
                   nice=nice.is_nice)
    for v in problems:
        print(f"{args.model}: {v.kind}: {v.message}")
    print(f"{args.model}: {mip.num_rows} rows, {mip.n_int} integer, {mip.n_cont} continuous; "
          f"{'valid' if not problems else 'INVALID'}")
    if "nice" in doc:
        print(f"nice: {doc['nice']}")
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 2 if problems else 0


def _solution_doc(sol) -> dict:
    return {
        "status": sol.status.value,
        "objective": None if sol.objective is None else fmt(sol.objective),
        "x": [fmt(v) for v in sol.x],
        "y": [fmt(v) for v in sol.y],
        "nodes": sol.nodes,
    }


def cmd_solve(args) -> int:
    mip = _load_model(args.model)
    sol = solve_mip(mip)
    print(f"status {sol.status.value}" + (f", objective {fmt(sol.objective)}" if sol.optimal else "")
          + f", {sol.nodes} nodes")
    _emit(args, json.dumps(_solution_doc(sol), indent=2, sort_keys=True) + "\n")
    return 0 if sol.optimal else 1


def cmd_sweep(args) -> int:
    mip = _load_model(args.model)
    offsets = parse_range(args.grid)
    samples = value_sweep(mip, _direction(args, mip), offsets, workers=args.workers)
    n_ok = len(samples.feasible())
    print(f"{len(offsets)} offsets, {n_ok} optimal")
    _emit(args, samples.to_csv())
    return 0 if n_ok else 1


def cmd_encode(args) -> int:
    arch, data = _load_dataset(args.dataset)
    enc = bnn.encode(arch, data, as_fraction(args.epsilon))
    mip = enc.mip
    print(f"layers {' '.join(map(str, arch.layer_sizes))}, {data.m} samples: "
          f"{mip.num_rows} rows, {mip.n_int} integer, {mip.n_cont} continuous columns")
    _emit(args, bnn.dump_encoded(enc))
    return 0


def _via_dual(args, enc) -> dict:
    rows = bnn.loss_rows(enc)
    direction = [Fraction(0)] * enc.mip.num_rows
    for r in rows:
        direction[r] = Fraction(1)
    offsets = parse_range(args.grid or "-1:1:1/4")
    samples = value_sweep(enc.mip, direction, offsets)
    cfg = FitConfig(k=args.segments, steps=args.steps, rule=Rule(args.rule), seed=args.seed)
    res = fit_to_samples(samples.offsets, samples.values, cfg)
    return {
        "direction_rows": rows,
        "samples": [[fmt(t), None if v is None else fmt(v)] for t, v in zip(samples.offsets, samples.values)],
        "fit": res.to_document(),
        "match_error": fmt(res.match_error),
        "value_at_0": next((fmt(v) for t, v in zip(samples.offsets, samples.values) if t == 0), None),
    }


def cmd_train(args) -> int:
    arch, data = _load_dataset(args.dataset)
    enc = bnn.encode(arch, data, as_fraction(args.epsilon))
    sol = solve_mip(enc.mip)
    if not sol.optimal:
        print(f"training model is {sol.status.value}")
        _emit(args, json.dumps({"status": sol.status.value}, indent=2) + "\n")
        return 1
    dec = bnn.decode(sol, enc)
    check = bnn.empirical_loss(arch, dec.weights, data)
    baseline = bnn.best_random_loss(arch, data, args.baseline, seed=args.seed) if args.baseline else None
    doc = bnn.weights_document(dec.weights)
    doc.update(
        loss=fmt(dec.loss),
        forward_loss=check,
        predictions=[list(p) for p in dec.predictions],
        nodes=sol.nodes,
        random_baseline={"samples": args.baseline, "seed": args.seed, "best_loss": baseline},
    )
    print(f"optimal loss {fmt(dec.loss)} (forward pass {check}), {sol.nodes} nodes")
    if baseline is not None:
        print(f"best of {args.baseline} random weights: {baseline}")
    if args.via_dual:
        doc["via_dual"] = _via_dual(args, enc)
        vd = doc["via_dual"]
        print(f"dual fit along loss rows: z(0) = {vd['value_at_0']}, match error {vd['match_error']}")
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_dual_check(args) -> int:
    mip = _load_model(args.model)
    f = PwlFunction.loads(_read(args.function), source=args.function)
    window = _window(args.window) if args.window else None
    report = check_dual_feasible(f, mip, Mode(args.mode), window=window, seed=args.seed)
    print(report.summary())
    doc = report.to_document()
    if report.feasible:
        sol = solve_mip(mip)
        if sol.optimal:
            gap = weak_duality_gap(f, mip, sol, Mode(args.mode), report=report)
            doc["primal_objective"] = fmt(sol.objective)
            doc["f_at_b"] = fmt(f(mip.b[0]))
            doc["gap"] = fmt(gap)
            print(f"z*(b) = {fmt(sol.objective)}, f(b) = {fmt(f(mip.b[0]))}, gap {fmt(gap)}")
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0 if report.feasible else 1


def _fit_config(args) -> FitConfig:
    if args.at is not None:
        objective = MaximizeAt(as_fraction(args.at))
    else:
        window, step = _grid_window(args.grid or "-1/2:1/2:1/20")
        objective = MatchSamples(window, step)
    return FitConfig(
        k=args.segments,
        objective=objective,
        steps=args.steps,
        rule=Rule(args.rule),
        seed=args.seed,
        mode=Mode(args.mode),
        **({"schedule": args.schedule} if args.schedule else {}),
    )


def cmd_dual_fit(args) -> int:
    mip = _load_model(args.model)
    cfg = _fit_config(args)
    if args.k_max and args.k_max > cfg.k:
        rr = refine(mip, cfg, args.k_max)
        res, extra = rr.best, {"refinement_errors": [fmt(e) for e in rr.errors]}
    else:
        res, extra = fit(mip, cfg), {}
    f = res.pwl
    print(f"k = {res.param.k}: slopes {[fmt(s) for s in f.slopes]}, breakpoints {[fmt(p) for p in f.breakpoints]}")
    print(f"match error {fmt(res.match_error)}, penalty {fmt(res.penalty)}, "
          f"converged {res.converged}, dual feasible {res.report.feasible}")
    if isinstance(cfg.objective, MaximizeAt):
        pt = cfg.objective.point
        print(f"f({fmt(pt)}) = {fmt(f(pt))}")
    doc = res.to_document()
    doc.update(extra)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        _sibling(args.out, ".samples.csv").write_text(res.samples_csv())
        _sibling(args.out, ".trace.csv").write_text(res.trace.to_csv())
        print(f"wrote {args.out} and its .samples.csv / .trace.csv companions")
    else:
        sys.stdout.write(text)
    return 0 if res.converged else 1


def cmd_example(args) -> int:
    mip = model.ralphs_example()
    offsets = parse_range(args.sweep)
    samples = value_sweep(mip, (1,), offsets, workers=args.workers)
    print("example: min 2Y1 + Y2 + X1/2  s.t.  X1 - 3/2 X2 + Y1 - Y2 = b")
    nice = model.check_nice(mip)
    print(f"nice: {nice.is_nice}")
    for b in (-1, Fraction(-1, 2), 0, Fraction(1, 4), 1):
        sol = solve_mip(mip.with_rhs([b]))
        print(f"z*({fmt(b)}) = {fmt(sol.objective)}")
    print("dual constraints: " + ", ".join(str(c) for c in dual_constraints(mip)))

    near = fit(mip, FitConfig(k=2, objective=MatchSamples(Interval(Fraction(-1, 2), Fraction(1, 2)))))
    ft = near.pwl
    print(f"two-segment match on [-1/2, 1/2]: slope {fmt(ft.slope_right(0))} for b > 0, "
          f"{fmt(ft.slope_left(0))} for b < 0, breakpoints {[fmt(p) for p in ft.breakpoints]}")
    fld = field(ft)
    print(f"field: D(1) = {fld(Fraction(1))}, D(0) = {fld(Fraction(0))}, D(-1) = {fld(Fraction(-1))}")
    at1 = fit(mip, FitConfig(k=2, objective=MaximizeAt(Fraction(1))))
    z1 = solve_mip(mip.with_rhs([1])).objective
    try:
        gap = fmt(weak_duality_gap(at1.pwl, mip.with_rhs([1]), solve_mip(mip.with_rhs([1]))))
    except NotCertified as exc:
        gap = f"not certified ({exc})"
    print(f"maximize f(1): f(1) = {fmt(at1.pwl(Fraction(1)))}, z*(1) = {fmt(z1)}, gap {gap}")

    _emit(args, samples.to_csv())
    return 0


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bnndual", description="Exact MILP duality and BNN training experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="output file (stdout when omitted)")
        return sp

    sp = add("validate", cmd_validate, "check a model file")
    sp.add_argument("--model", required=True)

    sp = add("solve", cmd_solve, "solve a model by branch-and-bound")
    sp.add_argument("--model", required=True)

    sp = add("sweep", cmd_sweep, "sample the value function along a rhs direction")
    sp.add_argument("--model", required=True)
    sp.add_argument("--grid", required=True, help="lo:hi:step")
    sp.add_argument("--direction", help="comma-separated rhs direction (default: 1 for one-row models)")
    sp.add_argument("--workers", type=int, default=1)

    for name, func, text in (
        ("encode-bnn", cmd_encode, "write the training MILP of a dataset"),
        ("train-bnn", cmd_train, "train a BNN exactly"),
    ):
        sp = add(name, func, text)
        sp.add_argument("--dataset", required=True)
        sp.add_argument("--epsilon", default="1/1000000")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--baseline", type=int, default=10_000, help="random weight samples (0 disables)")
    sp.add_argument("--via-dual", action="store_true", help="also fit a dual function along the loss rows")
    sp.add_argument("--grid", help="offsets for --via-dual, lo:hi:step")
    sp.add_argument("--segments", type=int, default=2)
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--rule", default="leastnorm", choices=[r.value for r in Rule])

    sp = add("dual-check", cmd_dual_check, "check dual feasibility of a piecewise-linear function")
    sp.add_argument("--model", required=True)
    sp.add_argument("--function", required=True)
    sp.add_argument("--mode", default="inequality", choices=[m.value for m in Mode])
    sp.add_argument("--window", help="subadditivity window lo:hi")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("dual-fit", cmd_dual_fit, "fit a piecewise-linear dual function")
    sp.add_argument("--model", required=True)
    sp.add_argument("--segments", type=int, default=2)
    sp.add_argument("--k-max", type=int, default=None, help="refine up to this many segments")
    sp.add_argument("--grid", help="match window and step lo:hi:step (default -1/2:1/2:1/20)")
    sp.add_argument("--at", help="maximize f at this rhs instead of matching samples")
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--schedule", help="constant:a | harmonic:a | geometric:a:r")
    sp.add_argument("--rule", default="leastnorm", choices=[r.value for r in Rule])
    sp.add_argument("--mode", default="inequality", choices=[m.value for m in Mode])
    sp.add_argument("--seed", type=int, default=0)

    sp = add("example-ralphs", cmd_example, "reproduce the one-row worked example")
    sp.add_argument("--sweep", default="-2:2:1/8", help="lo:hi:step")
    sp.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(_prepare_argv(argv))
    try:
        return args.func(args)
    except (InputError, BnnDualError, ValueError, KeyError) as exc:
        print(f"bnndual: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
