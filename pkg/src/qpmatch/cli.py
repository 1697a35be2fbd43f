"""Command-line front end: ``qpmatch {gen,sieve,match,bench,calibrate,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import brute_force_match, brute_force_shift, classical_injective_match
from .calibration import DEFAULT_SIZES, calibrate
from .errors import ParameterError, QpmError
from .formats import read_grid, read_shift_instance, write_grid, write_shift_instance
from .instances import GenSpec, gen_adversarial, gen_permutation_pair, gen_random, gen_shift_instance, inject_noise
from .ledger import QueryLedger
from .matcher import MatchParams, find_match, find_match_auto_nu
from .sieve import make_schedule, recover_shift_majority, run_sieve

OUTDIR_ENV = "QPMATCH_OUTDIR"
BENCH_COLUMNS = (
    "n",
    "m",
    "d",
    "q",
    "gamma",
    "nu",
    "seed",
    "verdict",
    "quantum_cost",
    "text_queries",
    "pattern_queries",
    "classical_work",
    "wall_ms",
)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTDIR_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(report: dict, path: str | None) -> None:
    text = _dump(report)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    out = _outdir(args)
    if args.mode == "shift":
        inst = gen_shift_instance(args.n, args.d, args.seed)
        if args.noise:
            inst = inject_noise(inst, args.noise, args.seed + 1)
        meta = {"generator": "shift", "n": args.n, "d": args.d, "seed": args.seed, "noise": args.noise}
        write_shift_instance(out / "shift.inst", inst, meta)
        sealed = {"shift": list(inst.unseal().components), "corrupted": inst.corrupted.tolist()}
        (out / "sealed.json").write_text(_dump(sealed))
        (out / "spec.json").write_text(_dump(meta))
        return 0
    spec = GenSpec(args.n, args.m, args.d, args.q, args.seed, args.mode, args.gamma, args.noise)
    if spec.mode in ("planted", "unplanted"):
        pair = gen_random(spec)
    elif spec.mode == "adversarial":
        pair = gen_adversarial(spec.n, spec.m, spec.d, spec.gamma, spec.seed, clean_block=not args.no_clean)
    else:
        pair = gen_permutation_pair(spec.n, spec.m, spec.d, spec.mode == "perm_d1", spec.seed)
    meta = {"spec": spec.as_dict(), "version": __version__}
    write_grid(out / "text.grid", pair.text, {**meta, "role": "text"}, binary=args.binary)
    write_grid(out / "pattern.grid", pair.pattern, {**meta, "role": "pattern"}, binary=args.binary)
    (out / "spec.json").write_text(_dump(meta))
    sealed = {
        "planted_offset": None if pair.planted_offset is None else list(pair.planted_offset),
        "record": pair.record,
    }
    (out / "sealed.json").write_text(_dump(sealed))
    return 0


# ---------------------------------------------------------------------------
# sieve
# ---------------------------------------------------------------------------


def cmd_sieve(args) -> int:
    if args.instance:
        inst, meta = read_shift_instance(args.instance, unseal=args.test_mode)
    else:
        inst = gen_shift_instance(args.n, args.d, args.seed)
        if args.noise:
            inst = inject_noise(inst, args.noise, args.seed + 1)
        meta = {"generator": "shift", "n": args.n, "d": args.d, "seed": args.seed, "noise": args.noise}
        if not args.test_mode:
            inst = type(inst)(inst.n, inst.d, inst.f, inst.g, inst.q, mode="exact")
    rng = np.random.default_rng(args.seed)
    ledger = QueryLedger()
    schedule = make_schedule(inst.n, inst.d, args.pool_constant)
    run = run_sieve(inst, schedule, args.k_target, rng, ledger)
    report = {
        "seed": args.seed,
        "instance": meta,
        "n": inst.n,
        "d": inst.d,
        "schedule": schedule.as_dict(),
        "sieve": run.as_dict(),
        "success": run.success,
    }
    if args.stage_csv:
        with open(args.stage_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "bit_width", "bins", "input_size", "output_size"])
            for st in run.stages:
                w.writerow([st.stage, st.bit_width, st.bins, st.input_size, st.output_size])
    if args.recover:
        shift = recover_shift_majority(
            inst, args.pool_constant, rng, ledger, votes=args.votes, random_offset=args.random_offset
        )
        report["recovered_shift"] = list(shift.components)
        if args.test_mode and inst.has_sealed_shift:
            report["sealed_shift"] = list(inst.unseal().components)
            report["matches_sealed"] = shift == inst.unseal()
            if inst.n * inst.d <= 12:
                report["brute_force_shift"] = list(brute_force_shift(inst).components)
    report["ledger"] = ledger.as_dict()
    _emit(report, args.report)
    return 0


# ---------------------------------------------------------------------------
# match
# ---------------------------------------------------------------------------


def _match_params(args) -> MatchParams:
    return MatchParams(
        nu=args.nu or 1,
        gamma=args.gamma,
        epsilon=args.epsilon,
        trial_budget=args.budget,
        pool_constant=args.pool_constant,
        votes=args.votes,
    )


def cmd_match(args) -> int:
    T, _ = read_grid(args.text)
    P, _ = read_grid(args.pattern)
    rng = np.random.default_rng(args.seed)
    ledger = QueryLedger()
    params = _match_params(args)
    if args.auto_nu or not args.nu:
        out = find_match_auto_nu(T, P, args.gamma, rng, ledger, base=params)
    else:
        out = find_match(T, P, params, rng, ledger, second_check=args.second_check)
    report = {"seed": args.seed, "params": params.as_dict(), "auto_nu": bool(args.auto_nu or not args.nu)}
    report.update(out.as_dict())
    if args.baseline:
        base_ledger = QueryLedger()
        try:
            b = classical_injective_match(T, P, args.gamma, np.random.default_rng([args.seed, 1]), base_ledger)
            report["baseline"] = b.as_dict()
        except QpmError as exc:
            report["baseline"] = {"error": str(exc)}
        report["brute_force"] = brute_force_match(T, P).as_dict()
    _emit(report, args.report)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    T, _ = read_grid(args.text)
    P, _ = read_grid(args.pattern)
    report = json.loads(Path(args.report_in).read_text())
    truth = brute_force_match(T, P)
    matches = {tuple(s) for s in truth.all_matches}
    if report["verdict"] == "found":
        ok = tuple(report["offset"]) in matches
    else:
        ok = not matches
    result = {"consistent": ok, "verdict": report["verdict"], "oracle": truth.as_dict()}
    _emit(result, None)
    if not ok:
        sys.stderr.write(_dump({"error": "VerificationFailed", "message": "report disagrees with brute force"}))
        return 1
    return 0


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------


def _parse_sizes(text: str | list) -> list[tuple[int, int]]:
    if isinstance(text, list):
        return [tuple(int(v) for v in s) for s in text]
    return [tuple(int(v) for v in item.split(",")) for item in text.split()]


def cmd_calibrate(args) -> int:
    sizes = _parse_sizes(args.sizes) if args.sizes else list(DEFAULT_SIZES)
    res = calibrate(sizes, target=args.target, trials=args.trials, seed=args.seed)
    path = res.write(args.write) if args.write else None
    report = res.as_dict()
    report["written_to"] = None if path is None else str(path)
    _emit(report, args.report)
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _bench_trial(task: dict) -> dict:
    n, m, d, q, gamma, nu, seed = (task[k] for k in ("n", "m", "d", "q", "gamma", "nu", "seed"))
    family, algo = task["family"], task["algo"]
    if family in ("planted", "unplanted"):
        pair = gen_random(GenSpec(n, m, d, q, seed, family))
    else:
        pair = gen_permutation_pair(n, m, d, family == "perm_d1", seed)
        q = pair.text.q
    rng = np.random.default_rng([task["master"], task["index"]])
    ledger = QueryLedger()
    start = time.perf_counter()
    if algo == "baseline":
        out = classical_injective_match(pair.text, pair.pattern, gamma, rng, ledger)
    else:
        params = MatchParams(nu=nu, gamma=gamma, pool_constant=task["pool_constant"])
        out = find_match(pair.text, pair.pattern, params, rng, ledger)
    wall = (time.perf_counter() - start) * 1000
    row = {"n": n, "m": m, "d": d, "q": q, "gamma": gamma, "nu": nu, "seed": seed, "verdict": out.verdict}
    row.update(ledger.as_dict())
    row["wall_ms"] = f"{wall:.3f}"
    return row


def bench_tasks(args) -> list[dict]:
    tasks = []
    index = 0
    for n in args.n:
        for m in args.m or [n]:
            if m > n:
                continue
            for t in range(args.trials):
                tasks.append(
                    {
                        "n": n,
                        "m": m,
                        "d": args.d,
                        "q": args.q,
                        "gamma": args.gamma,
                        "nu": args.nu,
                        "seed": args.seed + t,
                        "family": args.family,
                        "algo": args.algo,
                        "pool_constant": args.pool_constant,
                        "master": args.seed,
                        "index": index,
                    }
                )
                index += 1
    return tasks


def _row_key(row: dict) -> tuple:
    return (int(row["n"]), int(row["m"]), int(row["seed"]))


def cmd_bench(args) -> int:
    path = Path(args.csv) if args.csv else _outdir(args) / "bench.csv"
    tasks = bench_tasks(args)
    done: set[tuple] = set()
    if args.resume and path.exists():
        with open(path, newline="") as fh:
            done = {_row_key(r) for r in csv.DictReader(fh)}
    todo = [t for t in tasks if _row_key(t) not in done]
    fresh = not (args.resume and path.exists())
    with open(path, "w" if fresh else "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        if fresh:
            w.writeheader()
        if args.workers > 1:
            with ProcessPoolExecutor(args.workers) as pool:
                for row in pool.map(_bench_trial, todo):
                    w.writerow(row)
                    fh.flush()
        else:
            for task in todo:
                w.writerow(_bench_trial(task))
                fh.flush()
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpmatch", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file of defaults for this command")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    g = common(sub.add_parser("gen", help="generate an instance"))
    g.add_argument("--mode", default="planted", choices=["planted", "unplanted", "adversarial", "perm_d0", "perm_d1", "shift"])
    g.add_argument("--n", type=int, required=False, default=64)
    g.add_argument("--m", type=int, default=8)
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--q", type=int, default=2)
    g.add_argument("--gamma", type=float)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--no-clean", action="store_true", help="adversarial: corrupt every block")
    g.add_argument("--binary", action="store_true")
    g.add_argument("--out", help=f"output directory (default ${OUTDIR_ENV} or .)")
    g.set_defaults(func=cmd_gen)

    s = common(sub.add_parser("sieve", help="run the sieve and optionally recover the shift"))
    s.add_argument("--instance", help="shift-instance file; otherwise generated from --n/--d/--seed")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--pool-constant", type=float)
    s.add_argument("--k-target", type=int, default=4)
    s.add_argument("--recover", action="store_true")
    s.add_argument("--votes", type=int, default=3)
    s.add_argument("--random-offset", action="store_true", help="randomize the recursion offset each round")
    s.add_argument("--test-mode", action="store_true", help="unseal the planted shift for comparison")
    s.add_argument("--stage-csv")
    s.add_argument("--report")
    s.set_defaults(func=cmd_sieve)

    mt = common(sub.add_parser("match", help="search for the pattern in the text"))
    mt.add_argument("--text", required=True)
    mt.add_argument("--pattern", required=True)
    mt.add_argument("--nu", type=int, help="block size; omit (or --auto-nu) to double from 1")
    mt.add_argument("--auto-nu", action="store_true")
    mt.add_argument("--gamma", type=float, required=True)
    mt.add_argument("--epsilon", type=float)
    mt.add_argument("--budget", type=int)
    mt.add_argument("--pool-constant", type=float)
    mt.add_argument("--votes", type=int, default=1)
    mt.add_argument("--second-check", action="store_true", help="confirm with one megacharacter comparison")
    mt.add_argument("--baseline", action="store_true", help="add classical and brute-force results")
    mt.add_argument("--report")
    mt.set_defaults(func=cmd_match)

    b = common(sub.add_parser("bench", help="sweep sizes and write one CSV row per trial"))
    b.add_argument("--n", type=int, nargs="+", required=True)
    b.add_argument("--m", type=int, nargs="+")
    b.add_argument("--d", type=int, default=1)
    b.add_argument("--q", type=int, default=2)
    b.add_argument("--gamma", type=float, default=0.25)
    b.add_argument("--nu", type=int, default=1)
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--family", default="planted", choices=["planted", "unplanted", "perm_d0", "perm_d1"])
    b.add_argument("--algo", default="quantum", choices=["quantum", "baseline"])
    b.add_argument("--pool-constant", type=float)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--resume", action="store_true")
    b.add_argument("--csv")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    c = common(sub.add_parser("calibrate", help="fit the sieve pool constant"))
    c.add_argument("--sizes", help='space-separated "n,d" pairs')
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--target", type=float, default=0.75)
    c.add_argument("--write", help="calibration file to write")
    c.add_argument("--report")
    c.set_defaults(func=cmd_calibrate)

    v = sub.add_parser("verify", help="check a match report against brute force")
    v.add_argument("--config")
    v.add_argument("--text", required=True)
    v.add_argument("--pattern", required=True)
    v.add_argument("--report", dest="report_in", required=True)
    v.set_defaults(func=cmd_verify)
    return p


def parse_args(argv=None) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` become defaults that flags override."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        config = json.loads(Path(known.config).read_text())
        subparsers = parser._subparsers._group_actions[0].choices
        command = next((a for a in argv if a in subparsers), None)
        if command is None:
            raise ParameterError("--config needs a subcommand")
        sp = subparsers[command]
        actions = {a.dest: a for a in sp._actions}
        unknown = set(config) - set(actions)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        for key in config:
            actions[key].required = False
        sp.set_defaults(**config)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except (QpmError, ValueError, OSError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
