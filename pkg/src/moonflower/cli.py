"""Command-line front end.

    moonflower mf FAMILY [--exact|--greedy] [--budget N]
    moonflower sparsify CODE [--epsilon E] [--seed S] [--retries R] [--out FILE]
    moonflower verify CODE SPARSIFIER [--epsilon E]
    moonflower lowerbound --n N --k K --epsilon E [--out PREFIX] [--against FILE]
    moonflower suite --suite NAME [--seed S] [--trials T] [--out DIR]
    moonflower gen {lower-bound,chain,random-code} ...

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 budget
exceeded, 4 retries exhausted.  ``--format json`` switches every command to
machine output.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import suites
from .setfam import (BudgetExceeded, FamilyFormatError, elements, family_stats,
                     gen_lower_bound_family, mf_exact, mf_greedy, read_family, write_family)
from .sparsify import (BuildFailed, Sparsifier, SparsifierConfig,
                       build_sparsifier, certify_lower_bound, gen_chain_code,
                       random_bounded_nrd_code, read_code, verify_sparsifier, write_code)

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_BUDGET, EXIT_RETRIES = 0, 1, 2, 3, 4
DEFAULT_SEED = suites.DEFAULT_SEED


def default_seed() -> int:
    env = os.environ.get("MOONFLOWER_SEED")
    if env is None or env == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise InputError(f"MOONFLOWER_SEED is not an integer: {env!r}") from None


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# manifests

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    started: str = ""
    finished: str = ""
    inputs: dict = field(default_factory=dict)    # path -> sha256
    outputs: dict = field(default_factory=dict)

    def add_input(self, path):
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path):
        self.outputs[str(path)] = file_digest(path)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        return cls(**data)

    def write(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# output helpers

def _emit(args, payload: dict, text_lines: list[str]):
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))
    else:
        for line in text_lines:
            print(line)


def _table(rows: list[tuple]) -> list[str]:
    if not rows:
        return []
    width = max(len(str(k)) for k, _ in rows)
    return [f"{str(k):<{width}}  {v}" for k, v in rows]


def _load_family(path):
    try:
        return read_family(path)
    except FamilyFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    except OSError as exc:
        raise InputError(str(exc)) from None


def _load_code(path):
    try:
        return read_code(path)
    except FamilyFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    except OSError as exc:
        raise InputError(str(exc)) from None


def _load_sparsifier(path) -> Sparsifier:
    try:
        return Sparsifier.from_json(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: cannot read sparsifier: {exc}") from None


# ---------------------------------------------------------------------------
# commands

def cmd_mf(args) -> int:
    fam = _load_family(args.family)
    manifest = RunManifest("mf", {"mode": "greedy" if args.greedy else "exact",
                                  "budget": args.budget}, None, _now())
    manifest.add_input(args.family)
    code = EXIT_OK
    partial = False
    if not any(fam.members):
        value, wit = 0, None
    elif args.greedy:
        value, wit = mf_greedy(fam)
    else:
        try:
            value, wit = mf_exact(fam, args.budget)
        except BudgetExceeded as exc:
            value, wit = mf_greedy(fam)
            if exc.best is not None and exc.best > value:
                value = exc.best
                wit = exc.witness or wit
            partial = True
            code = EXIT_BUDGET
    stats = family_stats(fam, exact=False)
    manifest.finished = _now()
    payload = {
        "mf": value,
        "exact": not args.greedy and not partial,
        "partial": partial,
        "petals": [elements(m) for m in wit.petals] if wit else [],
        "petal_indices": list(wit.petal_indices) if wit else [],
        "core": elements(wit.core) if wit else [],
        "stats": {"size": stats.size, "max_set_size": stats.max_set_size,
                  "support_size": stats.support_size, "mf_lower": stats.mf_lower},
        "manifest": manifest.to_json(),
    }
    label = "MF" if payload["exact"] else ("MF >=" if partial else "MF (greedy) >=")
    lines = _table([(label, value),
                    ("core", " ".join(map(str, payload["core"])) or "-"),
                    ("members", stats.size), ("max set size", stats.max_set_size),
                    ("support", stats.support_size)])
    lines += [f"petal  {' '.join(map(str, p))}" for p in payload["petals"]]
    if partial:
        lines.append("budget exhausted: value is a lower bound")
    _emit(args, payload, lines)
    return code


def _eps(value: float) -> float:
    if not 0 < value <= 0.25:
        raise InputError(f"epsilon must lie in (0, 1/4], got {value}")
    return value


def cmd_sparsify(args) -> int:
    code = _load_code(args.code)
    eps = _eps(args.epsilon)
    seed = args.seed if args.seed is not None else default_seed()
    cfg = SparsifierConfig(epsilon=eps, seed=seed, max_build_retries=args.retries,
                           nrd_budget=args.nrd_budget)
    manifest = RunManifest("sparsify", asdict(cfg) | {"k": args.k}, seed, _now())
    manifest.add_input(args.code)
    out = Path(args.out) if args.out else Path(args.code).with_suffix(".sparsifier.json")
    log_path = out.with_name(out.name + ".log.json")
    status = EXIT_OK
    try:
        sp, log = build_sparsifier(code, cfg, args.k)
        report = verify_sparsifier(code, sp, eps)
    except BuildFailed as exc:
        sp, log, report = exc.best, exc.log, exc.report
        status = EXIT_RETRIES
    except BudgetExceeded as exc:
        print(f"error: {exc}; pass --k with an upper bound on NRD + 1", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out.write_text(json.dumps(sp.to_json(), indent=1, sort_keys=True) + "\n")
    log_path.write_text(json.dumps(log.to_json(), indent=1, sort_keys=True, default=str) + "\n")
    manifest.finished = _now()
    manifest.add_output(out)
    manifest.add_output(log_path)
    manifest.write(out.with_name(out.name + ".manifest.json"))
    payload = {"T": len(sp), "rounds": sp.rounds, "retries_used": len(log.attempts),
               "max_rel_err": report.max_rel_err, "passed": status == EXIT_OK,
               "k": log.params.k, "k_source": log.k_source, "output": str(out),
               "log": str(log_path), "manifest": manifest.to_json()}
    lines = _table([("|T|", len(sp)), ("rounds", sp.rounds),
                    ("retries used", len(log.attempts)),
                    ("max_rel_err", f"{report.max_rel_err:.6g}"),
                    ("k", f"{log.params.k} ({log.k_source})"), ("written", out)])
    if status != EXIT_OK:
        lines.append("retries exhausted: best attempt saved")
    _emit(args, payload, lines)
    return status


def cmd_verify(args) -> int:
    code = _load_code(args.code)
    sp = _load_sparsifier(args.sparsifier)
    if sp.n != code.n or any(not 0 <= i < code.n for i in sp.entries):
        raise InputError(f"dimension mismatch: code n={code.n}, sparsifier n={sp.n}")
    if not 0 < args.epsilon < 1:
        raise InputError("epsilon must lie in (0, 1)")
    rep = verify_sparsifier(code, sp, args.epsilon)
    payload = rep.to_json()
    lines = _table([("result", "pass" if rep.passed else "FAIL"),
                    ("max_rel_err", f"{rep.max_rel_err:.6g}"),
                    ("epsilon", rep.epsilon), ("violators", len(rep.violators))])
    for idx, wt, est in rep.worst[:10]:
        lines.append(f"  codeword {idx}: weight {wt}, estimate {est:g}")
    _emit(args, payload, lines)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_lowerbound(args) -> int:
    if args.k < 1 or args.n % args.k:
        raise InputError(f"k={args.k} must divide n={args.n}")
    try:
        code, spec = gen_chain_code(args.n, args.k, args.epsilon)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    payload = {"spec": spec.to_json(), "codewords": len(code)}
    lines = _table([("codewords", len(code)), ("m", spec.m), ("s", spec.s),
                    ("a", " ".join(map(str, spec.a))), ("k*s", spec.k * spec.s)])
    if args.out:
        prefix = Path(args.out)
        code_path = prefix.with_name(prefix.name + ".code")
        spec_path = prefix.with_name(prefix.name + ".spec.json")
        write_code(code, code_path)
        spec_path.write_text(json.dumps(spec.to_json(), indent=1, sort_keys=True) + "\n")
        payload["files"] = [str(code_path), str(spec_path)]
        lines.append(f"written    {code_path} {spec_path}")
    status = EXIT_OK
    if args.against:
        sp = _load_sparsifier(args.against)
        if sp.n != args.n:
            raise InputError(f"dimension mismatch: n={args.n}, sparsifier n={sp.n}")
        res = certify_lower_bound(spec, sp, args.epsilon)
        payload["certify"] = {"verdict": res.verdict, "witness": res.witness,
                              "T_size": res.T_size, "threshold": res.threshold}
        lines.append(f"verdict    {res.verdict}")
        if res.witness:
            lines.append(f"witness    {json.dumps(res.witness, sort_keys=True)}")
        if res.verdict == "invalid":
            status = EXIT_VERIFY
    _emit(args, payload, lines)
    return status


def cmd_suite(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    names = sorted(suites.SUITES) if args.suite == "all" else [args.suite]
    checks = []
    for name in names:
        checks.extend(suites.run_suite(name, seed, args.trials))
    ok = all(c.passed for c in checks)
    payload = {"suite": args.suite, "seed": seed, "passed": ok,
               "checks": [{k: v for k, v in c.to_json().items() if k != "rows"} for c in checks]}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest("suite", {"suite": args.suite, "trials": args.trials}, seed, _now())
        (out / "summary.csv").write_text(suites.checks_csv(checks))
        (out / "summary.json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
        manifest.add_output(out / "summary.csv")
        manifest.add_output(out / "summary.json")
        for c in checks:
            rows = suites.rows_csv(c)
            if rows:
                p = out / f"criterion_{c.criterion:02d}.csv"
                p.write_text(rows)
                manifest.add_output(p)
        manifest.finished = _now()
        manifest.write(out / "manifest.json")
    lines = [c.line() for c in checks]
    lines.append(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    _emit(args, payload, lines)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    if args.kind == "lower-bound":
        fam = gen_lower_bound_family(args.k, args.w)
        write_family(fam, args.out)
        info = {"members": len(fam), "n": fam.n}
    elif args.kind == "chain":
        if args.n % args.k:
            raise InputError(f"k={args.k} must divide n={args.n}")
        code, spec = gen_chain_code(args.n, args.k, args.epsilon)
        write_code(code, args.out)
        info = {"codewords": len(code), "spec": spec.to_json()}
    else:
        rng = np.random.default_rng(seed)
        code = random_bounded_nrd_code(args.n, args.words, args.d, rng)
        write_code(code, args.out)
        info = {"codewords": len(code), "n": code.n, "seed": seed}
    _emit(args, info | {"output": args.out}, [f"wrote {args.out}: {info}"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moonflower", description=__doc__.split("\n")[0])
    parser.add_argument("--format", choices=("text", "json"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mf", help="moonflower number of a family file")
    p.add_argument("family")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", default=True)
    g.add_argument("--greedy", action="store_true")
    p.add_argument("--budget", type=int, default=10**7)
    p.set_defaults(func=cmd_mf)

    p = sub.add_parser("sparsify", help="build a verified sparsifier for a code file")
    p.add_argument("code")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--retries", type=int, default=10)
    p.add_argument("--k", type=int, default=None, help="fallback bound on NRD + 1")
    p.add_argument("--nrd-budget", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("verify", help="check a sparsifier against a code")
    p.add_argument("code")
    p.add_argument("sparsifier")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lowerbound", help="chain code and certifier")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out")
    p.add_argument("--against")
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("suite", help="run an experiment suite")
    p.add_argument("--suite", required=True, choices=sorted(suites.SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("gen", help="write a generated family or code")
    p.add_argument("kind", choices=("lower-bound", "chain", "random-code"))
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--w", type=int, default=3)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--words", type=int, default=16)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
