"""Command-line interface.

Every command produces one payload (a JSON report, a family file or circuit
text). ``--out`` sends it to a file, otherwise it goes to stdout.
``--manifest`` records the invocation and the payload hash so that
``rerun`` can check the run reproduces byte for byte.

Exit codes: 0 when every verdict holds, 1 on a violation (or a rerun
mismatch), 2 on usage, parse or parameter errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, analysis, budget, partitions, resilient_fn, sampler
from .field_codes import FieldError
from .formats import (
    FormatError,
    RunManifest,
    dumps,
    family_to_json,
    format_hex_bits,
    parse_hex_bits,
    parse_index_list,
    read_family,
    read_function_table,
    sha256_bytes,
    sha256_file,
)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

# Library errors that mean "bad parameters": reported verbatim with exit 2.
USER_ERRORS = (
    FormatError,
    FieldError,
    partitions.PartitionError,
    sampler.SamplerError,
    resilient_fn.FunctionError,
    analysis.AnalysisError,
    budget.BudgetExceeded,
    ValueError,
)


class UsageError(Exception):
    pass


@dataclass
class Output:
    payload: str
    code: int = EXIT_OK
    summary: str | None = None  # printed instead of the payload when --out is used


# --- helpers ------------------------------------------------------------------------


def _need(args, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) {', '.join(missing)}")


def _need_seed(args, why: str) -> int:
    if getattr(args, "seed", None) is None:
        raise UsageError(f"{why} is randomized; pass an explicit --seed")
    return args.seed


def _family(args) -> partitions.PartitionFamily:
    return read_family(args.family)


def _fraction(text: str | None) -> Fraction | None:
    if text is None:
        return None
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number or fraction: {text!r}") from None


def _summary(fam: partitions.PartitionFamily) -> dict:
    return {"u": fam.u, "v": fam.v, "w": fam.w, "n": fam.n, "provenance": fam.provenance}


def _sampler_config(args) -> sampler.SamplerConfig:
    _need(args, "v", "D", "M", "w", "l")
    c = args.c
    N = args.N if args.N is not None else args.v ** max(c, 1)
    eps = float(args.eps)
    if args.extractor == "lhl":
        n = max(1, (N - 1).bit_length())
        family = (1 << n) * args.M
        seed = None if args.D == family or args.M == 1 else _need_seed(args, "subsampling the hash family (or use --extractor mod)")
        ext = sampler.lhl_extractor(N, args.D, args.M, eps, seed=seed)
    else:
        table = np.array([[x % args.M for _ in range(args.D)] for x in range(N)], dtype=np.int64)
        ext = sampler.table_extractor(table, args.M, eps)
    return sampler.SamplerConfig(args.v, args.w, args.l, ext, c=c)


# --- commands -----------------------------------------------------------------------


def cmd_construct(args) -> Output:
    if args.kind == "rs":
        _need(args, "v", "w", "l")
        fam = partitions.rs_family(args.v, args.w, args.l)
    elif args.kind == "sampler":
        fam = partitions.sampler_family(_sampler_config(args))
    else:
        _need(args, "v", "w", "strings")
        rows = [parse_index_list(r) for r in args.strings.split(";") if r.strip()]
        fam = partitions.explicit_family(rows, args.v, args.w)
    return Output(family_to_json(fam), summary=dumps(_summary(fam)))


def _default_design(fam) -> tuple[int, int | None, Fraction]:
    prov = fam.provenance or {}
    if prov.get("kind") == "reed-solomon":
        return fam.w - prov["l"], None, Fraction(0)
    if prov.get("kind") == "sampler":
        cfg = prov["config"]
        m = fam.w - 2 * cfg["c"] - cfg["l"]
        return min(cfg["c"], m), m, Fraction(1, cfg["extractor"]["D"] ** cfg["l"])
    return 1, None, Fraction(0)


def _check_design(fam, args) -> dict:
    d, k, delta = _default_design(fam)
    d = args.d if args.d is not None else d
    k = args.k if args.k is not None else k
    delta = _fraction(args.delta) if args.delta is not None else delta
    rep = partitions.check_design(fam, d, k, delta)
    out = rep.to_dict()
    out["provenance"] = "every cross-partition block overlap <= w - d; delta = worst fraction of partners overlapping > w - k"
    return out


def _tau_default(fam, q: int):
    prov = fam.provenance or {}
    if prov.get("kind") == "reed-solomon":
        return partitions.rs_tau_bound(q, fam.v, fam.w, prov["l"])
    return None


def _coalition_strategy(fam, q: int) -> str:
    total = sum(math.comb(fam.n, s) for s in range(1, q + 1))
    try:
        budget.check(total * fam.u, "coalition enumeration")
        return "exhaustive"
    except budget.BudgetExceeded:
        return "greedy"


def _check_balance(fam, args) -> dict:
    q = args.q if args.q is not None else min(4, fam.n)
    tau = _fraction(args.tau) if args.tau is not None else _tau_default(fam, q)
    rep = partitions.check_load_balance(fam, q, tau, strategy=_coalition_strategy(fam, q))
    out = rep.to_dict()
    out["provenance"] = "family average of 1(Q meets block j) 2^|Q cap block j| <= tau |Q| / v"
    return out


def _check_bias(fam) -> dict:
    f = resilient_fn.ResilientFunction(fam)
    exact = resilient_fn.exact_bias(f)
    ideal = resilient_fn.bias_formula_exact(fam.u, fam.v, fam.w)
    rep = analysis.family_bias_bound(fam, witness=abs(exact - ideal))
    out = rep.to_dict()
    out.update({"exact_bias": exact, "bias_formula": float(ideal), "pass": rep.ok})
    return out


def _check_influence(fam, args) -> dict:
    f = resilient_fn.ResilientFunction(fam)
    q = args.q if args.q is not None else min(4, fam.n)
    strategy = _coalition_strategy(fam, q)
    tau = partitions.check_load_balance(fam, q, None, strategy=strategy).tau_measured
    Q, rep = resilient_fn.worst_coalition(f, q, "exhaustive" if strategy == "exhaustive" else "greedy")
    bound = analysis.influence_bound(fam.u, fam.v, fam.w, q, tau)
    br = analysis.BoundReport(
        "coalition influence",
        bound,
        rep.value,
        "u (1 - 2^-w)^(v - q) * tau 2^-w * q with tau measured",
        {"q": q, "tau_measured": tau, "worst_Q": list(Q), "search": strategy},
    )
    out = br.to_dict()
    out["pass"] = br.ok
    return out


def cmd_verify(args) -> Output:
    fam = _family(args)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = set(checks) - {"design", "balance", "bias", "influence"}
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(sorted(unknown))}")
    report: dict = {"family": _summary(fam), "checks": {}}
    for name in checks:
        if name == "design":
            report["checks"][name] = _check_design(fam, args)
        elif name == "balance":
            report["checks"][name] = _check_balance(fam, args)
        elif name == "bias":
            report["checks"][name] = _check_bias(fam)
        else:
            report["checks"][name] = _check_influence(fam, args)
    ok = all(c["pass"] for c in report["checks"].values())
    report["pass"] = ok
    return Output(dumps(report), EXIT_OK if ok else EXIT_VIOLATION)


def cmd_eval(args) -> Output:
    fam = _family(args)
    f = resilient_fn.ResilientFunction(fam)
    bits = parse_hex_bits(args.x, f.n)
    return Output(dumps({"input": format_hex_bits(bits), "n": f.n, "value": resilient_fn.eval(f, bits)}))


def cmd_bias(args) -> Output:
    fam = _family(args)
    f = resilient_fn.ResilientFunction(fam)
    out: dict = {"family": _summary(fam), "bias_formula": resilient_fn.bias_formula(fam.u, fam.v, fam.w)}
    if not args.mc:
        out["exact"] = resilient_fn.exact_bias(f)
    else:
        seed = _need_seed(args, "--mc")
        est, hw = resilient_fn.mc_bias(f, args.samples, seed)
        out["mc"] = {"estimate": est, "half_width": hw, "samples": args.samples, "rng_seed": seed}
    return Output(dumps(out))


def cmd_influence(args) -> Output:
    fam = _family(args)
    f = resilient_fn.ResilientFunction(fam)
    if args.worst is not None:
        Q, rep = resilient_fn.worst_coalition(f, args.worst, args.strategy)
        return Output(dumps({"q": args.worst, "strategy": args.strategy, "worst": rep}))
    _need(args, "Q")
    Q = parse_index_list(args.Q)
    if args.mode == "exact":
        rep = resilient_fn.influence_exact(f, Q)
    elif args.mode == "mc":
        rep = resilient_fn.influence_mc(f, Q, args.samples, _need_seed(args, "--mode mc"))
    else:
        _need(args, "t")
        rep = resilient_fn.influence_kwise_exact(f, Q, args.t)
    out: dict = {"influence": rep}
    if args.mode == "exact":
        out["force_1"] = resilient_fn.coalition_force(f, Q, 1)
        out["force_0"] = resilient_fn.coalition_force(f, Q, 0)
    return Output(dumps(out))


def _random_functions(cfg, rng) -> np.ndarray:
    return rng.random((cfg.w, cfg.v))


def cmd_sample(args) -> Output:
    cfg = _sampler_config(args)
    base = {"config": cfg.to_dict()}
    if args.action == "generate":
        _need(args, "x", "y")
        y = parse_index_list(args.y)
        base["alpha"] = list(sampler.generate(cfg, args.x, y))
        return Output(dumps(base))
    if args.action == "extractor-check":
        seed = _need_seed(args, "extractor-check with random tests")
        rng = np.random.default_rng([seed, 2])
        eps = float(args.eps)
        counts = [sampler.check_extractor_sampling(cfg.extractor, rng.random((cfg.D, cfg.M)), eps) for _ in range(args.trials)]
        limit = 2.0**cfg.extractor.k
        base.update({"bad_counts": counts, "limit_2^k": limit, "pass": max(counts) <= limit})
        return Output(dumps(base), EXIT_OK if max(counts) <= limit else EXIT_VIOLATION)
    if args.functions:
        tables = [read_function_table(args.functions, cfg.v, cfg.w)]
    else:
        seed = _need_seed(args, "random function tables")
        rng = np.random.default_rng([seed, 1])
        tables = [_random_functions(cfg, rng) for _ in range(args.trials)]
    rows, ok = [], True
    for f in tables:
        mu = float(sampler.embedded_means(cfg, f).sum())
        val = sampler.mgf_exact(cfg, f)
        rep = sampler.mgf_bound(cfg, mu, witness=val)
        row = {"mu": mu, "mgf_exact": val, "bound": rep}
        if args.action == "tail":
            _need(args, "threshold")
            tail, markov = sampler.tail_probability(cfg, f, args.threshold)
            row.update({"tail": tail, "markov": markov, "markov_holds": float(tail) <= markov * (1 + 1e-12)})
            ok = ok and row["markov_holds"]
        ok = ok and rep.ok
        rows.append(row)
    base.update({"trials": rows, "pass": ok})
    return Output(dumps(base), EXIT_OK if ok else EXIT_VIOLATION)


def cmd_bounds(args) -> Output:
    k = args.kind
    if k == "bias":
        _need(args, "u", "v", "w", "d", "k")
        rep = analysis.bias_error_bound(args.u, args.v, args.w, args.d, args.k, _fraction(args.delta or "0"))
        return Output(dumps(rep))
    if k == "influence":
        _need(args, "u", "v", "w", "q", "tau")
        val = analysis.influence_bound(args.u, args.v, args.w, args.q, _fraction(args.tau))
        return Output(dumps({"quantity": "influence bound", "bound_value": val}))
    if k == "kwise-influence":
        _need(args, "u", "v", "w", "q", "tau", "eps")
        val = analysis.kwise_influence_bound(args.u, args.v, args.w, args.q, _fraction(args.tau), _fraction(args.eps))
        return Output(dumps({"quantity": "t-wise influence bound", "bound_value": val}))
    if k == "kwise-bias":
        _need(args, "r", "v", "w", "eps")
        eps = float(_fraction(args.eps))
        kk = analysis.kwise_bias_k(args.r, args.w, args.v, eps)
        return Output(dumps({"quantity": "independence for r Tribes", "k": kk, "t": kk * args.w * args.r}))
    if k == "binomial":
        _need(args, "v", "p", "k", "r")
        val = analysis.binomial_moment(args.v, _fraction(args.p), args.k, args.r)
        limit = Fraction(1, 2**args.k)
        return Output(dumps({"moment": val, "limit": limit, "holds": val <= limit}), EXIT_OK if val <= limit else EXIT_VIOLATION)
    rep = analysis.fact_checks()
    return Output(dumps(rep), EXIT_OK if rep["pass"] else EXIT_VIOLATION)


def cmd_params(args) -> Output:
    sol = analysis.param_solve(args.w, args.kind, ell=args.l, c=args.c, D=args.D)
    return Output(dumps(sol))


def cmd_circuit(args) -> Output:
    fam = _family(args)
    c = resilient_fn.circuit_export(resilient_fn.ResilientFunction(fam))
    return Output(c.to_text(), summary=dumps({"gates": len(c.gates), "inputs": c.n}))


def cmd_circuit_check(args) -> Output:
    fam = _family(args)
    f = resilient_fn.ResilientFunction(fam)
    try:
        circ = resilient_fn.parse_circuit(Path(args.circuit).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read {args.circuit}: {exc.strerror}") from None
    if circ.n != f.n:
        raise FormatError(f"circuit has {circ.n} inputs, family has n={f.n}")
    X = np.arange(1 << f.n, dtype=np.uint64)
    agree = bool(np.array_equal(resilient_fn.circuit_eval_masks(circ, X), f.truth_table))
    return Output(dumps({"inputs_checked": 1 << f.n, "agree": agree}), EXIT_OK if agree else EXIT_VIOLATION)


def cmd_acceptance(args) -> Output:
    from . import acceptance

    only = set(parse_index_list(args.only)) if args.only else None
    results = acceptance.run_all(only)
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    return Output("\n".join(lines) + "\n", EXIT_OK if ok else EXIT_VIOLATION)


def cmd_rerun(args) -> Output:
    man = RunManifest.from_json(Path(args.manifest_file).read_text(encoding="utf-8"), args.manifest_file)
    for path, digest in man.inputs.items():
        if not Path(path).exists() or sha256_file(path) != digest:
            return Output(dumps({"identical": False, "reason": f"input {path} changed or missing"}), EXIT_VIOLATION)
    out, code = execute(man.argv)
    actual = sha256_bytes(out.payload.encode("utf-8"))
    expected = man.artifacts.get("payload")
    same = actual == expected and code == man.exit_code
    return Output(
        dumps({"identical": same, "expected": expected, "actual": actual, "exit_code": code}),
        EXIT_OK if same else EXIT_VIOLATION,
    )


# --- parser -------------------------------------------------------------------------

HANDLERS: dict[str, Callable] = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "eval": cmd_eval,
    "bias": cmd_bias,
    "influence": cmd_influence,
    "sample": cmd_sample,
    "bounds": cmd_bounds,
    "params": cmd_params,
    "circuit": cmd_circuit,
    "circuit-check": cmd_circuit_check,
    "acceptance": cmd_acceptance,
    "rerun": cmd_rerun,
}

# Options that only redirect output; they are dropped from recorded argv.
_IO_OPTIONS = ("--out", "--manifest")


def _sampler_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--v", type=int)
    p.add_argument("--D", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--w", type=int)
    p.add_argument("--c", type=int, default=0)
    p.add_argument("--l", type=int)
    p.add_argument("--N", type=int, help="extractor source size (default v^max(c,1))")
    p.add_argument("--eps", default="0.5", help="extractor error")
    p.add_argument("--extractor", choices=["lhl", "mod"], default="lhl")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", help="write the payload here instead of stdout")
    common.add_argument("--manifest", help="write a run manifest for `rerun`")
    common.add_argument("--budget", type=int, help=f"enumeration budget in bits (overrides {budget.ENV_VAR})")
    common.add_argument("--seed", type=int, help="RNG seed; required by every randomized path")

    parser = argparse.ArgumentParser(prog="resilience-lab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="build a partition family file")
    p.add_argument("kind", choices=["rs", "sampler", "explicit"])
    _sampler_options(p)
    p.add_argument("--strings", help="explicit strings, e.g. '0,1;2,0'")

    p = sub.add_parser("verify", parents=[common], help="check design, balance, bias and influence")
    p.add_argument("family")
    p.add_argument("--checks", default="design,balance,bias,influence")
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--delta")
    p.add_argument("--q", type=int)
    p.add_argument("--tau")

    p = sub.add_parser("eval", parents=[common], help="evaluate f on one input")
    p.add_argument("family")
    p.add_argument("--x", required=True, help="hex input; most significant bit is x_0")

    p = sub.add_parser("bias", parents=[common], help="exact or sampled Pr[f = 1]")
    p.add_argument("family")
    p.add_argument("--mc", action="store_true")
    p.add_argument("--exact", action="store_true", help="default")
    p.add_argument("--samples", type=int, default=100000)

    p = sub.add_parser("influence", parents=[common], help="coalition influence")
    p.add_argument("family")
    p.add_argument("--Q", help="comma-separated coalition")
    p.add_argument("--mode", choices=["exact", "mc", "twise"], default="exact")
    p.add_argument("--t", type=int)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--worst", type=int, metavar="q")
    p.add_argument("--strategy", choices=["exhaustive", "greedy", "block-aligned"], default="exhaustive")

    p = sub.add_parser("sample", parents=[common], help="MGF-preserving sampler")
    p.add_argument("action", choices=["generate", "mgf", "tail", "extractor-check"])
    _sampler_options(p)
    p.add_argument("--x", type=int)
    p.add_argument("--y")
    p.add_argument("--functions", help="table file with v rows and w columns")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("bounds", parents=[common], help="evaluate explicit bounds")
    p.add_argument("kind", choices=["bias", "influence", "kwise-influence", "kwise-bias", "binomial", "facts"])
    for name in ("u", "v", "w", "d", "k", "q", "r"):
        p.add_argument(f"--{name}", type=int)
    for name in ("delta", "tau", "eps", "p"):
        p.add_argument(f"--{name}")

    p = sub.add_parser("params", parents=[common], help="solve for the block count v")
    p.add_argument("--kind", choices=["rs", "main"], default="rs")
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--D", type=int, default=2)

    p = sub.add_parser("circuit", parents=[common], help="export the depth-3 circuit")
    p.add_argument("family")

    p = sub.add_parser("circuit-check", parents=[common], help="compare a circuit file with the family on all inputs")
    p.add_argument("family")
    p.add_argument("circuit")

    p = sub.add_parser("acceptance", parents=[common], help="run the acceptance criteria")
    p.add_argument("--only", help="comma-separated criterion numbers")

    p = sub.add_parser("rerun", parents=[common], help="re-execute a manifest and compare payload hashes")
    p.add_argument("manifest_file")
    return parser


def _strip_io(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in _IO_OPTIONS or a == "-o":
            skip = True
            continue
        if any(a.startswith(o + "=") for o in _IO_OPTIONS):
            continue
        out.append(a)
    return out


def execute(argv: list[str]) -> tuple[Output, int]:
    """Parse and run without touching stdout or files; argparse errors raise SystemExit(2)."""
    args = build_parser().parse_args(argv)
    saved = os.environ.get(budget.ENV_VAR)
    if args.budget is not None:
        os.environ[budget.ENV_VAR] = str(args.budget)
    try:
        out = HANDLERS[args.command](args)
    finally:
        if args.budget is not None:
            if saved is None:
                os.environ.pop(budget.ENV_VAR, None)
            else:
                os.environ[budget.ENV_VAR] = saved
    return out, out.code


def _input_files(args) -> list[str]:
    return [getattr(args, k) for k in ("family", "circuit", "functions") if getattr(args, k, None)]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out, code = execute(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        Path(args.out).write_text(out.payload, encoding="utf-8")
        if out.summary:
            sys.stdout.write(out.summary)
    else:
        sys.stdout.write(out.payload)
    if args.manifest:
        params = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "manifest")}
        man = RunManifest(
            args.command,
            _strip_io(argv),
            params,
            args.seed,
            {p: sha256_file(p) for p in _input_files(args)},
            {"payload": sha256_bytes(out.payload.encode("utf-8"))},
            code,
        )
        Path(args.manifest).write_text(dumps(man.to_dict()), encoding="utf-8")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
