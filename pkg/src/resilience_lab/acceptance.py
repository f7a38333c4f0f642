"""The fourteen acceptance criteria as runnable checks.

Each ``criterion_N`` returns a :class:`CriterionResult`. Correctness and the
runtime limit both count towards ``passed``; the detail dict carries the
numbers behind the verdict.
"""

from __future__ import annotations

import contextlib
import io
import itertools
import math
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, partitions, resilient_fn, sampler
from .field_codes import rs_table
from .reports import dominates


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    limit: float
    summary: str
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.title}: {self.summary} ({self.seconds:.2f}s, limit {self.limit:g}s)"


def _timed(number: int, title: str, limit: float):
    def wrap(fn):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            ok, summary, detail = fn()
            dt = time.perf_counter() - t0
            if dt > limit:
                summary += f"; exceeded time limit ({dt:.2f}s > {limit:g}s)"
            return CriterionResult(number, title, bool(ok) and dt <= limit, dt, limit, summary, detail)

        run.number = number
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


# Criterion 5 enumerates every coalition on n = 20 instances, past the default budget.
EXHAUSTIVE_BITS = 30


# Reed-Solomon instances small enough for exhaustive work.
def rs_instances(max_n: int, max_u: int) -> list[tuple[int, int, int]]:
    out = []
    for v in (3, 5, 7, 11, 13, 17, 19, 23):
        for w in range(1, v):
            if v * w > max_n:
                break
            for ell in range(1, w + 1):
                if v**ell <= max_u:
                    out.append((v, w, ell))
    return out


@_timed(1, "partition formula and overlap identity", 1.0)
def criterion_1():
    rng = np.random.default_rng(1)
    mismatches = 0
    for _ in range(20):
        v, w = (int(x) for x in rng.integers(1, 9, size=2))
        alpha = rng.integers(0, v, size=w)
        # Oracle: element k*v + j sits in block (j + alpha_k) mod v.
        blocks = [[] for _ in range(v)]
        for k in range(w):
            for j in range(v):
                blocks[(j + int(alpha[k])) % v].append(k * v + j)
        got = partitions.partition_from_string(alpha, v, w).blocks
        mismatches += [tuple(sorted(b)) for b in blocks] != [tuple(sorted(b)) for b in got]

    identity_fail, pairs = 0, 0
    for v in range(1, 7):
        for w in range(1, 7):
            alpha = rng.integers(0, v, size=w)
            betas = np.array(list(itertools.product(range(v), repeat=w)), dtype=np.int64)
            # Materialise every block as an indicator row and intersect.
            ka = partitions.block_indices(alpha, v, w)
            A = np.zeros((v, v * w), dtype=np.int64)
            A[np.arange(v)[:, None], ka] = 1
            kb = np.arange(w)[None, None, :] * v + (np.arange(v)[None, :, None] - betas[:, None, :]) % v
            Bm = np.zeros((len(betas), v, v * w), dtype=np.int64)
            np.put_along_axis(Bm, kb, 1, axis=2)
            inter = np.einsum("in,bjn->bij", A, Bm).reshape(len(betas), -1).max(axis=1)
            shifts = (betas - alpha[None, :]) % v
            prof = np.stack([(shifts == s).sum(axis=1) for s in range(v)], axis=1).max(axis=1)
            identity_fail += int(np.count_nonzero(inter != prof))
            pairs += len(betas)
            # spot check the dict-valued profile on a few strings
            for b in betas[:: max(1, len(betas) // 5)]:
                identity_fail += max(partitions.overlap_profile(alpha, b, v).values()) != int(
                    prof[np.flatnonzero((betas == b).all(axis=1))[0]]
                )
    ok = mismatches == 0 and identity_fail == 0
    return ok, f"{20 - mismatches}/20 partitions match, {pairs} overlap pairs, {identity_fail} identity failures", {
        "partition_mismatches": mismatches,
        "overlap_pairs": pairs,
        "identity_failures": identity_fail,
    }


@_timed(2, "rs_family(7,4,2) is a 2-design", 1.0)
def criterion_2():
    fam = partitions.rs_family(7, 4, 2)
    rep = partitions.check_design(fam, 2)
    ok = rep.passed and rep.exhaustive and rep.pairs_checked == 49 * 48 and fam.u == 49
    return ok, f"d_achieved={rep.d_achieved}, ordered pairs={rep.pairs_checked}", rep.to_dict()


@_timed(3, "sampler family design at (13,3,4,4,1,2)", 10.0)
def criterion_3():
    v, D, M, w, c, ell = 13, 3, 4, 4, 1, 2
    ext = sampler.lhl_extractor(v**c, D, M, 0.5, seed=1)
    fam = partitions.sampler_family(sampler.SamplerConfig(v, w, ell, ext, c=c))
    m = w - 2 * c - ell
    d_target = min(c, m)
    delta_max = Fraction(1, D**ell)
    rep = partitions.check_design(fam, d_target, m, delta_max)
    ok = rep.passed and rep.exhaustive
    return ok, (
        f"u={fam.u}, d_achieved={rep.d_achieved} >= {d_target}, delta(k={m})={rep.delta_measured} <= {delta_max}"
    ), {"design": rep.to_dict(), "extractor": ext.to_dict()}


@_timed(4, "bias error chain on rs families with n <= 24", 120.0)
def criterion_4():
    rows, ok = [], True
    for v, w, ell in rs_instances(24, 50):
        fam = partitions.rs_family(v, w, ell)
        f = resilient_fn.ResilientFunction(fam)
        exact, sand, _ = analysis.bias_sandwich(f, depth=4)
        ideal = resilient_fn.bias_formula_exact(fam.u, v, w)
        gap = abs(exact - ideal)
        rep = analysis.family_bias_bound(fam, witness=gap)
        sand_ok = all(r.holds_exact and r.holds_janson for r in sand)
        ok = ok and rep.ok and sand_ok
        rows.append(
            {
                "v": v, "w": w, "l": ell, "u": fam.u,
                "exact": float(exact), "gap": float(gap), "bound": rep.bound_value,
                "bound_ok": rep.ok, "sandwich_ok": sand_ok, "depths": len(sand),
            }
        )
    vac = sum(r["bound"] >= 1 for r in rows)
    return ok, f"{len(rows)} instances, bound vacuous (=1) on {vac}, sandwich holds on all: {ok}", {"instances": rows}


@_timed(5, "coalition influence vs load-balance bound", 300.0)
def criterion_5():
    rows, ok = [], True
    for v, w, ell in [(3, 2, 1), (5, 3, 2), (5, 4, 1), (5, 4, 2), (7, 2, 1), (7, 2, 2)]:
        fam = partitions.rs_family(v, w, ell)
        f = resilient_fn.ResilientFunction(fam)
        for q in range(1, min(4, f.n) + 1):
            tau = partitions.check_load_balance(fam, q, None, strategy="exhaustive").tau_measured
            Q, rep = resilient_fn.worst_coalition(f, q, "exhaustive", budget_bits=EXHAUSTIVE_BITS)
            bound = analysis.influence_bound(fam.u, v, w, q, tau)
            holds = dominates(rep.value, bound)
            ok = ok and holds
            rows.append({"v": v, "w": w, "l": ell, "q": q, "tau": tau, "worst": rep.value, "Q": list(Q), "bound": bound, "holds": holds})
    return ok, f"{len(rows)} (instance, q) cases, all dominated: {ok}", {"cases": rows}


@_timed(6, "single-tribe full-block influence", 1.0)
def criterion_6():
    bad = []
    for v in range(1, 7):
        for w in range(1, 4):
            fam = partitions.explicit_family([[0] * w], v, w)
            f = resilient_fn.ResilientFunction(fam)
            Q = [int(x) for x in f.blocks[0][0]]
            got = resilient_fn.influence_exact(f, Q).value
            want = Fraction(2**w - 1, 2**w) ** (v - 1)
            if got != want:
                bad.append((v, w, str(got), str(want)))
    return not bad, f"18 (v,w) cases, {len(bad)} mismatches", {"mismatches": bad}


@_timed(7, "binomial moment grid", 5.0)
def criterion_7():
    checked, bad = 0, []
    for p in (Fraction(1, 1000), Fraction(1, 100)):
        for v in range(5, 41):
            k0 = math.ceil(2 * math.e**2 * v * p)
            for r in range(1, 5):
                for k in range(k0, v + 1):
                    checked += 1
                    if analysis.binomial_moment(v, p, k, r) > Fraction(1, 2**k):
                        bad.append((v, str(p), k, r))
    return not bad, f"{checked} grid points, {len(bad)} violations", {"violations": bad}


@_timed(8, "sampler MGF bound at (8,2,4,4,2)", 60.0)
def criterion_8():
    v, D, M, w, ell, N = 8, 2, 4, 4, 2, 16
    worst_ratio, ok, zero_ok, ks = 0.0, True, True, []
    for h in range(5):
        ext = sampler.lhl_extractor(N, D, M, 0.5, seed=h)
        cfg = sampler.SamplerConfig(v, w, ell, ext)
        ks.append(ext.k)
        rng = np.random.default_rng([8, h])
        for _ in range(50):
            f = rng.random((w, v)) * rng.random()
            mu = float(sampler.embedded_means(cfg, f).sum())
            val = sampler.mgf_exact(cfg, f)
            rep = sampler.mgf_bound(cfg, mu, witness=val)
            ok = ok and rep.ok
            worst_ratio = max(worst_ratio, val / rep.bound_value)
            zero_ok = zero_ok and sampler.mgf_exact(cfg, f, theta=0.0) == 1.0
    passed = ok and zero_ok
    return passed, f"250 tables, max mgf/bound={worst_ratio:.3g}, mgf(theta=0)==1 exactly: {zero_ok}", {
        "extractor_k": ks,
        "max_ratio": worst_ratio,
    }


def _full_product(alphabet: int, w: int) -> np.ndarray:
    return np.array(list(itertools.product(range(alphabet), repeat=w)), dtype=np.int64)


@_timed(9, "l-wise MGF bound", 30.0)
def criterion_9():
    theta = math.log(2)
    rng = np.random.default_rng(9)
    cases, ok = 0, True
    control_ok = True
    for D in (2, 7):
        for w in range(1, 7):
            for ell in range(1, min(3, w) + 1):
                if D == 2:
                    from .field_codes import kwise_bits_table

                    Z = kwise_bits_table(ell, w)
                else:
                    Z = rs_table(ell, w, D)
                for _ in range(10):
                    f = rng.random((w, D)) * rng.random()
                    meas, prod, mu = sampler.rows_mgf(Z, f, theta)
                    rep = sampler.kwise_mgf_bound(prod, mu, ell, theta, w, witness=meas)
                    ok = ok and rep.ok
                    cases += 1
        for w in range(1, 6):
            f = rng.random((w, D))
            meas, prod, _ = sampler.rows_mgf(_full_product(D, w), f, theta)
            control_ok = control_ok and math.isclose(meas, prod, rel_tol=1e-12)
    return ok and control_ok, f"{cases} (construction, table) cases bounded: {ok}; independent control equal: {control_ok}", {}


@_timed(10, "extractor sampling at N=256, M=4", 10.0)
def criterion_10():
    rows, ok = [], True
    for eps in (0.25, 0.125):
        ext = sampler.lhl_extractor(256, None, 4, eps)
        rng = np.random.default_rng([10, int(1 / eps)])
        worst = 0
        for _ in range(20):
            worst = max(worst, sampler.check_extractor_sampling(ext, rng.random((ext.D, ext.M)), eps))
        limit = 2.0**ext.k
        ok = ok and worst <= limit
        rows.append({"eps": eps, "D": ext.D, "k": ext.k, "worst_bad": worst, "limit": limit})
    return ok, "; ".join(f"eps={r['eps']}: bad<={r['worst_bad']} vs 2^k={r['limit']:g}" for r in rows), {"rows": rows}


@_timed(11, "t-wise bias and influence on n <= 16", 300.0)
def criterion_11():
    eps = 0.1
    bias_rows, infl_rows, ok = [], [], True
    for v, w, ell in [(3, 2, 1), (3, 2, 2), (5, 2, 1), (5, 3, 1), (7, 2, 1)]:
        fam = partitions.rs_family(v, w, ell)
        f = resilient_fn.ResilientFunction(fam)
        t = analysis.kwise_bias_requirement(fam.u, w, v, eps)
        gap, _, method = analysis.kwise_bias_gap(f, min(t, f.n))
        ok = ok and gap <= eps
        bias_rows.append({"v": v, "w": w, "l": ell, "t": t, "gap": gap, "method": method})
        for q in (1, 2):
            Q, _ = resilient_fn.worst_coalition(f, q, "exhaustive")
            tau = partitions.check_load_balance(fam, q, None, strategy="exhaustive").tau_measured
            for tt in (2, 3, 4):
                val = resilient_fn.influence_kwise_exact(f, Q, tt).value
                e = analysis.kwise_influence_eps(f, Q, tt)
                bound = analysis.kwise_influence_bound(fam.u, v, w, q, tau, e)
                holds = dominates(val, bound)
                ok = ok and holds
                infl_rows.append({"v": v, "w": w, "l": ell, "Q": list(Q), "t": tt, "influence": val, "eps": e, "bound": bound, "holds": holds})
    nontrivial = sum(r["t"] < f.n for r in bias_rows)
    return ok, (
        f"bias gap <= {eps} on {len(bias_rows)} instances ({nontrivial} with t < n); "
        f"{len(infl_rows)} t-wise influence cases bounded"
    ), {"bias": bias_rows, "influence": infl_rows}


@_timed(12, "elementary facts", 1.0)
def criterion_12():
    rep = analysis.fact_checks()
    return rep["pass"], f"exp-approximation, bias-interval and Maclaurin scans pass: {rep['pass']}", rep


def _monotone(T: np.ndarray, n: int) -> bool:
    x = np.arange(T.size, dtype=np.int64)
    for b in range(n):
        lo = x[(x >> b) & 1 == 0]
        if np.any(T[lo] & ~T[lo | (1 << b)]):
            return False
    return True


@_timed(13, "monotonicity and circuit agreement", 30.0)
def criterion_13():
    rng = np.random.default_rng(13)
    fams = [partitions.rs_family(v, w, ell) for v, w, ell in [(3, 2, 2), (5, 3, 1), (7, 2, 2), (5, 3, 2)]]
    fams.append(partitions.explicit_family(rng.integers(0, 4, size=(5, 4)).tolist(), 4, 4))
    rows, ok = [], True
    for fam in fams:
        f = resilient_fn.ResilientFunction(fam)
        T = f.truth_table
        circ = resilient_fn.parse_circuit(resilient_fn.circuit_export(f).to_text())
        C = resilient_fn.circuit_eval_masks(circ, np.arange(1 << f.n, dtype=np.uint64))
        mono, agree = _monotone(T, f.n), bool(np.array_equal(C, T))
        ok = ok and mono and agree
        rows.append({"n": f.n, "u": f.u, "monotone": mono, "circuit_agrees": agree, "gates": len(circ.gates)})
    return ok, f"{len(rows)} functions up to n={max(r['n'] for r in rows)}: monotone and circuit-equal: {ok}", {"rows": rows}


@_timed(14, "manifest reruns are byte-identical", 10.0)
def criterion_14():
    from . import cli

    results = {}
    with tempfile.TemporaryDirectory() as tmp:
        fam = str(Path(tmp) / "fam.json")
        sink = io.StringIO()
        with contextlib.redirect_stdout(sink), contextlib.redirect_stderr(sink):
            cli.main(["construct", "rs", "--v", "5", "--w", "3", "--l", "1", "--out", fam])
            fam_args = ["--v", "13", "--D", "3", "--M", "4", "--w", "4", "--c", "1", "--l", "2"]
            sam = ["--v", "8", "--D", "2", "--M", "4", "--w", "4", "--l", "2", "--N", "16"]
            commands = {
                "construct-sampler": ["construct", "sampler", *fam_args, "--seed", "3"],
                "bias-mc": ["bias", fam, "--mc", "--samples", "20000", "--seed", "4"],
                "influence-mc": ["influence", fam, "--Q", "0,1", "--mode", "mc", "--samples", "20000", "--seed", "5"],
                "sample-mgf": ["sample", "mgf", *sam, "--trials", "3", "--seed", "6"],
                "extractor-check": ["sample", "extractor-check", *sam, "--trials", "3", "--seed", "7"],
            }
            for name, argv in commands.items():
                man = str(Path(tmp) / f"{name}.manifest.json")
                first = cli.main([*argv, "--out", str(Path(tmp) / f"{name}.out"), "--manifest", man])
                again = cli.main(["rerun", man])
                results[name] = {"first_exit": first, "rerun_exit": again}
    ok = all(r["first_exit"] in (0, 1) and r["rerun_exit"] == 0 for r in results.values())
    same = sum(r["rerun_exit"] == 0 for r in results.values())
    return ok, f"{same}/{len(results)} randomized commands reproduce byte for byte", results


CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
    criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13, criterion_14,
]


def run_all(only: set[int] | None = None) -> list[CriterionResult]:
    return [c() for c in CRITERIA if only is None or c.number in only]
