"""Explicit-constant bounds and the brute-force oracles they are checked against.

Closed-form quantities are evaluated with mpmath; anything measured on a
concrete instance is an exact ``Fraction``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from scipy import optimize

from . import budget
from .field_codes import next_prime
from .partitions import PartitionFamily, design_profile, shift_counts
from .reports import BoundReport, dominates, to_jsonable
from .resilient_fn import CHUNK, ResilientFunction, kwise_rows

DPS = 40
LN2 = math.log(2.0)


class AnalysisError(ValueError):
    pass


def _mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def sym_poly(a: int, values: Sequence):
    """Elementary symmetric polynomial S_a by the column recurrence e_j += x * e_{j-1}."""
    m = len(values)
    if not 0 <= a <= m:
        raise AnalysisError(f"need 0 <= a <= {m}")
    e = [1] + [0] * a
    for x in values:
        for j in range(a, 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return e[a]


# --- Janson ----------------------------------------------------------------------


@dataclass(frozen=True)
class SetSystem:
    n: int
    sets: tuple[frozenset, ...]
    p: Fraction | float = Fraction(1, 2)

    def __post_init__(self) -> None:
        sets = tuple(frozenset(int(x) for x in s) for s in self.sets)
        if any(not s for s in sets):
            raise AnalysisError("sets must be nonempty")
        if any(x < 0 or x >= self.n for s in sets for x in s):
            raise AnalysisError(f"set element outside [0, {self.n})")
        object.__setattr__(self, "sets", sets)


@dataclass
class JansonResult:
    lower: float
    upper: float
    delta: float
    gamma: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return to_jsonable(self.__dict__)


def janson_bounds(sys: SetSystem) -> JansonResult:
    """Bounds on Pr[no S_i is all ones]; Delta sums over ordered intersecting pairs i != j."""
    p = sys.p
    if not 0 < p < 1:
        raise AnalysisError("p must lie in (0, 1)")
    with mpmath.workdps(DPS):
        pm = _mpf(p)
        lower = mpmath.mpf(1)
        for s in sys.sets:
            lower *= 1 - pm ** len(s)
        delta = mpmath.mpf(0)
        for i, si in enumerate(sys.sets):
            for j, sj in enumerate(sys.sets):
                if i != j and si & sj:
                    delta += pm ** len(si | sj)
        gamma = max(pm ** len(s) for s in sys.sets) if sys.sets else mpmath.mpf(0)
        if gamma >= 1:
            return JansonResult(float(lower), 1.0, float(delta), float(gamma), True)
        upper = lower * mpmath.exp(delta / (1 - gamma))
        return JansonResult(float(lower), float(upper), float(delta), float(gamma))


def none_probability(sys: SetSystem) -> Fraction:
    """Exact Pr[no S_i is all ones] by enumeration (n <= 16 is instant)."""
    budget.check(1 << sys.n, "set-system enumeration")
    p = Fraction(sys.p)
    X = np.arange(1 << sys.n, dtype=np.int64)
    ok = np.ones(X.shape, dtype=bool)
    for s in sys.sets:
        m = sum(1 << x for x in s)
        ok &= (X & m) != m
    weights = np.bincount(np.array([bin(x).count("1") for x in range(1 << sys.n)])[ok], minlength=sys.n + 1)
    return sum((Fraction(int(c)) * p**k * (1 - p) ** (sys.n - k) for k, c in enumerate(weights)), Fraction(0))


# --- bias chain ------------------------------------------------------------------


def theta_exact(v: int, w: int) -> Fraction:
    """Probability (1 - 2^-w)^v that a tribe fails."""
    return Fraction((2**w - 1) ** v, 2 ** (w * v))


def gamma_a(a: int, v: int, w: int, d: int, k: int, delta) -> mpmath.mpf:
    """exp(2 a(a-1) v 2^(1-w-k/2)) + v^2 a^2 delta exp(2 a(a-1) v 2^(1-w-d/2)).

    Bounds the average over a-subsets I of exp(2 Delta_I), where
    Delta_I <= a(a-1) v 2^(1-w-d_I/2) and Pr[d_I < k] <= v^2 a^2 delta.
    """
    with mpmath.workdps(DPS):
        s = 2 * a * (a - 1) * v
        good = mpmath.exp(s * mpmath.mpf(2) ** (1 - w - mpmath.mpf(k) / 2))
        bad = mpmath.mpf(v) ** 2 * a**2 * _mpf(delta) * mpmath.exp(s * mpmath.mpf(2) ** (1 - w - mpmath.mpf(d) / 2))
        return good + bad


def truncation_error(u: int, v: int, w: int, depth: int, d: int, k: int, delta) -> mpmath.mpf:
    """2 gamma C(u, t) theta^t + 2 (gamma - 1)(1 + theta)^u at truncation depth t."""
    with mpmath.workdps(DPS):
        th = (1 - mpmath.mpf(2) ** (-w)) ** v
        g = gamma_a(depth, v, w, d, k, delta)
        return 2 * g * mpmath.binomial(u, depth) * th**depth + 2 * (g - 1) * (1 + th) ** u


def _best_truncation(u, v, w, d, k, delta) -> tuple[mpmath.mpf, int]:
    best, arg = mpmath.inf, 1
    for t in range(1, u + 1):
        e = truncation_error(u, v, w, t, d, k, delta)
        if e < best:
            best, arg = e, t
    return best, arg


def bias_error_bound(
    u: int,
    v: int,
    w: int,
    d: int,
    k: int,
    delta,
    witness=None,
    C: float = 1.0,
    c: float = 1.0,
) -> BoundReport:
    """Explicit error |Pr[f = 1] - bias(u, v, w)| for a (d, k, delta)-design.

    Minimises over the truncation depth and over the two branches (the
    design itself and its (d, d, 0) specialisation), capped at 1. The
    asymptotic shape with constants ``C`` (outer) and ``c`` (exponent) is
    reported for comparison only.
    """
    with mpmath.workdps(DPS):
        b1, t1 = _best_truncation(u, v, w, d, k, delta)
        b2, t2 = _best_truncation(u, v, w, d, d, 0)
        if b1 <= b2:
            val, t, branch = b1, t1, "design"
        else:
            val, t, branch = b2, t2, "distance-only"
        val = min(val, mpmath.mpf(1))
        th = (1 - mpmath.mpf(2) ** (-w)) ** v
        bias = (1 - th) ** u
        details = {
            "truncation_depth": t,
            "branch": branch,
            "theta": float(th),
            "gamma": float(gamma_a(t, v, w, d, k if branch == "design" else d, delta if branch == "design" else 0)),
            "bias_formula": float(bias),
            "in_balanced_regime": bool(mpmath.mpf(1) / 3 <= bias <= mpmath.mpf(2) / 3),
            "v_over_w2w": v / (w * 2**w),
            "asymptotic_distance_only": float(C * w * mpmath.exp(-c * d)),
            "asymptotic_design": float(C * (w * mpmath.exp(-c * k) + mpmath.exp(-c * d) + 2**w * _mpf(delta))),
            "constants": {"C": C, "c": c, "note": "unproven, for regime exploration only"},
        }
        return BoundReport("bias error", float(val), witness, "min_t 2 gamma(t) C(u,t) theta^t + 2 (gamma(t)-1)(1+theta)^u", details)


def best_design_parameters(fam: PartitionFamily, depth: int, budget_bits: int | None = None) -> tuple[int, int, Fraction]:
    """(d, k, delta) of fam minimising gamma(depth), with delta measured exactly."""
    prof = design_profile(fam, budget_bits=budget_bits)
    d = max(0, prof.d_achieved)
    best = None
    for k, delta in prof.delta_by_k.items():
        g = gamma_a(depth, fam.v, fam.w, d, max(k, d), delta)
        if best is None or g < best[0]:
            best = (g, max(k, d), delta)
    return d, best[1], best[2]


def family_bias_bound(fam: PartitionFamily, witness=None, budget_bits: int | None = None) -> BoundReport:
    """bias_error_bound at the family's measured design, best over the choice of k."""
    prof = design_profile(fam, budget_bits=budget_bits)
    d = max(0, prof.d_achieved)
    reps = [bias_error_bound(fam.u, fam.v, fam.w, d, max(k, d), dl, witness=witness) for k, dl in prof.delta_by_k.items()]
    best = min(reps, key=lambda r: r.bound_value)
    best.details["design"] = {
        "d": d,
        "delta_by_k": {str(k): dl for k, dl in prof.delta_by_k.items()},
        "exhaustive": prof.exhaustive,
    }
    return best


def bonferroni_bias(fam: PartitionFamily, d: int, budget_bits: int | None = None) -> tuple[Fraction, float]:
    """Truncated expansion sum_{a<d} (-1)^a C(u,a) theta^a and its explicit error."""
    u = fam.u
    if not 1 <= d <= u:
        raise AnalysisError(f"need 1 <= d <= u={u}")
    th = theta_exact(fam.v, fam.w)
    est = sum((Fraction((-1) ** a * math.comb(u, a)) * th**a for a in range(d)), Fraction(0))
    dd, k, delta = best_design_parameters(fam, d, budget_bits)
    return est, float(truncation_error(u, fam.v, fam.w, d, dd, k, delta))


def failure_histogram(f: ResilientFunction) -> np.ndarray:
    """hist[c] = number of inputs on which exactly c of the u tribes fail."""
    n, u = f.n, f.u
    budget.check((1 << n), "failure histogram")
    hist = np.zeros(u + 1, dtype=np.int64)
    for lo in range(0, 1 << n, CHUNK):
        X = np.arange(lo, min(1 << n, lo + CHUNK), dtype=np.uint64)
        fails = np.zeros(X.shape, dtype=np.int32)
        for masks in f.block_masks:
            hit = np.zeros(X.shape, dtype=bool)
            for m in masks:
                mm = np.uint64(m)
                hit |= (X & mm) == mm
            fails += ~hit
        hist += np.bincount(fails, minlength=u + 1)
    return hist


def symmetric_moments(f: ResilientFunction, depth: int, hist: np.ndarray | None = None) -> list[Fraction]:
    """Exact E[S_a(Y_1..Y_u)] for a = 0..depth, Y_alpha = 1 - T_alpha."""
    hist = failure_histogram(f) if hist is None else hist
    total = 1 << f.n
    return [
        sum((Fraction(int(h) * math.comb(c, a)) for c, h in enumerate(hist)), Fraction(0)) / total for a in range(depth + 1)
    ]


def pair_weights(fam: PartitionFamily) -> np.ndarray:
    """B[alpha, beta] = sum over intersecting block pairs of 2^-(size of union), alpha != beta."""
    u, v, w = fam.u, fam.v, fam.w
    B = np.zeros((u, u))
    for a in range(u):
        c = shift_counts(fam, a).astype(float)
        B[a] = v * np.where(c > 0, np.exp2(c - 2 * w), 0.0).sum(axis=1)
        B[a, a] = 0.0
    return B


def janson_moment_bounds(fam: PartitionFamily, a: int, B: np.ndarray | None = None) -> tuple[Fraction, float]:
    """(C(u,a) theta^a, theta^a sum_{|I|=a} exp(Delta_I / (1 - 2^-w))) bracketing E[S_a]."""
    u = fam.u
    th = theta_exact(fam.v, fam.w)
    lower = math.comb(u, a) * th**a
    if a <= 1:
        return lower, float(lower)
    budget.check(math.comb(u, a), "Janson subset enumeration")
    B = pair_weights(fam) if B is None else B
    scale = 1.0 / (1.0 - 2.0 ** (-fam.w))
    total = 0.0
    pairs = list(itertools.combinations(range(a), 2))
    it = itertools.combinations(range(u), a)
    while True:
        chunk = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, 1 << 16)), dtype=np.int64)
        if chunk.size == 0:
            break
        I = chunk.reshape(-1, a)
        delta = np.zeros(I.shape[0])
        for i, j in pairs:
            delta += 2 * B[I[:, i], I[:, j]]
        total += math.fsum(np.exp(delta * scale))
    with mpmath.workdps(DPS):
        upper = mpmath.mpf(th.numerator) / th.denominator
        return lower, float(upper**a * total)


@dataclass
class SandwichRow:
    depth: int
    side: str  # "upper" when the partial sum over-estimates Pr[f = 1]
    exact_partial: Fraction
    janson_partial: float
    holds_exact: bool
    holds_janson: bool


def bias_sandwich(f: ResilientFunction, depth: int = 4) -> tuple[Fraction, list[SandwichRow], list[tuple[float, float]]]:
    """Bonferroni partial sums around the exact bias, with E[S_a] exact and Janson-bounded.

    The partial sum of a = 0..t-1 over-estimates when t - 1 is even. Returns
    (exact bias, one row per t = 1..depth+1, two-sided intervals for t = 1..depth).
    """
    hist = failure_histogram(f)
    exact = Fraction(int(hist[0]), 1 << f.n)
    top = min(depth + 1, f.u)
    moments = symmetric_moments(f, top, hist)
    B = pair_weights(f.family)
    bounds = [janson_moment_bounds(f.family, a, B) for a in range(top + 1)]
    rows = []
    for t in range(1, top + 1):
        upper_side = (t - 1) % 2 == 0
        ex = sum(((-1) ** a * moments[a] for a in range(t)), Fraction(0))
        jp = 0.0
        for a in range(t):
            lo, hi = bounds[a]
            use_hi = (a % 2 == 0) == upper_side
            jp += (-1) ** a * (hi if use_hi else float(lo))
        if upper_side:
            ok_ex, ok_j = exact <= ex, dominates(exact, jp)
        else:
            ok_ex, ok_j = ex <= exact, dominates(-exact, -jp)
        rows.append(SandwichRow(t, "upper" if upper_side else "lower", ex, jp, ok_ex, ok_j))
    intervals = []
    for t in range(1, min(depth, len(rows) - 1) + 1):
        pair = sorted([rows[t - 1].janson_partial, rows[t].janson_partial])
        intervals.append((pair[0], pair[1]))
    return exact, rows, intervals


# --- influence -------------------------------------------------------------------


def influence_bound(u: int, v: int, w: int, q: int, tau) -> float:
    """u (1 - 2^-w)^(v - q) * tau 2^-w * q."""
    if q < 0:
        raise AnalysisError("q must be >= 0")
    with mpmath.workdps(DPS):
        return float(u * (1 - mpmath.mpf(2) ** (-w)) ** (v - q) * _mpf(tau) * mpmath.mpf(2) ** (-w) * q)


def kwise_influence_bound(u: int, v: int, w: int, q: int, tau, eps) -> float:
    """influence_bound + 2 u v eps (two read-once CNFs per tribe)."""
    return influence_bound(u, v, w, q, tau) + 2 * u * v * float(eps)


def kwise_bias_k(r: int, w: int, v: int, eps: float) -> int:
    """Smallest even k with k >= 3r(r + log2(1/eps)), k >= 2e^2 v 2^-w and k > 2r."""
    if not 0 < eps < 1:
        raise AnalysisError("eps must lie in (0, 1)")
    if r < 1:
        raise AnalysisError("r must be >= 1")
    need = max(3 * r * (r + math.log2(1 / eps)), 2 * math.e**2 * v * 2.0 ** (-w), 2 * r + 1)
    k = math.ceil(need - 1e-12)
    return k + (k % 2)


def kwise_bias_requirement(r: int, w: int, v: int, eps: float) -> int:
    """Independence t = k w r under which r Tribes are fooled to within eps."""
    return kwise_bias_k(r, w, v, eps) * w * r


# --- binomial moments ------------------------------------------------------------


@lru_cache(maxsize=512)
def _binomial_pmf(v: int, p: Fraction) -> tuple[Fraction, ...]:
    return tuple(math.comb(v, t) * p**t * (1 - p) ** (v - t) for t in range(v + 1))


def binomial_moment(v: int, p, k: int, r: int) -> Fraction:
    """E[S_k(X_1..X_v)^r] for iid Bernoulli(p), using S_k(X) = C(sum X, k)."""
    p = Fraction(p)
    if not 0 < p < Fraction(1, 2):
        raise AnalysisError("need 0 < p < 1/2")
    if k > v:
        return Fraction(0)
    pmf = _binomial_pmf(v, p)
    return sum((pmf[t] * math.comb(t, k) ** r for t in range(k, v + 1)), Fraction(0))


# --- elementary facts ------------------------------------------------------------


def bias_interval_chain(u: int, v: int, w: int) -> dict:
    """Explicit chain for theta = (1 - 2^-w)^v with B = v - 2^w ln(u / ln 2) >= 0.

    (1 + theta)^u <= 2 and (1 - ln2/u)^u <= (1 - theta)^u <= 2^-rho,
    rho = (1 - 2^-w)^(ln(u/ln2) + B).
    """
    with mpmath.workdps(DPS):
        L = mpmath.log(u / mpmath.log(2))
        B = v - 2**w * L
        th = (1 - mpmath.mpf(2) ** (-w)) ** v
        rho = (1 - mpmath.mpf(2) ** (-w)) ** (L + B)
        value = (1 - th) ** u
        lo = (1 - mpmath.log(2) / u) ** u
        hi = mpmath.mpf(2) ** (-rho)
        plus = (1 + th) ** u
        return {
            "u": u,
            "v": v,
            "w": w,
            "B": float(B),
            "value": float(value),
            "lower": float(lo),
            "upper": float(hi),
            "one_plus_theta_u": float(plus),
            "slack": float(max(mpmath.mpf(1) / 2 - lo, hi - mpmath.mpf(1) / 2)),
            "holds": bool(B >= 0 and lo <= value <= hi and plus <= 2),
        }


def fact_checks(points: int = 1000, fuzz: int = 200, rng_seed: int = 0) -> dict:
    """Scan the elementary approximations; failures are reported, not raised.

    ``exp_approx``: e^-1 (1 - 1/x) <= (1 - 1/x)^x <= e^-1 on a log grid.
    ``bias_interval``: the explicit chain around (1 - theta)^u from bias_interval_chain.
    ``maclaurin``: S_a(q) <= C(m, a) (sum q / m)^a on random rational tuples.
    """
    out: dict = {}
    with mpmath.workdps(DPS):
        bad = []
        for x in np.geomspace(2.0, 1e6, points):
            xm = mpmath.mpf(float(x))
            mid = (1 - 1 / xm) ** xm
            if not (mpmath.exp(-1) * (1 - 1 / xm) <= mid <= mpmath.exp(-1)):
                bad.append(float(x))
        out["exp_approx"] = {"points": points, "failures": bad, "pass": not bad}

    rows = []
    for w in range(1, 13):
        for u in sorted({2**w, 2 ** (w + 2), 10 * 2**w, 1000 * 2**w}):
            L = math.log(u / LN2)
            v = math.ceil(2**w * L)
            if not w <= v <= u:
                continue
            rows.append(bias_interval_chain(u, v, w))
    out["bias_interval"] = {"grid": len(rows), "failures": [r for r in rows if not r["holds"]], "pass": all(r["holds"] for r in rows)}

    rng = random.Random(rng_seed)
    bad33 = []
    for _ in range(fuzz):
        m = rng.randint(1, 8)
        qs = [Fraction(rng.randint(0, 20), rng.randint(1, 20)) for _ in range(m)]
        mu = sum(qs, Fraction(0)) + Fraction(rng.randint(0, 3), 4)
        for a in range(1, m + 1):
            if sym_poly(a, qs) > math.comb(m, a) * (mu / m) ** a:
                bad33.append((qs, a))
    tight = all(sym_poly(a, [Fraction(3, 7)] * 5) == math.comb(5, a) * Fraction(3, 7) ** a for a in range(1, 6))
    out["maclaurin"] = {"cases": fuzz, "failures": [to_jsonable(b[0]) for b in bad33], "tight_at_uniform": tight, "pass": not bad33 and tight}
    out["pass"] = all(out[key]["pass"] for key in ("exp_approx", "bias_interval", "maclaurin"))
    return out


# --- parameter solving -----------------------------------------------------------


@dataclass
class ParamSolution:
    w: int
    kind: str
    x_star: float
    v: int
    residual: float  # phi(v) >= 0
    u: int
    bias: float
    interval: dict = field(default_factory=dict)
    root_residual: float = 0.0  # phi(x_star), zero up to the bisection tolerance

    def to_dict(self) -> dict:
        return to_jsonable(self.__dict__)


def _phi(kind: str, w: int, ell: int, c: int, D: int):
    if kind == "rs":
        return lambda x: x - 2**w * (ell * math.log(x) - math.log(LN2))
    if kind == "main":
        return lambda x: x - 2**w * (c * math.log(x) + ell * math.log(D) - math.log(LN2))
    raise AnalysisError(f"unknown kind {kind!r}")


def param_solve(w: int, kind: str = "rs", ell: int = 1, c: int = 1, D: int = 2) -> ParamSolution:
    """Block count v: the next prime above the root of v = 2^w ln(u / ln 2).

    ``rs`` uses u = v^l; ``main`` uses u = v^c D^l.
    """
    if w < 2:
        raise AnalysisError("need w >= 2")
    phi = _phi(kind, w, ell, c, D)
    slope = ell if kind == "rs" else c
    lo = max(2.0, float(slope * 2**w))  # phi is increasing from here on
    hi = 2 * lo
    limit = 2.0 ** (4 * w)
    while phi(hi) <= 0:
        hi *= 2
        if hi > limit:
            raise AnalysisError(f"no sign change of phi below 2^{4 * w}")
    if phi(lo) > 0:
        x_star = lo
    else:
        x_star = optimize.bisect(phi, lo, hi, rtol=1e-9, xtol=1e-12)
    v = int(next_prime(math.floor(x_star) + 1))
    u = v**ell if kind == "rs" else v**c * D**ell
    with mpmath.workdps(DPS):
        bias = float((1 - (1 - mpmath.mpf(2) ** (-w)) ** v) ** u)
    return ParamSolution(
        w, kind, x_star, v, phi(v), u, bias, bias_interval_chain(u, v, w) if v <= u else {}, phi(x_star)
    )


# --- read-once CNFs under limited independence -------------------------------------


@dataclass
class RCNFGap:
    t: int
    n_vars: int
    uniform: Fraction
    twise: Fraction
    gap: Fraction
    predicted: float
    method: str

    def to_dict(self) -> dict:
        return to_jsonable(self.__dict__)


def _check_rcnf(cnf: Sequence[Sequence[int]]) -> None:
    seen: set[int] = set()
    for clause in cnf:
        if not clause:
            raise AnalysisError("empty clause")
        for lit in clause:
            var = abs(int(lit)) - 1
            if lit == 0:
                raise AnalysisError("literal 0 is not allowed (use +/-(i+1))")
            if var in seen:
                raise AnalysisError(f"variable {var} appears twice; CNF is not read-once")
            seen.add(var)


def _cnf_sat(cnf: Sequence[Sequence[int]], rows: np.ndarray) -> np.ndarray:
    sat = np.ones(rows.shape[0], dtype=bool)
    for clause in cnf:
        cl = np.zeros(rows.shape[0], dtype=bool)
        for lit in clause:
            col = rows[:, abs(lit) - 1].astype(bool)
            cl |= col if lit > 0 else ~col
        sat &= cl
    return sat


def rcnf_kwise_gap(
    cnf: Sequence[Sequence[int]], t: int, n_vars: int | None = None, C: float = 1.0, budget_bits: int | None = None
) -> RCNFGap:
    """|Pr_uniform[sat] - Pr_t-wise[sat]| for a read-once CNF.

    Literals are DIMACS style: +(i+1) for x_i, -(i+1) for not x_i. The
    t-wise distribution is the polynomial bit generator on ``n_vars`` bits.
    ``predicted`` is 2^(-t/(C w)), the cited fooling bound with an
    unproven default constant.
    """
    _check_rcnf(cnf)
    used = max((abs(l) for cl in cnf for l in cl), default=0)
    n_vars = used if n_vars is None else n_vars
    if n_vars < used:
        raise AnalysisError("n_vars smaller than the largest variable")
    if n_vars > 24:
        raise AnalysisError("at most 24 variables")
    uniform = Fraction(1)
    for clause in cnf:
        uniform *= 1 - Fraction(1, 2 ** len(clause))
    if n_vars == 0:
        return RCNFGap(t, 0, uniform, uniform, Fraction(0), 1.0, "trivial")
    rows, method = kwise_rows(t, n_vars, budget_bits)
    twise = Fraction(int(np.count_nonzero(_cnf_sat(cnf, rows))), rows.shape[0])
    width = max((len(cl) for cl in cnf), default=1)
    return RCNFGap(t, n_vars, uniform, twise, abs(uniform - twise), 2.0 ** (-t / (C * width)), method)


def tribe_cnfs(f: ResilientFunction, Q: Sequence[int], alpha: int) -> tuple[list[list[int]], list[list[int]] | None]:
    """The read-once CNFs f1 (every block missing Q has a zero) and f3 = f1 and
    (every block meeting Q has a zero outside Q), over free-variable ranks.

    f3 is None when a whole block lies inside Q, since it is then unsatisfiable.
    """
    Qs = set(int(q) for q in Q)
    rank = {x: i for i, x in enumerate(k for k in range(f.n) if k not in Qs)}
    f1, rest = [], []
    for blk in f.blocks[alpha]:
        blk = [int(x) for x in blk]
        if Qs.isdisjoint(blk):
            f1.append([-(rank[x] + 1) for x in blk])
        else:
            free = [-(rank[x] + 1) for x in blk if x not in Qs]
            rest.append(free)
    if any(not cl for cl in rest):
        return f1, None
    return f1, f1 + rest


def kwise_influence_eps(f: ResilientFunction, Q: Sequence[int], t: int, budget_bits: int | None = None) -> Fraction:
    """Largest t-wise fooling gap among the CNF pairs (f1, f3) of all tribes."""
    m = f.n - len(set(Q))
    worst = Fraction(0)
    for a in range(f.u):
        for cnf in tribe_cnfs(f, Q, a):
            if cnf is None:
                continue
            worst = max(worst, rcnf_kwise_gap(cnf, t, n_vars=m, budget_bits=budget_bits).gap)
    return worst


def kwise_bias_gap(f: ResilientFunction, t: int, budget_bits: int | None = None) -> tuple[Fraction, Fraction, str]:
    """(|Pr_t-wise[f = 1] - Pr_uniform[f = 1]|, Pr_t-wise[f = 1], method) over all n variables."""
    rows, method = kwise_rows(t, f.n, budget_bits)
    masks = np.zeros(rows.shape[0], dtype=np.uint64)
    for b in range(f.n):
        masks |= rows[:, b].astype(np.uint64) << np.uint64(b)
    tw = Fraction(int(np.count_nonzero(f.truth_table[masks.astype(np.int64)])), rows.shape[0])
    un = Fraction(int(np.count_nonzero(f.truth_table)), 1 << f.n)
    return abs(tw - un), tw, method

