"""Partitions of [v*w] indexed by strings in [v]^w, the families built from
them, and exact design / load-balancing checks.

A string alpha defines the partition whose block i holds, for every stripe k,
the element ``k*v + ((i - alpha_k) mod v)``. Two such blocks meet in
exactly as many stripes as the shift ``(j - i) mod v`` occurs among the
coordinate differences ``beta_k - alpha_k``, so every overlap question
reduces to counting shifts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import budget
from .field_codes import is_prime, rs_table, seed_digits, shift_free_codeword
from .reports import to_jsonable
from .sampler import SamplerConfig, z_table


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    v: int
    w: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.blocks) != self.v or any(len(b) != self.w for b in self.blocks):
            raise PartitionError("need v blocks of w elements")
        flat = sorted(x for b in self.blocks for x in b)
        if flat != list(range(self.v * self.w)):
            raise PartitionError("blocks must partition {0, ..., vw-1}")


def _as_string(alpha: Sequence[int], v: int, w: int) -> np.ndarray:
    a = np.asarray(alpha, dtype=np.int64)
    if a.shape != (w,):
        raise PartitionError(f"string must have {w} symbols")
    if a.size and (a.min() < 0 or a.max() >= v):
        raise PartitionError(f"symbol outside [0, {v})")
    return a


def block_indices(alpha: Sequence[int], v: int, w: int) -> np.ndarray:
    """(v, w) array; row i lists block i of the partition of alpha."""
    a = _as_string(alpha, v, w)
    i = np.arange(v)[:, None]
    k = np.arange(w)[None, :]
    return k * v + (i - a[None, :]) % v


def partition_from_string(alpha: Sequence[int], v: int, w: int) -> Partition:
    blocks = block_indices(alpha, v, w)
    return Partition(v, w, tuple(tuple(int(x) for x in row) for row in blocks))


def overlap_profile(alpha: Sequence[int], beta: Sequence[int], v: int) -> dict[int, int]:
    """Multiplicity of each shift s among beta_k - alpha_k (mod v); zero shifts omitted."""
    if len(alpha) != len(beta):
        raise PartitionError("strings must have equal length")
    prof: dict[int, int] = {}
    for a, b in zip(alpha, beta):
        s = (int(b) - int(a)) % v
        prof[s] = prof.get(s, 0) + 1
    return dict(sorted(prof.items()))


@dataclass(frozen=True, eq=False)
class PartitionFamily:
    v: int
    w: int
    strings: np.ndarray = field(repr=False)
    provenance: dict = field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self) -> None:
        s = np.array(self.strings, dtype=np.int64).reshape(-1, self.w)
        if self.v < 1 or self.w < 1:
            raise PartitionError("need v, w >= 1")
        if s.size and (s.min() < 0 or s.max() >= self.v):
            raise PartitionError(f"symbol outside [0, {self.v})")
        s.setflags(write=False)
        object.__setattr__(self, "strings", s)

    @property
    def u(self) -> int:
        return self.strings.shape[0]

    @property
    def n(self) -> int:
        return self.v * self.w

    def partition(self, index: int) -> Partition:
        return partition_from_string(self.strings[index], self.v, self.w)

    def block_array(self) -> np.ndarray:
        """(u, v, w) array of every block of every partition."""
        i = np.arange(self.v)[None, :, None]
        k = np.arange(self.w)[None, None, :]
        return k * self.v + (i - self.strings[:, None, :]) % self.v

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "w": self.w,
            "u": self.u,
            "provenance": self.provenance,
            "strings": self.strings.tolist(),
        }


def explicit_family(strings: Iterable[Sequence[int]], v: int, w: int) -> PartitionFamily:
    return PartitionFamily(v, w, np.array([list(s) for s in strings], dtype=np.int64).reshape(-1, w))


def rs_family(v: int, w: int, ell: int, budget_bits: int | None = None) -> PartitionFamily:
    """Strings sum_{i=1..l} s_i X^i evaluated at X = 1..w over [v], one per seed.

    u = v**l. Codewords without a constant term never differ by a constant,
    so distinct seeds give distinct partitions with block overlap at most l.
    """
    if not is_prime(v):
        raise PartitionError(f"{v} is not prime")
    if not 1 <= ell <= w <= v - 1:
        raise PartitionError(f"need 1 <= l <= w <= v - 1, got l={ell}, w={w}, v={v}")
    u = v**ell
    budget.check(u, "rs_family size", budget_bits)
    return PartitionFamily(v, w, rs_table(ell, w, v, shift_free=True), {"kind": "reed-solomon", "l": ell})


def sampler_family(cfg: SamplerConfig, budget_bits: int | None = None) -> PartitionFamily:
    """Strings (G_c(x), z_1*M + E(x, z_1), ..., z_m*M + E(x, z_m)) for every (x, y).

    The first 2c coordinates are the constant-free Reed-Solomon codeword of
    the c base-v digits of x; z = G(y) has m = w - 2c coordinates.
    """
    v, w, c, ell = cfg.v, cfg.w, cfg.c, cfg.ell
    D, M, N = cfg.D, cfg.M, cfg.N
    if not is_prime(v):
        raise PartitionError(f"v={v} is not prime")
    if not is_prime(D):
        raise PartitionError(f"D={D} is not prime")
    if D * M > v:
        raise PartitionError(f"violated D*M <= v ({D}*{M} > {v})")
    if not 2 * c < w:
        raise PartitionError(f"violated 2c < w (c={c}, w={w})")
    m = w - 2 * c
    if not ell <= m <= D:
        raise PartitionError(f"violated l <= w - 2c <= D (l={ell}, w-2c={m}, D={D})")
    if c > 0 and N > v**c:
        raise PartitionError(f"violated N <= v^c ({N} > {v}^{c})")
    if c > 0 and 2 * c > v - 1:
        raise PartitionError(f"violated 2c <= v - 1 (c={c}, v={v})")
    budget.check(N * D**ell, "sampler_family size", budget_bits)

    Z = z_table(ell, m, D)  # (D^l, m)
    E = cfg.extractor.table
    suffix = (Z[None, :, :] * M + E[:, Z]).reshape(-1, m)
    if c:
        digits = seed_digits(v, c)[:N]
        prefix_rows = np.array([shift_free_codeword(d, 2 * c, v).symbols for d in digits.tolist()], dtype=np.int64)
        prefix = np.repeat(prefix_rows, Z.shape[0], axis=0)
        strings = np.concatenate([prefix, suffix], axis=1)
    else:
        strings = suffix
    prov = {"kind": "sampler", "config": cfg.to_dict()}
    return PartitionFamily(v, w, strings, prov)


# --- design checking ----------------------------------------------------------


@dataclass
class DesignReport:
    d_achieved: int
    k_target: int | None
    delta_measured: Fraction
    requested: tuple | None
    passed: bool
    exhaustive: bool = True
    pairs_checked: int = 0
    delta_by_k: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "d_achieved": self.d_achieved,
                "k_target": self.k_target,
                "delta_measured": self.delta_measured,
                "requested": list(self.requested) if self.requested else None,
                "pass": self.passed,
                "exhaustive": self.exhaustive,
                "pairs_checked": self.pairs_checked,
                "delta_by_k": self.delta_by_k,
            }
        )


def shift_counts(fam: PartitionFamily, alpha_index: int) -> np.ndarray:
    """(u, v) array: entry [beta, s] = overlap of block i of alpha with block i+s of beta."""
    S = fam.strings
    diff = (S - S[alpha_index]) % fam.v
    offs = np.arange(fam.u)[:, None] * fam.v
    return np.bincount((diff + offs).ravel(), minlength=fam.u * fam.v).reshape(fam.u, fam.v)


def design_profile(
    fam: PartitionFamily,
    budget_bits: int | None = None,
    sample_pairs: int = 20000,
    rng_seed: int = 0,
) -> DesignReport:
    """Max-overlap distance and, for every k, the worst fraction of partners
    beta != alpha whose block overlap at a fixed (alpha, i, j) exceeds w - k.

    Fractions are exact counts divided by u - 1 when u**2 * w fits the
    budget; otherwise alphas are sampled and the report is flagged.
    """
    u, w = fam.u, fam.w
    if u <= 1:
        return DesignReport(w, None, Fraction(0), None, True, True, 0, {k: Fraction(0) for k in range(w + 1)})
    exhaustive = True
    alphas: Sequence[int] = range(u)
    try:
        budget.check(u * u * w, "design check", budget_bits)
    except budget.BudgetExceeded:
        exhaustive = False
        rng = np.random.default_rng(rng_seed)
        alphas = sorted(rng.choice(u, size=min(u, max(1, sample_pairs // u)), replace=False).tolist())
    max_overlap = 0
    # worst[t] = max over (alpha, shift) of #beta with overlap >= t
    worst = np.zeros(w + 2, dtype=np.int64)
    for a in alphas:
        counts = shift_counts(fam, a)
        counts[a] = 0
        max_overlap = max(max_overlap, int(counts.max()))
        # hist[s, t] = number of beta with overlap exactly t at shift s
        hist = np.zeros((fam.v, w + 1), dtype=np.int64)
        np.add.at(hist, (np.tile(np.arange(fam.v), u), counts.ravel()), 1)
        at_least = hist[:, ::-1].cumsum(axis=1)[:, ::-1]  # [s, t] = #beta with overlap >= t
        worst[: w + 1] = np.maximum(worst[: w + 1], at_least.max(axis=0))
    delta_by_k = {}
    for k in range(w + 1):
        t = w - k + 1
        delta_by_k[k] = Fraction(int(worst[t]), u - 1) if t <= w else Fraction(0)
    pairs = len(alphas) * (u - 1)
    return DesignReport(w - max_overlap, None, Fraction(0), None, True, exhaustive, pairs, delta_by_k)


def check_design(
    fam: PartitionFamily,
    d: int,
    k: int | None = None,
    delta: float = 0.0,
    budget_bits: int | None = None,
    rng_seed: int = 0,
) -> DesignReport:
    """Is fam a (d, k, delta)-design? ``k=None`` checks distance only."""
    rep = design_profile(fam, budget_bits=budget_bits, rng_seed=rng_seed)
    rep.requested = (d, k, delta)
    rep.k_target = k
    rep.delta_measured = rep.delta_by_k.get(k, Fraction(0)) if k is not None else Fraction(0)
    ok = rep.d_achieved >= d
    if k is not None:
        ok = ok and rep.delta_measured <= Fraction(delta)
    rep.passed = bool(ok)
    return rep


# --- load balancing -------------------------------------------------------------


def _intersection_counts(fam: PartitionFamily, Q: Sequence[int]) -> np.ndarray:
    """(u, v) array of |Q intersect P^alpha_j|."""
    v = fam.v
    counts = np.zeros(fam.u * v, dtype=np.int64)
    offs = np.arange(fam.u) * v
    for q in Q:
        k, r = divmod(int(q), v)
        counts += np.bincount(offs + (r + fam.strings[:, k]) % v, minlength=fam.u * v)
    return counts.reshape(fam.u, v)


def _stats_numerators(fam: PartitionFamily, Q: Sequence[int]) -> np.ndarray:
    """Per block index j, sum over alpha of 1(X > 0) 2^X with X = |Q cap P^alpha_j|."""
    X = _intersection_counts(fam, Q)
    return np.where(X > 0, np.left_shift(1, X), 0).sum(axis=0)


def load_balance_stat(fam: PartitionFamily, Q: Iterable[int], j: int) -> Fraction:
    Q = sorted(set(int(q) for q in Q))
    if any(not 0 <= q < fam.n for q in Q):
        raise PartitionError(f"coalition element outside [0, {fam.n})")
    if not 0 <= j < fam.v:
        raise PartitionError(f"block index outside [0, {fam.v})")
    return Fraction(int(_stats_numerators(fam, Q)[j]), fam.u)


@dataclass
class LoadBalanceReport:
    q: int
    tau: float | None
    strategy: str
    exhaustive: bool
    tau_measured: Fraction
    worst_Q: tuple[int, ...]
    worst_j: int | None
    worst_stat: Fraction
    checked: int
    passed: bool

    def to_dict(self) -> dict:
        return to_jsonable({
            "q": self.q,
            "tau": self.tau,
            "strategy": self.strategy,
            "exhaustive": self.exhaustive,
            "tau_measured": self.tau_measured,
            "worst_Q": list(self.worst_Q),
            "worst_j": self.worst_j,
            "worst_stat": self.worst_stat,
            "checked": self.checked,
            "pass": self.passed,
        })


def _ratio(fam: PartitionFamily, Q: Sequence[int]) -> tuple[Fraction, int, Fraction]:
    """(max_j stat * v / |Q|, argmax j, stat) for nonempty Q."""
    nums = _stats_numerators(fam, Q)
    j = int(nums.argmax())
    stat = Fraction(int(nums[j]), fam.u)
    return stat * fam.v / len(Q), j, stat


def check_load_balance(
    fam: PartitionFamily,
    q: int,
    tau: float | Fraction | None = None,
    strategy: str = "exhaustive",
    rng_seed: int | None = None,
    probes: int = 2000,
    budget_bits: int | None = None,
) -> LoadBalanceReport:
    """Worst value of stat(Q, j) * v / |Q| over coalitions with |Q| <= q.

    That worst value is the smallest tau for which the family is
    (q, tau)-load balancing on the checked coalitions. ``exhaustive`` is
    exact; ``greedy`` and ``random`` return a witness and a lower bound.
    """
    n = fam.n
    q = min(q, n)
    best: tuple[Fraction, tuple[int, ...], int | None, Fraction] = (Fraction(0), (), None, Fraction(0))
    checked = 0

    def consider(Q: tuple[int, ...]) -> None:
        nonlocal best, checked
        checked += 1
        r, j, stat = _ratio(fam, Q)
        if r > best[0]:
            best = (r, Q, j, stat)

    if q <= 0:
        pass
    elif strategy == "exhaustive":
        total = sum(math.comb(n, s) for s in range(1, q + 1))
        budget.check(total * fam.u, "load-balance enumeration", budget_bits)
        for s in range(1, q + 1):
            for Q in itertools.combinations(range(n), s):
                consider(Q)
    elif strategy == "greedy":
        Q: tuple[int, ...] = ()
        for _ in range(q):
            options = [tuple(sorted(Q + (e,))) for e in range(n) if e not in Q]
            scored = [(_ratio(fam, o)[0], o) for o in options]
            checked += len(scored)
            r, Q = max(scored, key=lambda t: (t[0], [-x for x in t[1]]))
            r2, j, stat = _ratio(fam, Q)
            if r2 > best[0]:
                best = (r2, Q, j, stat)
    elif strategy == "random":
        if rng_seed is None:
            raise PartitionError("random probing needs an explicit rng_seed")
        rng = np.random.default_rng(rng_seed)
        for _ in range(probes):
            s = int(rng.integers(1, q + 1))
            consider(tuple(sorted(rng.choice(n, size=s, replace=False).tolist())))
    else:
        raise PartitionError(f"unknown strategy {strategy!r}")

    tau_m = best[0]
    passed = True if tau is None else tau_m <= Fraction(tau)
    return LoadBalanceReport(
        q, None if tau is None else float(tau), strategy, strategy == "exhaustive", tau_m, best[1], best[2], best[3], checked, passed
    )


def rs_tau_bound(q: int, v: int, w: int, ell: int) -> float:
    """Load-balancing parameter 2^l + 2^w (q/v)^(l-1) of the Reed-Solomon family."""
    return 2.0**ell + 2.0**w * (q / v) ** (ell - 1)
