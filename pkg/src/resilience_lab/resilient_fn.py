"""The AND-of-Tribes function of a partition family: evaluation, bias,
coalition influence (exact, sampled, and under t-wise independent inputs),
the coalition game, and a depth-3 circuit export.

Inputs are packed into integers with bit ``k`` holding variable ``k``; the
truth table of a function on n variables is indexed by that integer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import mpmath
import numpy as np

from . import budget
from .field_codes import binary_field_for, kwise_bits_support, kwise_bits_table
from .partitions import PartitionFamily
from .reports import to_jsonable

CHUNK = 1 << 20
# Full t-wise seed tables are enumerated up to this many seed bits; beyond it
# the (equiprobable) image of the linear generator is enumerated instead.
SEED_TABLE_BITS = 20


class FunctionError(ValueError):
    pass


def _masks_for(blocks: np.ndarray) -> list[list[int]]:
    return [[sum(1 << int(k) for k in blk) for blk in part] for part in blocks]


@dataclass(frozen=True, eq=False)
class ResilientFunction:
    family: PartitionFamily

    @property
    def u(self) -> int:
        return self.family.u

    @property
    def v(self) -> int:
        return self.family.v

    @property
    def w(self) -> int:
        return self.family.w

    @property
    def n(self) -> int:
        return self.family.n

    @cached_property
    def blocks(self) -> np.ndarray:
        return self.family.block_array()

    @cached_property
    def block_masks(self) -> list[list[int]]:
        return _masks_for(self.blocks)

    @cached_property
    def _tribe_order(self) -> list[int]:
        # Distinct tribes only; duplicated strings never change the AND.
        seen, order = set(), []
        for a, row in enumerate(self.block_masks):
            key = tuple(sorted(row))
            if key not in seen:
                seen.add(key)
                order.append(a)
        return order

    def eval_masks(self, X: np.ndarray) -> np.ndarray:
        """Vectorised eval over packed inputs (requires n <= 63)."""
        if self.n > 63:
            raise FunctionError("packed evaluation needs n <= 63; use eval_bits")
        X = np.asarray(X, dtype=np.uint64)
        out = np.ones(X.shape, dtype=bool)
        alive = np.arange(X.size)
        flat = X.ravel()
        for a in self._tribe_order:
            if alive.size == 0:
                break
            xs = flat[alive]
            hit = np.zeros(xs.shape, dtype=bool)
            for m in self.block_masks[a]:
                mm = np.uint64(m)
                hit |= (xs & mm) == mm
            dead = alive[~hit]
            out.ravel()[dead] = False
            alive = alive[hit]
        return out

    def eval_bits(self, bits: np.ndarray) -> np.ndarray:
        """Vectorised eval over a (samples, n) 0/1 matrix; any n."""
        bits = np.asarray(bits).astype(bool)
        if bits.ndim != 2 or bits.shape[1] != self.n:
            raise FunctionError(f"expected shape (samples, {self.n})")
        if self.u == 0:
            return np.ones(bits.shape[0], dtype=bool)
        return bits[:, self.blocks].all(axis=3).any(axis=2).all(axis=1)

    @cached_property
    def truth_table(self) -> np.ndarray:
        n = self.n
        budget.check(1 << n, "truth table (use the Monte-Carlo estimators instead)")
        size = 1 << n
        table = np.empty(size, dtype=bool)
        for lo in range(0, size, CHUNK):
            hi = min(size, lo + CHUNK)
            table[lo:hi] = self.eval_masks(np.arange(lo, hi, dtype=np.uint64))
        table.setflags(write=False)
        return table


def eval(f: ResilientFunction, x: Sequence[int]) -> int:  # noqa: A001 - the operation's name
    """f(x) for a 0/1 sequence of length n, short-circuiting on the first failed tribe."""
    if len(x) != f.n:
        raise FunctionError(f"input has length {len(x)}, expected n={f.n}")
    bits = [int(b) for b in x]
    if any(b not in (0, 1) for b in bits):
        raise FunctionError("input must be 0/1")
    for part in f.blocks:
        if not any(all(bits[k] for k in blk) for blk in part):
            return 0
    return 1


def bias_formula(u: int, v: int, w: int, dps: int = 50) -> float:
    """(1 - (1 - 2^-w)^v)^u, computed at ``dps`` decimal digits."""
    if min(u, v, w) < 1:
        raise FunctionError("need u, v, w >= 1")
    with mpmath.workdps(dps):
        val = (1 - (1 - mpmath.mpf(2) ** (-w)) ** v) ** u
        return float(val)


def bias_formula_exact(u: int, v: int, w: int) -> Fraction:
    return (1 - (1 - Fraction(1, 2**w)) ** v) ** u


def exact_bias(f: ResilientFunction) -> Fraction:
    try:
        table = f.truth_table
    except budget.BudgetExceeded as exc:
        raise budget.BudgetExceeded(f"{exc}; n={f.n} is too large, use mc_bias") from None
    return Fraction(int(np.count_nonzero(table)), 1 << f.n)


def _mc_chunks(f: ResilientFunction, samples: int, rng_seed: int):
    rng = np.random.default_rng(rng_seed)
    per = max(1, (1 << 22) // max(1, f.u * f.v * f.w))
    left = samples
    while left > 0:
        c = min(per, left)
        yield rng.integers(0, 2, size=(c, f.n), dtype=np.uint8)
        left -= c


def _half_width(p: float, samples: int) -> float:
    return 3.0 * math.sqrt(max(p * (1.0 - p), 0.0) / samples)


def mc_bias(f: ResilientFunction, samples: int, rng_seed: int) -> tuple[float, float]:
    """(estimate, 3-sigma half-width), reproducible from ``rng_seed``."""
    if samples < 1:
        raise FunctionError("samples must be >= 1")
    hits = 0
    for X in _mc_chunks(f, samples, rng_seed):
        hits += int(np.count_nonzero(f.eval_bits(X)))
    p = hits / samples
    return p, _half_width(p, samples)


# --- influence -------------------------------------------------------------------


@dataclass
class InfluenceReport:
    Q: tuple[int, ...]
    value: Fraction | float
    mode: str  # "exact", "monte-carlo" or "t-wise(t)"
    half_width: float | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 1:
            raise FunctionError(f"influence {self.value} outside [0, 1]")

    def to_dict(self) -> dict:
        return to_jsonable(
            {"Q": list(self.Q), "value": self.value, "mode": self.mode, "half_width": self.half_width, "details": self.details}
        )


def _coalition(f: ResilientFunction, Q: Iterable[int]) -> tuple[int, ...]:
    Q = tuple(sorted(set(int(q) for q in Q)))
    if any(not 0 <= q < f.n for q in Q):
        raise FunctionError(f"coalition element outside [0, {f.n})")
    return Q


def _restrictions(f: ResilientFunction, Q: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Truth tables of f with Q fixed to 0 and to 1, as arrays over the free variables."""
    n = f.n
    T = f.truth_table.reshape((2,) * n) if n else f.truth_table
    # C order: axis a holds bit n-1-a
    idx0 = [slice(None)] * n
    idx1 = [slice(None)] * n
    for q in Q:
        idx0[n - 1 - q] = 0
        idx1[n - 1 - q] = 1
    return T[tuple(idx0)], T[tuple(idx1)]


def _scatter(rows: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Pack a (S, m) 0/1 matrix into masks, column b going to bit positions[b]."""
    out = np.zeros(rows.shape[0], dtype=np.uint64)
    for b, pos in enumerate(positions):
        out |= rows[:, b].astype(np.uint64) << np.uint64(pos)
    return out


def _free_enumeration(f: ResilientFunction, Q: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """F(y; Q->0), F(y; Q->1) by direct evaluation when the full table is too big."""
    free = [k for k in range(f.n) if k not in set(Q)]
    m = len(free)
    budget.check(1 << m, "influence enumeration over free variables")
    qm = np.uint64(sum(1 << q for q in Q))
    lo_all, hi_all = [], []
    for lo in range(0, 1 << m, CHUNK):
        r = np.arange(lo, min(1 << m, lo + CHUNK), dtype=np.int64)
        rows = ((r[:, None] >> np.arange(m)) & 1).astype(np.uint8)
        y = _scatter(rows, free)
        lo_all.append(f.eval_masks(y))
        hi_all.append(f.eval_masks(y | qm))
    return np.concatenate(lo_all), np.concatenate(hi_all)


def _restricted_pair(f: ResilientFunction, Q: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    try:
        return _restrictions(f, Q)
    except budget.BudgetExceeded:
        if f.n > 63:
            raise
        return _free_enumeration(f, Q)


def influence_exact(f: ResilientFunction, Q: Iterable[int]) -> InfluenceReport:
    """Pr over the free variables that f is undetermined by Q.

    f is monotone, so undetermined means f(y; Q->1) = 1 and f(y; Q->0) = 0.
    """
    Q = _coalition(f, Q)
    if not Q:
        return InfluenceReport(Q, Fraction(0), "exact")
    F0, F1 = _restricted_pair(f, Q)
    count = int(np.count_nonzero(F1 & ~F0))
    return InfluenceReport(Q, Fraction(count, F0.size), "exact")


def influence_mc(f: ResilientFunction, Q: Iterable[int], samples: int, rng_seed: int) -> InfluenceReport:
    Q = _coalition(f, Q)
    if samples < 1:
        raise FunctionError("samples must be >= 1")
    if not Q:
        return InfluenceReport(Q, 0.0, "monte-carlo", 0.0, {"samples": samples, "rng_seed": rng_seed})
    cols = list(Q)
    hits = 0
    for X in _mc_chunks(f, samples, rng_seed):
        X0 = X.copy()
        X0[:, cols] = 0
        X1 = X
        X1[:, cols] = 1
        hits += int(np.count_nonzero(f.eval_bits(X1) & ~f.eval_bits(X0)))
    p = hits / samples
    return InfluenceReport(Q, p, "monte-carlo", _half_width(p, samples), {"samples": samples, "rng_seed": rng_seed})


def kwise_rows(t: int, m: int, budget_bits: int | None = None) -> tuple[np.ndarray, str]:
    """Equiprobable rows of the t-wise independent bit distribution on m bits.

    Small seed spaces are enumerated in full; larger ones through the image
    of the GF(2)-linear generator, which carries the same distribution.
    """
    e = binary_field_for(m).e
    seed_bits = e * t
    if seed_bits <= min(SEED_TABLE_BITS, budget.budget_bits(budget_bits)):
        return kwise_bits_table(t, m), "seed-table"
    rows = kwise_bits_support(t, m)
    budget.check(rows.shape[0], "t-wise support", budget_bits)
    return rows, "linear-image"


def influence_kwise_exact(
    f: ResilientFunction, Q: Iterable[int], t: int, budget_bits: int | None = None, method: str | None = None
) -> InfluenceReport:
    """Influence when the free variables (in increasing order) are drawn from
    the t-wise independent generator instead of uniformly."""
    Q = _coalition(f, Q)
    if t < 1:
        raise FunctionError("t must be >= 1")
    mode = f"t-wise({t})"
    free = [k for k in range(f.n) if k not in set(Q)]
    if not Q or not free:
        value = Fraction(0) if not Q else Fraction(int(f.truth_table[-1] and not f.truth_table[0]))
        return InfluenceReport(Q, value, mode, details={"t": t})
    if method == "seed-table":
        rows, how = kwise_bits_table(t, len(free)), "seed-table"
    elif method == "linear-image":
        rows, how = kwise_bits_support(t, len(free)), "linear-image"
    elif method is None:
        rows, how = kwise_rows(t, len(free), budget_bits)
    else:
        raise FunctionError(f"unknown method {method!r}")
    y = _scatter(rows, free)
    qm = np.uint64(sum(1 << q for q in Q))
    T = f.truth_table
    hits = int(np.count_nonzero(T[(y | qm).astype(np.int64)] & ~T[y.astype(np.int64)]))
    return InfluenceReport(Q, Fraction(hits, rows.shape[0]), mode, details={"t": t, "method": how, "support": rows.shape[0]})


def influence_identity(f: ResilientFunction, Q: Iterable[int]) -> Fraction:
    """Pr[f(.; Q->1) = 1] - Pr[f(.; Q->0) = 1], computed from the two restrictions separately."""
    Q = _coalition(f, Q)
    F0, F1 = _restricted_pair(f, Q)
    return Fraction(int(np.count_nonzero(F1)), F1.size) - Fraction(int(np.count_nonzero(F0)), F0.size)


def coalition_force(f: ResilientFunction, Q: Iterable[int], target: int) -> Fraction:
    """Probability that Q, playing after the others, makes f output ``target``."""
    if target not in (0, 1):
        raise FunctionError("target must be 0 or 1")
    Q = _coalition(f, Q)
    F0, F1 = _restricted_pair(f, Q)
    if target == 1:
        return Fraction(int(np.count_nonzero(F1)), F1.size)
    return Fraction(int(np.count_nonzero(~F0)), F0.size)


# --- worst coalitions ------------------------------------------------------------


def _influence_fast(f: ResilientFunction, Q: tuple[int, ...]) -> Fraction:
    if not Q:
        return Fraction(0)
    F0, F1 = _restricted_pair(f, Q)
    return Fraction(int(np.count_nonzero(F1 & ~F0)), F0.size)


def _key(val: Fraction, Q: tuple[int, ...]):
    # Larger influence first; ties broken towards the lexicographically smallest Q.
    return (val, [-x for x in Q])


def worst_coalition(
    f: ResilientFunction, q: int, strategy: str = "exhaustive", budget_bits: int | None = None
) -> tuple[tuple[int, ...], InfluenceReport]:
    """Coalition of size at most q with the largest influence.

    Influence of a monotone function only grows with the coalition (each free
    assignment that leaves f undetermined still does after adding variables),
    so the exhaustive search looks at sets of size exactly min(q, n).
    Heuristic strategies flag their value as a lower bound.
    """
    n = f.n
    q = max(0, min(q, n))
    if q == 0:
        return (), InfluenceReport((), Fraction(0), "exact", details={"strategy": strategy, "lower_bound": False})
    best_Q: tuple[int, ...] = ()
    best = Fraction(-1)
    checked = 0
    if strategy == "exhaustive":
        budget.check(math.comb(n, q) * (1 << (n - q)), "exhaustive coalition search", budget_bits)
        for Q in itertools.combinations(range(n), q):
            val = _influence_fast(f, Q)
            checked += 1
            if _key(val, Q) > _key(best, best_Q):
                best, best_Q = val, Q
    elif strategy == "greedy":
        Q: tuple[int, ...] = ()
        for _ in range(q):
            cand = []
            for e in range(n):
                if e in Q:
                    continue
                QQ = tuple(sorted(Q + (e,)))
                cand.append((_influence_fast(f, QQ), QQ))
            checked += len(cand)
            val, Q = max(cand, key=lambda c: _key(*c))
        best, best_Q = val, Q
    elif strategy == "block-aligned":
        # Fill the coalition with whole blocks of one partition, then a prefix of the next block.
        for a in range(f.u):
            for j in range(f.v):
                order = [int(x) for jj in range(f.v) for x in f.blocks[a][(j + jj) % f.v]]
                Q = tuple(sorted(order[:q]))
                val = _influence_fast(f, Q)
                checked += 1
                if _key(val, Q) > _key(best, best_Q):
                    best, best_Q = val, Q
    else:
        raise FunctionError(f"unknown strategy {strategy!r}")
    rep = InfluenceReport(
        best_Q, best, "exact", details={"strategy": strategy, "lower_bound": strategy != "exhaustive", "checked": checked}
    )
    return best_Q, rep


# --- circuits --------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    gid: int
    kind: str  # "AND" or "OR"
    inputs: tuple[str, ...]  # "x<i>" or "g<j>"


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...]
    output: int = 0

    def to_text(self) -> str:
        lines = [f"# monotone depth-3 circuit; inputs={self.n} output=g{self.output}"]
        lines += [f"g{g.gid} {g.kind} {' '.join(g.inputs)}".rstrip() for g in self.gates]
        return "\n".join(lines) + "\n"


def circuit_export(f: ResilientFunction) -> Circuit:
    """AND (g0) of u ORs (g1..gu), each over v ANDs of w input variables."""
    u, v = f.u, f.v
    gates = [Gate(0, "AND", tuple(f"g{1 + a}" for a in range(u)))]
    for a in range(u):
        gates.append(Gate(1 + a, "OR", tuple(f"g{1 + u + a * v + j}" for j in range(v))))
    for a in range(u):
        for j in range(v):
            gates.append(Gate(1 + u + a * v + j, "AND", tuple(f"x{int(k)}" for k in f.blocks[a][j])))
    return Circuit(f.n, tuple(gates))


def parse_circuit(text: str) -> Circuit:
    n = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("inputs="):
                    n = int(tok.split("=", 1)[1])
            continue
        parts = line.split()
        if len(parts) < 2 or not parts[0].startswith("g") or parts[1] not in ("AND", "OR"):
            raise FunctionError(f"line {lineno}: expected 'g<id> AND|OR inputs...'")
        try:
            gid = int(parts[0][1:])
        except ValueError:
            raise FunctionError(f"line {lineno}: bad gate id {parts[0]!r}") from None
        for tok in parts[2:]:
            if tok[:1] not in ("x", "g") or not tok[1:].isdigit():
                raise FunctionError(f"line {lineno}: bad input {tok!r}")
        gates.append(Gate(gid, parts[1], tuple(parts[2:])))
    if n is None:
        n = 1 + max((int(t[1:]) for g in gates for t in g.inputs if t[0] == "x"), default=-1)
    return Circuit(n, tuple(gates))


def circuit_eval_masks(c: Circuit, X: np.ndarray) -> np.ndarray:
    """Evaluate a circuit on packed inputs; gates may appear in any order."""
    X = np.asarray(X, dtype=np.uint64)
    by_id = {g.gid: g for g in c.gates}
    memo: dict[int, np.ndarray] = {}

    def value(gid: int, stack: frozenset = frozenset()) -> np.ndarray:
        if gid in memo:
            return memo[gid]
        if gid in stack:
            raise FunctionError(f"cycle through g{gid}")
        g = by_id.get(gid)
        if g is None:
            raise FunctionError(f"undefined gate g{gid}")
        acc = np.full(X.shape, g.kind == "AND", dtype=bool)
        for tok in g.inputs:
            if tok[0] == "x":
                bit = (X >> np.uint64(int(tok[1:]))) & np.uint64(1)
                val = bit.astype(bool)
            else:
                val = value(int(tok[1:]), stack | {gid})
            acc = acc & val if g.kind == "AND" else acc | val
        memo[gid] = acc
        return acc

    return value(c.output)


def circuit_eval(c: Circuit, x: Sequence[int]) -> int:
    mask = sum(int(b) << k for k, b in enumerate(x))
    return int(circuit_eval_masks(c, np.array([mask], dtype=np.uint64))[0])
