"""Oblivious sampler that preserves the moment generating function.

A seed ``(x, y)`` is mapped to ``alpha in [v]^w`` by reading extractor seeds
``z = G(y)`` off a limited-independence generator and emitting
``alpha_i = z_i * M + E(x, z_i)``. The extractor is a leftover-hash
construction whose advertised parameters are either guaranteed by the
leftover hash lemma (full family) or certified by enumerating flat sources.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import budget
from .field_codes import (
    GF2e,
    KWiseBitSeed,
    binary_field_for,
    is_prime,
    kwise_bits,
    kwise_bits_table,
    rs_codeword,
    rs_table,
)
from .reports import BoundReport

# Flat-source certification enumerates at most 2**CERTIFY_BITS supports per size.
CERTIFY_BITS = 17

LN2 = math.log(2.0)


class SamplerError(ValueError):
    pass


def min_entropy(probs: Sequence[float]) -> float:
    """H_inf = -log2 of the largest point probability."""
    p = max(probs)
    if p <= 0:
        raise ValueError("not a distribution")
    return -math.log2(p)


@dataclass(frozen=True, eq=False)
class StrongExtractor:
    """A map [N] x [D] -> [M] stored as an N-by-D table.

    ``k`` is in bits and ``eps`` is the strong-extractor error: for every
    source of min-entropy at least ``k`` the pair (seed, output) is within
    ``eps`` of uniform. ``certified`` records how (k, eps) was obtained.
    """

    N: int
    D: int
    M: int
    k: float
    eps: float
    table: np.ndarray = field(repr=False)
    certified: str = "advertised"
    hash_params: tuple[tuple[int, int], ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        t = np.asarray(self.table)
        if t.shape != (self.N, self.D):
            raise SamplerError(f"table shape {t.shape} != ({self.N}, {self.D})")
        if t.size and (t.min() < 0 or t.max() >= self.M):
            raise SamplerError("table entries outside [M]")
        t = t.astype(np.int64)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def extract(self, x: int, z: int) -> int:
        return int(self.table[x, z])

    def flat_source_error(self, support: Sequence[int]) -> float:
        """Distance of (Y, E(X, Y)) from uniform for X uniform on ``support``."""
        rows = self.table[np.asarray(support, dtype=np.int64)]
        K = rows.shape[0]
        err = 0.0
        for z in range(self.D):
            counts = np.bincount(rows[:, z], minlength=self.M)
            err += 0.5 * np.abs(counts / K - 1.0 / self.M).sum()
        return err / self.D

    def worst_flat_error(self, K: int, budget_bits: int | None = None) -> float:
        """Exact worst-case error over flat sources with K support points.

        Sources of min-entropy >= log2 K are mixtures of these, and the
        distance is convex, so this is the extractor error at k = log2 K.
        """
        if not 1 <= K <= self.N:
            raise SamplerError(f"support size {K} outside [1, {self.N}]")
        budget.check(math.comb(self.N, K), f"flat sources C({self.N},{K})", budget_bits)
        onehot = np.zeros((self.N, self.D, self.M))
        np.put_along_axis(onehot, self.table[:, :, None], 1.0, axis=2)
        best = 0.0
        chunk = []
        for S in itertools.combinations(range(self.N), K):
            chunk.append(S)
            if len(chunk) == 4096:
                best = max(best, self._chunk_error(onehot, chunk, K))
                chunk = []
        if chunk:
            best = max(best, self._chunk_error(onehot, chunk, K))
        return best

    def _chunk_error(self, onehot: np.ndarray, chunk: list, K: int) -> float:
        idx = np.asarray(chunk, dtype=np.int64)
        counts = onehot[idx].sum(axis=1)  # (subsets, D, M)
        err = 0.5 * np.abs(counts / K - 1.0 / self.M).sum(axis=2).mean(axis=1)
        return float(err.max())

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "D": self.D,
            "M": self.M,
            "k": self.k,
            "eps": self.eps,
            "certified": self.certified,
            "hash_params": [list(h) for h in self.hash_params],
        }


def _hash_table(N: int, M: int, params: Sequence[tuple[int, int]]) -> np.ndarray:
    """Columns h_{a,b}(x) = low log2(M) bits of a*x in GF(2^n), xor b."""
    n = max(1, (N - 1).bit_length())
    field_ = GF2e(n)
    mbits = M.bit_length() - 1
    low = (1 << mbits) - 1
    a = np.array([p[0] for p in params], dtype=np.int64)
    b = np.array([p[1] for p in params], dtype=np.int64)
    x = np.arange(N, dtype=np.int64)
    return (field_.mul_array(x[:, None], a[None, :]) & low) ^ b[None, :]


def lhl_extractor(
    N: int,
    D: int | None,
    M: int,
    eps: float,
    *,
    seed: int | None = None,
    budget_bits: int | None = None,
) -> StrongExtractor:
    """Leftover-hash extractor over the family x -> low_m(a*x) xor b.

    The family, indexed by (a, b) in GF(2^n) x [M] with 2^n >= N, is pairwise
    independent. With ``D`` equal to its size (or ``None``) the leftover
    hash lemma gives k = log2 M + 2 log2(1/eps). A smaller ``D`` subsamples
    D members with the given ``seed``; (k, eps) is then certified by
    enumerating flat sources, choosing the smallest support size that meets
    ``eps``.
    """
    if N < 1 or M < 1 or M & (M - 1):
        raise SamplerError("need N >= 1 and M a power of two")
    n = max(1, (N - 1).bit_length())
    if M > (1 << n):
        raise SamplerError(f"M={M} exceeds the hash domain 2^{n}")
    family = (1 << n) * M
    if M == 1:
        size = 1 if D is None else D
        return StrongExtractor(N, size, 1, 0.0, 0.0, np.zeros((N, size), np.int64), "constant map")
    if not 0 < eps < 1:
        raise SamplerError("eps must lie in (0, 1)")
    if D is None or D == family:
        params = [(a, b) for a in range(1 << n) for b in range(M)]
        k = math.log2(M) + 2 * math.log2(1 / eps)
        return StrongExtractor(N, family, M, k, eps, _hash_table(N, M, params), "leftover hash lemma", tuple(params))
    if not 1 <= D < family:
        raise SamplerError(f"D={D} must be in [1, {family}] for this hash family")
    if seed is None:
        raise SamplerError("subsampling the hash family needs an explicit seed")
    rng = np.random.default_rng(seed)
    picks = sorted(rng.choice(family, size=D, replace=False).tolist())
    params = [(p // M, p % M) for p in picks]
    table = _hash_table(N, M, params)
    proto = StrongExtractor(N, D, M, 0.0, 0.0, table)
    return certify(proto, eps, budget_bits=budget_bits, hash_params=tuple(params))


def table_extractor(table: np.ndarray, M: int, eps: float, budget_bits: int | None = None) -> StrongExtractor:
    """Wrap an arbitrary table and certify its parameters at error ``eps``."""
    table = np.asarray(table, dtype=np.int64)
    N, D = table.shape
    return certify(StrongExtractor(N, D, M, 0.0, 0.0, table), eps, budget_bits=budget_bits)


def certify(ext: StrongExtractor, eps: float, budget_bits: int | None = None, hash_params=()) -> StrongExtractor:
    """Smallest flat-source support K whose worst error is <= eps, as k = log2 K.

    Support sizes whose enumeration blows the budget are skipped; K = N is
    always checkable. Raises when even the uniform source misses ``eps``.
    """
    bits = CERTIFY_BITS if budget_bits is None else budget_bits
    for K in range(1, ext.N + 1):
        try:
            err = ext.worst_flat_error(K, bits)
        except budget.BudgetExceeded:
            continue
        if err <= eps:
            return StrongExtractor(
                ext.N, ext.D, ext.M, math.log2(K), eps, ext.table, f"flat sources of size {K}", hash_params
            )
    raise SamplerError(f"no source size meets eps={eps}; worst uniform-source error exceeds it")


def check_extractor_sampling(ext: StrongExtractor, g: np.ndarray, eps: float) -> int:
    """Number of x with |(1/D) sum_z g_z(E(x, z)) - mu| >= eps.

    ``g`` has shape (D, M), row z being g_z; mu is the average of g.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (ext.D, ext.M):
        raise SamplerError(f"g must have shape ({ext.D}, {ext.M})")
    mu = g.mean()
    zs = np.arange(ext.D)
    means = g[zs[None, :], ext.table].mean(axis=1)
    return int(np.count_nonzero(np.abs(means - mu) >= eps))


def upward_bad_count(ext: StrongExtractor, g: np.ndarray, eps: float) -> int:
    """Number of x whose sample mean exceeds mu by strictly more than eps."""
    g = np.asarray(g, dtype=float)
    zs = np.arange(ext.D)
    means = g[zs[None, :], ext.table].mean(axis=1)
    return int(np.count_nonzero(means - g.mean() > eps))


# --- generator --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SamplerConfig:
    v: int
    w: int
    ell: int
    extractor: StrongExtractor
    c: int = 0
    theta: float = LN2
    mu: float | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.ell <= self.w:
            raise SamplerError(f"need 1 <= l <= w, got l={self.ell}, w={self.w}")
        if self.D * self.M > self.v:
            raise SamplerError(f"need D*M <= v, got {self.D}*{self.M} > {self.v}")
        if self.theta < 0:
            raise SamplerError("theta must be >= 0")
        if self.mu is not None and not 0 < self.mu <= self.w:
            raise SamplerError("need 0 < mu <= w")
        if self.c < 0:
            raise SamplerError("c must be >= 0")

    @property
    def D(self) -> int:
        return self.extractor.D

    @property
    def M(self) -> int:
        return self.extractor.M

    @property
    def N(self) -> int:
        return self.extractor.N

    def seed_alphabet(self, m: int | None = None) -> int:
        return z_alphabet(self.ell, self.w if m is None else m, self.D)

    @property
    def seed_bits(self) -> float:
        """log2 of the seed space of the plain generator."""
        return math.log2(self.N) + self.ell * math.log2(self.seed_alphabet())

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "w": self.w,
            "l": self.ell,
            "c": self.c,
            "theta": self.theta,
            "mu": self.mu,
            "extractor": self.extractor.to_dict(),
        }


def z_alphabet(ell: int, m: int, D: int) -> int:
    """Size of the seed alphabet used to produce m symbols over [D]."""
    if D == 1:
        return 1
    if m <= D:
        if not is_prime(D):
            raise SamplerError(f"D={D} must be prime")
        return D
    if D == 2:
        return binary_field_for(m).order
    raise SamplerError(f"m={m} symbols over [D={D}] need m <= D (or D = 2)")


def z_table(ell: int, m: int, D: int) -> np.ndarray:
    """Every output of the l-wise generator of m symbols over [D].

    Prime D with m <= D uses Reed-Solomon evaluation; D = 2 with more
    symbols than points falls back to low bits over GF(2^e). Row order
    matches ``seed_index``.
    """
    S = z_alphabet(ell, m, D)
    if D == 1:
        return np.zeros((1, m), dtype=np.int64)
    if S == D and m <= D:
        return rs_table(ell, m, D)
    return kwise_bits_table(ell, m)


def seed_index(y: Sequence[int], S: int) -> int:
    return sum(int(s) * S**i for i, s in enumerate(y))


def generate(cfg: SamplerConfig, x: int, y: Sequence[int]) -> tuple[int, ...]:
    if not 0 <= x < cfg.N:
        raise SamplerError(f"x outside [0, {cfg.N})")
    S = cfg.seed_alphabet()
    if len(y) != cfg.ell or any(not 0 <= s < S for s in y):
        raise SamplerError(f"y must be {cfg.ell} symbols in [0, {S})")
    z = _z_row(cfg.ell, cfg.w, cfg.D, y)
    return tuple(int(zi) * cfg.M + cfg.extractor.extract(x, int(zi)) for zi in z)


def _z_row(ell: int, m: int, D: int, y: Sequence[int]) -> np.ndarray:
    S = z_alphabet(ell, m, D)
    if D == 1:
        return np.zeros(m, dtype=np.int64)
    if S == D:
        return np.array(rs_codeword(list(y), m, D).symbols)
    return np.array(kwise_bits(KWiseBitSeed(ell, m, tuple(y))))


def all_outputs(cfg: SamplerConfig, m: int | None = None) -> np.ndarray:
    """Generator outputs for every seed, shape (N * S**l, m); x-major order."""
    m = cfg.w if m is None else m
    Z = z_table(cfg.ell, m, cfg.D)  # (S^l, m)
    E = cfg.extractor.table  # (N, D)
    out = Z[None, :, :] * cfg.M + E[:, Z]  # (N, S^l, m)
    return out.reshape(-1, m)


def _check_functions(cfg: SamplerConfig, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (cfg.w, cfg.v):
        raise SamplerError(f"function table must have shape (w, v) = ({cfg.w}, {cfg.v})")
    if f.min() < 0 or f.max() > 1:
        raise SamplerError("function values must lie in [0, 1]")
    return f


def _sums(cfg: SamplerConfig, f: np.ndarray, budget_bits: int | None) -> np.ndarray:
    size = cfg.N * cfg.seed_alphabet() ** cfg.ell
    budget.check(size, "sampler seed space", budget_bits)
    alpha = all_outputs(cfg)
    return f[np.arange(cfg.w)[None, :], alpha].sum(axis=1)


def mgf_exact(cfg: SamplerConfig, f: np.ndarray, theta: float | None = None, budget_bits: int | None = None) -> float:
    """Average of exp(theta * sum_i f_i(alpha_i)) over the full seed space."""
    f = _check_functions(cfg, f)
    theta = cfg.theta if theta is None else theta
    return _mean_exp(_sums(cfg, f, budget_bits), theta)


def _mean_exp(sums: np.ndarray, theta: float) -> float:
    # Grouping equal sums keeps constant inputs exact (theta = 0 gives 1.0).
    vals, counts = np.unique(sums, return_counts=True)
    total = sums.size
    return math.fsum(float(c) / total * math.exp(theta * float(x)) for x, c in zip(vals, counts))


def rows_mgf(Z: np.ndarray, f: np.ndarray, theta: float) -> tuple[float, float, float]:
    """(E[exp(theta sum_i f_i(Z_i))], prod_i E[exp(theta f_i(Z_i))], sum_i E[f_i(Z_i)])
    for equiprobable rows Z of shape (S, w) and tables f of shape (w, alphabet)."""
    Z = np.asarray(Z, dtype=np.int64)
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[0] != Z.shape[1]:
        raise SamplerError("need one function row per coordinate")
    Y = f[np.arange(Z.shape[1])[None, :], Z]
    measured = _mean_exp(Y.sum(axis=1), theta)
    product = math.prod(_mean_exp(Y[:, i], theta) for i in range(Z.shape[1]))
    return measured, product, float(Y.mean(axis=0).sum())


def mgf_mc(cfg: SamplerConfig, f: np.ndarray, samples: int, rng_seed: int, theta: float | None = None):
    f = _check_functions(cfg, f)
    theta = cfg.theta if theta is None else theta
    rng = np.random.default_rng(rng_seed)
    S = cfg.seed_alphabet()
    Z = z_table(cfg.ell, cfg.w, cfg.D)
    xs = rng.integers(0, cfg.N, size=samples)
    ys = rng.integers(0, S**cfg.ell, size=samples)
    z = Z[ys]
    alpha = z * cfg.M + cfg.extractor.table[xs[:, None], z]
    vals = np.exp(theta * f[np.arange(cfg.w)[None, :], alpha].sum(axis=1))
    return float(vals.mean()), float(3 * vals.std() / math.sqrt(samples))


def embedded_means(cfg: SamplerConfig, f: np.ndarray) -> np.ndarray:
    """Mean of each f_i over the D*M points hit by the pair embedding."""
    f = _check_functions(cfg, f)
    return f[:, : cfg.D * cfg.M].mean(axis=1)


def tail_probability(cfg: SamplerConfig, f: np.ndarray, threshold: float, budget_bits: int | None = None):
    """Exact Pr[sum_i f_i(alpha_i) > threshold] and the Markov bound from mgf_exact."""
    f = _check_functions(cfg, f)
    sums = _sums(cfg, f, budget_bits)
    tail = Fraction(int(np.count_nonzero(sums > threshold)), sums.size)
    markov = float(np.exp(cfg.theta * sums).mean()) * math.exp(-cfg.theta * threshold)
    return tail, markov


def bad_seed_bound(ext: StrongExtractor) -> int:
    """Largest possible number of x whose sample mean overshoots by more than eps.

    A set of ceil(2^k) such x would be a source of min-entropy k on which a
    [0,1]-valued test has advantage above eps.
    """
    return max(0, math.ceil(2.0**ext.k - 1e-9) - 1)


def mgf_bound(cfg: SamplerConfig, mu: float, theta: float | None = None, witness: float | None = None) -> BoundReport:
    """Explicit upper bound on E[exp(theta * sum_i f_i(alpha_i))].

    ``mu`` must dominate the sum of the f_i means over the embedded points
    (see ``embedded_means``). The bad-seed term uses the extractor's own
    (N, k) instead of a v^(-c/2) specialization.
    """
    theta = cfg.theta if theta is None else theta
    w, ell, eps = cfg.w, cfg.ell, cfg.extractor.eps
    drift = mu + w * eps
    bad_fraction = min(1.0, w * bad_seed_bound(cfg.extractor) / cfg.N)
    # E[exp(theta Y)] <= 1 + (e^theta - 1) E[Y] for Y in [0, 1] (convexity)
    good = math.exp(math.expm1(theta) * drift)
    tail = math.exp(2 * theta * w) * (math.e * drift / ell) ** ell
    bad = math.exp(theta * w) * bad_fraction
    return BoundReport(
        "sampler MGF",
        good + tail + bad,
        witness,
        "exp((e^theta - 1)(mu + w eps)) + exp(2 theta w)(e(mu + w eps)/l)^l + exp(theta w) * Pr[x bad]",
        {"theta": theta, "mu": mu, "eps": eps, "k": cfg.extractor.k, "terms": [good, tail, bad]},
    )


def kwise_mgf_bound(marginal_product: float, mu: float, ell: int, theta: float, w: int, witness=None) -> BoundReport:
    """prod_i E[exp(theta Y_i)] + exp(2 theta w) (e mu / l)^l for l-wise independent Y_i in [0, 1]."""
    extra = math.exp(2 * theta * w) * (math.e * mu / ell) ** ell
    return BoundReport(
        "l-wise MGF",
        marginal_product + extra,
        witness,
        "prod_i E[exp(theta Y_i)] + exp(2 theta w) (e sum_i E[Y_i] / l)^l",
        {"product": marginal_product, "additive": extra, "l": ell, "theta": theta, "mu": mu},
    )
