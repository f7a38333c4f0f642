"""Prime-field and binary-field arithmetic, Reed-Solomon codewords and
limited-independence generators.

Everything here is a pure function of its arguments. Indices are 0-based
and residues live in ``{0, ..., p - 1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

UINT64_MAX = (1 << 64) - 1

# Deterministic Miller-Rabin witnesses; sufficient for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class FieldError(ValueError):
    """Raised for malformed field or code parameters."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeModulus:
    value: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, (int, np.integer)) or not is_prime(int(self.value)):
            raise FieldError(f"{self.value} is not prime")
        object.__setattr__(self, "value", int(self.value))

    def __int__(self) -> int:
        return self.value


def as_modulus(p: int | PrimeModulus) -> PrimeModulus:
    return p if isinstance(p, PrimeModulus) else PrimeModulus(p)


def next_prime(x: int) -> PrimeModulus:
    """Smallest prime >= x, restricted to the unsigned 64-bit range."""
    if x < 1:
        raise FieldError("next_prime needs x >= 1")
    n = max(int(x), 2)
    while not is_prime(n):
        n += 1
        if n > UINT64_MAX:
            raise OverflowError(f"no prime >= {x} below 2**64")
    if n > UINT64_MAX:
        raise OverflowError(f"{x} exceeds the 64-bit range")
    return PrimeModulus(n)


@dataclass(frozen=True)
class Codeword:
    modulus: int
    symbols: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if any(s < 0 or s >= self.modulus for s in self.symbols):
            raise FieldError(f"symbol outside [0, {self.modulus})")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


def _check_seed(seed: Sequence[int], p: int) -> list[int]:
    seed = [int(s) for s in seed]
    if any(s < 0 or s >= p for s in seed):
        raise FieldError(f"seed symbol outside [0, {p})")
    return seed


def _poly_eval(coeffs: Sequence[int], points: Sequence[int], p: int) -> tuple[int, ...]:
    out = []
    for x in points:
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * x + c) % p
        out.append(acc)
    return tuple(out)


def rs_codeword(seed: Sequence[int], m: int, v: int | PrimeModulus) -> Codeword:
    """Evaluate the polynomial with coefficients ``seed`` at 0, ..., m-1 mod v.

    Degree < len(seed); distinct seeds give codewords agreeing in at most
    ``len(seed) - 1`` coordinates.
    """
    p = as_modulus(v).value
    seed = _check_seed(seed, p)
    ell = len(seed)
    if not 1 <= ell <= m:
        raise FieldError(f"need 1 <= len(seed) <= m, got len(seed)={ell}, m={m}")
    if m > p:
        raise FieldError(f"m={m} exceeds the {p} available evaluation points")
    return Codeword(p, _poly_eval(seed, range(m), p))


def shift_free_codeword(seed: Sequence[int], m: int, v: int | PrimeModulus) -> Codeword:
    """Codeword of the polynomial ``sum_i seed[i] * X**(i+1)`` at X = 1, ..., m.

    Dropping the constant term makes the code closed under no nontrivial
    shift: for distinct seeds the difference of the two polynomials minus any
    constant is a nonzero polynomial of degree <= len(seed), so the
    shift-Hamming distance is at least ``m - len(seed)``. Evaluation at
    nonzero points keeps any ``len(seed)`` coordinates jointly uniform.
    """
    p = as_modulus(v).value
    seed = _check_seed(seed, p)
    ell = len(seed)
    if not 1 <= ell <= m:
        raise FieldError(f"need 1 <= len(seed) <= m, got len(seed)={ell}, m={m}")
    if m > p - 1:
        raise FieldError(f"m={m} exceeds the {p - 1} nonzero evaluation points")
    return Codeword(p, _poly_eval([0, *seed], range(1, m + 1), p))


def hamming(x: Sequence[int], y: Sequence[int]) -> int:
    if len(x) != len(y):
        raise FieldError("length mismatch")
    return sum(1 for a, b in zip(x, y) if a != b)


def shift_hamming(x: Sequence[int] | Codeword, y: Sequence[int] | Codeword, B: int) -> int:
    """min over a in [B] of the number of i with x_i - y_i != a (mod B)."""
    xs = x.symbols if isinstance(x, Codeword) else tuple(x)
    ys = y.symbols if isinstance(y, Codeword) else tuple(y)
    if len(xs) != len(ys):
        raise FieldError("length mismatch")
    B = int(B)
    counts = [0] * B
    for a, b in zip(xs, ys):
        counts[(a - b) % B] += 1
    return len(xs) - max(counts, default=0)


def kwise_symbols(seed: Sequence[int], count: int, D: int | PrimeModulus) -> Codeword:
    """``count`` symbols over [D], any ``len(seed)`` of them jointly uniform."""
    return rs_codeword(seed, count, D)


def rs_table(ell: int, m: int, p: int, shift_free: bool = False) -> np.ndarray:
    """All p**ell codewords as an int array of shape (p**ell, m).

    Row r is the codeword of the seed whose base-p digits (least significant
    first) are r.
    """
    if shift_free:
        if m > p - 1:
            raise FieldError(f"m={m} exceeds the {p - 1} nonzero evaluation points")
        powers = np.array([[pow(x, i + 1, p) for x in range(1, m + 1)] for i in range(ell)], dtype=np.int64)
    else:
        if m > p:
            raise FieldError(f"m={m} exceeds the {p} available evaluation points")
        powers = np.array([[pow(x, i, p) for x in range(m)] for i in range(ell)], dtype=np.int64)
    seeds = seed_digits(p, ell)
    return (seeds @ powers) % p


def seed_digits(base: int, length: int) -> np.ndarray:
    """All base**length digit vectors, least significant digit first."""
    r = np.arange(base**length, dtype=np.int64)
    return np.stack([(r // base**i) % base for i in range(length)], axis=1) if length else np.zeros((1, 0), np.int64)


# --- binary extension fields -------------------------------------------------

# Irreducible polynomials over GF(2) by degree (bit i = coefficient of X^i).
_IRREDUCIBLE = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}


@dataclass(frozen=True)
class GF2e:
    """The field GF(2**e) with elements encoded as e-bit integers."""

    e: int

    def __post_init__(self) -> None:
        if self.e not in _IRREDUCIBLE:
            raise FieldError(f"GF(2^{self.e}) not supported")

    @property
    def order(self) -> int:
        return 1 << self.e

    def mul(self, a: int, b: int) -> int:
        poly, e = _IRREDUCIBLE[self.e], self.e
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a >> e:
                a ^= poly
        return r

    def mul_array(self, a, b) -> np.ndarray:
        """Elementwise product of broadcastable integer arrays."""
        poly, e = _IRREDUCIBLE[self.e], self.e
        a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        a, b = a.copy(), b.copy()
        r = np.zeros_like(a)
        for _ in range(e):
            r ^= np.where(b & 1, a, 0)
            b >>= 1
            a <<= 1
            a = np.where(a >> e, a ^ poly, a)
        return r

    def evaluate(self, coeffs: Sequence[int], x: int) -> int:
        acc = 0
        for c in reversed(coeffs):
            acc = self.mul(acc, x) ^ c
        return acc


def binary_field_for(n: int) -> GF2e:
    """Smallest supported GF(2**e) with at least n + 1 elements."""
    return GF2e(max(1, (n).bit_length()))


@dataclass(frozen=True)
class KWiseBitSeed:
    t: int
    n: int
    seed: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", tuple(int(s) for s in self.seed))
        if self.t < 1 or self.n < 1:
            raise FieldError("need t >= 1 and n >= 1")
        if len(self.seed) != self.t:
            raise FieldError(f"seed length {len(self.seed)} != t={self.t}")
        order = binary_field_for(self.n).order
        if any(s < 0 or s >= order for s in self.seed):
            raise FieldError(f"seed coefficient outside GF({order})")


def kwise_bits(cfg: KWiseBitSeed) -> tuple[int, ...]:
    """Least-significant bits of a degree-(t-1) polynomial at the points 1..n of
    GF(2**ceil(log2(n+1)))."""
    field = binary_field_for(cfg.n)
    return tuple(field.evaluate(cfg.seed, x) & 1 for x in range(1, cfg.n + 1))


def kwise_bits_matrix(t: int, n: int) -> np.ndarray:
    """GF(2) matrix A of shape (n, e*t) with kwise_bits(seed) = A @ seedbits.

    Seed bit ``i*e + b`` is bit b of coefficient i. Multiplication by a fixed
    field element and taking the low bit are both GF(2)-linear, so the whole
    generator is a linear map of the seed bits.
    """
    field = binary_field_for(n)
    e = field.e
    A = np.zeros((n, e * t), dtype=np.uint8)
    for j, x in enumerate(range(1, n + 1)):
        xp = 1
        for i in range(t):
            for b in range(e):
                A[j, i * e + b] = field.mul(1 << b, xp) & 1
            xp = field.mul(xp, x)
    return A


def kwise_bits_table(t: int, n: int) -> np.ndarray:
    """All outputs of kwise_bits over the whole seed space, shape (order**t, n)."""
    A = kwise_bits_matrix(t, n)
    e = A.shape[1] // t
    cols = e * t
    r = np.arange(1 << cols, dtype=np.int64)
    bits = ((r[:, None] >> np.arange(cols)) & 1).astype(np.uint8)
    return (bits @ A.T.astype(np.int64)) % 2


def gf2_row_basis(A: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced column-space description of a GF(2) matrix.

    Returns ``(basis, pivots)`` where ``basis`` rows span the image of the map
    ``s -> A @ s`` (as vectors of length A.shape[0]).
    """
    M = (A.T % 2).astype(np.uint8).copy()  # rows are images of unit seeds
    rows, cols = M.shape
    basis = []
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot = None
        for i in range(r, rows):
            if M[i, c]:
                pivot = i
                break
        if pivot is None:
            continue
        M[[r, pivot]] = M[[pivot, r]]
        for i in range(rows):
            if i != r and M[i, c]:
                M[i] ^= M[r]
        pivots.append(c)
        basis.append(M[r].copy())
        r += 1
        if r == rows:
            break
    return (np.array(basis, dtype=np.uint8).reshape(len(basis), cols), pivots)


def kwise_bits_support(t: int, n: int) -> np.ndarray:
    """Distinct outputs of kwise_bits, shape (2**rank, n).

    The generator is linear, so a uniform seed induces the uniform
    distribution on its image; every row here has the same probability.
    Costs 2**rank instead of 2**(e*t).
    """
    basis, _ = gf2_row_basis(kwise_bits_matrix(t, n))
    rank = basis.shape[0]
    r = np.arange(1 << rank, dtype=np.int64)
    coef = ((r[:, None] >> np.arange(rank)) & 1).astype(np.int64)
    return (coef @ basis.astype(np.int64)) % 2
