"""Quaternary and complex sequences, aperiodic autocorrelation and Golay pairs.

Quaternary sequences hold phase exponents in Z4 so that every correlation of
QPSK codewords can be evaluated in exact Gaussian-integer arithmetic: the
product ``j^a * conj(j^b)`` is ``j^(a-b)``, so a correlation sum reduces to
counting exponent differences mod 4.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from qampmepr.errors import ArgumentError, DimensionError

# all_dj_golay at m=6 would hold ~6e6 sequences
DJ_ENUMERATION_LIMIT = 5

# j^k for k = 0..3
QPSK_POINTS = np.array([1 + 0j, 1j, -1 + 0j, -1j])


@dataclass(frozen=True)
class QuaternarySequence:
    """Length-N vector of phase exponents in Z4 (the codeword is ``j**values``)."""

    values: tuple[int, ...]

    def __init__(self, values: Iterable[int]):
        vals = tuple(int(v) for v in values)
        if not vals:
            raise ArgumentError("a quaternary sequence needs at least one element")
        bad = [v for v in vals if not 0 <= v <= 3]
        if bad:
            raise ArgumentError(f"quaternary entries must lie in 0..3, got {bad[0]}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    def __repr__(self) -> str:
        return f"QuaternarySequence({self.values})"

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)

    def shift(self, m: int) -> QuaternarySequence:
        """Multiply the codeword by ``j**m``."""
        return QuaternarySequence((v + m) % 4 for v in self.values)


@dataclass(frozen=True, eq=False)
class ComplexSequence:
    """Length-N vector of complex amplitudes. The array is stored read-only."""

    values: np.ndarray

    def __init__(self, values: Iterable[complex] | np.ndarray):
        arr = np.array(values, dtype=np.complex128).reshape(-1)
        if arr.size == 0:
            raise ArgumentError("a complex sequence needs at least one element")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self) -> Iterator[complex]:
        return iter(self.values.tolist())

    def __getitem__(self, k: int) -> complex:
        return complex(self.values[k])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComplexSequence):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"ComplexSequence({self.values.tolist()})"


SequenceLike = QuaternarySequence | ComplexSequence | Sequence[complex] | np.ndarray


def as_complex_array(a: SequenceLike) -> np.ndarray:
    """Complex amplitudes of ``a``; quaternary input is mapped through ``j**s``."""
    if isinstance(a, QuaternarySequence):
        return QPSK_POINTS[a.as_array()]
    if isinstance(a, ComplexSequence):
        return a.values
    arr = np.asarray(a, dtype=np.complex128).reshape(-1)
    if arr.size == 0:
        raise ArgumentError("empty sequence")
    return arr


def to_complex(q: QuaternarySequence) -> ComplexSequence:
    """Map exponents to QPSK symbols, ``a_k = j**q[k]``. Exact: entries are 0/±1."""
    return ComplexSequence(QPSK_POINTS[q.as_array()])


def quaternary_correlations(q: QuaternarySequence | np.ndarray) -> np.ndarray:
    """Exact aperiodic autocorrelation of ``j**q`` at every lag 0..N-1.

    Returns an ``(N, 2)`` integer array of (real, imaginary) parts.
    """
    s = q.as_array() if isinstance(q, QuaternarySequence) else np.asarray(q, dtype=np.int64)
    n = s.size
    out = np.zeros((n, 2), dtype=np.int64)
    for tau in range(n):
        counts = np.bincount((s[: n - tau] - s[tau:]) % 4, minlength=4)
        out[tau] = counts[0] - counts[2], counts[1] - counts[3]
    return out


def aperiodic_autocorrelation(a: SequenceLike, tau: int) -> complex:
    """``C_a(tau) = sum_i a_i * conj(a_{i+tau})``.

    ``tau = 0`` gives the energy ``||a||^2``; negative lags return the
    conjugate of the positive lag. Quaternary input is evaluated exactly.
    """
    n = len(a) if isinstance(a, (QuaternarySequence, ComplexSequence)) else len(as_complex_array(a))
    if not -n < tau < n:
        raise ArgumentError(f"lag {tau} outside -{n - 1}..{n - 1}")
    lag = abs(tau)
    if isinstance(a, QuaternarySequence):
        s = a.as_array()
        counts = np.bincount((s[: n - lag] - s[lag:]) % 4, minlength=4)
        value = complex(int(counts[0] - counts[2]), int(counts[1] - counts[3]))
    else:
        arr = as_complex_array(a)
        value = complex(np.sum(arr[: n - lag] * np.conj(arr[lag:])))
    return value.conjugate() if tau < 0 else value


def golay_violation(a: QuaternarySequence, b: QuaternarySequence) -> int | None:
    """Smallest lag where ``C_a + C_b`` is nonzero, or None for a Golay pair."""
    if len(a) != len(b):
        raise DimensionError(f"lengths differ: {len(a)} vs {len(b)}")
    total = quaternary_correlations(a) + quaternary_correlations(b)
    bad = np.flatnonzero(np.any(total[1:] != 0, axis=1))
    return int(bad[0]) + 1 if bad.size else None


def is_golay_pair(a: QuaternarySequence, b: QuaternarySequence) -> bool:
    return golay_violation(a, b) is None


@dataclass(frozen=True)
class GolayPair:
    first: QuaternarySequence
    second: QuaternarySequence

    def __post_init__(self) -> None:
        tau = golay_violation(self.first, self.second)
        if tau is not None:
            raise ArgumentError(f"not a Golay complementary pair (fails at lag {tau})")


def _bits(m: int) -> np.ndarray:
    """Row k holds (x_0, ..., x_{m-1}), the binary digits of k, LSB first."""
    k = np.arange(1 << m)
    return (k[:, None] >> np.arange(m)[None, :]) & 1


def _check_dj_args(m: int, perm: Sequence[int], coeffs: Sequence[int]) -> None:
    if m < 1:
        raise ArgumentError(f"m must be >= 1, got {m}")
    if sorted(perm) != list(range(m)):
        raise ArgumentError(f"{list(perm)} is not a permutation of 0..{m - 1}")
    if len(coeffs) != m:
        raise ArgumentError(f"expected {m} linear coefficients, got {len(coeffs)}")


def _dj_exponents(m: int, perm: Sequence[int], coeffs: Sequence[int], constant: int) -> np.ndarray:
    x = _bits(m)
    quad = sum((x[:, perm[l]] * x[:, perm[l + 1]] for l in range(m - 1)), np.zeros(1 << m, dtype=np.int64))
    return (2 * quad + x @ np.asarray(coeffs, dtype=np.int64) + constant) % 4


def generate_dj_golay(
    m: int, perm: Sequence[int], coeffs: Sequence[int], constant: int
) -> QuaternarySequence:
    """Quaternary Golay sequence of length 2**m from a Reed-Muller coset.

    Entry k is ``2*sum_l x_{perm[l]} x_{perm[l+1]} + sum_l coeffs[l] x_l + constant``
    (mod 4) where ``x_l`` is bit l of k.
    """
    _check_dj_args(m, perm, coeffs)
    return QuaternarySequence(_dj_exponents(m, perm, coeffs, constant).tolist())


def dj_companion(
    q: QuaternarySequence, m: int, perm: Sequence[int], coeffs: Sequence[int], constant: int
) -> QuaternarySequence:
    """Golay mate of ``generate_dj_golay(m, perm, coeffs, constant)``: add ``2*x_{perm[0]}``."""
    _check_dj_args(m, perm, coeffs)
    mate = (q.as_array() + 2 * _bits(m)[:, perm[0]]) % 4
    out = QuaternarySequence(mate.tolist())
    tau = golay_violation(q, out)
    if tau is not None:
        raise ArgumentError(f"companion check failed at lag {tau}; parameters do not match q")
    return out


def dj_parameter_space(m: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], int]]:
    """Every (perm, coeffs, constant), with each path counted once (perm and its reverse agree)."""
    for perm in itertools.permutations(range(m)):
        if m > 1 and perm[0] > perm[-1]:
            continue
        for coeffs in itertools.product(range(4), repeat=m):
            for constant in range(4):
                yield perm, coeffs, constant


def all_dj_golay(m: int) -> np.ndarray:
    """Distinct Davis-Jedwab sequences of length 2**m as a sorted ``(count, 2**m)`` array.

    There are ``(m!/2) * 4**(m+1)`` of them for m >= 2.
    """
    if not 1 <= m <= DJ_ENUMERATION_LIMIT:
        raise ArgumentError(f"full enumeration supports 1 <= m <= {DJ_ENUMERATION_LIMIT}, got {m}")
    x = _bits(m)
    rows = []
    lin = np.array(list(itertools.product(range(4), repeat=m)), dtype=np.int64) @ x.T
    affine = (lin[:, None, :] + np.arange(4)[None, :, None]).reshape(-1, 1 << m)
    for perm in itertools.permutations(range(m)):
        if m > 1 and perm[0] > perm[-1]:
            continue
        quad = sum((x[:, perm[l]] * x[:, perm[l + 1]] for l in range(m - 1)), np.zeros(1 << m, dtype=np.int64))
        rows.append(((2 * quad[None, :] + affine) % 4).astype(np.int8))
    return np.unique(np.concatenate(rows), axis=0)


def random_dj_parameters(m: int, rng: np.random.Generator) -> tuple[list[int], list[int], int]:
    perm = rng.permutation(m).tolist()
    coeffs = rng.integers(0, 4, size=m).tolist()
    return perm, coeffs, int(rng.integers(0, 4))


def phase_orbit(q: QuaternarySequence) -> frozenset[QuaternarySequence]:
    """``{j**m * q : m in Z4}`` as exponent sequences; always four members."""
    return frozenset(q.shift(m) for m in range(4))


def all_quaternary(N: int, first_zero: bool = False) -> np.ndarray:
    """Every sequence of Z4^N in lexicographic order, as a ``(4**N, N)`` int8 array.

    With ``first_zero`` only orbit representatives (first entry 0) are returned.
    """
    free = N - 1 if first_zero else N
    idx = np.arange(4**free, dtype=np.int64)
    digits = (idx[:, None] >> (2 * np.arange(free - 1, -1, -1))[None, :]) & 3
    if first_zero:
        digits = np.hstack([np.zeros((digits.shape[0], 1), dtype=np.int64), digits])
    return digits.astype(np.int8)


def exhaustive_golay_members(N: int) -> np.ndarray:
    """Sequences of Z4^N that belong to at least one Golay pair, by exhaustive search.

    Pairs are matched through their exact correlation vectors: ``a`` has a mate
    iff the negated sidelobes of ``a`` are the sidelobes of some ``b``.
    """
    seqs = all_quaternary(N)
    sidelobes = [quaternary_correlations(s)[1:].tobytes() for s in seqs]
    seen = set(sidelobes)
    keep = [
        i for i, s in enumerate(seqs)
        if (-quaternary_correlations(s)[1:]).tobytes() in seen
    ]
    return seqs[keep]
