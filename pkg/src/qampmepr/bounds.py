"""Closed-form PMEPR bounds for QAM codes built from thresholded QPSK families.

Every formula is evaluated with :class:`fractions.Fraction`; they are all
rational in (x, y) for integer n and N, so identities between the bounds can
be checked exactly. Floats are converted through their shortest decimal
representation, so ``1.1`` means ``11/10``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from numbers import Rational

from qampmepr.errors import ArgumentError

Number = int | float | str | Fraction


def exact(value: Number) -> Fraction:
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ArgumentError(f"not a rational number: {value!r}") from exc


def _check_xy(x: Fraction, y: Fraction) -> None:
    if not x > 1:
        raise ArgumentError(f"x must exceed 1, got {x}")
    if not 1 <= y < 2:
        raise ArgumentError(f"y must lie in [1, 2), got {y}")


@dataclass(frozen=True)
class ThresholdProfile:
    """Family thresholds ``x * y**(2i) * N`` for levels i = 0..n-1."""

    x: Fraction
    y: Fraction
    n: int
    N: int

    def __init__(self, x: Number, y: Number, n: int, N: int):
        fx, fy = exact(x), exact(y)
        _check_xy(fx, fy)
        if n < 1 or N < 1:
            raise ArgumentError(f"n and N must be >= 1, got n={n}, N={N}")
        object.__setattr__(self, "x", fx)
        object.__setattr__(self, "y", fy)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "N", int(N))

    def threshold(self, level: int) -> Fraction:
        return self.x * self.y ** (2 * level) * self.N

    def thresholds(self) -> list[Fraction]:
        return [self.threshold(i) for i in range(self.n)]


def _geometric(y: Fraction, n: int) -> Fraction:
    """``(1 - (y/2)^n) / (1 - y/2)``."""
    r = y / 2
    return (1 - r**n) / (1 - r)


def fact1_bound(n: int) -> Fraction:
    """PMEPR bound ``6 (2^n - 1)^2 / (2^{2n} - 1)`` for QAM built from Golay rows."""
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    return Fraction(6 * (2**n - 1) ** 2, 4**n - 1)


def lemma1_pep_bound(p: ThresholdProfile) -> Fraction:
    """Peak envelope power ceiling ``2^{2n-3} G^2 x N`` with G the geometric factor."""
    return Fraction(2) ** (2 * p.n - 3) * _geometric(p.y, p.n) ** 2 * p.x * p.N


def lemma2_pav(n: int, N: int) -> Fraction:
    """Average power ``N (2^{2n} - 1) / 6`` of the code under uniform row choice."""
    if n < 1 or N < 1:
        raise ArgumentError(f"n and N must be >= 1, got n={n}, N={N}")
    return Fraction(N * (4**n - 1), 6)


def lemma2_stated_pav(n: int, N: int) -> Fraction:
    """``(2^n - 1) N / 2``. Agrees with :func:`lemma2_pav` only at n = 1; kept for comparison."""
    return Fraction((2**n - 1) * N, 2)


def theorem1_bound(p: ThresholdProfile) -> Fraction:
    """``(3/4) * 4^n/(4^n - 1) * G^2 * x``."""
    q = Fraction(4**p.n)
    return Fraction(3, 4) * q / (q - 1) * _geometric(p.y, p.n) ** 2 * p.x


def corollary1_bound(x: Number, y: Number) -> Fraction:
    """n-independent envelope ``(3/4) x / (1 - y/2)^2``."""
    fx, fy = exact(x), exact(y)
    _check_xy(fx, fy)
    return Fraction(3, 4) * fx / (1 - fy / 2) ** 2


def corollary2_bounds(x: Number, epsilon: Number) -> tuple[Fraction, Fraction]:
    """Small-epsilon envelopes at ``y = 1 + epsilon``: ``(3x(1+2e), 3x(1+e)^2)``."""
    fx, fe = exact(x), exact(epsilon)
    if not fx > 1:
        raise ArgumentError(f"x must exceed 1, got {fx}")
    if not 0 <= fe < 1:
        raise ArgumentError(f"epsilon must lie in [0, 1), got {fe}")
    return 3 * fx * (1 + 2 * fe), 3 * fx * (1 + fe) ** 2


@dataclass(frozen=True)
class BoundReport:
    fact1: Fraction
    lemma1_pep: Fraction
    lemma2_pav: Fraction
    theorem1: Fraction
    corollary1: Fraction
    corollary2_linear: Fraction
    corollary2_quadratic: Fraction

    @classmethod
    def evaluate(cls, p: ThresholdProfile) -> BoundReport:
        lin, quad = corollary2_bounds(p.x, p.y - 1)
        return cls(
            fact1=fact1_bound(p.n),
            lemma1_pep=lemma1_pep_bound(p),
            lemma2_pav=lemma2_pav(p.n, p.N),
            theorem1=theorem1_bound(p),
            corollary1=corollary1_bound(p.x, p.y),
            corollary2_linear=lin,
            corollary2_quadratic=quad,
        )

    def as_floats(self) -> dict[str, float]:
        return {k: float(v) for k, v in asdict(self).items()}
