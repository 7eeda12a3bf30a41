"""2^2n-QAM symbols as weighted sums of n QPSK symbols.

A QAM symbol is ``a_k = (sqrt(2)/2) e^{j pi/4} sum_i 2^{n-1-i} j^{s_{i,k}}``.
Since ``(sqrt(2)/2) e^{j pi/4} j^s`` is one of ``(+-1 +- j)/2``, the real and
imaginary parts are independent signed-binary expansions with digit weights
``2^{n-1-i}/2``; that is what makes the map invertible digit by digit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from qampmepr.errors import ArgumentError, ConstellationError, DimensionError
from qampmepr.seqcore import ComplexSequence, QuaternarySequence, SequenceLike, as_complex_array

ROTATION = (1 + 1j) / 2  # (sqrt(2)/2) * exp(j*pi/4)
DECOMPOSE_TOL = 1e-9
_QPSK = np.array([1, 1j, -1, -1j])
# exponent s of ROTATION * j**s, indexed by 2*(real > 0) + (imag > 0)
_EXPONENT_FROM_SIGNS = np.array([2, 1, 3, 0])


@dataclass(frozen=True)
class QamMatrix:
    """Rows ``s_0 .. s_{n-1}``: the quaternary sequences behind one QAM sequence."""

    rows: tuple[QuaternarySequence, ...]

    def __init__(self, rows: Iterable[QuaternarySequence | Sequence[int]]):
        rws = tuple(r if isinstance(r, QuaternarySequence) else QuaternarySequence(r) for r in rows)
        if not rws:
            raise ArgumentError("a QAM matrix needs n >= 1 rows")
        lengths = {len(r) for r in rws}
        if len(lengths) != 1:
            raise DimensionError(f"rows have mixed lengths {sorted(lengths)}")
        object.__setattr__(self, "rows", rws)

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def N(self) -> int:
        return len(self.rows[0])

    def as_array(self) -> np.ndarray:
        return np.array([r.values for r in self.rows], dtype=np.int64)


def qam_weights(n: int) -> np.ndarray:
    """Row weights ``2^{n-1-i}``."""
    return 2.0 ** np.arange(n - 1, -1, -1)


def compose_array(rows: np.ndarray) -> np.ndarray:
    """Vectorised compose: ``(..., n, N)`` exponent arrays to ``(..., N)`` symbols."""
    rows = np.asarray(rows)
    n = rows.shape[-2]
    return ROTATION * np.einsum("i,...ik->...k", qam_weights(n), _QPSK[rows % 4])


def compose_qam(m: QamMatrix) -> ComplexSequence:
    return ComplexSequence(compose_array(m.as_array()))


def decompose_qam(a: SequenceLike, n: int) -> QamMatrix:
    """Inverse of :func:`compose_qam`.

    Raises ConstellationError naming the first symbol that is not within
    1e-9 of a point of the 4**n-QAM grid.
    """
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    arr = as_complex_array(a)
    limit = (2**n - 1) / 2
    for part in (arr.real, arr.imag):
        odd = np.rint(part * 2)
        off = (
            (np.abs(part * 2 - odd) > 2 * DECOMPOSE_TOL)
            | (odd % 2 == 0)
            | (np.abs(odd) > 2 * limit)
        )
        if np.any(off):
            k = int(np.flatnonzero(off)[0])
            raise ConstellationError(k, complex(arr[k]), n)

    # signed-binary digits, most significant first
    re = np.rint(arr.real * 2).astype(np.int64)
    im = np.rint(arr.imag * 2).astype(np.int64)
    rows = np.empty((n, arr.size), dtype=np.int64)
    for i in range(n):
        w = 2 ** (n - 1 - i)
        sr = np.where(re > 0, 1, -1)
        si = np.where(im > 0, 1, -1)
        rows[i] = _EXPONENT_FROM_SIGNS[2 * (sr > 0) + (si > 0)]
        re -= sr * w
        im -= si * w
    return QamMatrix(rows.tolist())


def constellation_points(n: int) -> frozenset[complex]:
    """All ``4**n`` points of the 2^2n-QAM constellation under the composition scaling."""
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    digits = np.array(list(itertools.product(range(4), repeat=n)))
    pts = compose_array(digits[:, :, None])[:, 0]
    return frozenset(complex(p) for p in pts)
