"""PEP-thresholded QPSK families, the product QAM code and its measured PMEPR.

Family ``S_i`` collects quaternary sequences of length N whose PEP is at most
``x * y**(2i) * N`` and is closed under multiplication by powers of j. The
QAM code is the composition of every tuple in ``S_0 x ... x S_{n-1}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Literal, Sequence

import numpy as np

from qampmepr.bounds import ThresholdProfile, exact
from qampmepr.envelope import (
    DEFAULT_OVERSAMPLING,
    CarrierConfig,
    CodeSpec,
    _cell_slack,
    _derivative_bounds,
    _grid_power,
    max_pep,
    pep,
)
from qampmepr.errors import ArgumentError, DimensionError, EnumerationLimitError
from qampmepr.qammap import ROTATION, compose_array, qam_weights
from qampmepr.seqcore import QPSK_POINTS, QuaternarySequence, all_dj_golay, all_quaternary

log = logging.getLogger(__name__)

ENUMERATION_LIMIT = 10
MATERIALIZATION_CAP = 1 << 17
SHARD_SIZE = 4096
MIN_SAMPLES = 100
# grid lower bounds this far above the threshold are rejected without refinement
_REJECT_MARGIN = 1e-9

Source = Literal["exhaustive", "dj_golay", "user_supplied"]


def _unique_rows(rows: np.ndarray, N: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int8).reshape(-1, N)
    if rows.shape[0] == 0:
        return rows
    return np.unique(rows, axis=0)


def _orbits(rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int8)
    return np.concatenate([(rows + m) % 4 for m in range(4)]).astype(np.int8)


@dataclass(eq=False)
class SequenceFamily:
    """A set of quaternary sequences of one length, stored as sorted unique rows."""

    members: np.ndarray
    level: int
    threshold: float
    closed: bool
    # members whose PEP is within the estimator's uncertainty of the threshold
    borderline: int = 0

    def __post_init__(self) -> None:
        self.members = _unique_rows(self.members, self.members.shape[-1] if self.members.ndim == 2 else 1)
        self.members.setflags(write=False)

    @property
    def N(self) -> int:
        return self.members.shape[1]

    def __len__(self) -> int:
        return self.members.shape[0]

    def __iter__(self) -> Iterator[QuaternarySequence]:
        for row in self.members:
            yield QuaternarySequence(row.tolist())

    def __contains__(self, q) -> bool:
        row = np.asarray(q.values if isinstance(q, QuaternarySequence) else q, dtype=np.int8)
        if row.shape != (self.N,):
            return False
        return bool(np.any(np.all(self.members == row, axis=1)))

    def is_phase_closed(self) -> bool:
        if len(self) == 0:
            return True
        return len(_unique_rows(_orbits(self.members), self.N)) == len(self)


class _PepTable:
    """Grid bounds for a batch of sequences with refinement on demand.

    Membership rule: a sequence belongs under threshold ``d`` when its refined
    PEP satisfies ``value <= d + error_bound``. Grid bounds settle most rows;
    only rows whose grid interval straddles ``d`` are refined.
    """

    def __init__(self, rows: np.ndarray, oversampling: int, chunk: int = 16384):
        self.rows = rows
        self.oversampling = oversampling
        n = rows.shape[0]
        self.lower = np.empty(n)
        self.upper = np.empty(n)
        size = oversampling * rows.shape[1]
        for start in range(0, n, chunk):
            block = QPSK_POINTS[rows[start : start + chunk]]
            grid = _grid_power(block, size)
            d1, d2 = _derivative_bounds(block, grid)
            self.lower[start : start + block.shape[0]] = grid.max(axis=1)
            self.upper[start : start + block.shape[0]] = grid.max(axis=1) + _cell_slack(1.0 / size, d1, d2)
        self._refined: dict[int, tuple[float, float]] = {}

    def refined(self, k: int) -> tuple[float, float]:
        if k not in self._refined:
            est = pep(QPSK_POINTS[self.rows[k]], oversampling=self.oversampling, refine=True)
            self._refined[k] = (est.value, est.error_bound)
        return self._refined[k]

    def select(self, threshold: float) -> tuple[np.ndarray, int]:
        """Indices accepted under ``threshold`` and how many are borderline."""
        sure = self.upper <= threshold
        unsure = ~sure & (self.lower <= threshold * (1 + _REJECT_MARGIN))
        accepted = list(np.flatnonzero(sure))
        borderline = 0
        for k in np.flatnonzero(unsure):
            value, err = self.refined(int(k))
            if value <= threshold + err:
                accepted.append(int(k))
                if value + err > threshold:
                    borderline += 1
        return np.array(sorted(accepted), dtype=np.int64), borderline


def _check_enumerable(N: int, limit: int) -> None:
    if N < 1:
        raise ArgumentError(f"N must be >= 1, got {N}")
    if N > limit:
        raise EnumerationLimitError(
            f"exhaustive search over 4**{N} sequences exceeds the guard N <= {limit}; "
            "use sampled mode or a dj_golay/user_supplied source"
        )


def enumerate_by_pep(
    N: int,
    threshold: float,
    oversampling: int = DEFAULT_OVERSAMPLING,
    limit: int = ENUMERATION_LIMIT,
    level: int = 0,
) -> SequenceFamily:
    """Every sequence of Z4^N whose PEP does not exceed ``threshold``.

    Only orbit representatives (first entry 0) are measured; the result is
    the union of their phase orbits, hence closed.
    """
    _check_enumerable(N, limit)
    reps = all_quaternary(N, first_zero=True)
    idx, borderline = _PepTable(reps, oversampling).select(float(threshold))
    return SequenceFamily(_orbits(reps[idx]), level, float(threshold), True, 4 * borderline)


def close_under_phase(f: SequenceFamily) -> SequenceFamily:
    return SequenceFamily(_orbits(f.members), f.level, f.threshold, True, f.borderline)


def _as_rows(family, N: int | None = None) -> np.ndarray:
    if isinstance(family, SequenceFamily):
        return family.members
    rows = [q.values if isinstance(q, QuaternarySequence) else tuple(q) for q in family]
    if not rows:
        return np.zeros((0, N or 1), dtype=np.int8)
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise DimensionError(f"family members have mixed lengths {sorted(lengths)}")
    arr = np.array(rows, dtype=np.int64)
    if np.any((arr < 0) | (arr > 3)):
        raise ArgumentError("family members must have entries in 0..3")
    return arr.astype(np.int8)


def build_families(
    p: ThresholdProfile,
    source: Source = "exhaustive",
    user_families: Sequence | None = None,
    oversampling: int = DEFAULT_OVERSAMPLING,
    limit: int = ENUMERATION_LIMIT,
) -> list[SequenceFamily]:
    """The n families ``S_0 .. S_{n-1}`` for ``p``, each phase-closed.

    ``exhaustive`` keeps every sequence of Z4^N under the level threshold.
    ``dj_golay`` starts from all Davis-Jedwab sequences (PEP <= 2N); levels
    whose threshold is below 2N keep only the members that pass it.
    ``user_supplied`` takes one candidate set per level, closes it under
    phase and drops members above the level threshold.
    An unattainable threshold yields an empty family.
    """
    thresholds = [float(t) for t in p.thresholds()]
    N = p.N
    if source == "exhaustive":
        _check_enumerable(N, limit)
        reps = all_quaternary(N, first_zero=True)
        table = _PepTable(reps, oversampling)
        out = []
        for i, d in enumerate(thresholds):
            idx, borderline = table.select(d)
            out.append(SequenceFamily(_orbits(reps[idx]), i, d, True, 4 * borderline))
        return out

    if source == "dj_golay":
        m = N.bit_length() - 1
        if N < 2 or 1 << m != N:
            raise ArgumentError(f"dj_golay families need N = 2**m with m >= 1, got N={N}")
        golay = all_dj_golay(m)
        table = None
        out = []
        for i, d in enumerate(thresholds):
            if d >= 2 * N:
                out.append(SequenceFamily(golay, i, d, True))
                continue
            table = table or _PepTable(golay, oversampling)
            idx, borderline = table.select(d)
            out.append(SequenceFamily(golay[idx], i, d, True, borderline))
        return out

    if source == "user_supplied":
        if user_families is None or len(user_families) != p.n:
            raise ArgumentError(f"user_supplied source needs exactly n={p.n} candidate sets")
        out = []
        for i, (cand, d) in enumerate(zip(user_families, thresholds)):
            rows = _as_rows(cand, N)
            if rows.shape[0] and rows.shape[1] != N:
                raise DimensionError(f"level {i} members have length {rows.shape[1]}, expected {N}")
            rows = _unique_rows(_orbits(rows), N)
            if rows.shape[0] == 0:
                out.append(SequenceFamily(rows, i, d, True))
                continue
            idx, borderline = _PepTable(rows, oversampling).select(d)
            dropped = rows.shape[0] - idx.size
            if dropped:
                log.warning("level %d: dropped %d supplied sequences above PEP %.6g", i, dropped, d)
            out.append(SequenceFamily(rows[idx], i, d, True, borderline))
        return out

    raise ArgumentError(f"unknown family source {source!r}")


class ProductCode:
    """The QAM code over ``S_0 x ... x S_{n-1}`` with uniform, independent row choice."""

    def __init__(self, families: Sequence[SequenceFamily], materialization_cap: int = MATERIALIZATION_CAP):
        if not families:
            raise ArgumentError("at least one family is required")
        for f in families:
            if len(f) == 0:
                raise ArgumentError(f"family at level {f.level} is empty")
        lengths = {f.N for f in families}
        if len(lengths) != 1:
            raise DimensionError(f"families have mixed lengths {sorted(lengths)}")
        if materialization_cap < 1:
            raise ArgumentError("materialization cap must be >= 1")
        self.families = list(families)
        self.materialization_cap = materialization_cap

    @property
    def n(self) -> int:
        return len(self.families)

    @property
    def N(self) -> int:
        return self.families[0].N

    @property
    def size(self) -> int:
        return math.prod(len(f) for f in self.families)

    @property
    def materialized(self) -> bool:
        return self.size <= self.materialization_cap

    def codewords(self, indices: np.ndarray) -> np.ndarray:
        """QAM codewords for rows of member indices, shape ``(k, n) -> (k, N)``."""
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, self.n)
        rows = np.stack([f.members[indices[:, i]] for i, f in enumerate(self.families)], axis=1)
        return compose_array(rows)

    def code_spec(self) -> CodeSpec:
        if not self.materialized:
            raise ArgumentError(
                f"code has {self.size} codewords, above the materialization cap {self.materialization_cap}"
            )
        shape = [len(f) for f in self.families]
        idx = np.indices(shape).reshape(self.n, -1).T
        return CodeSpec(self.codewords(idx))

    def sample_indices(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return np.column_stack([rng.integers(0, len(f), size=count) for f in self.families])

    def average_power_exact(self) -> Fraction:
        """Exact ``P_av`` from per-position symbol means, without enumerating the product.

        With independent levels, ``E|sum_i w_i X_i|^2 = |sum_i w_i mu_i|^2 +
        sum_i w_i^2 (1 - |mu_i|^2)`` where ``mu_i`` is the mean of ``j**s`` at a
        position over family i.
        """
        weights = [2 ** (self.n - 1 - i) for i in range(self.n)]
        total = Fraction(0)
        means = []
        for f in self.families:
            counts = np.stack([np.sum(f.members == s, axis=0) for s in range(4)])
            size = len(f)
            re = [Fraction(int(c), size) for c in counts[0] - counts[2]]
            im = [Fraction(int(c), size) for c in counts[1] - counts[3]]
            means.append((re, im))
        for k in range(self.N):
            sre = sum(w * mu[0][k] for w, mu in zip(weights, means))
            sim = sum(w * mu[1][k] for w, mu in zip(weights, means))
            spread = sum(w * w * (1 - mu[0][k] ** 2 - mu[1][k] ** 2) for w, mu in zip(weights, means))
            total += sre * sre + sim * sim + spread
        return total / 2


def build_code(families: Sequence[SequenceFamily], materialization_cap: int = MATERIALIZATION_CAP) -> ProductCode:
    return ProductCode(families, materialization_cap)


@dataclass(frozen=True)
class PmeprResult:
    mode: str
    samples: int
    seed: int | None
    max_pep: float
    max_pep_error: float
    p_av: float
    pmepr: float
    codewords: int
    p_av_monte_carlo: float | None = None

    def csv_row(self) -> dict:
        return {
            "mode": self.mode,
            "samples": self.samples,
            "seed": "" if self.seed is None else self.seed,
            "max_pep": f"{self.max_pep:.12g}",
            "p_av": f"{self.p_av:.12g}",
            "pmepr": f"{self.pmepr:.12g}",
        }


def empirical_pmepr(
    code: ProductCode | CodeSpec,
    cfg: CarrierConfig | None = None,
    mode: Literal["exact", "sampled"] = "exact",
    samples: int = 10_000,
    seed: int = 0,
    oversampling: int = DEFAULT_OVERSAMPLING,
    refine: bool = True,
) -> PmeprResult:
    """Measured PMEPR of a code.

    ``exact`` takes the certified maximum PEP over every codeword and the
    exact average power. ``sampled`` draws ``samples`` codewords in fixed-size
    shards, each with its own generator spawned from ``seed``; the maximum is
    then a lower estimate of the code's maximum PEP. In both modes the ratio
    uses the code's exact average power; sampled mode also reports the Monte
    Carlo average of the drawn codewords.
    """
    # envelope power is independent of the carrier grid once T*delta_f is an integer
    cfg = cfg or CarrierConfig()
    if mode == "exact":
        table = code.code_spec() if isinstance(code, ProductCode) else code
        peak = max_pep(table.matrix, oversampling=oversampling, refine=refine)
        p_av = float(code.average_power_exact()) if isinstance(code, ProductCode) else table.average_power()
        return PmeprResult("exact", len(table), None, peak.value, peak.error_bound, p_av, peak.value / p_av, len(table))

    if mode != "sampled":
        raise ArgumentError(f"unknown mode {mode!r}")
    if samples < MIN_SAMPLES:
        raise ArgumentError(f"sampled mode needs at least {MIN_SAMPLES} samples, got {samples}")
    shards = -(-samples // SHARD_SIZE)
    children = np.random.SeedSequence(seed).spawn(shards)
    best, certified, energy = -np.inf, -np.inf, 0.0
    for s, child in enumerate(children):
        count = min(SHARD_SIZE, samples - s * SHARD_SIZE)
        rng = np.random.default_rng(child)
        if isinstance(code, ProductCode):
            words = code.codewords(code.sample_indices(count, rng))
        else:
            words = code.matrix[rng.choice(len(code), size=count, p=code.probabilities)]
        peak = max_pep(words, oversampling=oversampling, refine=refine)
        best = max(best, peak.value)
        certified = max(certified, peak.value + peak.error_bound)
        energy += float(np.sum(np.abs(words) ** 2))
    p_av = float(code.average_power_exact()) if isinstance(code, ProductCode) else code.average_power()
    return PmeprResult(
        "sampled", samples, seed, best, certified - best, p_av, best / p_av, samples, energy / samples
    )


@dataclass(frozen=True)
class FamilyReport:
    sizes: list[int]
    thresholds: list[float]
    product_size: int
    saturation_index: int | None
    borderline: list[int] = field(default_factory=list)

    def rows(self) -> list[dict]:
        i0 = self.saturation_index
        return [
            {
                "level": i,
                "size": size,
                "threshold": f"{d:.12g}",
                "i0_flag": int(i0 is not None and i >= i0),
            }
            for i, (size, d) in enumerate(zip(self.sizes, self.thresholds))
        ]


def saturation_index(x, y, N: int) -> int | None:
    """Smallest level i with ``x * y**(2i) >= N``; None if no level saturates."""
    fx, fy = exact(x), exact(y)
    if fx >= N:
        return 0
    if fy <= 1:
        return None
    i = 0
    while fx * fy ** (2 * i) < N:
        i += 1
    return i


def family_report(families: Sequence[SequenceFamily], profile: ThresholdProfile) -> FamilyReport:
    sizes = [len(f) for f in families]
    return FamilyReport(
        sizes=sizes,
        thresholds=[f.threshold for f in families],
        product_size=math.prod(sizes),
        saturation_index=saturation_index(profile.x, profile.y, profile.N),
        borderline=[f.borderline for f in families],
    )
