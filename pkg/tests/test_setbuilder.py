"""Thresholded families, product codes and measured PMEPR."""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from oracles import dense_grid_pep
from qampmepr.bounds import ThresholdProfile, lemma1_pep_bound, lemma2_pav, theorem1_bound
from qampmepr.envelope import CodeSpec, pep
from qampmepr.errors import ArgumentError, EnumerationLimitError
from qampmepr.qammap import compose_array
from qampmepr.seqcore import QPSK_POINTS, QuaternarySequence, all_dj_golay, exhaustive_golay_members
from qampmepr.setbuilder import (
    ProductCode,
    SequenceFamily,
    build_code,
    build_families,
    close_under_phase,
    empirical_pmepr,
    enumerate_by_pep,
    family_report,
    saturation_index,
)


def as_set(f):
    return {tuple(r) for r in f.members.tolist()}


def orbit_family(seq, level=0, threshold=4.0):
    return SequenceFamily(np.array([[(v + m) % 4 for v in seq] for m in range(4)]), level, threshold, True)


@pytest.fixture(scope="module")
def families_n4():
    """Exhaustive N=4 families for x=2, y=1.25 over three levels."""
    return build_families(ThresholdProfile(2, "1.25", 3, 4))


class TestEnumerate:
    def test_length_two_is_everything(self):
        f = enumerate_by_pep(2, 4)
        assert len(f) == 16
        # dense-grid oracle: every length-2 QPSK sequence peaks at exactly 4
        for row in itertools.product(range(4), repeat=2):
            assert dense_grid_pep(QPSK_POINTS[list(row)], 4096) == pytest.approx(4)

    def test_contains_davis_jedwab(self):
        f = enumerate_by_pep(4, 8)
        assert {tuple(r) for r in all_dj_golay(2).tolist()} <= as_set(f)

    def test_ceiling_gives_everything(self):
        assert len(enumerate_by_pep(4, 16)) == 256

    def test_below_minimum_is_empty(self):
        f = enumerate_by_pep(4, 3.9)
        assert len(f) == 0 and f.closed

    def test_guard(self):
        with pytest.raises(EnumerationLimitError):
            enumerate_by_pep(11, 100)
        with pytest.raises(EnumerationLimitError):
            enumerate_by_pep(5, 10, limit=4)

    def test_matches_brute_force_threshold(self):
        # brute force: refine every sequence individually
        threshold = 10.0
        expected = set()
        for row in itertools.product(range(4), repeat=4):
            est = pep(QPSK_POINTS[list(row)])
            if est.value <= threshold + est.error_bound:
                expected.add(row)
        assert as_set(enumerate_by_pep(4, threshold)) == expected

    def test_condition_a_audit(self, families_n4):
        for f in families_n4:
            for row in f.members[:: max(1, len(f) // 40)]:
                fine = dense_grid_pep(QPSK_POINTS[row], 1 << 14)
                est = pep(QPSK_POINTS[row])
                assert fine <= f.threshold + est.error_bound + 1e-9

    def test_condition_b_audit(self, families_n4):
        for f in families_n4:
            assert f.closed and f.is_phase_closed()
            members = as_set(f)
            for row in members:
                assert all(tuple((v + m) % 4 for v in row) in members for m in range(4))


class TestClose:
    def test_idempotent(self):
        f = enumerate_by_pep(4, 8)
        assert as_set(close_under_phase(f)) == as_set(f)

    def test_single(self):
        f = SequenceFamily(np.array([[0, 0]]), 0, 4.0, False)
        assert as_set(close_under_phase(f)) == {(k, k) for k in range(4)}

    def test_orbit_sizes(self, rng):
        rows = rng.integers(0, 4, (30, 5))
        f = close_under_phase(SequenceFamily(rows, 0, 25.0, False))
        assert len(f) % 4 == 0


class TestBuildFamilies:
    def test_golay_case(self):
        fams = build_families(ThresholdProfile(2, 1, 2, 4))
        assert [f.threshold for f in fams] == [8, 8]
        golay = {tuple(r) for r in exhaustive_golay_members(4).tolist()}
        assert all(as_set(f) == golay for f in fams)

    def test_thresholds(self):
        fams = build_families(ThresholdProfile(2, "1.2", 3, 8), source="dj_golay")
        assert [f.threshold for f in fams] == pytest.approx([16, 23.04, 33.1776])
        assert all(len(f) == 768 for f in fams)

    def test_nested(self, families_n4):
        sizes = [len(f) for f in families_n4]
        assert sizes == sorted(sizes)
        for lo, hi in zip(families_n4, families_n4[1:]):
            assert as_set(lo) <= as_set(hi)

    def test_dj_below_2n_filters(self):
        fams = build_families(ThresholdProfile("1.98", 1, 1, 8), source="dj_golay")
        expected = set()
        for row in all_dj_golay(3):
            est = pep(QPSK_POINTS[row])
            if est.value <= 15.84 + est.error_bound:
                expected.add(tuple(row.tolist()))
        assert 0 < len(expected) < 768
        assert as_set(fams[0]) == expected
        assert fams[0].is_phase_closed()

    def test_length_four_golay_peaks_at_2n(self):
        fams = build_families(ThresholdProfile("1.5", 1, 1, 4), source="dj_golay")
        assert len(fams[0]) == 0

    def test_dj_needs_power_of_two(self):
        with pytest.raises(ArgumentError):
            build_families(ThresholdProfile(2, 1, 1, 6), source="dj_golay")

    def test_user_supplied(self):
        cands = [[QuaternarySequence([0, 0, 0, 2]), QuaternarySequence([0, 0, 0, 0])], [[0, 1, 0, 3]]]
        fams = build_families(ThresholdProfile(2, 1, 2, 4), "user_supplied", cands)
        # all-ones peaks at 16 > 8 and is dropped; orbits are added
        assert as_set(fams[0]) == {tuple((v + m) % 4 for v in (0, 0, 0, 2)) for m in range(4)}
        assert len(fams[1]) == 4

    def test_user_supplied_count(self):
        with pytest.raises(ArgumentError):
            build_families(ThresholdProfile(2, 1, 2, 4), "user_supplied", [[[0, 0, 0, 2]]])

    def test_unknown_source(self):
        with pytest.raises(ArgumentError):
            build_families(ThresholdProfile(2, 1, 1, 4), "magic")


class TestCode:
    def test_orbit_code(self):
        code = build_code([orbit_family((0, 0))])
        table = code.code_spec()
        assert len(table) == 4
        assert np.allclose(np.abs(table.matrix), 2**-0.5)

    def test_golay_product_size(self):
        fams = build_families(ThresholdProfile(2, 1, 2, 4))
        assert build_code(fams).size == 4096
        assert len(build_code(fams).code_spec()) == 4096

    def test_empty_family(self):
        empty = SequenceFamily(np.zeros((0, 4), dtype=np.int8), 1, 1.0, True)
        with pytest.raises(ArgumentError, match="level 1"):
            build_code([enumerate_by_pep(4, 8), empty])

    def test_materialization_cap(self):
        fams = build_families(ThresholdProfile(2, 1, 2, 16), source="dj_golay")
        code = build_code(fams)
        assert not code.materialized
        with pytest.raises(ArgumentError):
            code.code_spec()

    def test_sampler_uniform(self, rng):
        fams = build_families(ThresholdProfile(2, 1, 2, 4))
        code = build_code(fams)
        draws = 100_000
        idx = code.sample_indices(draws, rng)
        for level in range(2):
            counts = np.bincount(idx[:, level], minlength=64)
            expected = draws / 64
            sigma = np.sqrt(draws * (1 / 64) * (63 / 64))
            assert np.all(np.abs(counts - expected) <= 3 * sigma)
            assert stats.chisquare(counts).pvalue > 1e-3

    def test_codewords_compose(self):
        fams = [orbit_family((0, 1)), orbit_family((2, 2))]
        code = build_code(fams)
        words = code.codewords(np.array([[1, 3]]))
        rows = np.array([[fams[0].members[1], fams[1].members[3]]])
        assert np.allclose(words, compose_array(rows))

    def test_exact_average_power_matches_enumeration(self, families_n4):
        code = build_code(families_n4[:2])
        assert code.average_power_exact() == lemma2_pav(2, 4)
        assert code.code_spec().average_power() == pytest.approx(float(lemma2_pav(2, 4)), abs=1e-9)

    def test_exact_average_power_without_closure(self):
        fam = SequenceFamily(np.array([[0, 0], [0, 1]]), 0, 4.0, False)
        code = ProductCode([fam, fam])
        assert code.average_power_exact() == pytest.approx(code.code_spec().average_power(), abs=1e-12)
        assert code.average_power_exact() != lemma2_pav(2, 2)


class TestEmpiricalPmepr:
    def test_single_codeword(self):
        a = compose_array(np.array([[0, 1, 1], [2, 0, 3]]))
        res = empirical_pmepr(CodeSpec([a]))
        assert res.pmepr == pytest.approx(pep(a).value / np.sum(np.abs(a) ** 2))

    def test_exact_pav_equals_lemma2(self):
        fams = build_families(ThresholdProfile(2, 1, 2, 4))
        res = empirical_pmepr(build_code(fams), mode="exact")
        assert res.p_av == pytest.approx(float(lemma2_pav(2, 4)), abs=1e-9)
        assert res.codewords == 4096

    def test_sampled_guard(self):
        code = build_code([orbit_family((0, 0))])
        with pytest.raises(ArgumentError):
            empirical_pmepr(code, mode="sampled", samples=50)

    def test_sampled_deterministic(self):
        fams = build_families(ThresholdProfile(2, "1.1", 2, 8))
        code = build_code(fams)
        a = empirical_pmepr(code, mode="sampled", samples=5000, seed=3)
        b = empirical_pmepr(code, mode="sampled", samples=5000, seed=3)
        assert a == b
        assert a.max_pep <= float(lemma1_pep_bound(ThresholdProfile(2, "1.1", 2, 8))) + a.max_pep_error

    def test_sampled_below_exact(self, families_n4):
        code = build_code(families_n4[:2])
        exact = empirical_pmepr(code, mode="exact")
        sampled = empirical_pmepr(code, mode="sampled", samples=2000, seed=1)
        assert sampled.max_pep <= exact.max_pep + exact.max_pep_error
        assert sampled.p_av == exact.p_av

    def test_lemma1_soundness_sampled(self, rng):
        for y in ("1", "1.1", "1.3"):
            p = ThresholdProfile(2, y, 3, 8)
            code = build_code(build_families(p))
            words = code.codewords(code.sample_indices(500, rng))
            ceiling = float(lemma1_pep_bound(p))
            for w in words[:100]:
                est = pep(w)
                assert est.value <= ceiling + est.error_bound + 1e-9
            res = empirical_pmepr(code, mode="sampled", samples=2000, seed=7)
            assert res.pmepr <= float(theorem1_bound(p)) + 1e-6


class TestReport:
    def test_saturation(self):
        assert saturation_index(2, 1, 8) is None
        assert saturation_index(2, 1, 2) == 0
        assert saturation_index(2, "1.5", 8) == 2

    def test_golay_baseline_exceeded(self, families_n4):
        p = ThresholdProfile(2, "1.25", 3, 4)
        report = family_report(families_n4, p)
        golay = len(exhaustive_golay_members(4))
        assert report.sizes[-1] == 256
        assert report.product_size > golay**3
        assert report.saturation_index == 2
        assert [r["i0_flag"] for r in report.rows()] == [0, 0, 1]

    def test_saturated_levels_are_full(self):
        p = ThresholdProfile(2, "1.5", 3, 4)
        fams = build_families(p)
        i0 = saturation_index(p.x, p.y, p.N)
        assert all(len(f) == 4**4 for f in fams[i0:])
