"""Self-check suites behind ``qampmepr verify``.

Each check records what was expected, what was measured and the tolerance,
so a failing run still yields a complete report.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from qampmepr.bounds import ThresholdProfile, corollary1_bound, fact1_bound, lemma1_pep_bound, lemma2_pav, theorem1_bound
from qampmepr.envelope import pep
from qampmepr.seqcore import dj_companion, dj_parameter_space, generate_dj_golay, golay_violation, random_dj_parameters
from qampmepr.setbuilder import build_code, build_families, empirical_pmepr


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    measured: str
    tolerance: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: expected {self.expected}, measured {self.measured} (tol {self.tolerance})"


def _dj_draws(m_max: int, draws: int, seed: int):
    rng = np.random.default_rng(seed)
    for m in range(1, m_max + 1):
        if m <= 3:
            yield from ((m, *params) for params in dj_parameter_space(m))
        else:
            for _ in range(draws):
                yield (m, *random_dj_parameters(m, rng))


def golay_suite(m_max: int = 6, draws: int = 200, seed: int = 0) -> list[Check]:
    """Exact complementarity and PEP <= 2N for Davis-Jedwab pairs."""
    pairs = failures = 0
    worst_ratio, worst_err_ratio = 0.0, 0.0
    for m, perm, coeffs, const in _dj_draws(m_max, draws, seed):
        q = generate_dj_golay(m, perm, coeffs, const)
        mate = dj_companion(q, m, perm, coeffs, const)
        pairs += 1
        if golay_violation(q, mate) is not None:
            failures += 1
        n = len(q)
        for s in (q, mate):
            est = pep(s)
            worst_ratio = max(worst_ratio, (est.value - est.error_bound) / (2 * n))
            worst_err_ratio = max(worst_err_ratio, est.error_bound / n)
    return [
        Check(f"golay complementarity, {pairs} pairs m<= {m_max}", "0 violations", f"{failures} violations", "exact", failures == 0),
        Check("golay PEP <= 2N", "max (PEP-err)/2N <= 1", f"{worst_ratio:.15g}", "error_bound", worst_ratio <= 1.0),
        Check("PEP error bound", "error_bound/N < 1e-6", f"{worst_err_ratio:.3g}", "1e-6", worst_err_ratio < 1e-6),
    ]


def bounds_suite(seed: int = 0) -> list[Check]:
    """Exact identities between the closed-form bounds."""
    checks = [Check("fact1(2)", "18/5", str(fact1_bound(2)), "exact", fact1_bound(2) == Fraction(18, 5))]
    bad = [n for n in range(1, 33) if theorem1_bound(ThresholdProfile(2, 1, n, 1)) != fact1_bound(n)]
    checks.append(Check("theorem1(x=2,y=1,n) == fact1(n), n=1..32", "all equal", f"{len(bad)} mismatches", "exact", not bad))

    rng = np.random.default_rng(seed)
    chain = envelope = 0
    for _ in range(100):
        x = Fraction(int(rng.integers(101, 1000)), 100)
        y = Fraction(int(rng.integers(100, 200)), 100)
        p = ThresholdProfile(x, y, int(rng.integers(1, 12)), int(rng.integers(1, 65)))
        chain += lemma1_pep_bound(p) / lemma2_pav(p.n, p.N) != theorem1_bound(p)
        envelope += not theorem1_bound(p) < corollary1_bound(p.x, p.y)
    checks.append(Check("lemma1/lemma2 == theorem1 (100 profiles)", "0 mismatches", f"{chain}", "exact", chain == 0))
    checks.append(Check("theorem1 < corollary1 (100 profiles)", "0 violations", f"{envelope}", "exact", envelope == 0))

    nonmono = 0
    for yk in range(10, 20):
        y = Fraction(yk, 10)
        vals = [theorem1_bound(ThresholdProfile(2, y, n, 1)) for n in range(1, 66)]
        nonmono += sum(b <= a for a, b in zip(vals, vals[1:]))
    checks.append(Check("theorem1 increasing in n (y=1.0..1.9, n<=65)", "0 violations", f"{nonmono}", "exact", nonmono == 0))
    return checks


def code_suite(n: int = 2, N: int = 16, samples: int = 10_000, seed: int = 42) -> list[Check]:
    """QAM code from Golay rows: sampled PMEPR against the x=2, y=1 bound."""
    profile = ThresholdProfile(2, 1, n, N)
    code = build_code(build_families(profile, "dj_golay"))
    res = empirical_pmepr(code, mode="sampled", samples=samples, seed=seed)
    bound = float(fact1_bound(n))
    pav = lemma2_pav(n, N)
    exact_pav = code.average_power_exact()
    return [
        Check(
            f"sampled PMEPR, n={n} N={N} samples={samples} seed={seed}",
            f"<= {bound:.12g}",
            f"{res.pmepr:.12g} (max PEP {res.max_pep:.12g})",
            "1e-6",
            res.pmepr <= bound + 1e-6,
        ),
        Check("exact P_av", f"{pav}", f"{exact_pav}", "1e-9", abs(float(exact_pav - pav)) <= 1e-9),
    ]


SUITES = {"golay": golay_suite, "bounds": bounds_suite, "code": code_suite}


def run(suite: str, **kwargs) -> list[Check]:
    names = list(SUITES) if suite == "all" else [suite]
    checks: list[Check] = []
    for name in names:
        fn = SUITES[name]
        params = fn.__code__.co_varnames[: fn.__code__.co_argcount]
        checks.extend(fn(**{k: v for k, v in kwargs.items() if k in params}))
    return checks
