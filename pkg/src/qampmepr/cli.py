"""Command-line interface.

Exit codes: 0 success, 1 a check failed, 2 usage or domain error, 3 I/O or
parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from qampmepr import fileio, verify
from qampmepr.bounds import BoundReport, ThresholdProfile
from qampmepr.envelope import CarrierConfig, CodeSpec, max_pep, mean_power, pep
from qampmepr.errors import ArgumentError, EnumerationLimitError, FormatError
from qampmepr.qammap import compose_qam, decompose_qam
from qampmepr.seqcore import (
    QuaternarySequence,
    all_dj_golay,
    dj_companion,
    generate_dj_golay,
    golay_violation,
    random_dj_parameters,
)
from qampmepr.setbuilder import (
    ENUMERATION_LIMIT,
    MATERIALIZATION_CAP,
    build_code,
    build_families,
    empirical_pmepr,
    family_report,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    carrier: CarrierConfig = CarrierConfig()
    oversampling: int = 16
    refine: bool = True
    seed: int = 0
    enumeration_cap: int = ENUMERATION_LIMIT
    materialization_cap: int = MATERIALIZATION_CAP
    output_format: str = "text"

    def __post_init__(self) -> None:
        if self.oversampling < 4:
            raise ArgumentError("oversampling must be >= 4")
        if self.enumeration_cap < 1 or self.materialization_cap < 1:
            raise ArgumentError("caps must be >= 1")


def _run_config(args: argparse.Namespace) -> RunConfig:
    values = fileio.parse_config(args.config) if getattr(args, "config", None) else {}
    carrier = {k: values.pop(k) for k in ("f0", "delta_f", "T") if k in values}
    cfg = RunConfig(carrier=CarrierConfig(**carrier), **values)
    overrides = {
        k: getattr(args, k)
        for k in ("oversampling", "refine", "seed", "enumeration_cap", "materialization_cap", "output_format")
        if getattr(args, k, None) is not None
    }
    return replace(cfg, **overrides)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ArgumentError(f"expected comma-separated integers, got {text!r}") from exc


# golay ----------------------------------------------------------------------

def cmd_golay_gen(args, cfg: RunConfig) -> int:
    m = args.m
    entries = []
    if args.all:
        for row in all_dj_golay(m):
            entries.append({"sequence": fileio.quaternary_to_json(QuaternarySequence(row.tolist()))})
    else:
        if args.count:
            rng = np.random.default_rng(cfg.seed)
            params = [random_dj_parameters(m, rng) for _ in range(args.count)]
        else:
            perm = _ints(args.perm) if args.perm else list(range(m))
            coeffs = _ints(args.coeffs) if args.coeffs else [0] * m
            params = [(perm, coeffs, args.constant)]
        for perm, coeffs, const in params:
            q = generate_dj_golay(m, perm, coeffs, const)
            entries.append(
                {
                    "params": {"m": m, "perm": list(perm), "coeffs": list(coeffs), "constant": const},
                    "sequence": fileio.quaternary_to_json(q),
                    "companion": fileio.quaternary_to_json(dj_companion(q, m, perm, coeffs, const)),
                }
            )
    doc = {"seed": cfg.seed, "count": len(entries), "sequences": entries} if args.count else entries
    _emit(fileio.write_json(doc, None), args.out)
    if args.out:
        print(f"{len(entries)} sequences written to {args.out}", file=sys.stderr)
    return EXIT_OK


def _first_sequence(path: str) -> QuaternarySequence:
    data = fileio.read_json(path)
    if isinstance(data, dict) and "sequences" in data:
        data = data["sequences"]
    if isinstance(data, list):
        if not data:
            raise FormatError(f"{path}: no sequences")
        data = data[0]
    if isinstance(data, dict) and "sequence" in data:
        data = data["sequence"]
    return fileio.require_quaternary(fileio.sequence_from_json(data, path), path)


def cmd_golay_check(args, cfg: RunConfig) -> int:
    a, b = _first_sequence(args.a), _first_sequence(args.b)
    tau = golay_violation(a, b)
    if tau is None:
        print("PASS")
        return EXIT_OK
    print(f"FAIL at tau={tau}")
    return EXIT_CHECK_FAILED


# analyze --------------------------------------------------------------------

def _load_all(paths: list[str]):
    seqs = []
    for p in paths:
        seqs.extend(fileio.load_sequences(p))
    if not seqs:
        raise FormatError("no sequences in input")
    return seqs


def cmd_analyze_pep(args, cfg: RunConfig) -> int:
    rows = []
    for k, s in enumerate(_load_all(args.files)):
        est = pep(s, cfg.carrier, cfg.oversampling, cfg.refine)
        rows.append(
            {
                "sequence_id": k,
                "N": len(s),
                "pep": f"{est.value:.12g}",
                "error_bound": f"{est.error_bound:.3g}",
                "pmepr_vs_meanN": f"{est.value / mean_power(s):.12g}",
            }
        )
    _emit(fileio.format_csv(rows, ["sequence_id", "N", "pep", "error_bound", "pmepr_vs_meanN"]), args.out)
    return EXIT_OK


def cmd_analyze_pmepr(args, cfg: RunConfig) -> int:
    code = CodeSpec(_load_all(args.files))
    peak = max_pep(code.matrix, cfg.oversampling, cfg.refine)
    p_av = code.average_power()
    row = {
        "codewords": len(code),
        "N": code.length,
        "max_pep": f"{peak.value:.12g}",
        "error_bound": f"{peak.error_bound:.3g}",
        "p_av": f"{p_av:.12g}",
        "pmepr": f"{peak.value / p_av:.12g}",
    }
    _emit(fileio.format_csv([row], list(row)), args.out)
    return EXIT_OK


# qam ------------------------------------------------------------------------

def cmd_qam_compose(args, cfg: RunConfig) -> int:
    a = compose_qam(fileio.load_qam_matrix(args.file))
    _emit(fileio.write_json(fileio.complex_to_json(a), None), args.out)
    return EXIT_OK


def cmd_qam_decompose(args, cfg: RunConfig) -> int:
    seqs = fileio.load_sequences(args.file)
    m = decompose_qam(seqs[0], args.n)
    _emit(fileio.write_json(fileio.qam_matrix_to_json(m), None), args.out)
    return EXIT_OK


# bounds ---------------------------------------------------------------------

def cmd_bounds(args, cfg: RunConfig) -> int:
    profile = ThresholdProfile(args.x, args.y, args.n, args.N)
    report = BoundReport.evaluate(profile)
    values = report.as_floats()
    if cfg.output_format == "json":
        doc = {"x": str(profile.x), "y": str(profile.y), "n": profile.n, "N": profile.N}
        doc.update({k: {"value": v, "exact": str(getattr(report, k))} for k, v in values.items()})
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
    elif cfg.output_format == "csv":
        _emit(fileio.format_csv([{k: f"{v:.15g}" for k, v in values.items()}], list(values)), args.out)
    else:
        width = max(map(len, values))
        lines = [f"profile: x={profile.x} y={profile.y} n={profile.n} N={profile.N}"]
        lines += [f"{k.ljust(width)}  {v:.15g}  ({getattr(report, k)})" for k, v in values.items()]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# family / code --------------------------------------------------------------

def _profile_families(args, cfg: RunConfig):
    profile = ThresholdProfile(args.x, args.y, args.n, args.N)
    user = None
    if args.source == "user_supplied":
        if not args.families:
            raise ArgumentError("--source user_supplied needs --families FILE")
        user = fileio.load_families(args.families)
    fams = build_families(profile, args.source, user, cfg.oversampling, cfg.enumeration_cap)
    return profile, fams


def cmd_family_search(args, cfg: RunConfig) -> int:
    _, fams = _profile_families(args, cfg)
    _emit(fileio.write_json([fileio.family_to_json(f) for f in fams], None), args.out)
    for f in fams:
        print(f"level {f.level}: {len(f)} members (threshold {f.threshold:.6g})", file=sys.stderr)
    return EXIT_OK


def cmd_family_report(args, cfg: RunConfig) -> int:
    profile, fams = _profile_families(args, cfg)
    report = family_report(fams, profile)
    header = f"product_size={report.product_size} i0={report.saturation_index}"
    _emit(fileio.format_csv(report.rows(), ["level", "size", "threshold", "i0_flag"], header), args.out)
    return EXIT_OK


def _families_for_code(args, cfg: RunConfig):
    if args.families and args.source != "user_supplied":
        return fileio.load_families(args.families)
    return _profile_families(args, cfg)[1]


def cmd_code_build(args, cfg: RunConfig) -> int:
    code = build_code(_families_for_code(args, cfg), cfg.materialization_cap)
    table = code.code_spec()
    _emit(fileio.write_json([fileio.complex_to_json(row) for row in table.matrix], None), args.out)
    print(f"{len(table)} codewords", file=sys.stderr)
    return EXIT_OK


def cmd_code_measure(args, cfg: RunConfig) -> int:
    code = build_code(_families_for_code(args, cfg), cfg.materialization_cap)
    res = empirical_pmepr(code, cfg.carrier, args.mode, args.samples, cfg.seed, cfg.oversampling, cfg.refine)
    header = f"seed={cfg.seed} codewords={code.size}"
    _emit(fileio.format_csv([res.csv_row()], ["mode", "samples", "seed", "max_pep", "p_av", "pmepr"], header), args.out)
    return EXIT_OK


# verify ---------------------------------------------------------------------

def cmd_verify(args, cfg: RunConfig) -> int:
    checks = verify.run(
        args.suite, m_max=args.m_max, draws=args.draws, n=args.n, N=args.N, samples=args.samples, seed=cfg.seed
    )
    lines = [f"# verify suite={args.suite} seed={cfg.seed}"] + [c.line() for c in checks]
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file (f0, delta_f, T, oversampling, refine, ...)")
    p.add_argument("--oversampling", type=int)
    p.add_argument("--refine", dest="refine", action="store_true", default=None)
    p.add_argument("--no-refine", dest="refine", action="store_false")
    p.add_argument("--seed", type=int)
    p.add_argument("--enumeration-cap", dest="enumeration_cap", type=int)
    p.add_argument("--materialization-cap", dest="materialization_cap", type=int)
    p.add_argument("--format", dest="output_format", choices=["json", "csv", "text"])
    p.add_argument("--out", "-o", help="output file (default stdout)")


def _add_profile(p: argparse.ArgumentParser, n: int = 2, N: int = 4) -> None:
    p.add_argument("--x", default="2")
    p.add_argument("--y", default="1")
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--N", type=int, default=N)
    p.add_argument("--source", choices=["exhaustive", "dj_golay", "user_supplied"], default="exhaustive")
    p.add_argument("--families", help="family JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qampmepr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    golay = sub.add_parser("golay", help="Davis-Jedwab Golay sequences").add_subparsers(dest="action", required=True)
    p = golay.add_parser("gen")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--perm", help="comma-separated permutation of 0..m-1")
    p.add_argument("--coeffs", help="comma-separated linear coefficients in Z4")
    p.add_argument("--constant", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="every distinct sequence of length 2**m")
    g.add_argument("--count", type=int, help="random parameter draws (seeded)")
    _add_common(p)
    p.set_defaults(func=cmd_golay_gen)
    p = golay.add_parser("check")
    p.add_argument("a")
    p.add_argument("b")
    _add_common(p)
    p.set_defaults(func=cmd_golay_check)

    analyze = sub.add_parser("analyze", help="PEP and PMEPR of sequence files").add_subparsers(dest="action", required=True)
    for name, func in (("pep", cmd_analyze_pep), ("pmepr", cmd_analyze_pmepr)):
        p = analyze.add_parser(name)
        p.add_argument("files", nargs="+")
        _add_common(p)
        p.set_defaults(func=func)

    qam = sub.add_parser("qam", help="compose/decompose QAM sequences").add_subparsers(dest="action", required=True)
    p = qam.add_parser("compose")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_qam_compose)
    p = qam.add_parser("decompose")
    p.add_argument("file")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_qam_decompose)

    p = sub.add_parser("bounds", help="closed-form PMEPR bounds")
    p.add_argument("action", nargs="?", choices=["eval"], default="eval")
    p.add_argument("--x", default="2")
    p.add_argument("--y", default="1")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--N", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    family = sub.add_parser("family", help="PEP-thresholded families").add_subparsers(dest="action", required=True)
    for name, func in (("search", cmd_family_search), ("report", cmd_family_report)):
        p = family.add_parser(name)
        _add_profile(p)
        _add_common(p)
        p.set_defaults(func=func)

    code = sub.add_parser("code", help="product QAM codes").add_subparsers(dest="action", required=True)
    p = code.add_parser("build")
    _add_profile(p)
    _add_common(p)
    p.set_defaults(func=cmd_code_build)
    p = code.add_parser("measure")
    _add_profile(p)
    p.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    p.add_argument("--samples", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(func=cmd_code_measure)

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--suite", choices=["all", "golay", "bounds", "code"], default="all")
    p.add_argument("--m-max", dest="m_max", type=int, default=6)
    p.add_argument("--draws", type=int, default=200)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--samples", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _run_config(args)
        return args.func(args, cfg)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArgumentError, EnumerationLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
