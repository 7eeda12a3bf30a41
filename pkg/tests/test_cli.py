"""CLI subcommands, exit codes and file formats."""

import json

import numpy as np
import pytest

from qampmepr import fileio
from qampmepr.cli import main
from qampmepr.errors import FormatError
from qampmepr.qammap import QamMatrix, compose_qam
from qampmepr.seqcore import QuaternarySequence


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def quat(values):
    return {"type": "quaternary", "n": len(values), "values": list(values)}


class TestGolay:
    def test_gen_all(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert main(["golay", "gen", "--m", "2", "--all", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert len(data) == 64
        assert len({tuple(d["sequence"]["values"]) for d in data}) == 64

    def test_gen_and_check(self, tmp_path, capsys):
        out = tmp_path / "a.json"
        assert main(["golay", "gen", "--m", "3", "--perm", "2,0,1", "--coeffs", "1,3,0", "--constant", "2", "-o", str(out)]) == 0
        entry = json.loads(out.read_text())[0]
        b = write(tmp_path / "b.json", entry["companion"])
        capsys.readouterr()
        assert main(["golay", "check", str(out), b]) == 0
        assert capsys.readouterr().out.strip() == "PASS"

    def test_check_failure(self, tmp_path, capsys):
        z = write(tmp_path / "z.json", quat([0, 0, 0, 0]))
        assert main(["golay", "check", z, z]) == 1
        assert capsys.readouterr().out.strip() == "FAIL at tau=1"

    def test_random_draws_echo_seed(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["golay", "gen", "--m", "4", "--count", "5", "--seed", "9", "-o", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["seed"] == 9 and data["count"] == 5

    def test_malformed_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"type": "quaternary",\n "values": [0, 1,,]}')
        assert main(["golay", "check", str(bad), str(bad)]) == 3
        assert "line 2" in capsys.readouterr().err


class TestAnalyze:
    def test_reads_generator_output(self, tmp_path, capsys):
        f = tmp_path / "r.json"
        main(["golay", "gen", "--m", "3", "--count", "4", "--seed", "1", "-o", str(f)])
        capsys.readouterr()
        assert main(["analyze", "pep", str(f)]) == 0
        rows = capsys.readouterr().out.strip().splitlines()[1:]
        assert len(rows) == 8
        assert all(float(r.split(",")[2]) <= 16 + float(r.split(",")[3]) for r in rows)

    def test_pep_all_ones(self, tmp_path, capsys):
        f = write(tmp_path / "s.json", quat([0, 0, 0, 0]))
        assert main(["analyze", "pep", f]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "sequence_id,N,pep,error_bound,pmepr_vs_meanN"
        row = lines[1].split(",")
        assert float(row[2]) == pytest.approx(16)

    def test_pep_golay(self, tmp_path, capsys):
        f = tmp_path / "g.json"
        main(["golay", "gen", "--m", "3", "--coeffs", "1,2,3", "-o", str(f)])
        seq = write(tmp_path / "s.json", json.loads(f.read_text())[0]["sequence"])
        capsys.readouterr()
        assert main(["analyze", "pep", seq]) == 0
        row = capsys.readouterr().out.strip().splitlines()[1].split(",")
        assert float(row[2]) <= 16 + float(row[3])

    def test_pmepr_two_codewords(self, tmp_path, capsys):
        f = write(tmp_path / "c.json", [quat([0, 0]), quat([0, 2])])
        assert main(["analyze", "pmepr", f]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        header, row = lines[0].split(","), lines[1].split(",")
        assert float(row[header.index("pmepr")]) == pytest.approx(2)
        assert float(row[header.index("p_av")]) == 2

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# carrier grid\nf0 = 3\ndelta_f = 2\nT = 1\noversampling = 8\nrefine = off\n")
        f = write(tmp_path / "s.json", quat([0, 0, 0, 0]))
        assert main(["analyze", "pep", f, "--config", str(cfg)]) == 0
        assert float(capsys.readouterr().out.splitlines()[1].split(",")[2]) == pytest.approx(16)

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("delta_f = 2\nT = 0.3\n")
        f = write(tmp_path / "s.json", quat([0, 0]))
        assert main(["analyze", "pep", f, "--config", str(cfg)]) == 2
        cfg.write_text("colour = blue\n")
        assert main(["analyze", "pep", f, "--config", str(cfg)]) == 3


class TestQam:
    def test_compose(self, tmp_path, capsys):
        f = write(tmp_path / "m.json", {"n": 2, "N": 1, "rows": [[0], [0]]})
        assert main(["qam", "compose", f]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["type"] == "complex"
        assert out["values"] == [[pytest.approx(1.5), pytest.approx(1.5)]]

    def test_round_trip(self, tmp_path, capsys, rng):
        m = QamMatrix(rng.integers(0, 4, (3, 6)).tolist())
        f = write(tmp_path / "m.json", fileio.qam_matrix_to_json(m))
        c = tmp_path / "c.json"
        assert main(["qam", "compose", f, "-o", str(c)]) == 0
        assert main(["qam", "decompose", str(c), "--n", "3"]) == 0
        assert json.loads(capsys.readouterr().out) == fileio.qam_matrix_to_json(m)

    def test_off_grid(self, tmp_path, capsys):
        f = write(tmp_path / "c.json", {"type": "complex", "values": [[0.5, 0.5], [0.7, 0.5]]})
        assert main(["qam", "decompose", f, "--n", "1"]) == 2
        assert "symbol 1" in capsys.readouterr().err


class TestBounds:
    def test_reduction(self, capsys):
        assert main(["bounds", "--x", "2", "--y", "1", "--n", "2", "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["theorem1"]["exact"] == out["fact1"]["exact"] == "18/5"

    def test_eval_alias_and_small_y(self, capsys):
        assert main(["bounds", "eval", "--x", "2", "--y", "1.01", "--n", "4", "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["fact1"]["value"] < out["theorem1"]["value"] < 1.05 * out["fact1"]["value"]

    def test_domain_edge(self):
        assert main(["bounds", "--x", "2", "--y", "2"]) == 2

    def test_text(self, capsys):
        assert main(["bounds", "--n", "2", "--N", "16"]) == 0
        assert "lemma1_pep" in capsys.readouterr().out


class TestFamilyAndCode:
    def test_search_writes_families(self, tmp_path):
        out = tmp_path / "f.json"
        assert main(["family", "search", "--x", "2", "--y", "1.25", "--n", "2", "--N", "4", "-o", str(out)]) == 0
        fams = fileio.load_families(out)
        assert [len(f) for f in fams] == [64, 144]
        assert all(f.closed for f in fams)

    def test_report(self, capsys):
        assert main(["family", "report", "--x", "2", "--y", "1.25", "--n", "3", "--N", "4"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[1] == "level,size,threshold,i0_flag"
        assert lines[-1].startswith("2,256,")

    def test_enumeration_guard(self):
        assert main(["family", "search", "--N", "12"]) == 2

    def test_measure_exact(self, capsys):
        assert main(["code", "measure", "--x", "2", "--y", "1", "--n", "2", "--N", "4"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        row = dict(zip(lines[1].split(","), lines[2].split(",")))
        assert row["mode"] == "exact"
        assert float(row["p_av"]) == 10
        assert float(row["pmepr"]) <= 3.6 + 1e-9

    def test_measure_from_family_file(self, tmp_path, capsys):
        out = tmp_path / "f.json"
        main(["family", "search", "--n", "2", "--N", "4", "-o", str(out)])
        capsys.readouterr()
        assert main(["code", "measure", "--families", str(out), "--mode", "sampled", "--samples", "500", "--seed", "4"]) == 0
        text = capsys.readouterr().out
        assert text.startswith("# seed=4")

    def test_measure_deterministic(self, capsys):
        args = ["code", "measure", "--source", "dj_golay", "--n", "2", "--N", "8", "--mode", "sampled", "--samples", "300", "--seed", "5"]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first

    def test_build(self, tmp_path):
        out = tmp_path / "code.json"
        assert main(["code", "build", "--n", "1", "--N", "2", "-o", str(out)]) == 0
        assert len(json.loads(out.read_text())) == 16


class TestVerify:
    def test_bounds_suite(self, capsys):
        assert main(["verify", "--suite", "bounds"]) == 0
        assert "checks passed" in capsys.readouterr().out

    def test_golay_suite(self, capsys):
        assert main(["verify", "--suite", "golay", "--m-max", "6", "--draws", "20"]) == 0

    def test_code_suite_small(self, capsys):
        assert main(["verify", "--suite", "code", "--n", "2", "--N", "8", "--samples", "500", "--seed", "42"]) == 0
        assert "seed=42" in capsys.readouterr().out


class TestFormats:
    def test_sequence_round_trip(self):
        q = QuaternarySequence([0, 3, 1])
        assert fileio.sequence_from_json(fileio.quaternary_to_json(q)) == q
        a = compose_qam(QamMatrix([[0, 1], [2, 3]]))
        back = fileio.sequence_from_json(fileio.complex_to_json(a))
        assert np.allclose(back.values, a.values)

    def test_declared_length_mismatch(self):
        with pytest.raises(FormatError):
            fileio.sequence_from_json({"type": "quaternary", "n": 3, "values": [0, 1]})

    def test_family_schema(self, tmp_path):
        path = tmp_path / "f.json"
        path.write_text(json.dumps({"N": 2, "level": 0, "threshold": 4, "members": [[0, 0], [1, 1], [2, 2], [3, 3]]}))
        (f,) = fileio.load_families(path)
        assert f.closed and len(f) == 4 and f.threshold == 4.0
        assert set(fileio.family_to_json(f)) == {"N", "level", "threshold", "members"}

    def test_qam_matrix_schema(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"n": 3, "N": 1, "rows": [[0], [1]]}))
        with pytest.raises(FormatError):
            fileio.load_qam_matrix(path)
