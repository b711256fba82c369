import csv
import json
from unittest import mock

import jsonschema
import numpy as np
import pytest

from nilpotent_commutator.cli import RUN_REPORT_SCHEMA, main
from nilpotent_commutator.linalg import (
    InsufficientData,
    NotNilpotent,
    commutator,
    embed_padded,
    read_matrix,
    write_matrix,
)


@pytest.fixture
def jordan4_path(tmp_path, jordan4):
    path = tmp_path / "j4.mtx"
    write_matrix(path, jordan4)
    return path


def factor(path, out_dir, *extra):
    return main(["factor", "--input", str(path), "--out-dir", str(out_dir), *extra])


def test_factor_writes_pair_and_report(tmp_path, jordan4_path, jordan4):
    out = tmp_path / "out"
    assert factor(jordan4_path, out) == 0

    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, RUN_REPORT_SCHEMA)
    assert report["mode"] == "theorem"
    assert report["exponent_t"] == 0.5
    assert report["partition"] == [1, 1, 1, 1]
    assert report["embed_dim"] == 4
    assert report["residual_rel"] <= 1e-12
    assert report["max_witness_norm"] <= 1 + 1e-8

    b, c = read_matrix(out / "B.mtx"), read_matrix(out / "C.mtx")
    np.testing.assert_allclose(commutator(b, c), jordan4, atol=1e-12)


def test_factor_proposition_mode(tmp_path, jordan4_path):
    out = tmp_path / "out"
    assert factor(jordan4_path, out, "--mode", "proposition", "--root", "eigh") == 0
    report = json.loads((out / "report.json").read_text())
    assert report["exponent_t"] == 1.0
    assert report["max_witness_norm"] == 0.0
    np.testing.assert_allclose(read_matrix(out / "C.mtx"), np.diag([0, 1, 2, 3]), atol=1e-12)


def test_factor_pads_short_flags(tmp_path):
    path = tmp_path / "e12.mtx"
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    write_matrix(path, a)
    assert factor(path, tmp_path / "out") == 0
    b, c = read_matrix(tmp_path / "out" / "B.mtx"), read_matrix(tmp_path / "out" / "C.mtx")
    assert b.shape == (4, 4)
    np.testing.assert_allclose(commutator(b, c), embed_padded(a, 4), atol=1e-14)


def test_factor_rejects_non_nilpotent_input(tmp_path, capsys):
    path = tmp_path / "eye.mtx"
    write_matrix(path, np.eye(3))
    assert factor(path, tmp_path / "out") == 2
    assert capsys.readouterr().err.startswith("NotNilpotent:")
    assert not (tmp_path / "out" / "report.json").exists()


def test_factor_zero_matrix(tmp_path):
    path = tmp_path / "zero.mtx"
    write_matrix(path, np.zeros((3, 3)))
    assert factor(path, tmp_path / "out") == 0
    assert not np.any(read_matrix(tmp_path / "out" / "B.mtx"))


def test_unreadable_input(tmp_path, capsys):
    path = tmp_path / "garbage.mtx"
    path.write_text("this is not a matrix\n")
    assert factor(path, tmp_path / "out") == 1
    assert "MatrixFormatError" in capsys.readouterr().err
    assert factor(tmp_path / "missing.mtx", tmp_path / "out") == 1


def test_verify_exit_codes(tmp_path, jordan4_path, capsys):
    out = tmp_path / "out"
    assert factor(jordan4_path, out) == 0
    b_path, c_path = out / "B.mtx", out / "C.mtx"

    assert main(["verify", str(jordan4_path), str(b_path), str(c_path)]) == 0
    assert capsys.readouterr().out.startswith("residual_rel ")

    zero_c = tmp_path / "zero_c.mtx"
    write_matrix(zero_c, np.zeros((4, 4)))
    assert main(["verify", str(jordan4_path), str(b_path), str(zero_c)]) == 3

    small_b = tmp_path / "small_b.mtx"
    write_matrix(small_b, np.zeros((3, 3)))
    assert main(["verify", str(jordan4_path), str(small_b), str(c_path)]) == 4


def test_gen(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(
        json.dumps(
            {
                "jordan_sizes": [3, 2],
                "decay": {"kind": "geometric", "rho": 0.5},
                "conjugate": True,
                "seed": 1,
            }
        )
    )
    out = tmp_path / "a.mtx"
    assert main(["gen", "--spec", str(spec), "--out", str(out)]) == 0
    a = read_matrix(out)
    assert a.shape == (5, 5)
    assert np.linalg.norm(np.linalg.matrix_power(a, 3)) <= 1e-12

    spec.write_text("{oops")
    assert main(["gen", "--spec", str(spec), "--out", str(out)]) == 1
    assert main(["gen", "--spec", str(tmp_path / "missing.json"), "--out", str(out)]) == 1


def test_scan(tmp_path):
    out = tmp_path / "scan.csv"
    argv = ["scan", "--n-range", "4..5", "--dims", "5,8", "--trials", "2", "--out", str(out)]
    assert main(argv) == 0
    with open(out, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 8
    assert {row["status"] for row in rows} == {"ok"}


def test_scan_with_timeout(tmp_path):
    out = tmp_path / "scan.csv"
    argv = ["scan", "--n-range", "4..4", "--dims", "6", "--trials", "2", "--out", str(out)]
    assert main([*argv, "--timeout", "120"]) == 0
    with open(out, newline="") as f:
        assert {row["status"] for row in csv.DictReader(f)} == {"ok"}


def test_scan_exit_code_follows_residuals(tmp_path):
    out = tmp_path / "scan.csv"
    argv = ["scan", "--n-range", "4..4", "--dims", "4", "--trials", "2", "--out", str(out)]
    with mock.patch(
        "nilpotent_commutator.scan.construct_theorem", side_effect=NotNilpotent("boom")
    ):
        assert main(argv) == 3
    with mock.patch(
        "nilpotent_commutator.scan.exponent_report", side_effect=InsufficientData("flat")
    ):
        assert main(argv) == 0
    with open(out, newline="") as f:
        assert {row["status"] for row in csv.DictReader(f)} == {"InsufficientData"}


@pytest.mark.parametrize(
    "argv",
    [
        ["scan", "--n-range", "4..4", "--dims", "", "--out", "x.csv"],
        ["scan", "--n-range", "5..4", "--dims", "8", "--out", "x.csv"],
        ["scan", "--n-range", "4..4", "--dims", "8", "--decay", "cubic:1", "--out", "x.csv"],
        ["factor"],
        ["unknown"],
    ],
)
def test_argument_errors_exit_with_one(argv):
    assert main(argv) == 1
