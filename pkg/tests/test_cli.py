import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from fraclegendre.cli import ConfigError, fmt, parse_config
from fraclegendre.fracops import Grid, Scheme
from fraclegendre.variational import OperatorKind

from .cli_scenarios import (
    DIRICHLET_CLASSICAL,
    QUADRATIC,
    SCENARIOS,
    WEIGHTED_ARC,
    SYNTHETIC,
    UNIT_HALF,
    run_cli,
    run_scenario,
)


def rows_of(text):
    lines = [ln for ln in text.splitlines() if "=" not in ln]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def summary_of(text):
    (line,) = [ln for ln in text.splitlines() if "=" in ln]
    return dict(kv.split("=", 1) for kv in line.split(" "))


# {{{ config

def test_config_defaults():
    cfg = parse_config("alpha = 0.5\ninterval = 0, 1\n")
    assert cfg.npoints == 257
    assert cfg.scheme is Scheme.GrunwaldLetnikov
    assert cfg.operator_kind is OperatorKind.RiemannLiouville
    assert cfg.grid == Grid(0.0, 1.0, 257)


def test_config_full():
    cfg = parse_config(
        "# comment\nlagrangian = Dy^2  # trailing\nalpha=1\ninterval=-1,2\nboundary = 0, 3\n"
        "npoints = 33\nscheme = L1\noperator_kind = Caputo\ncandidate = x + 1\n"
    )
    assert cfg.lagrangian == "Dy^2" and cfg.alpha == 1.0 and cfg.interval == (-1.0, 2.0)
    assert cfg.boundary == (0.0, 3.0) and cfg.npoints == 33
    assert cfg.scheme is Scheme.L1 and cfg.operator_kind is OperatorKind.Caputo
    assert cfg.candidate == "x + 1"


@pytest.mark.parametrize(
    "text",
    [
        "interval = 0, 1",
        "alpha = 0.5",
        "alpha = 0.5\ninterval = 1, 0",
        "alpha = 1.5\ninterval = 0, 1",
        "alpha = half\ninterval = 0, 1",
        "alpha = 0.5\ninterval = 0",
        "alpha = 0.5\ninterval = 0, 1\nnpoints = 1",
        "alpha = 0.5\ninterval = 0, 1\nnpoints = many",
        "alpha = 0.5\ninterval = 0, 1\ncolour = red",
        "alpha = 0.5\nalpha = 0.6\ninterval = 0, 1",
        "alpha = 0.5\ninterval = 0, 1\nscheme = Euler",
        "alpha = 0.5\ninterval = 0, 1\njust some words",
        "alpha = 0.5\ninterval = 0, 1\ncandidate = x\ncandidate_file = y.csv",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_candidate_uses_only_x(tmp_path):
    code, _, err = run_cli(tmp_path, WEIGHTED_ARC.replace("candidate  = 0", "candidate = y"),
                           ["legendre"])
    assert code == 2
    assert "unknown identifier 'y'" in err


def test_fmt():
    assert fmt(0.1) == "0.1"
    assert fmt(math.inf) == "inf" and fmt(-math.inf) == "-inf" and fmt(math.nan) == "nan"
    assert fmt(np.float64(1 / 3)) == repr(1 / 3)
    assert fmt(True) == "yes" and fmt(np.bool_(False)) == "no"
    assert fmt(np.int64(7)) == "7"

# }}}


# {{{ deriv

def test_deriv_sqrt(tmp_path):
    code, out, _ = run_cli(tmp_path, UNIT_HALF, ["deriv", "--function", "x^0.5"])
    assert code == 0
    rows = rows_of(out)
    assert list(rows[0]) == ["index", "x", "value", "deriv_numeric", "deriv_exact", "abs_error"]
    assert len(rows) == 257
    # D^(1/2) x^(1/2) = Gamma(3/2) everywhere past the base point
    assert float(rows[100]["deriv_exact"]) == pytest.approx(math.gamma(1.5), rel=1e-15)
    err = [float(r["abs_error"]) for r in rows if float(r["x"]) >= 0.25]
    assert max(err) <= 1e-2


def test_deriv_zero(tmp_path):
    code, out, _ = run_cli(tmp_path, UNIT_HALF, ["deriv", "--function", "0"])
    assert code == 0
    assert all(float(r["deriv_numeric"]) == 0 for r in rows_of(out))


def test_deriv_constant_has_inf_literal(tmp_path):
    code, out, _ = run_cli(tmp_path, UNIT_HALF, ["deriv", "--function", "1"])
    assert code == 0
    rows = rows_of(out)
    assert rows[0]["deriv_exact"] == "inf"
    assert rows[0]["deriv_numeric"] == "inf"
    assert rows[0]["abs_error"] == "0.0"
    x = float(rows[64]["x"])
    assert float(rows[64]["deriv_exact"]) == pytest.approx(x**-0.5 / math.gamma(0.5), rel=1e-14)


def test_deriv_right_side(tmp_path):
    code, out, _ = run_cli(tmp_path, UNIT_HALF, ["deriv", "--function", "(1-x)^2", "--side", "right"])
    assert code == 0
    rows = rows_of(out)
    assert "deriv_exact" in rows[0]
    err = [float(r["abs_error"]) for r in rows[:-1]]
    assert max(err) <= 1e-2


def test_deriv_outside_catalog(tmp_path):
    code, out, _ = run_cli(tmp_path, UNIT_HALF, ["deriv", "--function", "sin(x)"])
    assert code == 0
    assert list(rows_of(out)[0]) == ["index", "x", "value", "deriv_numeric"]


def test_deriv_rejects_y(tmp_path):
    code, _, err = run_cli(tmp_path, UNIT_HALF, ["deriv", "--function", "Dy"])
    assert code == 2 and "error:" in err

# }}}


# {{{ el-residual

def test_el_residual_classical(tmp_path):
    code, out, _ = run_cli(tmp_path, DIRICHLET_CLASSICAL, ["el-residual"])
    assert code == 0
    s = summary_of(out)
    assert s["extremal"] == "yes"
    assert float(s["tol"]) == pytest.approx(10 / 256)
    assert list(rows_of(out)[0]) == ["index", "x", "y", "residual"]


def test_el_residual_of_y(tmp_path):
    code, out, _ = run_cli(tmp_path, DIRICHLET_CLASSICAL.replace("Dy^2", "y"), ["el-residual"])
    assert code == 0
    s = summary_of(out)
    assert s["extremal"] == "no"
    assert float(s["max_abs_residual"]) == pytest.approx(1.0)


def test_el_residual_missing_candidate(tmp_path):
    code, out, err = run_cli(tmp_path, "lagrangian = Dy^2\nalpha = 1\ninterval = 0, 1\n",
                             ["el-residual"])
    assert code == 2 and out == ""
    assert "candidate" in err


def test_el_residual_evaluation_failure(tmp_path):
    code, _, err = run_cli(tmp_path, DIRICHLET_CLASSICAL.replace("Dy^2", "log(y) + Dy"),
                           ["el-residual"])
    assert code == 4
    assert "node 0" in err

# }}}


# {{{ legendre

def test_legendre_weighted_arc(tmp_path):
    code, out, _ = run_cli(tmp_path, WEIGHTED_ARC, ["legendre"])
    assert code == 0
    s = summary_of(out)
    assert s["verdict"] == "NeitherSignCondition"
    changes = s["sign_changes"].strip("[]").split(",")
    assert len(changes) == 1 and abs(float(changes[0])) <= 2 / 256
    assert list(rows_of(out)[0]) == ["index", "x", "P"]


@pytest.mark.parametrize(("lagrangian", "verdict"), [("Dy^2", "NecessaryForMin"),
                                                    ("-(Dy^2)", "NecessaryForMax")])
def test_legendre_trivial(tmp_path, lagrangian, verdict):
    code, out, _ = run_cli(tmp_path, WEIGHTED_ARC.replace("x*sqrt(1+Dy^2)", lagrangian),
                           ["legendre"])
    assert code == 0
    assert summary_of(out) == {"verdict": verdict, "sign_changes": "[]"}


def test_legendre_from_samples_file(tmp_path):
    grid = Grid(-1.0, 1.0, 257)
    lines = ["x,y"] + [f"{x!r},{x * x!r}" for x in grid.nodes.tolist()]
    (tmp_path / "y.csv").write_text("\n".join(lines) + "\n")
    by_file = WEIGHTED_ARC.replace("candidate  = 0", "candidate_file = y.csv")
    code, out_file, _ = run_cli(tmp_path, by_file, ["legendre"], name="a.cfg")
    assert code == 0
    code, out_expr, _ = run_cli(tmp_path, WEIGHTED_ARC.replace("candidate  = 0", "candidate = x^2"),
                                ["legendre"], name="b.cfg")
    assert out_file == out_expr
    assert summary_of(out_file)["verdict"] == "NeitherSignCondition"


@pytest.mark.parametrize(
    "content",
    ["x,y\n0,0\n1,1\n", "x,y\n" + "0,0\n" * 257, "x,y\n0,zero\n"],
)
def test_bad_samples_file(tmp_path, content):
    (tmp_path / "y.csv").write_text(content)
    code, _, err = run_cli(tmp_path, WEIGHTED_ARC.replace("candidate  = 0", "candidate_file = y.csv"),
                           ["legendre"])
    assert code == 2 and "y.csv" in err


def test_missing_samples_file(tmp_path):
    code, _, _ = run_cli(tmp_path, WEIGHTED_ARC.replace("candidate  = 0", "candidate_file = no.csv"),
                         ["legendre"])
    assert code == 2

# }}}


# {{{ lemma-demo

def test_lemma_demo_synthetic(tmp_path):
    config, argv = SCENARIOS["lemma-synthetic"]
    code, out, _ = run_cli(tmp_path, config, argv)
    assert code == 0
    rows = rows_of(out)
    assert list(rows[0]) == ["d", "form_value", "bound", "corrected_bound"]
    assert [float(r["d"]) for r in rows] == [0.5, 0.25, 0.125, 0.0625]
    assert all(float(r["form_value"]) < 0 for r in rows)
    assert summary_of(out) == {"negative_where_bound_negative": "yes"}


def test_lemma_demo_violated_hypothesis(tmp_path):
    code, out, err = run_cli(
        tmp_path, SYNTHETIC,
        ["lemma-demo", "--c", "0", "--d-list", "0.5", "--K1", "1", "--K2", "0.1", "--K3", "0.1",
         "--P=1", "--Q=0", "--R=0"],
    )
    assert code == 3
    assert "node 0" in err


def test_lemma_demo_empty_d_list(tmp_path):
    code, _, err = run_cli(
        tmp_path, SYNTHETIC,
        ["lemma-demo", "--c", "0", "--d-list", "", "--K1", "1", "--K2", "0.1", "--K3", "0.1",
         "--P=-1", "--Q=0", "--R=0"],
    )
    assert code == 2 and "d-list" in err


def test_lemma_demo_from_candidate(tmp_path):
    # P = x on [-1, 1] is below -K1 = -0.5 on [-1, -0.5]
    code, out, _ = run_cli(
        tmp_path, WEIGHTED_ARC,
        ["lemma-demo", "--c", "-1", "--d-list", "0.5,0.25", "--K1", "0.5", "--K2", "0.1",
         "--K3", "0.1"],
    )
    assert code == 0
    assert all(float(r["form_value"]) < 0 for r in rows_of(out))


def test_lemma_demo_partial_coefficients(tmp_path):
    code, _, _ = run_cli(
        tmp_path, SYNTHETIC,
        ["lemma-demo", "--c", "0", "--d-list", "0.5", "--K1", "1", "--K2", "0.1", "--K3", "0.1",
         "--P=-1"],
    )
    assert code == 2

# }}}


# {{{ second-variation

def test_second_variation_zero_eta(tmp_path):
    code, out, _ = run_cli(tmp_path, WEIGHTED_ARC, ["second-variation", "--eta", "0"])
    assert code == 0
    assert float(summary_of(out)["second_variation"]) == 0.0
    assert all(float(r["quotient"]) == 0.0 for r in rows_of(out))


def test_second_variation_quadratic(tmp_path):
    code, out, _ = run_cli(tmp_path, QUADRATIC, ["second-variation", "--eta", "x*(1-x)"])
    assert code == 0
    value = float(summary_of(out)["second_variation"])
    for r in rows_of(out):
        assert abs(float(r["quotient"]) - value) <= 1e-8 * abs(value)


def test_second_variation_weighted_arc_bump(tmp_path):
    code, out, _ = run_cli(tmp_path, WEIGHTED_ARC, ["second-variation", "--bump", "0.1", "0.5"])
    assert code == 0
    value = float(summary_of(out)["second_variation"])
    assert math.isfinite(value) and value > 0
    diffs = [float(r["abs_diff"]) for r in rows_of(out)]
    assert diffs[0] > diffs[1] > diffs[2]


def test_second_variation_eta_boundary(tmp_path):
    code, _, err = run_cli(tmp_path, WEIGHTED_ARC, ["second-variation", "--eta", "x"])
    assert code == 2 and "eta" in err


def test_second_variation_bad_bump(tmp_path):
    code, _, _ = run_cli(tmp_path, WEIGHTED_ARC, ["second-variation", "--bump", "0.9", "0.5"])
    assert code == 2

# }}}


# {{{ plumbing

def test_missing_config(tmp_path):
    from fraclegendre.cli import main

    err = io.StringIO()
    code = main(["legendre", "--config", str(tmp_path / "none.cfg")], stdout=io.StringIO(),
                stderr=err)
    assert code == 2 and "cannot read config" in err.getvalue()


def test_usage_errors(capsys):
    from fraclegendre.cli import main

    assert main([]) == 2
    assert main(["legendre"]) == 2
    assert main(["frobnicate", "--config", "x"]) == 2


def test_output_key_in_config(tmp_path):
    code, out, _ = run_cli(tmp_path, WEIGHTED_ARC + "output = p.csv\n", ["legendre"])
    assert code == 0
    assert out.startswith("verdict=")
    assert (tmp_path / "p.csv").read_text().startswith("index,x,P\n")


def test_csv_is_lf_terminated(tmp_path):
    _, data, _ = run_scenario(tmp_path, "legendre-weighted-arc")
    assert b"\r" not in data and data.endswith(b"\n")
    data.decode("utf-8")


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenarios_are_deterministic(tmp_path, name):
    runs = []
    for sub in ("a", "b"):
        (tmp_path / sub).mkdir()
        runs.append(run_scenario(tmp_path / sub, name))
    first, second = runs
    assert first[0] == 0
    assert first[1] and first[1] == second[1]
    assert first[2] == second[2]


def test_module_entry_point(tmp_path):
    (tmp_path / "run.cfg").write_text(WEIGHTED_ARC)
    proc = subprocess.run(
        [sys.executable, "-m", "fraclegendre", "legendre", "--config", str(tmp_path / "run.cfg")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "verdict=NeitherSignCondition" in proc.stdout

# }}}
