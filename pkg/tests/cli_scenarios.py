"""CLI scenarios shared by the CLI tests and the determinism criterion."""

import io
from pathlib import Path

from fraclegendre.cli import main

WEIGHTED_ARC = """\
lagrangian = x*sqrt(1+Dy^2)
alpha      = 0.5
interval   = -1, 1
candidate  = 0
"""

DIRICHLET_CLASSICAL = """\
lagrangian = Dy^2
alpha      = 1
interval   = 0, 1
candidate  = x
"""

UNIT_HALF = """\
alpha    = 0.5
interval = 0, 1
npoints  = 257
"""

QUADRATIC = """\
lagrangian = y^2+Dy^2
alpha      = 0.5
interval   = 0, 1
candidate  = x^2
"""

SYNTHETIC = """\
alpha    = 0.5
interval = 0, 1
npoints  = 1025
"""

# name -> (config text, argv after the subcommand's --config)
SCENARIOS = {
    "deriv-sqrt": (UNIT_HALF, ["deriv", "--function", "x^0.5"]),
    "deriv-const": (UNIT_HALF, ["deriv", "--function", "1"]),
    "deriv-zero": (UNIT_HALF, ["deriv", "--function", "0"]),
    "el-classical": (DIRICHLET_CLASSICAL, ["el-residual"]),
    "legendre-weighted-arc": (WEIGHTED_ARC, ["legendre"]),
    "legendre-min": (
        WEIGHTED_ARC.replace("x*sqrt(1+Dy^2)", "Dy^2"), ["legendre"]
    ),
    "lemma-synthetic": (
        SYNTHETIC,
        ["lemma-demo", "--c", "0", "--d-list", "0.5,0.25,0.125,0.0625",
         "--K1", "1", "--K2", "0.1", "--K3", "0.1", "--P=-1", "--Q=0.1", "--R=0.1"],
    ),
    "second-variation-quadratic": (
        QUADRATIC, ["second-variation", "--eta", "x*(1-x)"]
    ),
    "second-variation-weighted-arc": (
        WEIGHTED_ARC, ["second-variation", "--bump", "0.1", "0.5"]
    ),
}


def run_cli(tmp: Path, config: str, argv, name="run.cfg"):
    """Write *config* under *tmp*, run the CLI, return (code, stdout, stderr)."""
    path = tmp / name
    path.write_text(config, encoding="utf-8")
    out, err = io.StringIO(), io.StringIO()
    cmd, *rest = argv
    code = main([cmd, "--config", str(path), *rest], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def run_scenario(tmp: Path, name: str):
    """Run a named scenario writing CSV to a file; return (code, csv bytes, stdout)."""
    config, argv = SCENARIOS[name]
    target = tmp / f"{name}.csv"
    code, out, _ = run_cli(tmp, config, [*argv, "--output", str(target)], name=f"{name}.cfg")
    return code, target.read_bytes() if target.exists() else b"", out
