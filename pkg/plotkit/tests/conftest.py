"""Golden-pipeline fixtures: every input is produced by the stackedcp CLI.

The plotting package only ever sees the documented file formats, so the
fixtures run the real simulator command line (in a subprocess — no import
coupling) and hand the resulting directories to the tests.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest


def _run_cli(subcmd: str, cfg: dict, out: Path) -> None:
    cfgp = out.parent / f"{out.name}.json"
    cfgp.write_text(json.dumps(cfg))
    out.mkdir()
    r = subprocess.run(
        [sys.executable, "-m", "stackedcp", subcmd,
         "--config", str(cfgp), "--out", str(out)],
        capture_output=True, text=True)
    if r.returncode != 0:
        raise RuntimeError(f"stackedcp {subcmd} failed "
                           f"({r.returncode}):\n{r.stdout}\n{r.stderr}")


@pytest.fixture(scope="session")
def sweep_dir(tmp_path_factory) -> Path:
    """2x4 sweep straddling the lambda20 = 1+delta classification flip."""
    out = tmp_path_factory.mktemp("fixtures") / "sweep"
    _run_cli("sweep", {
        "schema": 1, "seed": 3, "engine": "gillespie",
        "t_end": 2.0, "replicas": 2,
        "params": {"lambda10": 1.0, "lambda20": 1.0, "lambda21": 1.0,
                   "delta": 0.25, "dim": 1, "side": 32},
        "init": {"kind": "random", "probs": [0.4, 0.3, 0.3]},
        "sweep": {"axes": [["lambda10", 0.7, 0.9, 2],
                           ["lambda20", 0.6, 2.0, 4]]},
    }, out)
    return out


@pytest.fixture(scope="session")
def sweep_1x1_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("fixtures") / "sweep1"
    _run_cli("sweep", {
        "schema": 1, "seed": 4, "engine": "gillespie",
        "t_end": 1.0, "replicas": 1,
        "params": {"lambda10": 2.0, "lambda20": 1.0, "lambda21": 1.0,
                   "delta": 0.5, "dim": 1, "side": 32},
        "init": {"kind": "random", "probs": [0.4, 0.3, 0.3]},
        "sweep": {"axes": [["lambda10", 2.0, 2.0, 1],
                           ["lambda20", 1.0, 1.0, 1]]},
    }, out)
    return out


def _mf_cfg(lam10, lam20, lam21, delta, t_end, starts):
    return {
        "schema": 1, "seed": 1, "t_end": 1.0,
        "params": {"lambda10": lam10, "lambda20": lam20,
                   "lambda21": lam21, "delta": delta,
                   "dim": 1, "side": 8},
        "mf": {"t_end": t_end, "starts": starts},
    }


@pytest.fixture(scope="session")
def mf_coexist_dir(tmp_path_factory) -> Path:
    """Interior attractor; delta > 0 so the u1-nullcline has its asymptote."""
    out = tmp_path_factory.mktemp("fixtures") / "mf_coexist"
    _run_cli("meanfield", _mf_cfg(2.0, 2.0, 4.0, 0.5, 40.0,
                                  [[0.5, 0.3], [0.1, 0.8],
                                   [0.7, 0.05], [0.05, 0.05]]), out)
    return out


@pytest.fixture(scope="session")
def mf_extinct_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("fixtures") / "mf_extinct"
    _run_cli("meanfield", _mf_cfg(0.8, 0.9, 1.0, 0.5, 200.0,
                                  [[0.5, 0.3], [0.1, 0.8],
                                   [0.7, 0.05], [0.3, 0.6]]), out)
    return out


@pytest.fixture(scope="session")
def mf_degenerate_dir(tmp_path_factory) -> Path:
    """lambda20 = lambda21 = 0: the u2-nullcline does not exist."""
    out = tmp_path_factory.mktemp("fixtures") / "mf_degen"
    _run_cli("meanfield", _mf_cfg(2.0, 0.0, 0.0, 0.0, 60.0,
                                  [[0.2, 0.5], [0.8, 0.1]]), out)
    return out


@pytest.fixture(scope="session")
def edges_dir(tmp_path_factory) -> Path:
    """Supercritical host-only block: both fronts move outward."""
    out = tmp_path_factory.mktemp("fixtures") / "edges"
    _run_cli("edge-speed", {
        "schema": 1, "seed": 9, "engine": "gillespie",
        "t_end": 25.0, "replicas": 1, "window": [5.0, 20.0],
        "params": {"lambda10": 6.0, "lambda20": 0.0, "lambda21": 0.0,
                   "delta": 0.0, "dim": 1, "side": 400},
        "init": {"kind": "blocks", "blocks": [[150, 250, 1]]},
    }, out)
    return out
