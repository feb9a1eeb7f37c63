"""Entry points: exit codes, messages, and the installed console scripts."""

import shutil
import subprocess

import pytest

from plotkit.cli import run_edges, run_phase, run_portrait


def test_plot_phase_ok(sweep_dir, tmp_path, capsys):
    out = tmp_path / "phase.png"
    assert run_phase(["--sweep", str(sweep_dir / "sweep.csv"),
                      "--out", str(out)]) == 0
    assert out.stat().st_size > 0
    assert "wrote" in capsys.readouterr().out


def test_plot_phase_value_and_axes_flags(sweep_dir, tmp_path):
    assert run_phase(["--sweep", str(sweep_dir / "sweep.csv"),
                      "--out", str(tmp_path / "h.png"),
                      "--axes", "lambda20,lambda10",
                      "--value", "host_survival"]) == 0


def test_plot_phase_rejects_unknown_schema(sweep_dir, tmp_path, capsys):
    lines = (sweep_dir / "sweep.csv").read_text().splitlines()
    lines[0] = "# stackedcp sweep schema=9"
    bad = tmp_path / "sweep.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert run_phase(["--sweep", str(bad),
                      "--out", str(tmp_path / "x.png")]) == 1
    assert "schema" in capsys.readouterr().err


def test_plot_phase_missing_file(tmp_path, capsys):
    assert run_phase(["--sweep", str(tmp_path / "nope.csv"),
                      "--out", str(tmp_path / "x.png")]) == 1
    assert "error:" in capsys.readouterr().err


def test_plot_portrait_ok(mf_coexist_dir, tmp_path, capsys):
    out = tmp_path / "portrait.svg"
    assert run_portrait(["--meanfield",
                         str(mf_coexist_dir / "meanfield.json"),
                         "--out", str(out)]) == 0
    assert out.stat().st_size > 0
    assert "trajectories" in capsys.readouterr().out


def test_plot_portrait_missing_input(tmp_path, capsys):
    assert run_portrait(["--meanfield", str(tmp_path / "meanfield.json"),
                         "--out", str(tmp_path / "x.png")]) == 1
    assert "error:" in capsys.readouterr().err


def test_plot_edges_ok(edges_dir, tmp_path, capsys):
    out = tmp_path / "edges.png"
    assert run_edges(["--edges", str(edges_dir / "edges_000.csv"),
                      "--out", str(out)]) == 0
    assert out.stat().st_size > 0
    assert "alpha_r=" in capsys.readouterr().out


def test_plot_edges_bad_header(tmp_path, capsys):
    p = tmp_path / "edges.csv"
    p.write_text("a,b,c\n1,2,3\n")
    assert run_edges(["--edges", str(p),
                      "--out", str(tmp_path / "x.png")]) == 1
    assert "header" in capsys.readouterr().err


def test_missing_required_flag_exits_2():
    with pytest.raises(SystemExit) as e:
        run_edges([])
    assert e.value.code == 2


@pytest.mark.parametrize("script", ["plot-phase", "plot-portrait",
                                    "plot-edges"])
def test_console_scripts_installed(script, sweep_dir, mf_coexist_dir,
                                   edges_dir, tmp_path):
    exe = shutil.which(script)
    assert exe, f"{script} is not on PATH (is the package installed?)"
    args = {
        "plot-phase": ["--sweep", str(sweep_dir / "sweep.csv")],
        "plot-portrait": ["--meanfield",
                          str(mf_coexist_dir / "meanfield.json")],
        "plot-edges": ["--edges", str(edges_dir / "edges_000.csv")],
    }[script]
    out = tmp_path / f"{script}.png"
    r = subprocess.run([exe, *args, "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert out.stat().st_size > 0
