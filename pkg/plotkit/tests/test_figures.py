"""Figure functions on golden-pipeline inputs.

Images are not pixel-diffed; tests check the returned draw summaries, that
files come out nonempty, and that reruns are byte-identical.
"""

import numpy as np
import pytest

from plotkit.figures import plot_edges, plot_phase_diagram, plot_phase_portrait


def _nonempty(path):
    assert path.is_file() and path.stat().st_size > 500


# -- phase diagram -----------------------------------------------------------------


def test_phase_diagram_draws_classification_boundary(sweep_dir, tmp_path):
    out = tmp_path / "phase.png"
    info = plot_phase_diagram(sweep_dir / "sweep.csv", out)
    _nonempty(out)
    assert info["shape"] == (4, 2)   # lambda20 rows, lambda10 columns
    assert info["outcomes"] == ["coexistence", "extinction", "unclassified"]
    # the outcome changes along the lambda20 axis (flip at 1+delta), so the
    # overlay must have drawn at least one boundary curve
    assert info["overlay_levels"] >= 1


def test_phase_diagram_single_cell(sweep_1x1_dir, tmp_path):
    out = tmp_path / "one.png"
    info = plot_phase_diagram(sweep_1x1_dir / "sweep.csv", out)
    _nonempty(out)
    assert info["shape"] == (1, 1)
    assert info["overlay_levels"] == 0


def test_phase_diagram_axes_override_transposes(sweep_dir, tmp_path):
    info = plot_phase_diagram(sweep_dir / "sweep.csv", tmp_path / "t.png",
                              axes=("lambda20", "lambda10"))
    assert info["shape"] == (2, 4)
    with pytest.raises(ValueError, match="do not match"):
        plot_phase_diagram(sweep_dir / "sweep.csv", tmp_path / "u.png",
                           axes=("lambda20", "delta"))


def test_phase_diagram_monotone_column(tmp_path):
    # hand-rolled monotone 1x3 grid; just must render cleanly
    p = tmp_path / "sweep.csv"
    rows = ["# stackedcp sweep schema=1",
            "lambda10,lambda20,u0_mean,u0_se,u1_mean,u1_se,u2_mean,u2_se,"
            "host_survival,symbiont_survival,replicas,mf_outcome"]
    for i, s in enumerate((0.0, 0.5, 1.0)):
        rows.append(f"2,{i},0.3,0,0.3,0,0.4,0,1,{s},4,coexistence")
    p.write_text("\n".join(rows) + "\n")
    info = plot_phase_diagram(p, tmp_path / "band.png")
    _nonempty(tmp_path / "band.png")
    assert info["shape"] == (3, 1) and info["overlay_levels"] == 0


def test_phase_diagram_rejects_one_axis_sweep(tmp_path):
    p = tmp_path / "sweep.csv"
    p.write_text("# stackedcp sweep schema=1\n"
                 "lambda20,u0_mean,u0_se,u1_mean,u1_se,u2_mean,u2_se,"
                 "host_survival,symbiont_survival,replicas,mf_outcome\n"
                 "1,0.3,0,0.3,0,0.4,0,1,1,4,coexistence\n")
    with pytest.raises(ValueError, match="2-axis"):
        plot_phase_diagram(p, tmp_path / "x.png")


# -- phase portrait ----------------------------------------------------------------


def test_portrait_coexistence(mf_coexist_dir, tmp_path):
    out = tmp_path / "portrait.png"
    info = plot_phase_portrait(mf_coexist_dir / "meanfield.json", out)
    _nonempty(out)
    assert info["ell2_drawn"] is True
    assert info["asymptote"] == pytest.approx(0.5 / 6.0)
    assert info["equilibria"].get("interior", 0) >= 1
    assert info["n_trajectories"] == 4
    # every start converges to the same interior point
    ends = np.array(info["endpoints"])
    assert np.ptp(ends[:, 0]) < 1e-4 and np.ptp(ends[:, 1]) < 1e-4
    assert ends[0, 0] > 0.01 and ends[0, 1] > 0.01


def test_portrait_extinction_flows_to_origin(mf_extinct_dir, tmp_path):
    out = tmp_path / "extinct.png"
    info = plot_phase_portrait(mf_extinct_dir / "meanfield.json", out)
    _nonempty(out)
    ends = np.array(info["endpoints"])
    assert np.all(np.hypot(ends[:, 0], ends[:, 1]) < 1e-3)


def test_portrait_degenerate_has_no_ell2(mf_degenerate_dir, tmp_path):
    out = tmp_path / "degen.svg"
    info = plot_phase_portrait(mf_degenerate_dir / "meanfield.json", out)
    _nonempty(out)
    assert info["ell2_drawn"] is False
    assert info["asymptote"] is None
    text = out.read_text()
    assert "<svg" in text and "dc:date" not in text


def test_portrait_missing_inputs(tmp_path):
    with pytest.raises(FileNotFoundError):
        plot_phase_portrait(tmp_path / "meanfield.json", tmp_path / "x.png")


# -- edges -------------------------------------------------------------------------


def test_edges_supercritical_slopes(edges_dir, tmp_path):
    out = tmp_path / "edges.png"
    info = plot_edges(edges_dir / "edges_000.csv", out)
    _nonempty(out)
    assert info["n_points"] > 100
    assert info["alpha_r"] > 0.3       # right front advances
    assert info["alpha_l"] < -0.3      # left front advances the other way


def test_edges_header_only_gives_empty_axes(tmp_path):
    p = tmp_path / "edges.csv"
    p.write_text("t,r,l\n")
    info = plot_edges(p, tmp_path / "empty.png")
    _nonempty(tmp_path / "empty.png")
    assert info == {"n_points": 0, "alpha_r": None, "alpha_l": None,
                    "out": str(tmp_path / "empty.png")}


def test_edges_constant_series_fits_zero_slope(tmp_path):
    p = tmp_path / "edges.csv"
    p.write_text("t,r,l\n" + "".join(f"{t},40,10\n" for t in range(6)))
    info = plot_edges(p, tmp_path / "flat.png")
    assert abs(info["alpha_r"]) < 1e-12
    assert abs(info["alpha_l"]) < 1e-12


def test_edges_tolerates_nan_tail(tmp_path):
    # a front that died mid-run: nan entries are excluded from the fit
    p = tmp_path / "edges.csv"
    p.write_text("t,r,l,d\n0,10,10,1\n1,11,9,3\n2,12,8,5\n3,nan,nan,nan\n")
    info = plot_edges(p, tmp_path / "nan.png")
    assert info["n_points"] == 4
    assert info["alpha_r"] == pytest.approx(1.0)
    assert info["alpha_l"] == pytest.approx(-1.0)


def test_rerun_is_byte_identical(edges_dir, mf_coexist_dir, sweep_dir,
                                 tmp_path):
    pairs = []
    for stem, fn, src in [
            ("e", plot_edges, edges_dir / "edges_000.csv"),
            ("p", plot_phase_diagram, sweep_dir / "sweep.csv"),
            ("m", plot_phase_portrait, mf_coexist_dir / "meanfield.json")]:
        for ext in (".png", ".svg"):
            a, b = tmp_path / f"{stem}_a{ext}", tmp_path / f"{stem}_b{ext}"
            fn(src, a)
            fn(src, b)
            pairs.append((a, b))
    for a, b in pairs:
        assert a.read_bytes() == b.read_bytes(), f"{a} differs from {b}"
