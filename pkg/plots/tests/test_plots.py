import pytest

from closurelab_plots import convergence, greens_surface, solution_profile, spectrum
from closurelab_plots.common import FigureSpec, ParseError, render_figure


def test_greens_pair_renders_with_shared_scale(cli_outputs, tmp_path):
    exact = cli_outputs / "greens" / "greens_exact.csv"
    approx = cli_outputs / "greens" / "greens_orthogonal.csv"
    out = tmp_path / "greens.png"
    vmin, vmax = greens_surface.render(exact, approx, out)
    assert out.exists() and out.stat().st_size > 0
    assert vmin < vmax  # one shared scale across both panels


def test_greens_rendering_deterministic(cli_outputs, tmp_path):
    exact = cli_outputs / "greens" / "greens_exact.csv"
    approx = cli_outputs / "greens" / "greens_orthogonal.csv"
    out1, out2 = tmp_path / "a.png", tmp_path / "b.png"
    greens_surface.render(exact, approx, out1)
    greens_surface.render(exact, approx, out2)
    assert out1.read_bytes() == out2.read_bytes()


def test_greens_grid_mismatch_rejected(cli_outputs, tmp_path):
    exact = cli_outputs / "greens" / "greens_exact.csv"
    other = tmp_path / "other.csv"
    other.write_text("x,y,value,kind\n0.1,0.1,1.0,exact\n0.1,0.9,2.0,exact\n")
    with pytest.raises(ParseError):
        greens_surface.render(exact, other, tmp_path / "no.png")
    assert greens_surface.main([str(exact), str(other), "--out", str(tmp_path / "no.png")]) == 1


def test_empty_csv_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert greens_surface.main([str(empty), str(empty), "--out", str(tmp_path / "x.png")]) == 1
    header_only = tmp_path / "header.csv"
    header_only.write_text("x,y,value\n")
    assert spectrum.main([str(header_only), "--out", str(tmp_path / "y.png")]) == 1


def test_trajectory_renders(cli_outputs, tmp_path):
    traj = cli_outputs / "advect" / "trajectory_closed.csv"
    out = tmp_path / "traj.png"
    assert solution_profile.main([str(traj), "--out", str(out)]) == 0
    assert out.exists() and out.stat().st_size > 0


def test_trajectory_single_row_degenerate(tmp_path):
    csv = tmp_path / "one.csv"
    csv.write_text("t,element,mode,value\n0.0,0,0,1.5\n")
    out = tmp_path / "one.png"
    assert solution_profile.main([str(csv), "--out", str(out)]) == 0
    assert out.exists()


def test_spectrum_renders(cli_outputs, tmp_path):
    spec = cli_outputs / "burgers" / "spectrum_closed.csv"
    out = tmp_path / "spec.png"
    assert spectrum.main([str(spec), "--out", str(out)]) == 0
    assert out.exists() and out.stat().st_size > 0


def test_s2_ratio_convergence_with_inverse_slope_guide(cli_outputs, tmp_path):
    ratios = cli_outputs / "upwind" / "s2_over_s1.csv"
    out = tmp_path / "s2s1.png"
    assert convergence.main([str(ratios), "--out", str(out), "--slopes", "1"]) == 0
    assert out.exists() and out.stat().st_size > 0


def test_convergence_deterministic(cli_outputs, tmp_path):
    ratios = cli_outputs / "upwind" / "s2_over_s1.csv"
    out1, out2 = tmp_path / "c1.png", tmp_path / "c2.png"
    assert convergence.main([str(ratios), "--out", str(out1)]) == 0
    assert convergence.main([str(ratios), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_convergence_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("n,error\n1,2\n3\n")
    assert convergence.main([str(bad), "--out", str(tmp_path / "z.png")]) == 1


def test_figure_spec_dispatch(cli_outputs, tmp_path):
    spec = FigureSpec(
        kind="greens-surface",
        inputs=(
            str(cli_outputs / "greens" / "greens_exact.csv"),
            str(cli_outputs / "greens" / "greens_orthogonal.csv"),
        ),
        output=str(tmp_path / "pair.png"),
    )
    render_figure(spec)
    assert (tmp_path / "pair.png").exists()
    spec2 = FigureSpec(
        kind="convergence",
        inputs=(str(cli_outputs / "upwind" / "s2_over_s1.csv"),),
        output=str(tmp_path / "conv.png"),
        options={"slopes": (1.0,)},
    )
    render_figure(spec2)
    assert (tmp_path / "conv.png").exists()


def test_figure_spec_validation(tmp_path):
    with pytest.raises(ParseError):
        FigureSpec(kind="pie-chart", inputs=("a.csv",), output="x.png")
    with pytest.raises(ParseError):
        FigureSpec(kind="spectrum", inputs=("/nonexistent/file.csv",), output="x.png")
    existing = tmp_path / "one.csv"
    existing.write_text("k,E\n1,1\n")
    with pytest.raises(ParseError):
        FigureSpec(kind="greens-surface", inputs=(str(existing),), output="x.png")
