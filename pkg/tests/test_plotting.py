import numpy as np
import pytest

import pdmp_verify as pv
from pdmp_verify.hjb import GridFunction
from pdmp_verify.plotting import PlotStyle, grid_function_svg, trajectory_svg


def test_plain_series_polyline():
    t = np.linspace(0, 1, 20)
    svg = trajectory_svg(t, np.sin(t), PlotStyle())
    assert svg.startswith("<svg")
    assert "<polyline" in svg and svg.rstrip().endswith("</svg>")
    assert "stroke-width=\"2\"" in svg


def test_band_style_has_bounds_and_recolor():
    t = np.linspace(0, 10, 400)
    x = 1.0 + 0.4 * np.sin(t)  # dips in and out of the target band
    style = PlotStyle(invariant_bounds=(0.0, 2.0), target_bounds=(0.9, 1.1))
    svg = trajectory_svg(t, x, style)
    assert svg.count("stroke=\"#22aa44\"") == 2  # invariant bounds in green
    assert "stroke=\"#2244cc\"" in svg  # target bounds and in-band segments
    assert "stroke=\"#cc2222\"" in svg  # out-of-band path segments


def test_phase_style_draws_box_edges():
    t = np.linspace(0, 5, 50)
    coords = np.stack([0.2 * np.exp(-t), 0.1 * np.exp(-t)], axis=1)
    style = PlotStyle(kind="phase", box=((0.0, 0.4), (0.0, 0.2)))
    svg = trajectory_svg(t, coords, style)
    assert svg.count("stroke=\"#22aa44\"") == 4  # four box edges


def test_empty_data_rejected():
    with pytest.raises(ValueError):
        trajectory_svg([], np.array([]), PlotStyle())


def test_grid_function_line_and_heatmap():
    dom1 = pv.ModeBoxSet((0, 1), np.array([0.0]), np.array([1.0]))
    gf1 = GridFunction(dom1, (9,), np.random.default_rng(0).uniform(size=(2, 9)))
    svg1 = grid_function_svg(gf1)
    assert svg1.count("<polyline") == 2

    dom2 = pv.ModeBoxSet((0,), np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    gf2 = GridFunction(dom2, (6, 6), np.random.default_rng(1).uniform(size=(1, 6, 6)))
    svg2 = grid_function_svg(gf2)
    assert svg2.count("<rect") >= 36
