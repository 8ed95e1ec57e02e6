import json

import numpy as np
import pytest

from gmmotda.errors import ValidationError
from gmmotda.plots import (
    SCATTER_HEADER,
    emit_plot_data,
    pca_top2,
    project_2d,
    write_scatter_svg,
)


def test_pca_top2_planar_data_captures_everything():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 2)) @ np.array([[3.0, 0.5], [0.0, 1.0]])
    comps, fraction = pca_top2(X)
    assert fraction == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(comps @ comps.T, np.eye(2), atol=1e-6)


def test_pca_top2_finds_dominant_axis():
    rng = np.random.default_rng(1)
    X = np.zeros((200, 4))
    X[:, 1] = rng.normal(scale=10.0, size=200)  # huge variance on axis 1
    X[:, 3] = rng.normal(scale=0.1, size=200)
    comps, fraction = pca_top2(X)
    assert abs(comps[0, 1]) > 0.999
    assert fraction == pytest.approx(1.0, abs=1e-6)


def test_pca_top2_is_deterministic():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 5))
    c1, f1 = pca_top2(X)
    c2, f2 = pca_top2(X)
    np.testing.assert_array_equal(c1, c2)
    assert f1 == f2


def test_pca_top2_isotropic_fraction():
    # 5-D isotropic data: two components should capture about 2/5
    rng = np.random.default_rng(3)
    X = rng.normal(size=(4000, 5))
    _, fraction = pca_top2(X)
    assert abs(fraction - 0.4) < 0.1


def test_pca_top2_validation():
    with pytest.raises(ValidationError):
        pca_top2(np.zeros((5, 1)))
    with pytest.raises(ValidationError):
        pca_top2(np.zeros(5))


def test_project_2d_passthrough_and_projection():
    rng = np.random.default_rng(4)
    X2 = rng.normal(size=(10, 2))
    assert project_2d(X2) is X2
    X5 = rng.normal(size=(40, 5))
    P = project_2d(X5)
    assert P.shape == (40, 2)
    # projecting is a linear isometry onto the component span: distances
    # in the projection never exceed the originals
    d_orig = np.linalg.norm(X5[0] - X5[1])
    d_proj = np.linalg.norm(P[0] - P[1])
    assert d_proj <= d_orig + 1e-9
    with pytest.raises(ValidationError):
        project_2d(np.zeros(3))


def test_emit_plot_data_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    Xs = rng.normal(size=(7, 2))
    ys = rng.integers(0, 3, size=7)
    Xt = rng.normal(size=(5, 2))
    out = tmp_path / "scatter.csv"
    meta = emit_plot_data([(Xs, ys, "source"), (Xt, None, "target")], out)

    lines = out.read_text().splitlines()
    assert lines[0] == SCATTER_HEADER
    assert len(lines) == 1 + 7 + 5
    xs_back = np.array(
        [[float(f) for f in ln.split(",")[:2]] for ln in lines[1:8]]
    )
    np.testing.assert_array_equal(xs_back, Xs)  # %.17g is lossless
    labels_back = [int(ln.split(",")[2]) for ln in lines[1:]]
    assert labels_back[:7] == list(ys)
    assert labels_back[7:] == [-1] * 5
    roles = [ln.split(",")[3] for ln in lines[1:]]
    assert roles == ["source"] * 7 + ["target"] * 5

    assert meta["projection"] == "identity"
    assert meta["variance_captured"] == 1.0
    assert meta["counts"] == {"source": 7, "target": 5, "transported": 0}
    with open(tmp_path / "scatter.csv.meta.json") as fh:
        assert json.load(fh) == meta


def test_emit_plot_data_high_dim_uses_shared_basis(tmp_path):
    rng = np.random.default_rng(6)
    Xs = rng.normal(size=(20, 4))
    Xt = rng.normal(size=(20, 4)) + 5.0
    meta = emit_plot_data(
        [(Xs, None, "source"), (Xt, None, "target")], tmp_path / "p.csv"
    )
    assert meta["projection"] == "pca-top2"
    assert 0.0 < meta["variance_captured"] <= 1.0

    # the shared basis must preserve the separation between the clouds
    lines = (tmp_path / "p.csv").read_text().splitlines()[1:]
    P = np.array([[float(v) for v in ln.split(",")[:2]] for ln in lines])
    gap = np.linalg.norm(P[:20].mean(axis=0) - P[20:].mean(axis=0))
    assert gap > 5.0


def test_emit_plot_data_empty_groups(tmp_path):
    out = tmp_path / "empty.csv"
    meta = emit_plot_data([(np.empty((0, 2)), None, "source")], out)
    assert out.read_text() == SCATTER_HEADER + "\n"
    assert meta["counts"] == {"source": 0, "target": 0, "transported": 0}


def test_emit_plot_data_validation(tmp_path):
    X = np.zeros((3, 2))
    with pytest.raises(ValidationError, match="role"):
        emit_plot_data([(X, None, "query")], tmp_path / "x.csv")
    with pytest.raises(ValidationError, match="labels"):
        emit_plot_data([(X, np.zeros(2, dtype=int), "source")], tmp_path / "x.csv")
    with pytest.raises(ValidationError, match="dimension"):
        emit_plot_data(
            [(X, None, "source"), (np.zeros((3, 3)), None, "target")],
            tmp_path / "x.csv",
        )


def test_emit_plot_data_writes_svg(tmp_path):
    rng = np.random.default_rng(7)
    groups = [
        (rng.normal(size=(6, 2)), np.arange(6) % 2, "source"),
        (rng.normal(size=(4, 2)), None, "target"),
        (rng.normal(size=(3, 2)), np.zeros(3, dtype=int), "transported"),
    ]
    svg_path = tmp_path / "plot.svg"
    emit_plot_data(groups, tmp_path / "p.csv", svg_path=svg_path)
    svg = svg_path.read_text()
    assert svg.startswith("<svg ")
    assert svg.count("<circle ") == 6
    assert svg.count("<rect ") == 4 + 1  # four markers plus the background
    assert svg.count("<path ") == 3
    assert "#888888" in svg  # unlabeled target points are gray


def test_write_scatter_svg_handles_empty(tmp_path):
    path = tmp_path / "empty.svg"
    write_scatter_svg(path, [])
    text = path.read_text()
    assert text.startswith("<svg ") and text.rstrip().endswith("</svg>")
