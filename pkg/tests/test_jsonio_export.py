import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from innerlevel import jsonio
from innerlevel.expr import power
from innerlevel.levelsets import (
    build_grid,
    label_components,
    level_raster,
    rasterize_modulus,
    read_pgm,
    render,
    write_cells_csv,
    write_contour_csv,
    write_pgm,
)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip_exact(x):
    # 17 significant digits recover every double
    assert json.loads(jsonio.dumps(x)) == x


def test_nonfinite_as_strings():
    doc = json.loads(jsonio.dumps({"a": math.nan, "b": math.inf, "c": -math.inf}))
    assert doc == {"a": "nan", "b": "inf", "c": "-inf"}


def test_types_and_order():
    doc = {"z": 1 + 2j, "arr": np.array([1.5, 2.0]), "flag": np.bool_(True), "n": np.int64(3), "none": None}
    text = jsonio.dumps(doc)
    assert list(json.loads(text)) == ["z", "arr", "flag", "n", "none"]
    assert json.loads(text)["z"] == {"re": 1.0, "im": 2.0}
    assert text == jsonio.dumps(doc)
    assert "0.10000000000000001" in jsonio.dumps(0.1)


def test_unserialisable():
    with pytest.raises(TypeError):
        jsonio.dumps(object())


def test_with_schema():
    d = jsonio.with_schema("k", {"schema": "x", "a": 1})
    assert d == {"schema": jsonio.SCHEMA, "kind": "k", "a": 1}


@pytest.fixture(scope="module")
def square_raster():
    g = build_grid(6)
    mr = rasterize_modulus(power(2), g)
    return g, mr, level_raster(mr, 0.5)


def test_pgm_roundtrip(tmp_path, rng):
    img = rng.random((7, 5))
    p = write_pgm(tmp_path / "a.pgm", img)
    back = read_pgm(p)
    assert back.shape == (7, 5)
    assert np.max(np.abs(back - img)) <= 0.5 / 65535 + 1e-15


def test_render_square(square_raster):
    g, mr, _ = square_raster
    img = render(g, mr.modulus, 64)
    assert img.shape == (64, 64)
    # centre pixel near 0, corner outside the disk filled with 1
    assert img[32, 32] < 0.05 and img[0, 0] == 1.0


def test_cells_csv(tmp_path, square_raster):
    g, mr, raster = square_raster
    labels = label_components(raster)
    p = write_cells_csv(tmp_path / "c.csv", raster, labels)
    rows = p.read_text().splitlines()
    assert rows[0] == "re,im,modulus,error,mask,uncertain,label"
    assert len(rows) == g.n_cells + 1
    masked = sum(int(r.split(",")[4]) for r in rows[1:])
    assert masked == int(raster.mask.sum())


def test_contour_csv(tmp_path, square_raster):
    pytest.importorskip("skimage")
    g, mr, _ = square_raster
    img = render(g, mr.modulus, 128)
    p = write_contour_csv(tmp_path / "k.csv", img, 0.5)
    pts = np.array([[float(x) for x in r.split(",")[1:]] for r in p.read_text().splitlines()[1:]])
    # cell-constant image: the contour of |z|^2 = 0.5 stays in the ring holding radius sqrt(0.5)
    r = np.hypot(pts[:, 0], pts[:, 1])
    k = np.searchsorted(g.radii, math.sqrt(0.5))
    pix = 2.0 / 128
    assert g.radii[k - 1] - pix <= r.min() and r.max() <= g.radii[k] + pix
    assert len({row.split(",")[0] for row in p.read_text().splitlines()[1:]}) == 1
