import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from innerlevel.geometry import (
    BoundaryPoint,
    GeometryError,
    Inconclusive,
    PseudoDisk,
    StolzCone,
    check_disk_point,
    cone_in_union_test,
    distance_to_diameter,
    mobius_derivative,
    mobius_eval,
    normalize_angle,
    pseudo_disk_to_euclidean,
    pseudo_distance,
)

from conftest import disk_points

radius = st.floats(0.0, 0.999)
angle = st.floats(0.0, 2 * math.pi)


def polar(r, t):
    return r * complex(math.cos(t), math.sin(t))


# ---------------------------------------------------------------- examples


def test_mobius_examples():
    assert abs(mobius_eval(0.5, 0.5)) == 0.0
    assert mobius_eval(0, 0.3 + 0.4j) == 0.3 + 0.4j
    assert mobius_eval(0.5, 0) == pytest.approx(0.5, abs=1e-15)


def test_mobius_rejects_outside_parameter():
    with pytest.raises(GeometryError):
        mobius_eval(1.0, 0.2)
    with pytest.raises(GeometryError):
        mobius_eval(1.2j, 0.2)


def test_pseudo_distance_examples():
    assert pseudo_distance(0, 0.3 - 0.4j) == pytest.approx(0.5, abs=1e-15)
    assert pseudo_distance(0.2 + 0.1j, 0.2 + 0.1j) == 0.0
    assert pseudo_distance(0.5, -0.5) == pytest.approx(0.8, abs=1e-15)


def test_pseudo_disk_examples():
    e = pseudo_disk_to_euclidean(PseudoDisk(0, 0.3))
    assert e.center == 0 and e.radius == pytest.approx(0.3)
    e = pseudo_disk_to_euclidean(PseudoDisk(0.5, 0.5))
    assert e.center == pytest.approx(0.4, abs=1e-15)
    assert e.radius == pytest.approx(0.4, abs=1e-15)


def test_pseudo_disk_matches_real_axis_solve():
    # the disk meets the real axis where rho(x, x0) = r; solve independently by bisection
    x0, r = 0.6, 0.35
    e = pseudo_disk_to_euclidean(PseudoDisk(x0, r))

    def solve(lo, hi):
        f = lambda x: abs(x - x0) / abs(1 - x0 * x) - r  # noqa: E731
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (f(lo) > 0) == (f(mid) > 0):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    left, right = solve(-1 + 1e-15, x0), solve(x0, 1 - 1e-15)
    assert e.center.real == pytest.approx(0.5 * (left + right), abs=1e-12)
    assert e.radius == pytest.approx(0.5 * (right - left), abs=1e-12)


def test_pseudo_disk_rejects_bad_radius():
    with pytest.raises(GeometryError):
        PseudoDisk(0.1, 1.0)
    with pytest.raises(GeometryError):
        PseudoDisk(1.0, 0.5)


def test_cone_examples():
    assert cone_in_union_test(StolzCone(0.0, 0.1, 0.9), 0.99) is True
    assert cone_in_union_test(StolzCone(0.0, 0.4 * math.pi / 2, 0.5), 0.1) is False
    assert cone_in_union_test(StolzCone(0.0, 0.0, 0.5), 0.05) is True


def test_cone_rotation_invariant():
    a = cone_in_union_test(StolzCone(0.0, 0.3, 0.8), 0.5)
    b = cone_in_union_test(StolzCone(2.0, 0.3, 0.8), 0.5)
    assert a == b


def test_cone_inconclusive_at_threshold():
    # the inner corner of this cone has a known distance to the axis; put rho0 on it
    cone = StolzCone(0.0, 0.3, 0.5)
    pts = 1 - np.geomspace(1e-9, 2.0, 4000)[:, None] * np.exp(1j * np.array([-0.3, 0.3]))[None, :]
    pts = pts.ravel()
    pts = pts[(np.abs(pts) >= 0.5) & (np.abs(pts) <= 1 - 1e-6)]
    worst = float(distance_to_diameter(pts).max())
    with pytest.raises((Inconclusive, AssertionError)):
        res = cone_in_union_test(cone, worst, n_samples=4096, tol=1e-2)
        assert res is None


def test_cone_validation():
    with pytest.raises(GeometryError):
        StolzCone(0.0, math.pi / 2, 0.5)
    with pytest.raises(GeometryError):
        cone_in_union_test(StolzCone(0.0, 0.1, 0.5), 0.5, n_samples=10)


def test_boundary_guard():
    with pytest.raises(GeometryError):
        check_disk_point(1.0)
    with pytest.raises(GeometryError):
        check_disk_point(complex("nan"))
    assert BoundaryPoint(-math.pi / 2).theta == pytest.approx(1.5 * math.pi)
    assert normalize_angle(-1e-300) == 0.0


# ---------------------------------------------------------------- properties


@given(radius, angle, radius, angle)
def test_mobius_maps_disk_and_circle(ra, ta, rz, tz):
    a, z = polar(ra, ta), polar(rz, tz)
    assert abs(mobius_eval(a, z)) < 1.0
    xi = complex(math.cos(tz), math.sin(tz))
    assert abs(abs(mobius_eval(a, xi)) - 1.0) <= 1e-12


@given(radius, angle, radius, angle)
def test_mobius_involution_modulus(ra, ta, rz, tz):
    # phi_a = (|a|/a) psi_a with psi_a an involution; undo the rotation before reapplying
    a, z = polar(ra, ta), polar(rz, tz)
    rot = a / abs(a) if a else 1.0
    assert abs(abs(mobius_eval(a, rot * mobius_eval(a, z))) - abs(z)) <= 1e-10


@given(st.floats(0.0, 0.999), radius, angle)
def test_mobius_involution_real_parameter(a, rz, tz):
    z = polar(rz, tz)
    assert abs(mobius_eval(a, mobius_eval(a, z)) - z) <= 1e-10


@given(radius, angle, radius, angle)
def test_pseudo_distance_is_modulus_of_mobius(ra, ta, rz, tz):
    w, z = polar(ra, ta), polar(rz, tz)
    assert abs(pseudo_distance(z, w) - abs(mobius_eval(w, z))) <= 1e-12


@given(radius, angle, radius, angle)
def test_pseudo_distance_symmetric_bounded(ra, ta, rz, tz):
    w, z = polar(ra, ta), polar(rz, tz)
    d = pseudo_distance(z, w)
    assert 0.0 <= d < 1.0
    assert d == pytest.approx(pseudo_distance(w, z), abs=1e-15)


@given(st.floats(0.0, 0.95), angle, st.floats(0.01, 0.95))
def test_pseudo_disk_round_trip(rc, tc, r):
    z0 = polar(rc, tc)
    e = pseudo_disk_to_euclidean(PseudoDisk(z0, r))
    t = np.linspace(0, 2 * np.pi, 1000, endpoint=False)
    circle = e.center + e.radius * np.exp(1j * t)
    assert np.max(np.abs(pseudo_distance(circle, z0) - r)) < 1e-9


def test_mobius_derivatives_against_differences(rng):
    for a in disk_points(rng, 20, 0.9):
        z = disk_points(rng, 20, 0.8)
        h = 1e-5
        fd1 = (mobius_eval(a, z + h) - mobius_eval(a, z - h)) / (2 * h)
        assert np.allclose(mobius_derivative(a, z, 1), fd1, rtol=1e-7)
        fd2 = (mobius_derivative(a, z + h, 1) - mobius_derivative(a, z - h, 1)) / (2 * h)
        assert np.allclose(mobius_derivative(a, z, 2), fd2, rtol=1e-6)


def test_distance_to_diameter_matches_brute_force(rng):
    xs = np.tanh(np.linspace(-15, 15, 200001))
    for z in disk_points(rng, 30, 0.95):
        vals = np.abs(z - xs) / np.abs(1 - xs * z)
        k = int(np.argmin(vals))
        local = np.linspace(xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)], 20001)
        brute = np.min(np.abs(z - local) / np.abs(1 - local * z))
        assert distance_to_diameter(z) == pytest.approx(brute, abs=1e-8)
