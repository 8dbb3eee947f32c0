import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from innerlevel.catalog import get_entry, list_entries
from innerlevel.evaluate import (
    SingularityError,
    TruncationError,
    blaschke_boundary_derivative_modulus,
    boundary_derivative,
    compose_ratio_A,
    eval_boundary,
    eval_disk,
    evaluate,
    truncation_depth,
)
from innerlevel.expr import (
    Blaschke,
    ExprError,
    Identity,
    Unimodular,
    atomic,
    blaschke,
    compose,
    from_json,
    frostman_shift,
    is_finite,
    power,
    product,
    reflect,
    remove_zero,
)
from innerlevel.geometry import GeometryError, mobius_eval
from innerlevel.sequences import (
    ExplicitZeros,
    FactorialZeros,
    GeometricZeros,
    NegatedMirror,
    Punctured,
    SequenceError,
    sequence_from_json,
)
from innerlevel.singularities import COUNTABLE, FINITE, sing_set

from conftest import disk_points

B_GEOM = Blaschke(GeometricZeros(0.5))


def long_product(zeros, z):
    p = np.ones_like(np.asarray(z, dtype=complex))
    for a in zeros:
        p = p * (z if a == 0 else (abs(a) / a) * (a - z) / (1 - np.conj(a) * z))
    return p


# ---------------------------------------------------------------- sequences


def test_sequence_zeros_and_tails():
    g = GeometricZeros(0.5)
    assert np.allclose(g.zeros(3), [0.5, 0.75, 0.875])
    assert g.tail_bound(10) == pytest.approx(2.0**-10)
    f = FactorialZeros()
    assert np.allclose(f.zeros(4), [0, 0.5, 5 / 6, 23 / 24])
    exact = sum(1 / math.factorial(j) for j in range(6, 30))
    assert exact <= f.tail_bound(5) <= 1.2 * exact
    m = NegatedMirror(f)
    assert np.allclose(m.zeros(4), [0, 0, 0.5, -0.5])
    assert m.accumulation_points() == [0.0, math.pi]


@pytest.mark.parametrize("seq", [GeometricZeros(0.5), GeometricZeros(0.9), FactorialZeros(), NegatedMirror(FactorialZeros())])
def test_tail_bound_dominates_partial_sums(seq):
    c = seq.complements(seq.max_depth)
    for n in range(0, seq.max_depth - 1):
        assert c[n:].sum() <= seq.tail_bound(n) * (1 + 1e-12)


def test_max_depth_keeps_zeros_inside():
    for seq in (GeometricZeros(0.5), FactorialZeros()):
        z = seq.zeros(seq.max_depth)
        assert np.all(np.abs(z) < 1)
    assert GeometricZeros(0.5).max_depth == 49
    assert FactorialZeros().max_depth == 17


def test_sequence_validation_and_json():
    with pytest.raises(SequenceError):
        GeometricZeros(1.0)
    with pytest.raises(SequenceError):
        ExplicitZeros(((1.0, 1),))
    with pytest.raises(SequenceError):
        ExplicitZeros(((0.5, 0),))
    for seq in (GeometricZeros(0.25), FactorialZeros(), NegatedMirror(GeometricZeros(0.5)),
                ExplicitZeros(((0.5, 2), (0.1j, 1))), Punctured(GeometricZeros(0.5), (1, 3))):
        assert sequence_from_json(seq.to_json()) == seq


def test_punctured_drops_indices():
    p = Punctured(GeometricZeros(0.5), (1,))
    assert np.allclose(p.zeros(2), [0.75, 0.875])


# ---------------------------------------------------------------- truncation


def test_truncation_depth_examples():
    assert truncation_depth(ExplicitZeros(((0.5, 3),)), 0.2, 1e-10) == 3
    n = truncation_depth(GeometricZeros(0.5), 0, 1e-10)
    assert n == 35
    assert abs(long_product(GeometricZeros(0.5).zeros(n), 0.0) - long_product(1 - 0.5 ** np.arange(1, 201), 0.0)) < 1e-10
    nf = truncation_depth(FactorialZeros(), 0, 1e-10)
    assert nf <= 14


def test_truncation_failure_reports_depth():
    with pytest.raises(TruncationError) as err:
        truncation_depth(GeometricZeros(0.5), 1 - 1e-9, 1e-12)
    assert err.value.required_depth > GeometricZeros(0.5).max_depth


def test_eval_disk_examples():
    assert eval_disk(atomic(), 0).value == pytest.approx(math.exp(-1), abs=1e-12)
    assert abs(eval_disk(blaschke(0.5), 0).value) == pytest.approx(0.5, abs=1e-15)
    r = eval_disk(B_GEOM, 0, 1e-10)
    ref = np.prod(1 - 0.5 ** np.arange(1, 60))
    assert abs(r.value) == pytest.approx(0.2887881, abs=1e-7)
    assert abs(r.value - ref) <= r.abs_error_bound + 1e-15


def test_eval_disk_rejects_boundary():
    with pytest.raises(GeometryError):
        eval_disk(atomic(), 1.0)


@pytest.mark.parametrize("seq", [GeometricZeros(0.5), FactorialZeros(), NegatedMirror(FactorialZeros())])
def test_error_bound_contains_long_product(seq, rng):
    z = disk_points(rng, 200, 0.97)
    jet = evaluate(Blaschke(seq), z, 0, 1e-9)
    ref = long_product(seq.zeros(seq.max_depth), z)
    assert jet.ok.all()
    assert np.all(np.abs(jet.f[0] - ref) <= jet.e[0] + 1e-13)


def test_derivative_bounds_against_long_product(rng):
    seq = GeometricZeros(0.5)
    z = disk_points(rng, 100, 0.9)
    jet = evaluate(Blaschke(seq), z, 2, 1e-8)
    h = 1e-4
    f = lambda w: long_product(seq.zeros(seq.max_depth), w)  # noqa: E731
    d1 = (f(z + h) - f(z - h)) / (2 * h)
    d2 = (f(z + h) - 2 * f(z) + f(z - h)) / h**2
    assert np.allclose(jet.f[1], d1, rtol=1e-5, atol=1e-6)
    assert np.allclose(jet.f[2], d2, rtol=1e-3, atol=1e-3)


# ---------------------------------------------------------------- boundary


def test_eval_boundary_examples():
    assert eval_boundary(Identity(), 0.7) == pytest.approx(complex(math.cos(0.7), math.sin(0.7)))
    assert eval_boundary(atomic(), math.pi) == pytest.approx(1.0, abs=1e-12)
    assert eval_boundary(blaschke(0.5), math.pi) == pytest.approx(1.0, abs=1e-12)


def test_boundary_derivative_examples():
    assert boundary_derivative(Identity(), 1.1) == pytest.approx(1.0)
    assert abs(boundary_derivative(blaschke(0.5), math.pi)) == pytest.approx(1 / 3, rel=1e-12)
    assert abs(boundary_derivative(atomic(), math.pi)) == pytest.approx(0.5, rel=1e-12)


def test_boundary_too_close_to_singularity():
    with pytest.raises(SingularityError) as err:
        eval_boundary(atomic(), 1e-4)
    assert err.value.offending == 0.0


def test_blaschke_derivative_modulus_examples():
    assert blaschke_boundary_derivative_modulus(ExplicitZeros(((0, 1),)), 0.4) == pytest.approx(1.0)
    assert blaschke_boundary_derivative_modulus(ExplicitZeros(((0.5, 1),)), math.pi) == pytest.approx(1 / 3)
    n = np.arange(1, 200)
    a = 1 - 0.5**n
    series = np.sum((1 - a**2) / (1 + a) ** 2)
    val = blaschke_boundary_derivative_modulus(GeometricZeros(0.5), math.pi)
    assert val == pytest.approx(series, rel=1e-12)
    assert val == pytest.approx(0.6066951524, abs=1e-9)


def test_blaschke_derivative_modulus_near_accumulation_point():
    with pytest.raises(SingularityError):
        blaschke_boundary_derivative_modulus(GeometricZeros(0.5), 0.0)
    with pytest.raises(TruncationError):
        blaschke_boundary_derivative_modulus(GeometricZeros(0.5), 0.01, eps=1e-12)


@given(st.floats(0.05, 2 * math.pi - 0.05))
def test_blaschke_lemma_lower_bound(theta):
    seq = GeometricZeros(0.5)
    val = blaschke_boundary_derivative_modulus(seq, theta, eps=1e-9)
    mods = np.abs(seq.zeros(seq.max_depth))
    assert np.all(val >= (1 - mods) / (1 + mods) - 1e-12)


def test_compose_ratio_examples():
    u = power(2)
    for t in (0.3, 1.7, 4.0):
        j = evaluate(u, np.exp(1j * t), 2)
        assert compose_ratio_A(u, Identity(), t) == pytest.approx(j.f[2][0] / j.f[1][0] ** 2)
    assert compose_ratio_A(power(2), power(2), 0.0) == pytest.approx(0.75, abs=1e-12)
    rhs, lhs = compose_ratio_A(blaschke(0.5), blaschke(-0.5), math.pi / 2, verify=True)
    assert abs(lhs - rhs) < 1e-9


# ---------------------------------------------------------------- algebra


def test_constructors_evaluate_pointwise(rng):
    z = disk_points(rng, 100, 0.9)
    S = atomic()
    s = evaluate(S, z).f[0]
    b = evaluate(B_GEOM, z).f[0]
    assert np.allclose(np.abs(evaluate(product(S, Unimodular(1.3)), z).f[0]), np.abs(s), atol=1e-12)
    assert np.allclose(evaluate(compose(S, Identity()), z).f[0], s, atol=1e-12)
    assert np.allclose(evaluate(product(S, B_GEOM), z).f[0], s * b, atol=1e-11)
    assert np.allclose(evaluate(reflect(S), z).f[0], evaluate(S, -z).f[0], atol=1e-12)
    a = 0.3 - 0.2j
    jf = evaluate(frostman_shift(S, a), z)
    assert np.all(np.abs(jf.f[0] - mobius_eval(a, s)) <= jf.e[0] + 1e-12)
    jc = evaluate(compose(B_GEOM, S), z)
    assert np.all(np.abs(jc.f[0] - evaluate(B_GEOM, s).f[0]) <= jc.e[0] + 1e-11)


def test_remove_zero_examples(rng):
    assert remove_zero(blaschke(0.5), 0.5) == Unimodular(0.0)
    r = remove_zero(product(power(1), blaschke(0.5)), 0.5)
    assert evaluate(r, 0.3j).f[0][0] == pytest.approx(0.3j, abs=1e-15)
    g = remove_zero(B_GEOM, 0.5)
    z = disk_points(rng, 50, 0.9)
    lhs = evaluate(g, z).f[0] * mobius_eval(0.5, z)
    assert np.allclose(lhs, evaluate(B_GEOM, z).f[0], atol=1e-10)
    with pytest.raises(ExprError):
        remove_zero(B_GEOM, 0.3)


def test_expr_json_round_trip():
    for eid in list_entries():
        u = get_entry(eid).expr
        assert from_json(u.to_json()) == u
    with pytest.raises(ExprError):
        from_json({"type": "nope"})
    with pytest.raises(ExprError):
        from_json({"type": "singular", "atoms": [{"theta": 0, "weight": -1}]})


def test_is_finite():
    assert is_finite(power(3)) and is_finite(atomic())
    assert not is_finite(compose(atomic(), B_GEOM))


@pytest.mark.parametrize("eid", list_entries())
def test_inner_modulus(eid, rng):
    u = get_entry(eid).expr
    jet = evaluate(u, disk_points(rng, 300, 0.999), 0, 1e-10)
    assert np.all(np.abs(jet.f[0][jet.ok]) < 1.0)
    s = sing_set(u)
    t = rng.random(400) * 2 * math.pi
    t = t[s.distance(t) > max(0.05, 2 * s.window)][:100]
    jb = evaluate(u, np.exp(1j * t), 0, 1e-10)
    assert np.all(np.abs(np.abs(jb.f[0][jb.ok]) - 1) < 1e-9)
    assert jb.ok.mean() > 0.9


# ---------------------------------------------------------------- singular sets


def test_sing_set_examples():
    s = sing_set(B_GEOM)
    assert s.atoms == [] and s.accumulation_points == [0.0]
    assert sing_set(atomic()).atoms == [0.0]
    assert sing_set(power(3)).is_empty


def test_sing_set_of_b_compose_S():
    s = sing_set(compose(B_GEOM, atomic()))
    assert s.description == COUNTABLE
    assert 0.0 in s.accumulation_points
    # S(e^{it}) = exp(i cot(t/2)) equals 1 where cot(t/2) = 2 pi k
    k = np.arange(1, 6)
    expected = 2 * np.arctan(1 / (2 * np.pi * k))
    for t in np.concatenate([expected, 2 * np.pi - expected]):
        assert min(abs(t - a) for a in s.atoms) < 1e-9
    assert len(s.atoms) > 20


@pytest.mark.parametrize("eid", [e for e in list_entries() if get_entry(e).expected_sing["description"] == FINITE])
def test_catalog_sing_matches_expected(eid):
    e = get_entry(eid)
    s = sing_set(e.expr)
    assert sorted(s.atoms) == pytest.approx(sorted(e.expected_sing["atoms"]))
    assert sorted(s.accumulation_points) == pytest.approx(sorted(e.expected_sing["accumulation_points"]))
