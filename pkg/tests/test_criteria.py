import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from innerlevel.catalog import get_entry
from innerlevel.criteria import (
    EVIDENCE_NOT_ONE,
    EVIDENCE_ONE,
    INCONCLUSIVE,
    CertifyConfig,
    CriteriaError,
    boundary_jets,
    certify,
    composition_bound_check,
    delta_u_inf,
    derivative_ratio_sup,
    radial_liminf,
    ratio_ladder,
    stratified_samples,
)
from innerlevel.expr import atomic, blaschke, compose, frostman_shift, power
from innerlevel.geometry import BoundaryPoint
from innerlevel.singularities import SingSet, sing_set


# ---- derivative ratio


def test_ratio_identity_is_zero():
    assert derivative_ratio_sup(power(1)).value == 0.0


def test_ratio_square_is_half():
    # |u''|/|u'|^2 = 2/4 on the circle
    r = derivative_ratio_sup(power(2))
    assert r.value == pytest.approx(0.5, rel=1e-9)


def test_ratio_b_compose_s_below_split_bound():
    b = get_entry("geometric_b").expr
    c = composition_bound_check(b, atomic(0.0), n_samples=1024)
    assert c.violations == 0
    r = derivative_ratio_sup(compose(b, atomic(0.0)))
    assert r.value <= c.bound + 1e-6


def test_ratio_single_zero_matches_closed_form():
    # |B''|/|B'|^2 = 2|a||1 - conj(a) xi|/(1 - |a|^2), maximal 2a/(1 - a) at xi = -1
    a = 0.5
    r = derivative_ratio_sup(blaschke(a))
    assert r.value == pytest.approx(2 * a / (1 - a), rel=1e-9)


# ---- delta_u


def test_delta_identity():
    assert delta_u_inf(power(1)).value == pytest.approx(1.0, abs=1e-12)


def test_delta_single_zero():
    d = delta_u_inf(blaschke(0.5))
    assert d.value == pytest.approx(1 / 3, rel=1e-9)
    assert abs(abs(d.theta) - math.pi) < 1e-9 or abs(d.theta - math.pi) < 1e-9


def test_delta_atomic():
    d = delta_u_inf(atomic(0.0))
    assert d.value == pytest.approx(0.5, rel=1e-9)
    assert d.theta == pytest.approx(math.pi, abs=1e-9)


def test_frostman_chain_bound():
    # |(phi_a o u)'| >= (1-|a|)/(1+|a|) |u'| on the circle
    u = get_entry("finite_atoms_3").expr
    a = 0.4 + 0.3j
    du = delta_u_inf(u).value
    dv = delta_u_inf(frostman_shift(u, a)).value
    assert dv >= (1 - abs(a)) / (1 + abs(a)) * du * (1 - 1e-9)


# ---- radial liminf


def test_liminf_atomic_at_atom():
    assert radial_liminf(atomic(0.0), BoundaryPoint(0.0), 30).value < 1e-100


def test_liminf_atomic_opposite():
    v = radial_liminf(atomic(0.0), BoundaryPoint(math.pi), 30).value
    r = 1 - 2.0**-15
    assert v == pytest.approx(math.exp(-(1 - r) / (1 + r)), rel=1e-9)
    assert v > 0.99


def test_liminf_geometric_at_accumulation():
    v = radial_liminf(get_entry("geometric_b").expr, BoundaryPoint(0.0), 30)
    assert v.value < 0.5
    assert v.deepest_n <= 30


def test_liminf_depth_validation():
    with pytest.raises(CriteriaError):
        radial_liminf(power(2), BoundaryPoint(0.0), 60)


# ---- sampling


def test_samples_nested_and_excluded():
    s = sing_set(get_entry("finite_atoms_3").expr)
    ss = stratified_samples(s, [256, 1024, 4096], 1e-3)
    assert np.all(s.distance(ss.theta) >= 1e-3)
    small = set(np.round(ss.theta[ss.upto(256)], 15))
    mid = set(np.round(ss.theta[ss.upto(1024)], 15))
    assert small <= mid
    assert ss.upto(4096).all()


def test_samples_validation():
    with pytest.raises(CriteriaError):
        stratified_samples(SingSet(), [128])
    with pytest.raises(CriteriaError):
        stratified_samples(SingSet(), [300, 1024])


def test_ladder_sup_monotone_in_n():
    # nested sample sets make the sampled sup non-decreasing
    lad = ratio_ladder(get_entry("b_compose_S").expr)
    sups = [r for _, r, _, _, _ in lad]
    assert all(b >= a for a, b in zip(sups, sups[1:]))


@given(st.floats(0.0, 0.95), st.floats(-math.pi, math.pi))
def test_jets_single_zero_ratio_closed_form(r, t):
    a = r * complex(math.cos(t), math.sin(t))
    th = np.linspace(0, 6, 7)
    bj = boundary_jets(blaschke(a), th)
    expected = 2 * abs(a) * np.abs(1 - np.conj(a) * np.exp(1j * th)) / (1 - abs(a) ** 2)
    assert np.allclose(bj.ratio, expected, rtol=1e-8, atol=1e-12)


def test_unresolved_sing_raises(monkeypatch):
    import innerlevel.criteria as crit

    monkeypatch.setattr(crit, "sing_set", lambda u, **kw: SingSet(description="unresolved", notes=["forced"]))
    with pytest.raises(CriteriaError):
        derivative_ratio_sup(power(2))
    v = certify(power(2), CertifyConfig(levels=(6, 7, 8)))
    assert v.status == INCONCLUSIVE
    assert any("could not be resolved" in r for r in v.reasons)


# ---- config


def test_certify_config_roundtrip():
    cfg = CertifyConfig(ladder=(256, 512), etas=(0.4,))
    assert CertifyConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("bad", [dict(ladder=(64,)), dict(etas=(1.2,)), dict(levels=(10,)),
                                 dict(stability_tol=2.0)])
def test_certify_config_validation(bad):
    with pytest.raises(CriteriaError):
        CertifyConfig(**bad).validate()


# ---- certify


def test_certify_square():
    v = certify(power(2))
    assert v.status == EVIDENCE_ONE


def test_certify_b_compose_s():
    v = certify(get_entry("b_compose_S").expr)
    assert v.status == EVIDENCE_ONE


def test_certify_constant_is_inconclusive():
    from innerlevel.expr import blaschke as _b

    v = certify(_b())
    assert v.status == INCONCLUSIVE
    assert v.reasons


def test_certify_factorial_example():
    # expected evidence_not_one_component; see the decisions ledger for why this stays red
    v = certify(get_entry("factorial_v").expr)
    assert v.status == EVIDENCE_NOT_ONE, v.reasons
