"""Sampled Aleksandrov-type criterion and the one-component verdict."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evaluate import evaluate
from .expr import Blaschke, InnerExpr, is_constant
from .geometry import TWO_PI, BoundaryPoint
from .jsonio import SCHEMA
from .levelsets.analysis import CONNECTED, DISCONNECTED, RasterCache, connectivity_report
from .levelsets.grid import DEFAULT_S
from .singularities import UNRESOLVED, SingSet, sing_set

MIN_SAMPLES = 256
SHELL_POINTS = 16

EVIDENCE_ONE = "evidence_one_component"
EVIDENCE_NOT_ONE = "evidence_not_one_component"
INCONCLUSIVE = "inconclusive"


class CriteriaError(ValueError):
    pass


# ---------------------------------------------------------------- sampling


@dataclass
class SampleSet:
    """Boundary angles with the smallest ladder size that includes each of them."""

    theta: np.ndarray
    min_n: np.ndarray
    spec: dict

    def upto(self, n: int) -> np.ndarray:
        return self.min_n <= n


def _shell_depth(n: int) -> int:
    return int(math.floor(math.log2(n)))


def stratified_samples(sing: SingSet, ladder, exclusion_radius: float = 1e-3, shell_points: int = SHELL_POINTS) -> SampleSet:
    """Uniform grid plus dyadic shells around every listed singular point.

    For sample size n the set holds the n-point uniform grid and, around each
    singular point, offsets pi * 2**-k * (1 + j/shell_points) on both sides for
    k = 1..floor(log2 n).  Sets for the sizes in ``ladder`` are nested; points
    closer than ``exclusion_radius`` to Sing (or inside the listing window of an
    accumulation point) are dropped.
    """
    ladder = sorted(set(int(n) for n in ladder))
    if ladder[0] < MIN_SAMPLES:
        raise CriteriaError(f"n_samples must be >= {MIN_SAMPLES}")
    top = ladder[-1]
    if any(top % n for n in ladder):
        raise CriteriaError("sample sizes must divide the largest one")
    j = np.arange(top)
    theta = [j * (TWO_PI / top)]
    min_n = [np.array([next(n for n in ladder if (jj * n) % top == 0) for jj in j])]
    depth = {n: _shell_depth(n) for n in ladder}
    points = sing.points
    if points:
        k = np.arange(1, depth[top] + 1)
        jj = np.arange(shell_points)
        off = (math.pi * 2.0 ** -k[:, None] * (1.0 + jj[None, :] / shell_points)).ravel()
        kk = np.repeat(k, shell_points)
        need = np.array([next(n for n in ladder if depth[n] >= x) for x in kk])
        for p in points:
            for side in (1.0, -1.0):
                theta.append(np.mod(p + side * off, TWO_PI))
                min_n.append(need)
    theta = np.concatenate(theta)
    min_n = np.concatenate(min_n)
    keep = _clear(sing, theta, exclusion_radius)
    spec = {
        "uniform": top,
        "ladder": ladder,
        "shell_points": shell_points,
        "shell_depth": depth[top],
        "exclusion_radius": exclusion_radius,
        "window": sing.window,
        "dropped": int((~keep).sum()),
    }
    return SampleSet(theta[keep], min_n[keep], spec)


def _clear(sing: SingSet, theta: np.ndarray, exclusion_radius: float) -> np.ndarray:
    ok = np.ones(theta.shape, dtype=bool)
    if sing.atoms:
        ok &= SingSet(atoms=sing.atoms).distance(theta) >= exclusion_radius
    if sing.accumulation_points:
        ok &= SingSet(atoms=sing.accumulation_points).distance(theta) >= max(exclusion_radius, sing.window)
    return ok


def _sing_for(u: InnerExpr, exclusion_radius: float) -> SingSet:
    s = sing_set(u, exclusion_radius=exclusion_radius)
    if s.description == UNRESOLVED:
        raise CriteriaError("the singular set could not be resolved: " + "; ".join(s.notes))
    return s


@dataclass
class BoundaryJets:
    theta: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    ok: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(self.d2) / np.abs(self.d1) ** 2


def boundary_jets(u: InnerExpr, theta: np.ndarray, eps: float = 1e-10) -> BoundaryJets:
    jet = evaluate(u, np.exp(1j * np.asarray(theta, dtype=float)), 2, eps)
    ok = jet.ok & np.isfinite(jet.f[1]) & np.isfinite(jet.f[2]) & (np.abs(jet.f[1]) > 0)
    return BoundaryJets(np.asarray(theta, dtype=float), jet.f[1], jet.f[2], ok)


@dataclass
class SampledExtreme:
    value: float
    theta: float
    samples: int
    skipped: int
    spec: dict

    def to_json(self) -> dict:
        return asdict(self)


def _extreme(values: np.ndarray, theta: np.ndarray, ok: np.ndarray, mode: str, spec: dict) -> SampledExtreme:
    if not ok.any():
        raise CriteriaError("no boundary sample could be evaluated")
    vals = np.where(ok, values, -np.inf if mode == "max" else np.inf)
    i = int(np.argmax(vals) if mode == "max" else np.argmin(vals))
    return SampledExtreme(float(vals[i]), float(theta[i]), int(ok.sum()), int((~ok).sum()), spec)


def derivative_ratio_sup(u: InnerExpr, n_samples: int = 1024, exclusion_radius: float = 1e-3, eps: float = 1e-10) -> SampledExtreme:
    """max |u''|/|u'|^2 over stratified boundary samples away from Sing(u)."""
    s = _sing_for(u, exclusion_radius)
    ss = stratified_samples(s, [n_samples], exclusion_radius)
    bj = boundary_jets(u, ss.theta, eps)
    return _extreme(bj.ratio, ss.theta, bj.ok, "max", ss.spec)


def delta_u_inf(u: InnerExpr, n_samples: int = 1024, exclusion_radius: float = 1e-3, eps: float = 1e-10) -> SampledExtreme:
    """min |u'| over the same stratified samples."""
    s = _sing_for(u, exclusion_radius)
    ss = stratified_samples(s, [n_samples], exclusion_radius)
    bj = boundary_jets(u, ss.theta, eps)
    return _extreme(np.abs(bj.d1), ss.theta, bj.ok, "min", ss.spec)


def ratio_ladder(u: InnerExpr, ladder=(256, 1024, 4096), exclusion_radius: float = 1e-3, eps: float = 1e-10,
                 sing: SingSet | None = None) -> list:
    """(n, ratio sup, delta inf) for each size in the ladder from one shared evaluation."""
    s = sing if sing is not None else _sing_for(u, exclusion_radius)
    ss = stratified_samples(s, ladder, exclusion_radius)
    bj = boundary_jets(u, ss.theta, eps)
    out = []
    for n in ss.spec["ladder"]:
        m = ss.upto(n) & bj.ok
        r = _extreme(bj.ratio, ss.theta, m, "max", ss.spec)
        d = _extreme(np.abs(bj.d1), ss.theta, m, "min", ss.spec)
        out.append((n, r.value, d.value, r.theta, int(m.sum())))
    return out


# ---------------------------------------------------------------- radial behaviour


@dataclass
class RadialLiminf:
    theta: float
    value: float
    deepest_r: float
    deepest_n: int
    evaluated: int
    requested_depth: int

    def to_json(self) -> dict:
        return asdict(self)


def radial_liminf(u: InnerExpr, zeta, depth: int = 30, eps: float = 1e-6) -> RadialLiminf:
    """min |u(r_n zeta)| for r_n = 1 - 2**-n over n in [depth/2, depth].

    Depths where the evaluator cannot reach ``eps`` are skipped; the deepest
    successful n is reported.
    """
    if not 2 <= depth <= 52:
        raise CriteriaError("depth must lie in [2, 52]")
    theta = zeta.theta if isinstance(zeta, BoundaryPoint) else BoundaryPoint(float(zeta)).theta
    n = np.arange(depth // 2, depth + 1)
    r = 1.0 - 2.0 ** (-n.astype(float))
    jet = evaluate(u, r * np.exp(1j * theta), 0, eps)
    ok = jet.ok & np.isfinite(jet.f[0])
    if not ok.any():
        raise CriteriaError(f"no radial sample at angle {theta} could be evaluated")
    vals = np.abs(jet.f[0][ok])
    deepest = int(n[ok].max())
    return RadialLiminf(theta, float(vals.min()), float(1.0 - 2.0**-deepest), deepest, int(ok.sum()), depth)


# ---------------------------------------------------------------- reports


@dataclass
class AleksandrovReport:
    ratio_sup_estimate: float
    ratio_argmax: float
    delta_u_estimate: float
    delta_argmin: float
    liminfs: list
    samples: int
    skipped: int
    exclusion_radius: float
    sampling: dict
    sing: dict

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "aleksandrov_report",
            "ratio_sup_estimate": self.ratio_sup_estimate,
            "ratio_argmax": self.ratio_argmax,
            "delta_u_estimate": self.delta_u_estimate,
            "delta_argmin": self.delta_argmin,
            "liminfs": [l.to_json() for l in self.liminfs],
            "samples": self.samples,
            "skipped": self.skipped,
            "exclusion_radius": self.exclusion_radius,
            "sampling": self.sampling,
            "sing": self.sing,
        }


def aleksandrov_report(u: InnerExpr, n_samples: int = 1024, exclusion_radius: float = 1e-3, depth: int = 30,
                       eps: float = 1e-10) -> AleksandrovReport:
    s = _sing_for(u, exclusion_radius)
    ss = stratified_samples(s, [n_samples], exclusion_radius)
    bj = boundary_jets(u, ss.theta, eps)
    r = _extreme(bj.ratio, ss.theta, bj.ok, "max", ss.spec)
    d = _extreme(np.abs(bj.d1), ss.theta, bj.ok, "min", ss.spec)
    lims = [radial_liminf(u, p, depth) for p in s.points]
    return AleksandrovReport(r.value, r.theta, d.value, d.theta, lims, r.samples, r.skipped, exclusion_radius,
                             ss.spec, s.to_json())


# ---------------------------------------------------------------- composition bound


@dataclass
class CompositionBound:
    max_A: float
    bound: float
    sup_outer: float
    sup_inner: float
    delta_outer: float
    violations: int
    max_identity_gap: float
    samples: int

    def to_json(self) -> dict:
        return asdict(self)


def composition_bound_check(outer: InnerExpr, inner: InnerExpr, n_samples: int = 1024,
                            exclusion_radius: float = 1e-3, eps: float = 1e-10, tol: float = 1e-6) -> CompositionBound:
    """Sampled check of |A| <= sup|u''/u'^2| + sup|v''/v'^2| / inf|u'| for A = (u o v)''/((u o v)')^2.

    The outer supremum and infimum are taken over the outer function's own
    stratified samples together with the images v(zeta) of the composite's
    samples, so the pointwise split bound is covered by the sample set.
    """
    from .expr import compose

    comp = compose(outer, inner)
    s_c = _sing_for(comp, exclusion_radius)
    ss = stratified_samples(s_c, [n_samples], exclusion_radius)
    jc = boundary_jets(comp, ss.theta, eps)
    jv = boundary_jets(inner, ss.theta, eps)
    images = np.angle(evaluate(inner, np.exp(1j * ss.theta), 0, eps).f[0])
    s_u = _sing_for(outer, exclusion_radius)
    su = stratified_samples(s_u, [n_samples], exclusion_radius)
    ju = boundary_jets(outer, np.concatenate([su.theta, images]), eps)
    ok = jc.ok & jv.ok
    sup_outer = float(ju.ratio[ju.ok].max())
    delta_outer = float(np.abs(ju.d1[ju.ok]).min())
    sup_inner = float(jv.ratio[jv.ok].max())
    bound = sup_outer + sup_inner / delta_outer
    A = jc.d2[ok] / jc.d1[ok] ** 2
    # chain-rule split of the same quantity at each sample
    ju_img = boundary_jets(outer, images[ok], eps)
    split = ju_img.d2 / ju_img.d1**2 + (1.0 / ju_img.d1) * jv.d2[ok] / jv.d1[ok] ** 2
    gap = float(np.max(np.abs(A - split) / np.maximum(1.0, np.abs(split)))) if A.size else 0.0
    absA = np.abs(A)
    return CompositionBound(float(absA.max()) if absA.size else 0.0, bound, sup_outer, sup_inner, delta_outer,
                            int((absA > bound + tol).sum()), gap, int(ok.sum()))


# ---------------------------------------------------------------- verdict


@dataclass
class CertifyConfig:
    ladder: tuple = (256, 1024, 4096)
    stability_tol: float = 0.10
    liminf_margin: float = 0.05
    depth: int = 30
    exclusion_radius: float = 1e-3
    etas: tuple = (0.3, 0.5, 0.7, 0.9)
    negative_etas: tuple = (0.3, 0.5, 0.7, 0.9, 0.99)
    levels: tuple = (10, 11, 12)
    s: float = DEFAULT_S
    sub: int = 1
    grid_eps: float = 1e-8
    eps: float = 1e-10
    k_stable: int = 3
    uncertainty_threshold: float = 0.005

    def to_json(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, doc: dict) -> "CertifyConfig":
        known = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        for k in ("ladder", "etas", "negative_etas", "levels"):
            if k in known:
                known[k] = tuple(known[k])
        cfg = cls(**known)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if min(self.ladder) < MIN_SAMPLES:
            raise CriteriaError(f"sample sizes must be >= {MIN_SAMPLES}")
        if not all(0 < e < 1 for e in self.etas + self.negative_etas):
            raise CriteriaError("eta values must lie in (0, 1)")
        if len(self.levels) < self.k_stable:
            raise CriteriaError("need at least k_stable grid levels")
        if not 0 < self.stability_tol < 1 or not 0 <= self.liminf_margin < 1:
            raise CriteriaError("thresholds out of range")


@dataclass
class Verdict:
    status: str
    reasons: list
    inputs: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "kind": "verdict", "status": self.status, "reasons": list(self.reasons),
                "inputs": self.inputs, "config": self.config}


def certify(u: InnerExpr, config: CertifyConfig | None = None) -> Verdict:
    """Aggregate sampled evidence into a verdict.

    evidence_one_component: the ratio supremum changes by at most
    ``stability_tol`` between consecutive ladder sizes, every listed singular point
    has radial liminf below 1 - margin, and some eta gives a connected verdict.
    evidence_not_one_component: every eta of the negative sweep gives a
    disconnected verdict.  Otherwise inconclusive.  Sub-failures become reasons.
    """
    cfg = config or CertifyConfig()
    cfg.validate()
    reasons: list = []
    inputs: dict = {}

    ratio_ok = False
    liminf_ok = False
    sing = None
    if is_constant(u):
        reasons.append("constant function: not an admissible inner function for the criterion")
    else:
        try:
            sing = _sing_for(u, cfg.exclusion_radius)
            inputs["sing"] = sing.to_json()
        except CriteriaError as exc:
            reasons.append(str(exc))
    if sing is not None:
        try:
            ladder = ratio_ladder(u, cfg.ladder, cfg.exclusion_radius, cfg.eps, sing=sing)
            inputs["ratio_ladder"] = [{"n": n, "ratio_sup": r, "delta_inf": d, "argmax": t, "samples": m}
                                      for n, r, d, t, m in ladder]
            sups = [r for _, r, _, _, _ in ladder]
            steps = [abs(b - a) / max(a, 1e-300) for a, b in zip(sups, sups[1:])]
            ratio_ok = all(np.isfinite(sups)) and all(x <= cfg.stability_tol for x in steps)
            if not ratio_ok:
                reasons.append(f"ratio sup not stable under refinement: {[round(x, 6) for x in sups]}")
        except CriteriaError as exc:
            reasons.append(f"ratio sup: {exc}")
        try:
            lims = [radial_liminf(u, p, cfg.depth) for p in sing.points]
            inputs["liminfs"] = [l.to_json() for l in lims]
            bad = [l for l in lims if not l.value < 1.0 - cfg.liminf_margin]
            liminf_ok = not bad
            if bad:
                reasons.append(f"radial liminf >= {1 - cfg.liminf_margin:g} at {[round(l.theta, 6) for l in bad]}")
        except CriteriaError as exc:
            reasons.append(f"radial liminf: {exc}")

    cache = RasterCache(u, cfg.s, cfg.sub, cfg.grid_eps)
    conn = {}

    def report(eta):
        if eta not in conn:
            conn[eta] = connectivity_report(u, eta, cfg.levels, cfg.grid_eps, cfg.s, cfg.sub, cfg.k_stable,
                                            cfg.uncertainty_threshold, cache=cache)
        return conn[eta]

    connected_at = None
    for eta in cfg.etas:
        if report(eta).verdict == CONNECTED:
            connected_at = eta
            break
    if connected_at is None:
        reasons.append(f"no connected verdict for eta in {list(cfg.etas)}")
    disconnected_all = True
    if connected_at is None:
        for eta in cfg.negative_etas:
            if report(eta).verdict != DISCONNECTED:
                disconnected_all = False
                break
    else:
        disconnected_all = False
    inputs["connectivity"] = [{"eta": e, "verdict": r.verdict, "counts": r.counts,
                               "uncertain_fraction": r.uncertain_fraction} for e, r in sorted(conn.items())]

    if ratio_ok and liminf_ok and connected_at is not None:
        status = EVIDENCE_ONE
        reasons.insert(0, f"ratio sup stable, radial liminfs below threshold, connected at eta={connected_at:g}")
    elif disconnected_all:
        status = EVIDENCE_NOT_ONE
        reasons.insert(0, f"disconnected for every eta in {list(cfg.negative_etas)}")
    else:
        status = INCONCLUSIVE
    return Verdict(status, reasons, inputs, cfg.to_json())


def is_pure_blaschke(u: InnerExpr) -> bool:
    return isinstance(u, Blaschke)
