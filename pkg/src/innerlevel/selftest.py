"""Acceptance checks over the catalog, shared by the CLI ``selftest`` and the test suite.

Each check returns a :class:`CheckResult`; reference values come from
independent computations (direct partial products, finite differences, closed
forms) rather than from the code paths under test.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .catalog import MIRROR_FAMILY, NOT_ONE_COMPONENT, ONE_COMPONENT, UNSPECIFIED, get_entry, list_entries
from .criteria import (
    EVIDENCE_NOT_ONE,
    EVIDENCE_ONE,
    INCONCLUSIVE,
    CertifyConfig,
    certify,
    composition_bound_check,
    radial_liminf,
    ratio_ladder,
)
from .evaluate import (
    EvaluationError,
    blaschke_boundary_derivative_modulus,
    compose_ratio_A,
    evaluate,
    truncation_depth,
    truncation_error_bounds,
)
from .expr import Blaschke, atomic, blaschke, compose, is_finite, power, walk
from .geometry import mobius_eval, pseudo_distance
from .levelsets.analysis import (
    CONNECTED,
    DISCONNECTED,
    RasterCache,
    connectivity_report,
    factor_bounds_estimate,
    inclusion_check,
)
from .levelsets.raster import label_components, level_raster, rasterize_modulus
from .singularities import sing_set

LEVELS = (10, 11, 12)
ETAS = (0.3, 0.5, 0.7, 0.9)
CONNECTED_FIXTURES = ("finite_blaschke_2", "atomic_S", "finite_atoms_3", "geometric_b", "theta_Sv", "b_compose_S")


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    details: list = field(default_factory=list)
    seconds: float = 0.0
    limit: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        head = f"[{status}] criterion {self.number}: {self.name} ({self.seconds:.1f}s"
        head += f", limit {self.limit:g}s)" if self.limit else ")"
        return head

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "details": self.details,
                "seconds": self.seconds, "limit": self.limit}


def _disk_points(rng, n: int, rmax: float) -> np.ndarray:
    r = rmax * np.sqrt(rng.random(n))
    return r * np.exp(2j * math.pi * rng.random(n))


def _timed(number, name, limit, fn) -> CheckResult:
    t = time.perf_counter()
    passed, details = fn()
    dt = time.perf_counter() - t
    if limit is not None and dt > limit:
        passed = False
        details.append(f"runtime {dt:.1f}s exceeds {limit:g}s")
    return CheckResult(number, name, bool(passed), details, dt, limit)


# ---------------------------------------------------------------- 1 geometry


def check_geometry(seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        details = []
        n = 10_000
        a = _disk_points(rng, n, 0.999)
        xi = np.exp(2j * math.pi * rng.random(n))
        at_a = np.array([abs(mobius_eval(complex(x), complex(x))) for x in a])
        on_t = np.array([abs(abs(mobius_eval(complex(x), complex(y))) - 1.0) for x, y in zip(a, xi)])
        ok = bool(at_a.max() <= 1e-10 and on_t.max() <= 1e-10)
        details.append(f"phi_a(a): max {at_a.max():.2e}; | |phi_a(xi)| - 1 |: max {on_t.max():.2e}")
        worst = 0.0
        for eid in list_entries():
            u = get_entry(eid).expr
            z = _disk_points(rng, 1000, 0.99)
            w = _disk_points(rng, 1000, 0.99)
            jz = evaluate(u, z, 0, 1e-11)
            jw = evaluate(u, w, 0, 1e-11)
            good = jz.ok & jw.ok
            excess = pseudo_distance(jz.f[0][good], jw.f[0][good]) - pseudo_distance(z[good], w[good])
            worst = max(worst, float(excess.max()))
            if excess.max() > 1e-9 or good.sum() < 1000:
                ok = False
                details.append(f"{eid}: Schwarz-Pick excess {excess.max():.2e}, evaluated {int(good.sum())}/1000")
        details.append(f"Schwarz-Pick: largest excess over all entries {worst:.2e}")
        return ok, details

    return _timed(1, "geometry identities and Schwarz-Pick", 10.0, run)


# ---------------------------------------------------------------- 2 truncation


def _partial_product(zeros: np.ndarray, z: np.ndarray) -> np.ndarray:
    p = np.ones_like(z)
    for a in zeros:
        if a == 0:
            p = p * z
        else:
            p = p * (abs(a) / a) * (a - z) / (1.0 - np.conj(a) * z)
    return p


def check_truncation(seed: int = 1, points: int = 100, eps: float = 1e-10) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        details = []
        ok = True
        for eid in list_entries():
            seqs = [n.zeros for n in walk(get_entry(eid).expr) if isinstance(n, Blaschke) and n.zeros.length is None]
            for seq in seqs:
                z = _disk_points(rng, points, 0.95)
                worst = 0.0
                for zi in z:
                    n = truncation_depth(seq, zi, eps)
                    n4 = min(4 * n, seq.max_depth)
                    jet = evaluate(Blaschke(seq), zi, 0, eps)
                    value, bound = complex(jet.f[0][0]), float(jet.e[0][0])
                    ref = _partial_product(seq.zeros(n4), np.array([zi]))
                    ref_bound = float(truncation_error_bounds(seq, np.array([zi]), n4, [ref])[0][0])
                    gap = abs(value - ref[0])
                    worst = max(worst, gap / max(bound + ref_bound, 1e-300))
                    pn = _partial_product(seq.zeros(n), np.array([zi]))[0]
                    if gap > bound + ref_bound or abs(pn - ref[0]) > math.expm1(2 * seq.tail_bound(n) / max(
                            1 - abs(zi), float(seq.tail_distance(np.array([zi]), n)[0]))) * abs(pn) + 1e-15:
                        ok = False
                details.append(f"{eid}/{seq.kind}: max |f_N - P_4N| / bound = {worst:.3f}")
        return ok, details

    return _timed(2, "truncation depth N vs 4N", 30.0, run)


# ---------------------------------------------------------------- 3 derivatives


def _theta_derivatives(u, theta: np.ndarray, h: float = 1e-3):
    """Richardson-extrapolated central differences of f(t) = u(e^{it})."""

    def f(t):
        return evaluate(u, np.exp(1j * t), 0, 1e-14).f[0]

    def d1(step):
        return (f(theta + step) - f(theta - step)) / (2 * step)

    def d2(step):
        return (f(theta + step) - 2 * f(theta) + f(theta - step)) / step**2

    return (4 * d1(h / 2) - d1(h)) / 3, (4 * d2(h / 2) - d2(h)) / 3


def _clear_angles(rng, sing, n: int, gap: float) -> np.ndarray:
    out = []
    while len(out) < n:
        t = rng.random(4 * n) * 2 * math.pi
        out.extend(t[sing.distance(t) >= gap].tolist())
    return np.array(out[:n])


def check_derivatives(seed: int = 2, points: int = 200) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        details = []
        ok = True
        for eid in list_entries():
            u = get_entry(eid).expr
            if not is_finite(u):
                continue
            s = sing_set(u)
            theta = _clear_angles(rng, s, points, 0.2)
            xi = np.exp(1j * theta)
            jet = evaluate(u, xi, 2, 1e-13)
            an1 = 1j * xi * jet.f[1]
            an2 = -xi * jet.f[1] - xi**2 * jet.f[2]
            fd1, fd2 = _theta_derivatives(u, theta)
            r1 = np.abs(fd1 - an1) / np.maximum(np.abs(an1), 1e-300)
            r2 = np.abs(fd2 - an2) / np.maximum(np.abs(an2), 1e-300)
            if r1.max() >= 1e-6 or r2.max() >= 1e-6 or not jet.ok.all():
                ok = False
            details.append(f"{eid}: rel err order1 {r1.max():.1e}, order2 {r2.max():.1e}")
        for eid in list_entries():
            u = get_entry(eid).expr
            if not isinstance(u, Blaschke):
                continue
            seq = u.zeros
            s = sing_set(u)
            theta = _clear_angles(rng, s, points, 0.05)
            series = np.array([blaschke_boundary_derivative_modulus(seq, t, 1e-12) for t in theta])
            fd1, _ = _theta_derivatives(u, theta, h=1e-4)
            rel = np.abs(np.abs(fd1) - series) / series
            mods = np.abs(seq.zeros(seq.max_depth))
            lemma = (1 - mods) / (1 + mods)
            below = int((series[:, None] < lemma[None, :] - 1e-12).sum())
            if rel.max() >= 1e-6 or below:
                ok = False
            details.append(f"{eid}: |B'| series vs FD rel err {rel.max():.1e}; lemma-bound violations {below}")
        return ok, details

    return _timed(3, "boundary derivatives vs finite differences", 30.0, run)


# ---------------------------------------------------------------- 4 composition


def composition_pairs() -> dict:
    b = get_entry("geometric_b").expr
    S = atomic()
    return {
        "b o S": (b, S),
        "S o b": (S, b),
        "z^2 o z^2": (power(2), power(2)),
        "phi_0.5 o phi_-0.5": (blaschke(0.5), blaschke(-0.5)),
        "S o z^2": (S, power(2)),
    }


def check_composition(seed: int = 3, points: int = 200) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        details = []
        ok = True
        for name, (outer, inner) in composition_pairs().items():
            s = sing_set(compose(outer, inner))
            gap = max(1e-3, s.window)
            theta = _clear_angles(rng, s, points, gap)
            worst, failed = 0.0, 0
            for t in theta:
                try:
                    rhs, lhs = compose_ratio_A(outer, inner, float(t), eps=1e-12, verify=True, tol=1e-9)
                    worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
                except EvaluationError:
                    failed += 1
            if failed:
                ok = False
            details.append(f"{name}: max |LHS-RHS| {worst:.1e}, failures {failed}/{points}")
        cb = composition_bound_check(get_entry("geometric_b").expr, atomic(), n_samples=1024, tol=1e-6)
        if cb.violations:
            ok = False
        details.append(f"b o S: sampled max |A| {cb.max_A:.6f} <= bound {cb.bound:.6f}; violations {cb.violations}")
        return ok, details

    return _timed(4, "composition identity and split bound", 60.0, run)


# ---------------------------------------------------------------- 5 and 7 connectivity


@dataclass
class ConnectivityRuns:
    first_connected: dict   # id -> (eta, report)
    factorial: object
    caches: dict


def connectivity_runs() -> ConnectivityRuns:
    found = {}
    caches = {}
    for eid in CONNECTED_FIXTURES:
        u = get_entry(eid).expr
        cache = RasterCache(u)
        caches[eid] = cache
        found[eid] = None
        for eta in ETAS:
            rep = connectivity_report(u, eta, LEVELS, cache=cache)
            if rep.verdict == CONNECTED:
                found[eid] = (eta, rep)
                break
    v = get_entry("factorial_v").expr
    caches["factorial_v"] = RasterCache(v)
    fac = connectivity_report(v, 0.9, LEVELS, cache=caches["factorial_v"])
    return ConnectivityRuns(found, fac, caches)


def check_connectivity(runs: ConnectivityRuns | None = None) -> CheckResult:
    holder = {}

    def run():
        r = runs or connectivity_runs()
        holder["runs"] = r
        ok = True
        details = []
        for eid, hit in r.first_connected.items():
            if hit is None:
                ok = False
                details.append(f"{eid}: no connected verdict for eta in {list(ETAS)}")
            else:
                details.append(f"{eid}: connected at eta={hit[0]} counts {hit[1].counts}")
        f = r.factorial
        bridged = [p.optimistic_components for p in f.per_level]
        fac_ok = f.verdict == DISCONNECTED and min(f.counts) >= 2 and min(bridged) >= 2
        if not fac_ok:
            ok = False
        details.append(f"factorial_v eta=0.9: verdict {f.verdict}, counts {f.counts}, counts with uncertain cells {bridged}")
        return ok, details

    res = _timed(5, "connectivity fixtures", 600.0, run)
    res.runs = holder.get("runs")
    return res


def check_components(runs: ConnectivityRuns) -> CheckResult:
    def run():
        ok = True
        details = []
        items = [(eid, hit[0]) for eid, hit in runs.first_connected.items() if hit is not None]
        items.append(("factorial_v", 0.9))
        for eid, eta in items:
            cache = runs.caches[eid]
            for L in LEVELS:
                labels = label_components(level_raster(cache.modulus(L), eta))
                holes = labels.holes.tolist()
                mins = labels.min_modulus.tolist()
                bad = [k for k in range(labels.count) if holes[k] != 0 or not mins[k] < 0.05]
                if bad:
                    ok = False
                    details.append(f"{eid} eta={eta} L={L}: components {bad} fail (holes {holes}, min |u| {mins})")
            details.append(f"{eid} eta={eta}: checked levels {list(LEVELS)}")
        return ok, details

    return _timed(7, "component diagnostics", None, run)


# ---------------------------------------------------------------- 6 inclusions


def check_inclusions(eta: float | None = None, margin: float = 1e-6) -> CheckResult:
    def run():
        from .sequences import FactorialZeros

        details = []
        ok = True
        theta = get_entry("theta_Sv").expr
        u, v = atomic(), Blaschke(FactorialZeros())
        e = eta
        cache = RasterCache(theta)
        if e is None:
            for cand in ETAS:
                if connectivity_report(theta, cand, LEVELS, cache=cache).verdict == CONNECTED:
                    e = cand
                    break
        if e is None:
            return False, ["theta_Sv: no connected eta to work with"]
        sigmas = []
        for L in LEVELS:
            mt = cache.modulus(L)
            g = mt.grid
            mu, mv = rasterize_modulus(u, g), rasterize_modulus(v, g)
            fb = factor_bounds_estimate(theta, u, v, e, g, rasters=(mt, mu, mv))
            sigmas.append(fb.sigma_hat)
            sig = min(fb.sigma_hat + margin, 1.0 - 1e-12)
            dl = max(fb.delta_hat - margin, 1e-12)
            checks = {
                "v(eta) in Theta(eta)": inclusion_check(level_raster(mv, e), level_raster(mt, e)),
                "Theta(eta) in v(sigma)": inclusion_check(level_raster(mt, e), level_raster(mv, sig)),
                "u(delta) in Theta(eta)": inclusion_check(level_raster(mu, dl), level_raster(mt, e)),
                "u(delta) in v(sigma)": inclusion_check(level_raster(mu, dl), level_raster(mv, sig)),
            }
            for name, rep in checks.items():
                if rep.violations:
                    ok = False
                    details.append(f"L={L} {name}: {rep.violations} violations (margin {rep.max_violation_margin:.2e})")
            details.append(f"L={L}: delta_hat {fb.delta_hat:.6f}, sigma_hat {fb.sigma_hat:.6f}, curve points {fb.curve_points}")
        if not all(b > a for a, b in zip(sigmas, sigmas[1:])) or not sigmas[-1] < 1.0:
            ok = False
            details.append(f"sigma_hat not increasing towards 1: {sigmas}")
        details.insert(0, f"theta_Sv at eta={e}")
        return ok, details

    return _timed(6, "inclusion chains for theta_Sv", None, run)


# ---------------------------------------------------------------- 8 Aleksandrov


def _rel_step(a: float, b: float) -> float:
    if a > 0:
        return abs(b - a) / a
    return 0.0 if b == 0 else math.inf


def check_aleksandrov() -> CheckResult:
    def run():
        ok = True
        details = []
        for eid in ("atomic_S", "finite_atoms_3", "geometric_b"):
            u = get_entry(eid).expr
            s = sing_set(u)
            for p in s.points:
                lim = radial_liminf(u, p, 30)
                if not lim.value < 0.5:
                    ok = False
                details.append(f"{eid}: liminf at {p:.4f} = {lim.value:.3e} (deepest n {lim.deepest_n})")
            probes = np.linspace(0, 2 * math.pi, 16, endpoint=False) + 0.1
            probes = probes[s.distance(probes) > 0.1]
            vals = [radial_liminf(u, float(t), 30).value for t in probes]
            if min(vals) <= 0.99:
                ok = False
            details.append(f"{eid}: non-singular probes min {min(vals):.6f} over {len(vals)}")
        for eid in list_entries():
            e = get_entry(eid)
            if e.expected_status not in (ONE_COMPONENT,) and eid != "factorial_v":
                continue
            lad = ratio_ladder(e.expr)
            sups = [r for _, r, _, _, _ in lad]
            steps = [_rel_step(a, b) for a, b in zip(sups, sups[1:])]
            stable = all(x <= 0.10 for x in steps)
            want = eid != "factorial_v"
            if stable != want:
                ok = False
            tag = "stable" if stable else "not stable"
            details.append(f"{eid}: ratio sups {[round(x, 6) for x in sups]} -> {tag}"
                           + ("" if stable == want else " (UNEXPECTED)"))
        return ok, details

    return _timed(8, "Aleksandrov sampling suite", 120.0, run)


# ---------------------------------------------------------------- 9 verdicts


_EXPECT = {ONE_COMPONENT: EVIDENCE_ONE, NOT_ONE_COMPONENT: EVIDENCE_NOT_ONE}


def check_verdicts(config: CertifyConfig | None = None) -> CheckResult:
    def run():
        ok = True
        details = []
        exceptions = []
        for eid in list_entries():
            e = get_entry(eid)
            v = certify(e.expr, config)
            if e.expected_status == UNSPECIFIED:
                details.append(f"{eid}: {v.status} (no expectation)")
                continue
            want = _EXPECT[e.expected_status]
            if v.status == want:
                details.append(f"{eid}: {v.status} as expected")
            elif eid in MIRROR_FAMILY and v.status == INCONCLUSIVE:
                exceptions.append(eid)
                details.append(f"{eid}: inconclusive (allowed exception)")
            else:
                ok = False
                details.append(f"{eid}: expected {want}, got {v.status}: {'; '.join(v.reasons[:2])}")
        details.append(f"exception list: {exceptions}")
        return ok, details

    return _timed(9, "certify agrees with expected status", None, run)


def run_all(verbose: bool = True) -> list:
    results = [check_geometry(), check_truncation(), check_derivatives(), check_composition()]
    conn = check_connectivity()
    results.append(conn)
    results.append(check_inclusions())
    results.append(check_components(conn.runs))
    results.append(check_aleksandrov())
    results.append(check_verdicts())
    results.sort(key=lambda r: r.number)
    if verbose:
        for r in results:
            print(r.line())
            for d in r.details:
                print("    " + d)
    return results
