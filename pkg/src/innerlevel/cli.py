"""Command-line interface: ``innerlevel <subcommand> [options]``.

Exit codes: 0 success, 1 verdict or test failure, 2 usage error.  JSON
documents go to stdout and, with ``--out DIR``, to deterministically named
files under DIR.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import jsonio
from .catalog import MIRROR_FAMILY, NOT_ONE_COMPONENT, ONE_COMPONENT, catalog_json, get_entry, list_entries
from .criteria import (
    EVIDENCE_NOT_ONE,
    EVIDENCE_ONE,
    INCONCLUSIVE,
    CertifyConfig,
    CriteriaError,
    aleksandrov_report,
    certify,
    ratio_ladder,
)
from .evaluate import EvaluationError, check_clearance, evaluate
from .expr import ExprError, from_json
from .geometry import GeometryError
from .levelsets import (
    CONNECTED,
    DISCONNECTED,
    RasterCache,
    boundary_trace,
    component_diagnostics,
    connectivity_report,
    eta_search,
    label_components,
    level_raster,
    render,
    write_cells_csv,
    write_contour_csv,
    write_pgm,
)
from .levelsets.grid import DEFAULT_S, GridError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FORMATS = ("json", "csv", "pgm")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    levels: tuple = (10, 12)
    s: float = DEFAULT_S
    sub: int = 1
    eps: float = 1e-10
    grid_eps: float = 1e-8
    eta: float = 0.5
    eta_min: float = 0.05
    eta_max: float = 0.99
    tol_eta: float = 0.01
    samples: int = 1024
    exclusion_radius: float = 1e-3
    depth: int = 30
    k_stable: int = 3
    uncertainty_threshold: float = 0.005
    image_size: int = 512
    out: str | None = None
    formats: tuple = ("json",)
    plot: bool = False
    certify: dict = field(default_factory=dict)

    def validate(self) -> None:
        lo, hi = self.levels
        if not 2 <= lo <= hi or hi > 24:
            raise UsageError("levels must satisfy 2 <= L1 <= L2 <= 24")
        for name in ("eps", "grid_eps", "s", "exclusion_radius", "tol_eta"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        for name in ("eta", "eta_min", "eta_max", "uncertainty_threshold"):
            if not 0 < getattr(self, name) < 1:
                raise UsageError(f"{name} must lie in (0, 1)")
        if not self.eta_min < self.eta_max:
            raise UsageError("eta_min must be below eta_max")
        if self.samples < 256:
            raise UsageError("samples must be >= 256")
        if self.sub < 1 or self.depth < 1 or self.k_stable < 1 or self.image_size < 8:
            raise UsageError("sub, depth and k_stable must be >= 1; image_size >= 8")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise UsageError(f"unknown format(s) {bad}; choose from {list(FORMATS)}")

    @property
    def level_list(self) -> list:
        return list(range(self.levels[0], self.levels[1] + 1))

    def to_json(self) -> dict:
        d = asdict(self)
        d["levels"] = list(self.levels)
        d["formats"] = list(self.formats)
        return d

    @classmethod
    def from_json(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - names - {"schema"})
        if unknown:
            raise UsageError(f"unknown config keys {unknown}")
        d = {k: v for k, v in doc.items() if k in names}
        if "levels" in d:
            d["levels"] = _levels(d["levels"])
        if "formats" in d:
            d["formats"] = tuple(d["formats"])
        return cls(**d)


def _levels(spec) -> tuple:
    """'10..12', '12', [10, 12] or 12 -> (lo, hi)."""
    if isinstance(spec, (list, tuple)):
        vals = [int(x) for x in spec]
        return (min(vals), max(vals))
    if isinstance(spec, int):
        return (spec, spec)
    text = str(spec).strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return (int(a), int(b))
        return (int(text), int(text))
    except ValueError:
        raise UsageError(f"bad --levels {spec!r}; expected L or L1..L2") from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


# ------------------------------------------------------------------ parsing


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="innerlevel", description="Level sets and criteria for inner functions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fn_required=True):
        g = sp.add_mutually_exclusive_group(required=fn_required)
        g.add_argument("--id", help="catalog id")
        g.add_argument("--expr", help="inline JSON expression tree (or @file)")
        sp.add_argument("--config", help="JSON RunConfig file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--eps", type=float)

    def grid_opts(sp):
        sp.add_argument("--levels", help="grid levels L or L1..L2")
        sp.add_argument("--s", type=float, help="grid refinement exponent")
        sp.add_argument("--sub", type=int, help="angular subdivision")

    sp = sub.add_parser("eval", help="evaluate u (and derivatives) at a point")
    common(sp)
    sp.add_argument("--z", type=_complex, required=True, action="append", help="point in the closed disk (repeatable)")
    sp.add_argument("--order", type=int, choices=(0, 1, 2), default=0)

    sp = sub.add_parser("levelset", help="rasterize a sublevel set")
    common(sp)
    grid_opts(sp)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--format", action="append", choices=FORMATS, dest="formats")
    sp.add_argument("--plot", action="store_true", default=None, help="also write PGM image and contour CSV")

    sp = sub.add_parser("connectivity", help="component count across grid levels")
    common(sp)
    grid_opts(sp)
    sp.add_argument("--eta", type=float)

    sp = sub.add_parser("sweep", help="bisect for the connectivity threshold in eta")
    common(sp)
    grid_opts(sp)
    sp.add_argument("--eta-min", type=float, dest="eta_min")
    sp.add_argument("--eta-max", type=float, dest="eta_max")

    sp = sub.add_parser("aleksandrov", help="derivative-ratio and radial-limit report")
    common(sp)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--exclusion", type=float, dest="exclusion_radius")

    sp = sub.add_parser("certify", help="combined verdict")
    common(sp)
    grid_opts(sp)
    sp.add_argument("--samples", type=int, help="largest ladder size")
    sp.add_argument("--exclusion", type=float, dest="exclusion_radius")

    sp = sub.add_parser("catalog", help="list catalog entries")
    sp.add_argument("--out")
    sp.add_argument("--config")

    sp = sub.add_parser("selftest", help="run the acceptance checks on the catalog")
    sp.add_argument("--out")
    sp.add_argument("--config")
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cfg = RunConfig.from_json(doc)
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is None:
            continue
        if f.name == "levels":
            val = _levels(val)
        elif f.name == "formats":
            val = tuple(dict.fromkeys(val))
        setattr(cfg, f.name, val)
    cfg.validate()
    return cfg


def _function(args):
    """(label, expr, catalog entry or None)."""
    if args.id:
        try:
            e = get_entry(args.id)
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        return args.id, e.expr, e
    text = args.expr
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        doc = json.loads(text)
        u = from_json(doc)
    except (json.JSONDecodeError, ExprError, GeometryError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad --expr: {exc}") from None
    digest = hashlib.sha256(jsonio.dumps(u.to_json(), indent=None).encode()).hexdigest()[:10]
    return f"expr-{digest}", u, None


def _eta_tag(eta: float) -> str:
    return format(eta, "g")


def _emit(cfg: RunConfig, name: str, doc: dict) -> None:
    text = jsonio.dumps(doc)
    sys.stdout.write(text)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _outdir(cfg: RunConfig) -> Path | None:
    if not cfg.out:
        return None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------------ subcommands


def cmd_eval(args, cfg: RunConfig) -> int:
    label, u, _ = _function(args)
    pts = np.array(args.z, dtype=complex)
    for z in pts:
        if abs(abs(z) - 1.0) <= 1e-12:  # boundary point: same guard as eval_boundary
            check_clearance(u, float(np.angle(z)), cfg.exclusion_radius)
    try:
        jet = evaluate(u, pts, args.order, cfg.eps)
    except GeometryError as exc:
        raise UsageError(str(exc)) from None
    results = []
    for i, z in enumerate(pts):
        rec = {"z": complex(z), "value": complex(jet.f[0][i]), "modulus": float(abs(jet.f[0][i])),
               "abs_error_bound": float(jet.e[0][i]), "ok": bool(jet.ok[i])}
        if args.order:
            rec["derivatives"] = [{"order": k, "value": complex(jet.f[k][i]), "abs_error_bound": float(jet.e[k][i])}
                                  for k in range(1, args.order + 1)]
        results.append(rec)
    doc = jsonio.with_schema("eval", {"id": label, "expr": u.to_json(), "eps": cfg.eps, "order": args.order,
                                      "results": results})
    _emit(cfg, f"eval_{label}.json", doc)
    return EXIT_OK if jet.ok.all() else EXIT_FAIL


def cmd_levelset(args, cfg: RunConfig) -> int:
    label, u, _ = _function(args)
    L = cfg.levels[1]
    cache = RasterCache(u, cfg.s, cfg.sub, cfg.grid_eps)
    mr = cache.modulus(L)
    raster = level_raster(mr, cfg.eta)
    labels = label_components(raster)
    stem = f"levelset_{label}_eta{_eta_tag(cfg.eta)}_L{L}"
    doc = jsonio.with_schema("levelset", {
        "id": label, "eta": cfg.eta, "level": L, "cells": mr.grid.n_cells, "invalid_cells": mr.invalid_count,
        "masked_cells": int(raster.mask.sum()), "uncertain_cells": int(raster.uncertain.sum()),
        "uncertain_fraction": raster.uncertain_fraction, "components": labels.count,
        "component_records": [c.to_json() for c in component_diagnostics(labels)],
        "boundary_trace": boundary_trace(raster).to_json(),
    })
    out = _outdir(cfg)
    if "json" in cfg.formats:
        _emit(cfg, stem + ".json", doc)
    if out is not None:
        if "csv" in cfg.formats:
            write_cells_csv(out / (stem + ".csv"), raster, labels)
        image = None
        if "pgm" in cfg.formats or cfg.plot:
            image = render(mr.grid, mr.modulus, cfg.image_size)
            write_pgm(out / (stem + ".pgm"), image)
        if cfg.plot:
            try:
                write_contour_csv(out / f"contour_{label}_eta{_eta_tag(cfg.eta)}_L{L}.csv", image, cfg.eta)
            except ImportError:
                sys.stderr.write("contour export needs scikit-image; skipped\n")
    elif set(cfg.formats) - {"json"} or cfg.plot:
        raise UsageError("csv/pgm output and --plot need --out")
    return EXIT_OK


def cmd_connectivity(args, cfg: RunConfig) -> int:
    label, u, _ = _function(args)
    if len(cfg.level_list) < cfg.k_stable:
        raise UsageError(f"level range {cfg.levels[0]}..{cfg.levels[1]} has fewer than k_stable={cfg.k_stable} levels")
    cache = RasterCache(u, cfg.s, cfg.sub, cfg.grid_eps)
    rep = connectivity_report(u, cfg.eta, cfg.level_list, cfg.grid_eps, cfg.s, cfg.sub, cfg.k_stable,
                              cfg.uncertainty_threshold, cache=cache)
    doc = rep.to_json()
    doc["id"] = label
    _emit(cfg, f"connectivity_{label}_eta{_eta_tag(cfg.eta)}_L{cfg.levels[1]}.json", doc)
    return EXIT_OK if rep.verdict in (CONNECTED, DISCONNECTED) else EXIT_FAIL


def cmd_sweep(args, cfg: RunConfig) -> int:
    label, u, _ = _function(args)
    L = cfg.levels[1]
    try:
        res = eta_search(u, L, cfg.eta_min, cfg.eta_max, cfg.tol_eta, cfg.grid_eps, cfg.s, cfg.sub, cfg.k_stable)
    except ValueError as exc:
        doc = jsonio.with_schema("sweep", {"id": label, "level": L, "error": str(exc)})
        _emit(cfg, f"sweep_{label}_L{L}.json", doc)
        return EXIT_FAIL
    doc = res.to_json()
    doc["id"] = label
    _emit(cfg, f"sweep_{label}_L{L}.json", doc)
    return EXIT_OK


def cmd_aleksandrov(args, cfg: RunConfig) -> int:
    label, u, _ = _function(args)
    try:
        rep = aleksandrov_report(u, cfg.samples, cfg.exclusion_radius, cfg.depth, cfg.eps)
        ladder = ratio_ladder(u, (max(256, cfg.samples // 4), cfg.samples, 4 * cfg.samples), cfg.exclusion_radius,
                              cfg.eps)
    except CriteriaError as exc:
        doc = jsonio.with_schema("aleksandrov", {"id": label, "error": str(exc)})
        _emit(cfg, f"aleksandrov_{label}_n{cfg.samples}.json", doc)
        return EXIT_FAIL
    doc = rep.to_json()
    doc["id"] = label
    doc["ratio_ladder"] = [{"samples": n, "sup": s, "delta": d, "argmax": a} for n, s, d, a, _ in ladder]
    _emit(cfg, f"aleksandrov_{label}_n{cfg.samples}.json", doc)
    return EXIT_OK


_EXPECTED = {ONE_COMPONENT: EVIDENCE_ONE, NOT_ONE_COMPONENT: EVIDENCE_NOT_ONE}


def certify_config(cfg: RunConfig, explicit: set) -> CertifyConfig:
    base = CertifyConfig.from_json(cfg.certify) if cfg.certify else CertifyConfig()
    over = {}
    if "levels" in explicit:
        over["levels"] = tuple(cfg.level_list)
    if "samples" in explicit:
        over["ladder"] = (max(256, cfg.samples // 16), max(256, cfg.samples // 4), cfg.samples)
    for name in ("exclusion_radius", "s", "sub", "eps", "grid_eps", "k_stable", "uncertainty_threshold", "depth"):
        if name in explicit:
            over[name] = getattr(cfg, name)
    doc = base.to_json()
    doc.update(over)
    return CertifyConfig.from_json(doc)


def cmd_certify(args, cfg: RunConfig, explicit: set) -> int:
    label, u, entry = _function(args)
    try:
        ccfg = certify_config(cfg, explicit)
    except CriteriaError as exc:
        raise UsageError(str(exc)) from None
    v = certify(u, ccfg)
    doc = v.to_json()
    doc["id"] = label
    code = EXIT_FAIL if v.status == INCONCLUSIVE else EXIT_OK
    if entry is not None and entry.expected_status in _EXPECTED:
        want = _EXPECTED[entry.expected_status]
        doc["expected"] = want
        agrees = v.status == want or (label in MIRROR_FAMILY and v.status == INCONCLUSIVE)
        doc["agrees_with_expected"] = agrees
        code = EXIT_OK if agrees else EXIT_FAIL
    _emit(cfg, f"certify_{label}.json", doc)
    return code


def cmd_catalog(args, cfg: RunConfig) -> int:
    doc = catalog_json()
    doc["kind"] = "catalog"
    doc["ids"] = list_entries()
    _emit(cfg, "catalog.json", doc)
    return EXIT_OK


def cmd_selftest(args, cfg: RunConfig) -> int:
    from .selftest import run_all

    old = sys.stdout
    sys.stdout = sys.stderr  # progress lines on stderr, JSON on stdout
    try:
        results = run_all(verbose=True)
    finally:
        sys.stdout = old
    doc = jsonio.with_schema("selftest", {
        "passed": all(r.passed for r in results),
        "criteria": [r.to_json() for r in results],
    })
    _emit(cfg, "selftest.json", doc)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def run(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    explicit = {k for k, v in vars(args).items() if v is not None}
    try:
        cfg = _config(args)
        if args.command == "certify":
            return cmd_certify(args, cfg, explicit)
        handler = {
            "eval": cmd_eval,
            "levelset": cmd_levelset,
            "connectivity": cmd_connectivity,
            "sweep": cmd_sweep,
            "aleksandrov": cmd_aleksandrov,
            "catalog": cmd_catalog,
            "selftest": cmd_selftest,
        }[args.command]
        return handler(args, cfg)
    except (UsageError, GridError, GeometryError) as exc:
        sys.stderr.write(f"innerlevel {args.command}: {exc}\n")
        return EXIT_USAGE
    except (EvaluationError, CriteriaError) as exc:
        sys.stderr.write(f"innerlevel {args.command}: {exc}\n")
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
