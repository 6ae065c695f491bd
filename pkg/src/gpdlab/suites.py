"""Named verification suites: each runs a batch of structural checks
on a configured scene and reports per-check residuals against
tolerances.

Reports are deterministic for a fixed config and seed; wall time lives
in a separate ``timing`` field so the deterministic part can be
compared byte for byte.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np

from . import algebroid as al
from . import bisections as bs
from . import dual as dm
from . import flow as fl
from . import gauge_ext as gx
from .additions import (check_adapted, flat_pair_addition, flip_addition,
                        gauge_addition, gauge_overlap_residual,
                        group_addition, roundtrip_residual, spray_extension)
from .groupoids import (GaugeGroupoid, GroupOverPoint, PairGroupoid,
                        check_axioms)
from .manifolds import SO3, expm_series
from .numerics import IntegrationParams
from .scenes import ConfigError, SceneConfig


class SuiteError(RuntimeError):
    pass


def _check(name, residual, tol):
    residual = float(residual)
    return {"name": name, "residual": residual, "tol": float(tol),
            "pass": bool(residual <= tol)}


def _tol(cfg, name, default):
    return cfg.tolerances.get(name, default)


def _default_addition(cfg, objs):
    G = objs["groupoid"]
    if isinstance(G, PairGroupoid):
        return flat_pair_addition(G)
    if isinstance(G, GroupOverPoint):
        return group_addition(G)
    if isinstance(G, GaugeGroupoid):
        return gauge_addition(G)
    raise ConfigError(f"no default local addition for scene {cfg.kind!r}")


def _reference_sections(cfg, objs):
    G = objs["groupoid"]
    if isinstance(G, PairGroupoid):
        return (al.pair_section(G, dm.sin, name="sin"),
                al.pair_section(G, dm.cos, name="cos"))
    if isinstance(G, GroupOverPoint):
        rng = cfg.rng()
        return (al.constant_group_section(G, G.group.random_algebra(rng),
                                          name="V"),
                al.constant_group_section(G, G.group.random_algebra(rng),
                                          name="W"))
    if isinstance(G, GaugeGroupoid):
        B = G.bundle.group.algebra_basis()

        def vert(shift):
            def vp(x):
                out = (0.2 * dm.sin(x + shift)
                       * np.asarray(B[0], dtype=object))
                out = out + (0.15 * dm.cos(x) + 0.1) * np.asarray(
                    B[-1], dtype=object)
                return out

            return vp

        return (al.gauge_section(G, lambda x: 0.3 * dm.sin(x) + 0.1,
                                 vert(0.0), name="X"),
                al.gauge_section(G, lambda x: 0.2 * dm.cos(x),
                                 vert(1.0), name="Y"))
    raise ConfigError(f"no reference sections for scene {cfg.kind!r}")


# ---------------------------------------------------------------------------
# suites


def suite_groupoid_axioms(cfg, objs):
    G = objs["groupoid"]
    rng = cfg.rng()
    n = max(10, 1000 // max(1, cfg.grid))
    res = check_axioms(G, rng, n=n)
    tol = _tol(cfg, "axioms",
               1e-12 if cfg.kind == "group"
               and cfg.group.lower().startswith("heis") else 1e-9)
    checks = [_check(f"axiom:{k}", v, tol)
              for k, v in res.items() if k != "max"]
    checks.append(_check("axioms:max", res["max"], tol))
    return checks


def suite_bisection_group(cfg, objs):
    G = objs["groupoid"]
    if not isinstance(G, PairGroupoid):
        raise ConfigError("suite 'bisection-group' needs a pair scene")
    rng = cfg.rng()
    assoc = inv_law = iso = 0.0
    u = bs.unit_bisection(G, grid_n=cfg.grid)
    for _ in range(10):
        f1 = bs.random_fourier_diffeo(rng, grid_n=cfg.grid)
        f2 = bs.random_fourier_diffeo(rng, grid_n=cfg.grid)
        f3 = bs.random_fourier_diffeo(rng, grid_n=cfg.grid)
        s1, s2, s3 = (bs.bisection_from_diffeo(G, f, grid_n=cfg.grid)
                      for f in (f1, f2, f3))
        assoc = max(assoc, bs.star(bs.star(s1, s2), s3).sup_dist(
            bs.star(s1, bs.star(s2, s3))))
        inv_law = max(inv_law,
                      bs.star(s1, bs.inverse(s1)).sup_dist(u),
                      bs.star(bs.inverse(s1), s1).sup_dist(u))
        iso = max(iso, bs.star(s1, s2).beta.sup_dist(f1.compose(f2)))
    return [_check("associativity", assoc, _tol(cfg, "assoc", 1e-8)),
            _check("inverse-laws", inv_law, _tol(cfg, "inverse", 1e-8)),
            _check("diffeo-isomorphism", iso, _tol(cfg, "iso", 1e-9))]


def suite_lalg(cfg, objs):
    G = objs["groupoid"]
    X, Y = _reference_sections(cfg, objs)
    A = _default_addition(cfg, objs)
    checks = []
    br = al.algebroid_bracket(X, Y, grid_n=16)
    gb = al.group_bracket(X, Y, A, h=1e-3, grid_n=16)
    if isinstance(G, PairGroupoid):
        xs = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
        alg = max(abs(float(dm.value(br(float(x))[0])) + 1.0) for x in xs)
        grp = max(abs(float(dm.value(gb(float(x))[0])) - 1.0) for x in xs)
        checks.append(_check("algebroid-coefficient+1", alg,
                             _tol(cfg, "algebroid", 1e-7)))
        checks.append(_check("group-coefficient-1", grp,
                             _tol(cfg, "group", 5e-4)))
    elif isinstance(G, GroupOverPoint):
        V = np.asarray([[float(dm.value(q)) for q in row]
                        for row in X(None).reshape(G.n, G.n)])
        W = np.asarray([[float(dm.value(q)) for q in row]
                        for row in Y(None).reshape(G.n, G.n)])
        comm = (V @ W - W @ V).ravel()
        alg = float(np.max(np.abs(
            np.array([float(dm.value(q)) for q in br(None)]) + comm)))
        grp = float(np.max(np.abs(
            np.array([float(dm.value(q)) for q in gb(None)]) - comm)))
        checks.append(_check("algebroid=-(VW-WV)", alg,
                             _tol(cfg, "algebroid", 1e-9)))
        checks.append(_check("group=VW-WV", grp, _tol(cfg, "group", 5e-4)))
    else:
        cancel = gb.add(br).sup_norm(n=8)
        checks.append(_check("group+algebroid-cancel", cancel,
                             _tol(cfg, "cancel", 5e-4)))
    return checks


def suite_flow(cfg, objs):
    X, _ = _reference_sections(cfg, objs)

    def etafn(t, x):
        return (0.8 + 0.3 * math.sin(2.1 * t)) * np.asarray(X(x),
                                                            dtype=object)

    eta = fl.TimeDependentSection(X.G, etafn)
    rng = cfg.rng()
    rep = fl.flow_properties_check(eta, rng, samples=4,
                                   params=IntegrationParams(
                                       steps=cfg.steps),
                                   grid_n=min(cfg.grid, 16))
    checks = [
        _check("cocycle", rep["cocycle"], _tol(cfg, "cocycle", 1e-6)),
        _check("equivariance", rep["equivariance"],
               _tol(cfg, "equivariance", 1e-8)),
        _check("alpha-invariance", rep["alpha_invariance"],
               _tol(cfg, "alpha", 1e-12)),
        _check("time1-is-bisection",
               0.0 if rep["time1_is_bisection"] else 1.0, 0.5),
    ]
    return checks


def suite_evolve(cfg, objs):
    G = objs["groupoid"]
    X, _ = _reference_sections(cfg, objs)
    eta = fl.TimeDependentSection.constant(X)
    params = IntegrationParams(steps=cfg.steps)
    checks = []
    path = fl.evolve(eta, params, n_slices=4, grid_n=min(cfg.grid, 16))
    checks.append(_check(
        "starts-at-unit",
        path(0.0).sup_dist(bs.unit_bisection(G, grid_n=min(cfg.grid, 16))),
        1e-12))
    pir = fl.product_integral_residual(eta, path, params=params, n_base=4)
    checks.append(_check("product-integral", pir,
                         _tol(cfg, "product_integral", 5e-5)))
    if isinstance(G, GroupOverPoint):
        V = np.array([[float(dm.value(q)) for q in row]
                      for row in X(None).reshape(G.n, G.n)])
        got = np.array([[float(dm.value(q)) for q in row]
                        for row in path(1.0)(None)])
        checks.append(_check(
            "exponential", float(np.max(np.abs(got - np.asarray(
                expm_series(np.asarray(V, dtype=object)), dtype=float)))),
            _tol(cfg, "exponential", 1e-8)))
    return checks


def suite_additions(cfg, objs):
    G = objs["groupoid"]
    A = _default_addition(cfg, objs)
    rng = cfg.rng()
    checks = [
        _check("adapted-drift", check_adapted(A, rng, n=30),
               _tol(cfg, "adapted", 1e-12)),
        _check("newton-roundtrip", roundtrip_residual(A, rng, n=10),
               _tol(cfg, "roundtrip", 1e-8)),
    ]
    if isinstance(G, GaugeGroupoid):
        checks.append(_check("chart-overlap",
                             gauge_overlap_residual(A, rng, n=10),
                             _tol(cfg, "overlap", 1e-9)))
    if isinstance(G, GroupOverPoint):
        sp = spray_extension(G, steps=64)
        worst = 0.0
        for _ in range(5):
            W = np.asarray(G.group.random_algebra(rng), dtype=float) * 0.5
            got = np.array([[float(dm.value(q)) for q in row]
                            for row in sp.apply(G.unit(None),
                                                W.ravel())])
            want = np.asarray(expm_series(np.asarray(W, dtype=object)),
                              dtype=float)
            worst = max(worst, float(np.max(np.abs(got - want))))
        checks.append(_check("spray-exponential", worst,
                             _tol(cfg, "spray", 1e-8)))
        Af = flip_addition(A)
        checks.append(_check("flip-roundtrip",
                             roundtrip_residual(Af, rng, n=10, scale=0.05),
                             _tol(cfg, "flip", 1e-8)))
    return checks


def suite_gauge_extension(cfg, objs):
    G = objs["groupoid"]
    if not isinstance(G, GaugeGroupoid):
        raise ConfigError("suite 'gauge-extension' needs a gauge scene")
    P = PairGroupoid()
    A_M = flat_pair_addition(P)
    f = bs.CircleDiffeo(lambda x: x + 0.2 * dm.sin(x), grid_n=cfg.grid)
    facs = gx.decompose_diffeo(f, G.bundle.pou, A_M, grid_n=cfg.grid)
    comp = facs[0]
    for s in facs[1:]:
        comp = comp.compose(s)
    sig = gx.beta_star_section(G, f, A_M, grid_n=cfg.grid)
    rng = cfg.rng()
    kers = []
    for _ in range(3):
        W = np.asarray(G.bundle.group.random_algebra(rng), dtype=float)

        def mk(i, W=W):
            def fn(x):
                h0 = expm_series(np.asarray(W, dtype=object)
                                 * (0.3 * dm.sin(x) + 0.1))
                if i == 0:
                    return h0
                from .manifolds import mat_inv
                # the cocycle formula is global; transition() would be
                # overlap-guarded
                k = mat_inv(np.asarray(G.bundle._cocycle[(0, 1)](x)))
                return k @ h0 @ mat_inv(k)

            return fn

        kers.append(gx.gauge_transformation(G, {0: mk(0), 1: mk(1)},
                                            grid_n=cfg.grid))
    return [
        _check("telescoping", comp.sup_dist(f, n=64),
               _tol(cfg, "telescoping", 1e-9)),
        _check("support-containment",
               gx.check_supports(facs, G.bundle.pou),
               _tol(cfg, "support", 1e-9)),
        _check("beta-star-roundtrip", sig.beta.sup_dist(f, n=64),
               _tol(cfg, "roundtrip", 1e-8)),
        _check("kernel-closure",
               gx.kernel_closure_residual(G, kers, n=16),
               _tol(cfg, "kernel", 1e-10)),
    ]


def suite_naturality(cfg, objs):
    G = objs["groupoid"]
    if not isinstance(G, GaugeGroupoid):
        raise ConfigError("suite 'naturality' needs a gauge scene")
    P = PairGroupoid()
    f = bs.anchor_morphism(G, P)
    X, Y = _reference_sections(cfg, objs)
    rep = al.phi_and_naturality_check(f, X, Y, n=8)
    at = al.atiyah_bracket(G, X, Y, grid_n=8)
    br = al.algebroid_bracket(X, Y, grid_n=8)
    A = _default_addition(cfg, objs)
    return [
        _check("bracket-pushforward", rep["algebroid_naturality"],
               _tol(cfg, "naturality", 1e-6)),
        _check("atiyah-cross-check", br.sup_dist(at, n=8),
               _tol(cfg, "atiyah", 1e-6)),
        _check("action-derivative",
               al.action_derivative_check(X, A, cfg.rng(), n=10),
               _tol(cfg, "action", 5e-6)),
    ]


SUITES = {
    "groupoid-axioms": suite_groupoid_axioms,
    "bisection-group": suite_bisection_group,
    "lalg": suite_lalg,
    "flow": suite_flow,
    "evolve": suite_evolve,
    "additions": suite_additions,
    "gauge-extension": suite_gauge_extension,
    "naturality": suite_naturality,
}


def run_suite(name, cfg: SceneConfig, objs=None):
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r} "
                          f"(available: {', '.join(sorted(SUITES))})")
    if objs is None:
        objs = cfg.build()
    start = time.perf_counter()
    checks = SUITES[name](cfg, objs)
    elapsed = time.perf_counter() - start
    report = {
        "suite": name,
        "checks": checks,
        "meta": {"kind": cfg.kind, "group": cfg.group, "seed": cfg.seed,
                 "grid": cfg.grid, "steps": cfg.steps,
                 "backend": dm.BACKEND},
        "timing": {"wall_s": elapsed},
    }
    report["pass"] = all(c["pass"] for c in checks)
    return report


def write_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
