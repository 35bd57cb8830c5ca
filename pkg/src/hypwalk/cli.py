"""Batch CLI: every computation as a subcommand with JSON/CSV artifacts.

Usage: hypwalk <command> -c config.json [--seed N] [--output PREFIX]
                [--param key=value ...]

Artifacts are deterministic given config + seed: results go to
<prefix>.json (and <prefix>.csv where tabular), wall-clock metadata to the
separate <prefix>.meta.json.  Exit codes: 0 ok, 1 computation error,
2 validation error; failures emit a machine-readable error JSON on stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import boundary as bnd
from . import green as grn
from . import measures as msr
from . import obstacles as obt
from . import regularity as reg
from .config import (SCHEMA_VERSION, ConfigError, RunConfig, format_word,
                     load_config, parse_word)
from .groups import IntegerLine

log = logging.getLogger("hypwalk")


def _emit(cfg: RunConfig, command: str, results: dict, csv_rows=None,
          csv_header=None) -> dict:
    artifact = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config_digest": cfg.digest(),
        "results": results,
    }
    text = json.dumps(artifact, sort_keys=True, indent=1)
    if cfg.output:
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.with_suffix(".json").write_text(text + "\n")
        meta = {"written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "argv": sys.argv[1:]}
        out.with_suffix(".meta.json").write_text(json.dumps(meta, indent=1) + "\n")
        if csv_rows is not None:
            with out.with_suffix(".csv").open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(csv_header)
                w.writerows(csv_rows)
    else:
        print(text)
    return artifact


def cmd_walk(cfg: RunConfig) -> dict:
    N = int(cfg.params.get("N", 40))
    prune = float(cfg.params.get("prune_eps", 1e-15))
    H, L = msr.entropy_escape_sequences(cfg.measure, N, prune)
    rows = [(n, H.values[n], L.values[n], H.defects[n]) for n in range(N + 1)]
    results = {
        "N": N,
        "entropy": {"extrapolated": H.extrapolated, "error_bar": H.error_bar},
        "escape": {"extrapolated": L.extrapolated, "error_bar": L.error_bar},
        "last_H_diff": H.values[N] - H.values[N - 1],
        "last_L_diff": L.values[N] - L.values[N - 1],
        "defect": H.defects[-1],
    }
    return _emit(cfg, "walk", results, rows, ("n", "H_n", "L_n", "defect"))


def cmd_green(cfg: RunConfig) -> dict:
    xs = [parse_word(cfg.group, w) for w in cfg.params.get("elements", [[]])]
    trunc = int(cfg.params.get("trunc_R", 8))
    table = []
    ge = grn.green_identity(cfg.measure, trunc)
    for x in xs:
        hv = grn.green_hitting(cfg.measure, x, trunc)
        u = grn.restricted_hitting(cfg.measure, cfg.group.identity, x,
                                   trunc_R=trunc)
        table.append({
            "x": format_word(cfg.group, x),
            "green": {"lo": hv.lo, "hi": hv.hi},
            "u_from_identity": {"lo": u.lo, "hi": u.hi},
        })
    results = {"G_identity": {"lo": ge.lo, "hi": ge.hi}, "table": table,
               "trunc_R": trunc}
    rows = [(t["x"], t["green"]["lo"], t["green"]["hi"]) for t in table]
    return _emit(cfg, "green", results, rows, ("x", "G_lo", "G_hi"))


def cmd_martin(cfg: RunConfig) -> dict:
    trunc = int(cfg.params.get("trunc_R", 8))
    tol = float(cfg.params.get("tol", 1e-4))
    table = []
    for pair in cfg.params.get("interior", []):
        y = parse_word(cfg.group, pair[0])
        x = parse_word(cfg.group, pair[1])
        kv = grn.martin_kernel(cfg.measure, y, x, trunc_R=trunc)
        table.append({"kind": "interior", "y": format_word(cfg.group, y),
                      "x": format_word(cfg.group, x), "value": kv.value,
                      "interval": [kv.interval.lo, kv.interval.hi]})
    for pair in cfg.params.get("boundary", []):
        ray = [parse_word(cfg.group, [a])[0] if isinstance(a, int) else a
               for a in pair[0]] if isinstance(pair[0], list) else None
        letters = pair[0] if ray is None else ray
        x = parse_word(cfg.group, pair[1])
        reps = int(cfg.params.get("ray_repeat", 30))
        if isinstance(letters, str):
            seq = list(parse_word(cfg.group, letters)) * reps
        else:
            seq = list(letters) * reps
        bk = grn.martin_kernel_boundary(cfg.measure, seq, x, tol=tol,
                                        trunc_R=trunc)
        table.append({"kind": "boundary",
                      "ray_prefix": format_word(cfg.group,
                                                cfg.group.from_letters(seq[:6])),
                      "x": format_word(cfg.group, x), "value": bk.value,
                      "interval": [bk.interval.lo, bk.interval.hi],
                      "fitted_rate": bk.fitted_rate})
    return _emit(cfg, "martin", {"table": table, "trunc_R": trunc, "tol": tol})


def cmd_obstacle_verify(cfg: RunConfig) -> dict:
    trunc = int(cfg.params.get("trunc_R", 7))
    stages = int(cfg.params.get("stages", 6))
    ray_spec = cfg.params.get("ray", "a")
    period = list(parse_word(cfg.group, ray_spec))
    x = parse_word(cfg.group, cfg.params.get("x", "a"))
    sweep_mults = tuple(cfg.params.get("sweep", (12, 24, 48)))
    need = 8 * max(sweep_mults) * cfg.measure.support.radius
    ray = (period * (need // len(period) + stages * 200))[:20000]
    sweep = obt.stability_sweep(cfg.measure, [cfg.group.letter_element(a)
                                              for a in ray], trunc,
                                candidates=sweep_mults)
    M = sweep["chosen_M"]
    obs = obt.build_obstacle(cfg.measure, [cfg.group.letter_element(a)
                                           for a in ray], M, trunc)
    A = obt.first_visit_matrix(cfg.measure, obs)
    cert = obt.ancona_verify(cfg.measure, obs, A)
    from .cones import PositiveOperator, operator_diameter
    diam = operator_diameter(PositiveOperator(A.lower))
    chain = obt.chain_apply(cfg.measure, ray, x, M, stages, trunc_R=trunc,
                            seed=cfg.seed or 0)
    obt.check_chain_contraction(chain.theta_log, cert.c1)
    results = {
        "sweep": {str(k): v for k, v in sweep["c1_by_M"].items()},
        "chosen_M": M,
        "c1": cert.c1,
        "four_ln_c1": 4.0 * math.log(cert.c1),
        "shell_sizes": {"V0": int(obs.v0_idx.size), "V1": int(obs.v1_idx.size),
                        "V1_active": int(obs.v1_active_idx.size)},
        "matrix_diameter": diam,
        "theta_log": chain.theta_log,
        "stage_diameters": chain.diameters,
        "chain_kernel": chain.kernel,
    }
    return _emit(cfg, "obstacle-verify", results)


def cmd_harmonic(cfg: RunConfig) -> dict:
    D = int(cfg.params.get("D", 4))
    method = cfg.params.get("method", "stationary-fixed-point")
    nu = bnd.harmonic_measure(cfg.measure, D, method=method,
                              n_samples=int(cfg.params.get("n_samples", 4000)),
                              seed=cfg.seed or 0)
    sub = nu.measure.subshift
    rows = []
    for d in range(1, D + 1):
        for w in sub.words(d):
            m = nu.measure.mass(w)
            if m:
                rows.append((d, format_word(cfg.group, cfg.group.from_letters(w)),
                             m))
    results = {
        "depth": D,
        "method": nu.method,
        "residual": None if math.isnan(nu.residual) else nu.residual,
        "components": {format_word(cfg.group, cfg.group.from_letters((c[0],))):
                       v for c, v in nu.component_masses.items()},
    }
    if cfg.params.get("pressure", True) and cfg.group.nonamenable:
        P_hat, n_phi, iters = bnd.pressure_and_eigenmeasure(
            cfg.measure, min(D, 4))
        results["pressure"] = P_hat
        results["eigenmeasure_tv_vs_harmonic"] = n_phi.tv_distance(
            nu.measure, min(D, 4))
    return _emit(cfg, "harmonic", results, rows, ("depth", "cylinder", "mass"))


def _direct_estimates(cfg: RunConfig, N: int, n_samples: int):
    p = cfg.measure
    if isinstance(cfg.group, IntegerLine):
        H, L = msr.entropy_escape_sequences(p, N)
        return ((H.values[N] - H.values[N - 1], 0.0),
                (L.values[N] - L.values[N - 1], 0.0))
    eh = msr.mc_entropy_difference(p, N, n_samples, (cfg.seed or 0) + 1)
    el = msr.mc_escape_difference(p, N, n_samples, (cfg.seed or 0) + 2)
    return (eh.value, eh.stderr), (el.value, el.stderr)


def cmd_entropy(cfg: RunConfig) -> dict:
    D = int(cfg.params.get("D", 5))
    N = int(cfg.params.get("N", 40))
    n_samples = int(cfg.params.get("n_samples", 50_000))
    (h_direct, h_se), _ = _direct_estimates(cfg, N, n_samples)
    if isinstance(cfg.group, IntegerLine):
        h_bnd = 0.0
    else:
        nu = bnd.harmonic_measure(cfg.measure, D + cfg.measure.support.radius)
        h_bnd = bnd.entropy_boundary(cfg.measure, nu, D)
    results = {"boundary": h_bnd, "direct": h_direct, "direct_stderr": h_se,
               "difference": abs(h_bnd - h_direct), "N": N, "D": D}
    return _emit(cfg, "entropy", results)


def cmd_escape(cfg: RunConfig) -> dict:
    D = int(cfg.params.get("D", 5))
    N = int(cfg.params.get("N", 40))
    n_samples = int(cfg.params.get("n_samples", 50_000))
    _, (l_direct, l_se) = _direct_estimates(cfg, N, n_samples)
    if isinstance(cfg.group, IntegerLine):
        l_bnd = bnd.escape_boundary(cfg.measure)
    else:
        nu = bnd.harmonic_measure(cfg.measure, D + cfg.measure.support.radius)
        l_bnd = bnd.escape_boundary(cfg.measure, nu, D)
    results = {"boundary": l_bnd, "direct": l_direct, "direct_stderr": l_se,
               "difference": abs(l_bnd - l_direct), "N": N, "D": D}
    return _emit(cfg, "escape", results)


def cmd_lipschitz_scan(cfg: RunConfig) -> dict:
    quantity = cfg.params.get("quantity", "escape")
    n_points = int(cfg.params.get("n_points", 50))
    step = float(cfg.params.get("step_scale", 0.05))
    depth = int(cfg.params.get("D", 3))
    floor = float(cfg.params.get("simplex_floor", reg.DEFAULT_SIMPLEX_FLOOR))
    est = (reg.boundary_entropy_estimator(depth) if quantity == "entropy"
           else reg.boundary_escape_estimator(depth))
    rep = reg.lipschitz_scan(cfg.measure, est, n_points, step,
                             seed=cfg.seed or 0, floor=floor, quantity=quantity)
    rows = [(i, json.dumps({format_word(cfg.group, k): v
                            for k, v in pa.items()}, sort_keys=True), va, q)
            for i, (pa, pb, va, vb, q) in enumerate(rep.pairs)]
    results = {"quantity": quantity, "max_quotient": rep.max_quotient,
               "grid": rep.grid_spec}
    return _emit(cfg, "lipschitz-scan", results, rows,
                 ("index", "measure", "value", "quotient"))


def cmd_kink_scan(cfg: RunConfig) -> dict:
    steps = int(cfg.params.get("steps", 41))
    supp = list(cfg.measure.support.elements)
    pa = cfg.params.get("segment_a")
    pb = cfg.params.get("segment_b")
    if pa is None or pb is None:
        raise ConfigError("kink-scan needs params.segment_a/segment_b "
                          "(probability lists over the measure support)")
    g = cfg.group
    from .measures import step_measure
    p_a = step_measure(g, list(zip(supp, map(float, pa))), check_generates=False)
    p_b = step_measure(g, list(zip(supp, map(float, pb))), check_generates=False)
    est = reg.boundary_escape_estimator(int(cfg.params.get("D", 3)))
    rep = reg.kink_detector(p_a, p_b, est, steps)
    rows = list(zip(rep.ts, rep.values))
    results = {"flagged_t": [rep.ts[i + 1] for i in rep.flagged],
               "n_flagged": len(rep.flagged)}
    return _emit(cfg, "kink-scan", results, rows, ("t", "value"))


def cmd_stability(cfg: RunConfig) -> dict:
    radius = float(cfg.params.get("radius", 0.05))
    probes = int(cfg.params.get("probes", 5))
    trunc = int(cfg.params.get("trunc_R", 6))
    ray = [cfg.group.generators[0]] * 2000

    def c1_fn(q):
        M = 12 * q.support.radius
        obs = obt.build_obstacle(q, ray, M, trunc)
        A = obt.first_visit_matrix(q, obs)
        return obt.ancona_verify(q, obs, A).c1

    fns = {
        "zeta": lambda q: grn.spectral_radius_estimate(q).zeta,
        "c1": c1_fn,
        "tau": lambda q: max((c1_fn(q) ** 2 - 1) / (c1_fn(q) ** 2 + 1), 1e-15),
    }
    out = reg.neighborhood_stability(cfg.measure, radius, probes, fns,
                                     seed=cfg.seed or 0)
    return _emit(cfg, "stability", out)


COMMANDS = {
    "walk": cmd_walk,
    "green": cmd_green,
    "martin": cmd_martin,
    "obstacle-verify": cmd_obstacle_verify,
    "harmonic": cmd_harmonic,
    "entropy": cmd_entropy,
    "escape": cmd_escape,
    "lipschitz-scan": cmd_lipschitz_scan,
    "kink-scan": cmd_kink_scan,
    "stability": cmd_stability,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hypwalk", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("-c", "--config", help="JSON config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output", help="artifact path prefix")
    parser.add_argument("--param", action="append", default=[],
                        metavar="KEY=VALUE", help="override a params entry")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        data = {}
        if args.config:
            data = json.loads(Path(args.config).read_text())
        overrides = {"seed": args.seed, "output": args.output}
        if args.param:
            pd = {}
            for kv in args.param:
                key, _, val = kv.partition("=")
                try:
                    pd[key] = json.loads(val)
                except json.JSONDecodeError:
                    pd[key] = val
            overrides["params"] = pd
        cfg = load_config(data, overrides, command=args.command)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}))
        return 2
    try:
        COMMANDS[args.command](cfg)
    except Exception as exc:  # computation failures -> structured error
        print(json.dumps({"error": "computation", "module": type(exc).__module__,
                          "type": type(exc).__name__, "message": str(exc)}))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
