"""Command-line entry point: ``ssep-lab <command> [options]``.

Exit codes: 0 success, 1 a compare verdict failed, 2 configuration error,
3 resource or quadrature failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import DEFAULT_T, KVRequest, LoadedConfig, OracleRequest, parse_config
from .errors import ConfigError, InvalidInput, SsepError
from .limits import LimitRequest, covariance_surface, evaluate
from .mclab import (compare_mc_limit, hurst_fit, kv_experiment, kv_summary, run_ensemble)
from .mclab.ensemble import ExperimentConfig, default_threads
from .mclab.io import write_csv, write_json
from .meanfield import QuadratureSettings
from .oracle import (SmallSystem, coupling_tau_tail, dyadic_grid, exact_correlation, gradient_scan,
                     meeting_time_oracle)
from .profiles import Profile

MANIFEST_VERSION = 1
REPLICA_HEADER = ("replica_id", "observable_id", "time", "value")


# helpers
def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _profile_from_flags(args) -> Profile | None:
    if getattr(args, "equilibrium", None) is not None:
        return Profile.constant(args.equilibrium)
    if getattr(args, "tanh", None) is not None:
        a, b, c, w = args.tanh
        return Profile.tanh_ramp(a, b, c, w)
    return None


def _quad_overrides(args, base: QuadratureSettings) -> QuadratureSettings:
    kw = {}
    if getattr(args, "rel_tol", None) is not None:
        kw["rel_tol"] = args.rel_tol
    if getattr(args, "cutoff", None) is not None:
        kw["cutoff"] = args.cutoff
    return replace(base, **kw) if kw else base


def _load(args, expected: Sequence[str]) -> LoadedConfig | None:
    if not getattr(args, "config", None):
        return None
    loaded = parse_config(args.config)
    if loaded.kind not in expected:
        raise ConfigError(f"{args.config}:1: expected a config of type {' or '.join(expected)}, got {loaded.kind!r}")
    return loaded


def _threads(args) -> int:
    return args.threads if args.threads else default_threads()


def _manifest(command: str, args, snapshot: dict, outputs: Sequence[str]) -> dict:
    return {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config_path": str(args.config) if getattr(args, "config", None) else None,
        "config": snapshot,
        "seed": snapshot.get("seed"),
        "tool_version": __version__,
        "outputs": sorted(outputs),
    }


def _finish(command: str, args, snapshot: dict, outputs: list[str]) -> None:
    if not args.out:
        return
    out = Path(args.out)
    write_json(out / "config.json", snapshot)
    write_json(out / "manifest.json", _manifest(command, args, snapshot, outputs + ["config.json", "manifest.json"]))


# experiment-backed commands
def _experiment(args, extra: dict | None = None) -> tuple[ExperimentConfig, dict]:
    loaded = _load(args, ("experiment",))
    if loaded is None:
        prof = _profile_from_flags(args)
        if prof is None or args.n is None:
            raise ConfigError("<flags>:0: need --config, or a profile flag together with --n")
        text = json.dumps({"profile": prof.to_dict(), "n": args.n, **(extra or {})}, indent=2)
        from .config import parse_config_text

        loaded = parse_config_text(text, "<flags>")
    cfg, snap = loaded.value, dict(loaded.snapshot)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
        snap["seed"] = args.seed
    quad = _quad_overrides(args, cfg.quadrature)
    if quad != cfg.quadrature:
        cfg = replace(cfg, quadrature=quad)
        snap["quadrature"] = quad.__dict__.copy()
    return cfg, snap


def _write_ensemble(out: Path, res) -> list[str]:
    write_csv(out / "replicas.csv", REPLICA_HEADER, res.replica_rows())
    write_csv(out / "covariance.csv", res.report.HEADER, res.report.rows())
    return ["replicas.csv", "covariance.csv"]


def cmd_simulate(args) -> int:
    cfg, snap = _experiment(args)
    res = run_ensemble(cfg, _threads(args))
    outputs = _write_ensemble(Path(args.out), res) if args.out else []
    _finish("simulate", args, snap, outputs)
    _emit({"replicas": cfg.replicas, "columns": len(res.columns), "events": res.events,
           "boundary_crossings": res.boundary_crossings, "out": args.out})
    return 0


def _target_u(target: dict, key: str, obs: str, n: int) -> float:
    if key in target:
        return float(target[key])
    _, _, site = obs.partition(":")
    try:
        return int(site) / n
    except ValueError:
        raise InvalidInput(f"cannot infer a macroscopic position for {obs!r}; give {key}") from None


def cmd_compare(args) -> int:
    cfg, snap = _experiment(args)
    if not cfg.targets:
        raise ConfigError(f"{args.config}:1: compare needs a nonempty 'targets' list")
    res = run_ensemble(cfg, _threads(args))
    verdicts = []
    for tg in cfg.targets:
        mc, se = res.report.covariance(tg["obs_i"], tg["s"], tg["obs_j"], tg["t"])
        u1 = _target_u(tg, "u1", tg["obs_i"], cfg.n)
        u2 = _target_u(tg, "u2", tg["obs_j"], cfg.n)
        lim = evaluate(LimitRequest(tg["kind"], cfg.profile, u1, u2, float(tg["s"]), float(tg["t"]),
                                    quadrature=cfg.quadrature))
        v = compare_mc_limit(mc, se, lim)
        verdicts.append({"target": dict(tg), **v.to_dict(), "limit_detail": lim.to_dict()})
    ok = all(v["verdict"] == "PASS" for v in verdicts)
    outputs = []
    if args.out:
        out = Path(args.out)
        outputs = _write_ensemble(out, res)
        write_json(out / "verdicts.json", verdicts)
        outputs.append("verdicts.json")
    _finish("compare", args, snap, outputs)
    _emit({"verdicts": verdicts, "overall": "PASS" if ok else "FAIL"})
    return 0 if ok else 1


def cmd_hurst(args) -> int:
    if args.report:
        import csv

        table: dict[str, list[tuple[float, float]]] = {}
        with open(args.report, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row["obs_i"] == row["obs_j"] and row["s"] == row["t"]:
                    table.setdefault(row["obs_i"], []).append((float(row["t"]), float(row["cov"])))
        snap = {"type": "hurst", "report": str(args.report)}
        outputs: list[str] = []
    else:
        # flag-built runs need several output times for a fit
        times = [DEFAULT_T * 2.0 ** -j for j in range(4, -1, -1)]
        obs = [{"kind": kind, "site": 0, "output_times": times} for kind in ("current", "occupation")]
        cfg, snap = _experiment(args, {"observables": obs})
        res = run_ensemble(cfg, _threads(args))
        table = {}
        for s in cfg.observables:
            table[s.ident] = [(t, v) for t, v, _ in res.report.variance_table(s.ident)]
        outputs = _write_ensemble(Path(args.out), res) if args.out else []
    rows = []
    for obs, pts in sorted(table.items()):
        if len(pts) < 4:
            continue
        fit = hurst_fit([p[0] for p in pts], [p[1] for p in pts])
        rows.append((obs, fit.slope, fit.se, fit.ci[0], fit.ci[1], len(pts)))
    if not rows:
        raise InvalidInput("no observable has at least four output times")
    header = ("observable_id", "slope", "se", "ci_lo", "ci_hi", "points")
    if args.out:
        write_csv(Path(args.out) / "hurst.csv", header, rows)
        outputs.append("hurst.csv")
    _finish("hurst", args, snap, outputs)
    _emit([dict(zip(header, r)) for r in rows])
    return 0


def cmd_kv(args) -> int:
    loaded = _load(args, ("kv",))
    if loaded is None:
        prof = _profile_from_flags(args)
        if prof is None:
            raise ConfigError("<flags>:0: need --config or a profile flag")
        req = KVRequest(prof, [args.n or 100], [2.0 ** -j for j in range(1, 6)], args.s or 0.0,
                        args.t or 1.0, args.replicas or 1000, 0)
        snap = {"type": "kv", **{k: v for k, v in req.__dict__.items() if k != "profile"},
                "profile": prof.to_dict()}
    else:
        req, snap = loaded.value, dict(loaded.snapshot)
    if args.seed is not None:
        req = replace(req, seed=args.seed)
        snap["seed"] = args.seed
    rows = kv_experiment(req.profile, req.ns, req.eps, req.s, req.t, req.R, req.seed, req.site,
                         req.margin_factor, req.backend, _threads(args))
    header = ("n", "eps", "ell", "s", "t", "estimate", "se", "R")
    table = [(r.n, r.eps, r.ell, r.s, r.t, r.estimate, r.se, r.R) for r in rows]
    summaries = {}
    for n in req.ns:
        if len(req.eps) >= 2 and req.t > req.s:
            summaries[str(n)] = kv_summary(rows, n)
    outputs: list[str] = []
    if args.out:
        write_csv(Path(args.out) / "kv.csv", header, table)
        write_json(Path(args.out) / "kv_summary.json", summaries)
        outputs = ["kv.csv", "kv_summary.json"]
    _finish("kv", args, snap, outputs)
    _emit({"rows": [dict(zip(header, r)) for r in table], "summary": summaries})
    return 0


# limit
def cmd_limit(args) -> int:
    loaded = _load(args, ("limit",))
    if loaded is not None:
        req = loaded.value
        req = replace(req, quadrature=_quad_overrides(args, req.quadrature))
    else:
        prof = _profile_from_flags(args)
        if prof is None or not args.kind:
            raise ConfigError("<flags>:0: need --config, or --kind with a profile flag")
        u1 = args.u1 if args.u1 is not None else 0.0
        u2 = args.u2 if args.u2 is not None else u1
        req = LimitRequest(args.kind, prof, u1, u2, args.s if args.s is not None else 1.0,
                           args.t if args.t is not None else 1.0,
                           quadrature=_quad_overrides(args, QuadratureSettings()))
    snap = {"type": "limit", "kind": req.kind, "quadrature": req.quadrature.__dict__.copy(), **req.params()}
    outputs: list[str] = []
    if args.grid:
        rows = covariance_surface(req.kind, req.profile, req.u1, req.u2, args.grid, req.quadrature)
        if args.out:
            write_csv(Path(args.out) / "surface.csv", ("s", "t", "value", "error_estimate"), rows)
            outputs.append("surface.csv")
        result = {"kind": req.kind, "params": req.params(),
                  "surface": [dict(zip(("s", "t", "value", "error_estimate"), r)) for r in rows]}
    else:
        val = evaluate(req)
        result = {"kind": req.kind, "params": req.params(), **val.to_dict()}
        if args.out:
            write_json(Path(args.out) / "limit.json", result)
            outputs.append("limit.json")
    _finish("limit", args, snap, outputs)
    _emit(result)
    return 0


# oracle
def _oracle_params(args) -> dict:
    loaded = _load(args, ("oracle",))
    params = dict(loaded.value.params) if loaded is not None else {}
    if loaded is not None and loaded.value.op != args.op:
        raise ConfigError(f"{args.config}:1: config op {loaded.value.op!r} does not match {args.op!r}")
    for key in ("k", "n", "sites", "replicas", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    if args.t is not None:
        params["times"] = [args.t] if args.op != "correlation" else params.get("times")
    prof = _profile_from_flags(args)
    if prof is not None:
        params["profile"] = prof.to_dict()
    return params


def cmd_oracle(args) -> int:
    params = _oracle_params(args)
    op = args.op
    out = Path(args.out) if args.out else None
    outputs: list[str] = []
    if op == "grad":
        k, n = int(params.get("k", 1)), int(params.get("n", 4))
        times = params.get("times") or (dyadic_grid(0.1, 1000.0) / n ** 2).tolist()
        scan = gradient_scan(k, times, n, int(params.get("coordinate", 1)), params.get("sites"))
        header = ("k", "n", "t", "n2t", "raw_sup", "scaled_sup")
        result = {**scan.to_dict(), "table": [dict(zip(header, r)) for r in scan.rows()]}
        if out:
            write_csv(out / "grad.csv", header, scan.rows())
            outputs.append("grad.csv")
    elif op == "meeting":
        n = int(params.get("n", 8))
        times = params.get("times") or [1.0 / n ** 2]
        header = ("t", "tail", "boundary_mass", "sites")
        rows = []
        for t in times:
            m = meeting_time_oracle(float(t), n, params.get("max_distance"))
            rows.append((float(t), m.tail, m.boundary_mass, m.sites))
        result = {"n": n, "table": [dict(zip(header, r)) for r in rows]}
        if out:
            write_csv(out / "meeting.csv", header, rows)
            outputs.append("meeting.csv")
    elif op == "coupling":
        k, n = int(params.get("k", 1)), int(params.get("n", 8))
        times = params.get("times") or [1.0 / n ** 2]
        start = params.get("start") or list(range(0, 3 * k, 3))
        est = coupling_tau_tail(k, start, int(params.get("coordinate", 1)), times, n,
                                int(params.get("replicas", 10000)), int(params.get("seed", 0)))
        header = ("t", "tail", "se", "replicas")
        result = {"k": k, "n": n, "start": start, "table": [dict(zip(header, r)) for r in est.rows()]}
        if out:
            write_csv(out / "coupling.csv", header, est.rows())
            outputs.append("coupling.csv")
    else:
        nsites = int(params.get("sites", 10))
        n = int(params.get("n", nsites))
        prof = Profile.from_dict(params["profile"]) if "profile" in params else Profile.constant(0.5)
        times = params.get("times") or [args.s if args.s is not None else 0.5, args.t if args.t is not None else 1.0]
        site_lists = params.get("site_lists") or [[args.x], [args.y]]
        sysm = SmallSystem(nsites, n, int(params.get("x0", 0)))
        val = exact_correlation(sysm, prof, [float(t) for t in times], site_lists)
        result = {"sites": nsites, "n": n, "times": times, "site_lists": site_lists, "value": val}
        if out:
            write_json(out / "correlation.json", result)
            outputs.append("correlation.json")
    snap = {"type": "oracle", "op": op, **params}
    _finish(f"oracle {op}", args, snap, outputs)
    _emit(result)
    return 0


# parser
def _common(p: argparse.ArgumentParser, profile: bool = True) -> None:
    p.add_argument("--config", help="JSON config or a manifest.json from an earlier run")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--threads", type=int, default=0, help="worker processes (default: available CPUs)")
    if profile:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--equilibrium", type=float, metavar="RHO", help="constant profile")
        g.add_argument("--tanh", type=float, nargs=4, metavar=("A", "B", "CENTER", "WIDTH"),
                       help="tanh ramp profile")
    p.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")
    p.add_argument("--cutoff", type=float, help="spatial cutoff in standard deviations")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ssep-lab", description="Stirring simulations, Gaussian limits and exact oracles.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (("simulate", cmd_simulate, "run an ensemble and write replicas and covariances"),
                               ("compare", cmd_compare, "ensemble covariances against the limit evaluator"),
                               ("hurst", cmd_hurst, "variance scaling fits")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--n", type=int, help="scaling parameter when no config is given")
        if name == "hurst":
            p.add_argument("--report", help="fit an existing covariance.csv instead of simulating")
        p.set_defaults(func=fn)

    p = sub.add_parser("limit", help="evaluate a limiting covariance")
    _common(p)
    p.add_argument("--kind", help="JJ, GG, GJ, JL or YY")
    for flag in ("--u1", "--u2", "--s", "--t"):
        p.add_argument(flag, type=float)
    p.add_argument("--grid", type=float, nargs="+", help="time grid for a covariance surface")
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("oracle", help="exact small-system computations")
    p.add_argument("op", choices=("grad", "meeting", "coupling", "correlation"))
    _common(p)
    p.add_argument("--k", type=int, help="number of particles")
    p.add_argument("--n", type=int, help="scaling parameter")
    p.add_argument("--sites", type=int, help="finite system size")
    p.add_argument("--replicas", type=int, help="coupling replicas")
    p.add_argument("--s", type=float, help="first time (correlation)")
    p.add_argument("--t", type=float, help="time")
    p.add_argument("--x", type=int, default=0, help="first site (correlation)")
    p.add_argument("--y", type=int, default=1, help="second site (correlation)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("kv", help="block-replacement second moments over eps")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--replicas", type=int)
    p.set_defaults(func=cmd_kv)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SsepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
