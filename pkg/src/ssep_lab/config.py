"""JSON configuration: validation, defaults and line-anchored errors.

A config file is one JSON object whose ``type`` selects the schema:
``experiment`` (the default), ``limit``, ``oracle`` or ``kv``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, SsepError
from .limits import LimitRequest
from .meanfield import QuadratureSettings
from .mclab.ensemble import ExperimentConfig, WindowPolicy
from .profiles import Profile
from .stirring import ObservableSpec
from .testfunctions import TestFunction

DEFAULT_T = 1.0
DEFAULT_R = 1000
DEFAULT_MARGIN = 1.0

SCHEMAS: dict[str, set[str]] = {
    "experiment": {"type", "profile", "n", "T", "R", "seed", "window", "observables", "targets", "quadrature", "backend"},
    "limit": {"type", "kind", "profile", "u1", "u2", "s", "t", "H", "G", "quadrature"},
    "oracle": {"type", "op", "k", "n", "sites", "times", "coordinate", "start", "replicas", "seed", "profile",
               "x0", "site_lists", "max_distance"},
    "kv": {"type", "profile", "ns", "eps", "s", "t", "R", "seed", "site", "margin_factor", "backend"},
}
PROFILE_KEYS = {"kind", "params"}
WINDOW_KEYS = {"margin_factor", "x_lo", "x_hi", "enforce_margin"}
OBSERVABLE_KEYS = {"kind", "site", "output_times", "centred", "H", "ell", "name"}
TARGET_KEYS = {"kind", "obs_i", "obs_j", "s", "t", "u1", "u2"}
QUAD_KEYS = {"rel_tol", "abs_tol", "cutoff", "max_depth"}


@dataclass
class OracleRequest:
    op: str
    params: dict[str, Any]


@dataclass
class KVRequest:
    profile: Profile
    ns: list[int]
    eps: list[float]
    s: float
    t: float
    R: int
    seed: int
    site: int = 0
    margin_factor: float = DEFAULT_MARGIN
    backend: str | None = None


@dataclass
class LoadedConfig:
    kind: str
    value: Any
    snapshot: dict
    path: str | None


class _Locator:
    def __init__(self, text: str, path: str):
        self.text, self.path = text, path

    def line_of(self, key: str) -> int:
        m = re.search(r'"' + re.escape(key) + r'"\s*:', self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else 1

    def error(self, key: str, msg: str) -> ConfigError:
        return ConfigError(f"{self.path}:{self.line_of(key)}: {msg}")


def _check_keys(obj: Mapping, allowed: set[str], where: str, loc: _Locator):
    if not isinstance(obj, Mapping):
        raise loc.error(where, f"{where} must be an object")
    for key in obj:
        if key not in allowed:
            raise loc.error(key, f"unknown key {key!r} in {where}")


def _profile(d, loc: _Locator) -> Profile:
    _check_keys(d, PROFILE_KEYS, "profile", loc)
    if "kind" not in d:
        raise loc.error("profile", "profile needs a kind")
    try:
        return Profile.from_dict(d)
    except SsepError as exc:
        raise loc.error("profile", f"profile: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise loc.error("profile", f"profile: bad parameters ({exc})") from None


def _quadrature(d, loc: _Locator) -> QuadratureSettings:
    if d is None:
        return QuadratureSettings()
    _check_keys(d, QUAD_KEYS, "quadrature", loc)
    try:
        return QuadratureSettings(**d)
    except SsepError as exc:
        raise loc.error("quadrature", str(exc)) from None


def _number(d: Mapping, key: str, default, loc: _Locator, kind=float, positive=False):
    v = d.get(key, default)
    if v is None:
        raise loc.error(key, f"missing required key {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise loc.error(key, f"{key} must be a number")
    if kind is int and int(v) != v:
        raise loc.error(key, f"{key} must be an integer")
    if positive and not v > 0:
        raise loc.error(key, f"{key} must be positive")
    return kind(v)


def _experiment(d: dict, loc: _Locator) -> tuple[ExperimentConfig, dict]:
    prof = _profile(d.get("profile") or {}, loc) if "profile" in d else None
    if prof is None:
        raise loc.error("type", "missing required key 'profile'")
    n = _number(d, "n", None, loc, int, positive=True)
    T = _number(d, "T", DEFAULT_T, loc, float, positive=True)
    R = _number(d, "R", DEFAULT_R, loc, int)
    if R < 2:
        raise loc.error("R", "R must be at least 2")
    seed = _number(d, "seed", 0, loc, int)
    w = d.get("window", {})
    _check_keys(w, WINDOW_KEYS, "window", loc)
    window = WindowPolicy(float(w.get("margin_factor", DEFAULT_MARGIN)), w.get("x_lo"), w.get("x_hi"),
                          bool(w.get("enforce_margin", True)))
    if window.margin_factor < 1:
        raise loc.error("margin_factor", "margin_factor must be at least 1")
    obs_raw = d.get("observables")
    if obs_raw is None:
        obs_raw = [{"kind": "current", "site": 0, "output_times": [T]},
                   {"kind": "occupation", "site": 0, "output_times": [T]}]
    if not isinstance(obs_raw, list) or not obs_raw:
        raise loc.error("observables", "observables must be a nonempty list")
    specs = []
    for o in obs_raw:
        _check_keys(o, OBSERVABLE_KEYS, "observable", loc)
        o = dict(o)
        o.setdefault("output_times", [T])
        if any(float(t) > T for t in o["output_times"]):
            raise loc.error("output_times", "output time beyond T")
        try:
            specs.append(ObservableSpec.from_dict(o))
        except (SsepError, KeyError, TypeError) as exc:
            raise loc.error("observables", f"observable: {exc}") from None
    targets = d.get("targets", [])
    for tg in targets:
        _check_keys(tg, TARGET_KEYS, "target", loc)
        for key in ("kind", "obs_i", "obs_j", "s", "t"):
            if key not in tg:
                raise loc.error("targets", f"target missing {key!r}")
    quad = _quadrature(d.get("quadrature"), loc)
    backend = d.get("backend")
    try:
        cfg = ExperimentConfig(prof, n, specs, T, R, seed, window, list(targets), backend, quad)
    except SsepError as exc:
        raise loc.error("type", str(exc)) from None
    snap = {
        "type": "experiment", "profile": prof.to_dict(), "n": n, "T": T, "R": R, "seed": seed,
        "window": window.to_dict(), "observables": [s.to_dict() for s in specs], "targets": list(targets),
        "quadrature": quad.__dict__.copy(), "backend": backend,
    }
    return cfg, snap


def _limit(d: dict, loc: _Locator) -> tuple[LimitRequest, dict]:
    if "profile" not in d:
        raise loc.error("type", "missing required key 'profile'")
    prof = _profile(d["profile"], loc)
    quad = _quadrature(d.get("quadrature"), loc)
    H = G = None
    try:
        if "H" in d:
            H = TestFunction.from_dict(d["H"])
        if "G" in d:
            G = TestFunction.from_dict(d["G"])
        req = LimitRequest(str(d.get("kind", "")), prof, float(d.get("u1", 0.0)), float(d.get("u2", 0.0)),
                           float(d.get("s", 1.0)), float(d.get("t", 1.0)), H, G, quad)
    except (SsepError, KeyError, TypeError) as exc:
        raise loc.error("kind", str(exc)) from None
    snap = {"type": "limit", "kind": req.kind, "quadrature": quad.__dict__.copy(), **req.params()}
    return req, snap


def _kv(d: dict, loc: _Locator) -> tuple[KVRequest, dict]:
    if "profile" not in d:
        raise loc.error("type", "missing required key 'profile'")
    prof = _profile(d["profile"], loc)
    for key in ("ns", "eps"):
        if not isinstance(d.get(key), list) or not d[key]:
            raise loc.error(key, f"{key} must be a nonempty list")
    req = KVRequest(prof, [int(v) for v in d["ns"]], [float(v) for v in d["eps"]],
                    _number(d, "s", 0.0, loc), _number(d, "t", DEFAULT_T, loc),
                    _number(d, "R", DEFAULT_R, loc, int), _number(d, "seed", 0, loc, int),
                    _number(d, "site", 0, loc, int), _number(d, "margin_factor", DEFAULT_MARGIN, loc),
                    d.get("backend"))
    snap = {"type": "kv", **{k: v for k, v in req.__dict__.items() if k != "profile"}, "profile": prof.to_dict()}
    return req, snap


def _oracle(d: dict, loc: _Locator) -> tuple[OracleRequest, dict]:
    op = d.get("op")
    if op not in ("grad", "meeting", "coupling", "correlation"):
        raise loc.error("op", f"unknown oracle op {op!r}")
    params = {k: v for k, v in d.items() if k not in ("type", "op")}
    if "profile" in params:
        _profile(params["profile"], loc)
    snap = {"type": "oracle", "op": op, **params}
    return OracleRequest(op, params), snap


def parse_config_text(text: str, path: str = "<config>") -> LoadedConfig:
    loc = _Locator(text, path)
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if isinstance(d, dict) and "manifest_version" in d:
        d = d.get("config", {})
        text = json.dumps(d, indent=2)
        loc = _Locator(text, path + "#config")
    if not isinstance(d, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    kind = d.get("type", "experiment")
    if kind not in SCHEMAS:
        raise loc.error("type", f"unknown config type {kind!r}")
    _check_keys(d, SCHEMAS[kind], "config", loc)
    parser = {"experiment": _experiment, "limit": _limit, "kv": _kv, "oracle": _oracle}[kind]
    value, snap = parser(d, loc)
    return LoadedConfig(kind, value, snap, path)


def parse_config(path) -> LoadedConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}:0: cannot read config ({exc.strerror})") from None
    return parse_config_text(text, str(path))
