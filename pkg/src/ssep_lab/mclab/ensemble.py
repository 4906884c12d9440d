"""Replica ensembles of the stirring simulator."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import InvalidInput, ResourceCapExceeded
from ..meanfield import QuadratureSettings
from ..profiles import Profile
from ..seeding import derive
from ..stirring import LatticeWindow, ObservableSpec, SimulationPlan, sample_initial_configuration
from .report import Column, CovarianceReport

# events per ensemble above which a run is refused
EVENT_CAP = 2e12


@dataclass
class WindowPolicy:
    """How the lattice window is chosen: explicit bounds or the margin rule."""

    margin_factor: float = 1.0
    x_lo: int | None = None
    x_hi: int | None = None
    enforce_margin: bool = True

    def window(self, n: int, sites: Sequence[int], horizon: float) -> LatticeWindow:
        if self.x_lo is not None and self.x_hi is not None:
            return LatticeWindow(n, self.x_lo, self.x_hi, self.margin_factor, self.enforce_margin)
        if not self.enforce_margin:
            raise InvalidInput("a finite system needs explicit x_lo and x_hi")
        return LatticeWindow.around(n, sites, horizon, self.margin_factor)

    def to_dict(self) -> dict:
        return {"margin_factor": self.margin_factor, "x_lo": self.x_lo, "x_hi": self.x_hi,
                "enforce_margin": self.enforce_margin}


@dataclass
class ExperimentConfig:
    profile: Profile
    n: int
    observables: list[ObservableSpec]
    horizon: float = 1.0
    replicas: int = 1000
    seed: int = 0
    window: WindowPolicy = field(default_factory=WindowPolicy)
    targets: list[dict] = field(default_factory=list)
    backend: str | None = None
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)

    def __post_init__(self):
        if self.replicas < 2:
            raise InvalidInput("need at least 2 replicas")
        if self.n < 1:
            raise InvalidInput("n must be positive")
        if not self.horizon > 0:
            raise InvalidInput("horizon must be positive")
        if not self.observables:
            raise InvalidInput("no observables")

    def resolved_window(self) -> LatticeWindow:
        sites = []
        for spec in self.observables:
            from ..stirring import make_observable

            # resolve against a throwaway wide window to learn the sites
            probe = LatticeWindow(self.n, -10**9, 10**9, enforce_margin=False)
            sites += make_observable(spec, probe).sites
        return self.window.window(self.n, sites, self.horizon)

    def plan(self) -> SimulationPlan:
        return SimulationPlan(self.resolved_window(), self.horizon, self.observables, self.profile,
                              self.quadrature, self.backend)


def normalisation(kind: str, n: int) -> float:
    """Scale applied to centred series: n^{-1/2} for currents, n^{1/2} for occupation times."""
    if kind == "current":
        return n ** -0.5
    if kind == "occupation":
        return n ** 0.5
    return 1.0


@dataclass
class EnsembleResult:
    columns: list[Column]
    data: np.ndarray
    report: CovarianceReport
    events: int
    boundary_crossings: int
    window: LatticeWindow
    seeds: list[int]

    def replica_rows(self) -> list[tuple]:
        """(replica_id, observable_id, time, value) rows for CSV export."""
        rows = []
        for r in range(self.data.shape[0]):
            for c, (obs, t) in enumerate(self.columns):
                rows.append((r, obs, t, float(self.data[r, c])))
        return rows


_WORKER: dict = {}


def _init_worker(cfg: ExperimentConfig):
    _WORKER["plan"] = cfg.plan()
    _WORKER["plan"].centring()
    _WORKER["cfg"] = cfg


def _run_chunk(indices: Sequence[int]):
    return _simulate(_WORKER["cfg"], _WORKER["plan"], indices)


def _simulate(cfg: ExperimentConfig, plan: SimulationPlan, indices: Sequence[int]):
    cols = [(s.ident, t) for s in cfg.observables for t in s.output_times]
    out = np.empty((len(indices), len(cols)))
    events = crossings = 0
    for row, r in enumerate(indices):
        rs = derive(cfg.seed, r)
        init = sample_initial_configuration(cfg.profile, plan.window, derive(rs, 0))
        sample = plan.run(init, seed=derive(rs, 1))
        vals = []
        for s in cfg.observables:
            vals.extend(sample.values[s.ident] * normalisation(s.kind, cfg.n))
        out[row] = vals
        events += sample.event_count
        crossings += sample.boundary_crossings
    return out, events, crossings


def estimated_events(cfg: ExperimentConfig, window: LatticeWindow) -> float:
    return float(window.nedges) * cfg.n ** 2 * cfg.horizon * cfg.replicas


def run_ensemble(cfg: ExperimentConfig, threads: int = 1, chunk: int = 256) -> EnsembleResult:
    """R replicas with seeds derive(master, r); results are independent of ``threads``."""
    plan = cfg.plan()
    if estimated_events(cfg, plan.window) > EVENT_CAP:
        raise ResourceCapExceeded(f"about {estimated_events(cfg, plan.window):.3g} events exceed the cap {EVENT_CAP:.0e}")
    cols = [(s.ident, t) for s in cfg.observables for t in s.output_times]
    idx = list(range(cfg.replicas))
    chunks = [idx[i:i + chunk] for i in range(0, len(idx), chunk)]
    threads = max(1, int(threads))
    if threads == 1 or len(chunks) == 1:
        parts = [_simulate(cfg, plan, c) for c in chunks]
    else:
        with ProcessPoolExecutor(threads, initializer=_init_worker, initargs=(cfg,)) as ex:
            parts = list(ex.map(_run_chunk, chunks))
    data = np.vstack([p[0] for p in parts])
    events = sum(p[1] for p in parts)
    crossings = sum(p[2] for p in parts)
    seeds = [derive(cfg.seed, r) for r in idx]
    return EnsembleResult(cols, data, CovarianceReport(cols, data), events, crossings, plan.window, seeds)


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass
class DoublingCheck:
    entries: list[tuple[str, float, float, float, float, float]]

    @property
    def consistent(self) -> bool:
        return all(abs(a - b) <= 3.0 * math.hypot(sa, sb) + 1e-12 for _, _, a, sa, b, sb in self.entries)


def margin_doubling_check(cfg: ExperimentConfig, threads: int = 1) -> DoublingCheck:
    """Rerun with the window margins doubled and compare the variance estimates."""
    base = run_ensemble(cfg, threads)
    w = base.window.doubled()
    wider = replace(cfg, window=WindowPolicy(cfg.window.margin_factor, w.x_lo, w.x_hi, cfg.window.enforce_margin),
                    seed=derive(cfg.seed, 2**32))
    other = run_ensemble(wider, threads)
    entries = []
    for obs, t in base.columns:
        a, sa = base.report.covariance(obs, t, obs, t)
        b, sb = other.report.covariance(obs, t, obs, t)
        entries.append((obs, t, a, sa, b, sb))
    return DoublingCheck(entries)
