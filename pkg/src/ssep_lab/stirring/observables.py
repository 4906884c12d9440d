"""Observable specifications and their bound (window-resolved) form."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import InvalidInput, WindowTooSmall
from ..testfunctions import TestFunction
from .window import LatticeWindow

KINDS = ("current", "occupation", "occupancy", "density_field", "kv_block")


@dataclass(frozen=True)
class ObservableSpec:
    """What to record and when.

    ``site`` is the bond's left end for ``current``, the observed site for
    ``occupation``/``occupancy`` and the base site for ``kv_block``.
    """

    kind: str
    output_times: tuple[float, ...]
    site: int = 0
    centred: bool = True
    H: TestFunction | None = None
    ell: int | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown observable kind {self.kind!r}")
        times = tuple(float(t) for t in self.output_times)
        object.__setattr__(self, "output_times", times)
        if not times:
            raise InvalidInput("output_times is empty")
        if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
            raise InvalidInput("output_times must be nonnegative and nondecreasing")
        if self.kind == "kv_block":
            if self.ell is None or int(self.ell) != self.ell or self.ell < 1:
                raise InvalidInput("kv_block needs an integer block length ell >= 1")
        if self.kind == "density_field" and self.H is None:
            raise InvalidInput("density_field needs a test function H")

    @property
    def ident(self) -> str:
        if self.name:
            return self.name
        if self.kind == "density_field":
            return f"density:{self.H.name}"
        if self.kind == "kv_block":
            return f"kv:{self.ell}@{self.site}"
        return f"{self.kind}:{self.site}"

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ObservableSpec":
        d = dict(d)
        if "H" in d and d["H"] is not None and not isinstance(d["H"], TestFunction):
            d["H"] = TestFunction.from_dict(d["H"])
        d["output_times"] = tuple(d["output_times"])
        return cls(**d)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "output_times": list(self.output_times), "site": self.site,
               "centred": self.centred}
        if self.H is not None:
            out["H"] = self.H.to_dict()
        if self.ell is not None:
            out["ell"] = self.ell
        if self.name:
            out["name"] = self.name
        return out


@dataclass
class Observable:
    """An ObservableSpec resolved against a window.

    ``blocks`` are inclusive site ranges whose occupation integrals are needed,
    ``bonds`` the bonds whose currents are needed and ``snapshot`` the sites
    whose occupancies are read at output times.
    """

    spec: ObservableSpec
    blocks: list[tuple[int, int]] = field(default_factory=list)
    bonds: list[int] = field(default_factory=list)
    snapshot: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    weights: np.ndarray | None = None

    @property
    def sites(self) -> list[int]:
        s = [x for a, b in self.blocks for x in (a, b)] + [x for b in self.bonds for x in (b, b + 1)]
        return s + [int(x) for x in self.snapshot]


def make_observable(spec: ObservableSpec, window: LatticeWindow, horizon: float | None = None) -> Observable:
    """Resolve ``spec`` on ``window``; checks the margin rule when ``horizon`` is given."""
    obs = Observable(spec)
    x = int(spec.site)
    if spec.kind == "current":
        obs.bonds = [x]
    elif spec.kind == "occupation":
        obs.blocks = [(x, x)]
    elif spec.kind == "occupancy":
        obs.snapshot = np.array([x], dtype=np.int64)
    elif spec.kind == "kv_block":
        obs.blocks = [(x, x), (x, x + int(spec.ell) - 1)]
    elif spec.kind == "density_field":
        lo, hi = spec.H.support
        n = window.n
        xs = np.arange(math.ceil(lo * n), math.floor(hi * n) + 1, dtype=np.int64)
        w = spec.H(xs / n)
        keep = w != 0
        obs.snapshot, obs.weights = xs[keep], w[keep]
    if horizon is not None:
        try:
            window.check_sites(obs.sites, horizon)
        except WindowTooSmall as exc:
            raise WindowTooSmall(f"{spec.ident}: {exc}") from None
    return obs
