"""Stirring (Harris construction) simulator for the symmetric exclusion process."""
from .backend import BACKENDS, default_backend
from .martingale import MartingaleSeries, martingale_decomposition
from .observables import KINDS, Observable, ObservableSpec, make_observable
from .simulate import SimulationPlan, TrajectorySample, evolve
from .window import Configuration, LatticeWindow, sample_initial_configuration, site_probabilities

__all__ = [
    "BACKENDS", "Configuration", "KINDS", "LatticeWindow", "MartingaleSeries", "Observable",
    "ObservableSpec", "SimulationPlan", "TrajectorySample", "default_backend", "evolve",
    "make_observable", "martingale_decomposition", "sample_initial_configuration", "site_probabilities",
]
