"""Exact small-system computations and the coupling / meeting-time pair."""
from .coupling import (MeetingTail, TailEstimate, coupling_tau_tail, meeting_time_closed_form,
                       meeting_time_oracle, simulate_coupling)
from .fullspace import MAX_FULL_SITES, Evolved, SmallSystem, evolve_distribution, exact_correlation
from .labelled import (GradientScan, LabelledSystem, dyadic_grid, gradient_scan, lex_transition,
                       pair_lattice_evolve)
from .uniformization import poisson_window, uniformize

__all__ = [
    "Evolved", "GradientScan", "LabelledSystem", "MAX_FULL_SITES", "MeetingTail", "SmallSystem",
    "TailEstimate", "coupling_tau_tail", "dyadic_grid", "evolve_distribution", "exact_correlation",
    "gradient_scan", "lex_transition", "meeting_time_closed_form", "meeting_time_oracle",
    "pair_lattice_evolve", "poisson_window", "simulate_coupling", "uniformize",
]
