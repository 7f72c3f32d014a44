"""Minimal-dissipation decomposition of time-local quantum master equations.

Dense linear-algebra toolbox for extracting the exact time-local generator of
an open-system evolution from a microscopic model, splitting it uniquely into
an effective Hamiltonian and a minimal dissipator, and computing the resulting
work, heat and entropy production at arbitrary coupling strength.
"""

from . import hilbert, superop, decomposition, tcl, thermo, models

__all__ = ["hilbert", "superop", "decomposition", "tcl", "thermo", "models"]

__version__ = "0.1.0"
