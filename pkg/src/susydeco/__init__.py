"""Spin decoherence in N=2 supersymmetric quantum mechanics.

Submodules:

* ``potential`` -- polynomial superpotentials, partner potentials, equilibria
* ``dsl`` -- text expressions for superpotentials
* ``harmonic`` -- forced-oscillator (coherent state) decoherence factors
* ``grid`` -- finite-difference matrices and split-operator propagation
* ``config``, ``commands``, ``cli`` -- batch scenarios and the command line
"""
from __future__ import annotations

from .dsl import ParseError, format_polynomial, parse_superpotential
from .potential import (Channel, HarmonicChannel, Polynomial, SuperpotentialModel,
                        channel_pair, effective_potential, find_equilibria, harmonic_params,
                        select_equilibrium)

__all__ = [
    "Channel",
    "HarmonicChannel",
    "ParseError",
    "Polynomial",
    "SuperpotentialModel",
    "channel_pair",
    "effective_potential",
    "find_equilibria",
    "format_polynomial",
    "harmonic_params",
    "parse_superpotential",
    "select_equilibrium",
]

__version__ = "0.1.0"
