"""Rough-path integration against local times of Lévy processes.

Simulation of jump diffusions, local-time estimation, p-variation, level-2
lifts of (g, L), Young / rough / càdlàg integrals ∫g dL and Itô-Tanaka
verification.
"""

__version__ = "0.1.0"
