"""Ready-made integrands g and test functions f."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .ito_verify import PiecewiseC1Function, abs_function, hinge_function, power_function
from .qvar_control import QVarFunction, from_callable

G_PRESETS = ("constant", "polynomial", "abs_power", "steps", "weierstrass", "csv")
F_PRESETS = ("identity", "square", "abs", "hinge")


def weierstrass(x, hurst: float = 2.0 / 3.0, terms: int = 12):
    """Σ_k 2^(-k H) cos(2^k x): Hölder-H, so of bounded 1/H-variation."""
    x = np.asarray(x, dtype=float)
    return sum(2.0 ** (-k * hurst) * np.cos(2.0 ** k * x) for k in range(terms))


def polynomial(coeffs: Sequence[float]):
    c = np.asarray(coeffs, dtype=float)
    return lambda x: np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)


def make_integrand(preset: str, lo: float, hi: float, n: int = 4097, *, coeffs=(0.0, 1.0),
                   value: float = 1.0, beta: float = 0.6, center: float = 0.0,
                   steps: Sequence[tuple[float, float]] = (), hurst: float = 2.0 / 3.0,
                   terms: int = 12, csv_path=None) -> QVarFunction:
    """Build g on [lo, hi] from a preset name and its parameters."""
    if preset == "constant":
        return from_callable(lambda x: np.full_like(x, value), lo, hi, n, 1.0, name="constant")
    if preset == "polynomial":
        return from_callable(polynomial(coeffs), lo, hi, n, 1.0, name="polynomial")
    if preset == "abs_power":
        return from_callable(lambda x: np.abs(x - center) ** beta, lo, hi, n, 1.0, name="abs_power")
    if preset == "steps":
        inside = [(x, s) for x, s in steps if lo < x < hi]
        base = polynomial(coeffs)

        def fn(x):
            return base(x) + sum(s * (x >= x0) for x0, s in inside)

        return from_callable(fn, lo, hi, n, 1.0, jumps=inside, name="steps")
    if preset == "weierstrass":
        return from_callable(lambda x: weierstrass(x, hurst, terms), lo, hi, n, 1.0 / hurst,
                             name="weierstrass")
    if preset == "csv":
        return read_integrand_csv(csv_path)
    raise ValueError(f"unknown integrand preset {preset!r}; expected one of {G_PRESETS}")


def read_integrand_csv(filename, q: float = 1.0) -> QVarFunction:
    """Columns x, value, jump_size; ``value`` is the right-continuous value."""
    rows = []
    with open(Path(filename)) as fh:
        for rec in csv.DictReader(line for line in fh if not line.startswith("#")):
            rows.append((float(rec["x"]), float(rec["value"]), float(rec.get("jump_size") or 0.0)))
    rows.sort()
    x = np.array([r[0] for r in rows])
    v = np.array([r[1] for r in rows])
    jumps = tuple((r[0], r[2]) for r in rows if r[2] != 0)
    return QVarFunction(x, v, jumps, q, Path(filename).stem)


def make_test_function(preset: str, level: float = 0.0) -> PiecewiseC1Function:
    if preset == "identity":
        return power_function(1)
    if preset == "square":
        return power_function(2)
    if preset == "abs":
        return abs_function()
    if preset == "hinge":
        return hinge_function(level)
    raise ValueError(f"unknown test function {preset!r}; expected one of {F_PRESETS}")
