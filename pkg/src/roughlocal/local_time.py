"""Local time estimators: occupation binning and the Tanaka formula.

Normalization: L enters the Tanaka formula for (X - a)^+ with coefficient 1,
so the occupation identity reads ∫ L dx = sigma^2 t / 2.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .levy_model import LevyModel, compensator_drift, small_hinge_integral
from .path_sim import SamplePath

NORMALIZATION = "tanaka"


@dataclass(frozen=True)
class LocalTimeCurve:
    xgrid: np.ndarray
    values: np.ndarray
    t: float
    estimator: str = "tanaka"
    normalization: str = NORMALIZATION

    def __call__(self, x):
        """Piecewise-linear evaluation, zero outside the grid."""
        return np.interp(x, self.xgrid, self.values, left=0.0, right=0.0)

    @property
    def dx(self) -> float:
        return float(self.xgrid[1] - self.xgrid[0])

    def mass(self) -> float:
        """Riemann sum Σ L(x) Δx over the (uniform) grid."""
        return float(np.sum(self.values) * self.dx)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# normalization={self.normalization}\n")
        buf.write(f"# estimator={self.estimator}\n# t={self.t!r}\n")
        buf.write("x,L\n")
        for x, v in zip(self.xgrid, self.values):
            buf.write(f"{float(x)!r},{float(v)!r}\n")
        return buf.getvalue()

    def write_csv(self, filename) -> None:
        Path(filename).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, filename) -> "LocalTimeCurve":
        meta, rows = {}, []
        for line in Path(filename).read_text().splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            elif line and not line.startswith("x,"):
                rows.append([float(s) for s in line.split(",")])
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], float(meta.get("t", "nan")),
                   meta.get("estimator", "unknown"), meta.get("normalization", NORMALIZATION))


@dataclass(frozen=True)
class TanakaTerms:
    phi: float
    I: float
    Bhat: float
    K1: float
    K2: float
    K3: float
    b: float
    sigma: float

    def recombine(self) -> float:
        return self.phi - self.b * self.I - self.sigma * self.Bhat + self.K1 + self.K2 + self.K3


def uniform_grid(lo: float, hi: float, n: int, pad: float = 0.0) -> np.ndarray:
    return np.linspace(lo - pad, hi + pad, n)


def path_grid(path: SamplePath, n: int) -> np.ndarray:
    """Uniform grid of n points whose bins cover the whole path range."""
    lo = min(path.values.min(), path.left_limits.min())
    hi = max(path.values.max(), path.left_limits.max())
    h = (hi - lo) / (n - 2) if hi > lo else 1.0 / n
    return np.linspace(lo - 0.5 * h, hi + 0.5 * h, n)


# ---------------------------------------------------------------------------
# occupation binning
# ---------------------------------------------------------------------------


def occupation_times(path: SamplePath, edges: np.ndarray) -> np.ndarray:
    """Time the linearly interpolated path spends in each [edges[k], edges[k+1]).

    Each continuous segment spends time proportional to the length of its
    range inside a bin; constant segments go entirely to their bin. Jumps
    take no time.
    """
    v0 = path.values[:-1]
    v1 = path.left_limits[1:]
    dur = np.diff(path.times)
    lo = np.minimum(v0, v1)
    hi = np.maximum(v0, v1)
    nb = edges.size - 1
    k0 = np.clip(np.searchsorted(edges, lo, side="right") - 1, 0, nb - 1)
    k1 = np.clip(np.searchsorted(edges, hi, side="right") - 1, 0, nb - 1)
    out = np.zeros(nb)

    flat = hi - lo <= 0
    np.add.at(out, k0[flat], dur[flat])

    s = np.flatnonzero(~flat)
    span = k1[s] - k0[s] + 1
    seg = np.repeat(s, span)
    offs = np.arange(seg.size) - np.repeat(np.cumsum(span) - span, span)
    k = k0[seg] + offs
    overlap = np.minimum(hi[seg], edges[k + 1]) - np.maximum(lo[seg], edges[k])
    np.add.at(out, k, dur[seg] * np.maximum(overlap, 0.0) / (hi[seg] - lo[seg]))
    return out


def local_time_binning(path: SamplePath, xgrid) -> LocalTimeCurve:
    """L(x) = sigma^2/(2 Δx) * time spent in the bin centred at x."""
    xgrid = np.asarray(xgrid, dtype=float)
    if xgrid.size < 2:
        raise ValueError("grid needs at least two points")
    dx = float(xgrid[1] - xgrid[0])
    if not dx > 0:
        raise ValueError("grid spacing must be positive")
    if not np.allclose(np.diff(xgrid), dx, rtol=1e-9, atol=0):
        raise ValueError("binning needs a uniform grid")
    edges = np.concatenate([xgrid - 0.5 * dx, [xgrid[-1] + 0.5 * dx]])
    occ = occupation_times(path, edges)
    return LocalTimeCurve(xgrid, 0.5 * path.sigma ** 2 * occ / dx, path.T, "binning")


# ---------------------------------------------------------------------------
# Tanaka formula
# ---------------------------------------------------------------------------


def tanaka_local_time(path: SamplePath, a):
    """Discrete Tanaka local time at level(s) a.

    (X_t-a)^+ - (X_0-a)^+ - Σ 1{X_{s-}>a}(σΔB + b Δs) - Σ_jumps 1{X_{s-}>a}ΔX
    + Σ_jumps [(X_{s-}-a)^+ - (X_s-a)^+ + 1{X_{s-}>a}ΔX].
    The two indicator-weighted jump sums cancel and are not formed.
    """
    scalar = np.ndim(a) == 0
    a = np.atleast_1d(np.asarray(a, dtype=float))
    x = path.values
    phi = np.maximum(x[-1] - a, 0.0) - np.maximum(x[0] - a, 0.0)

    pre = x[:-1]
    cont = path.continuous_increments
    order = np.argsort(pre, kind="stable")
    csum = np.concatenate([[0.0], np.cumsum(cont[order])])
    below = np.searchsorted(pre[order], a, side="right")
    stoch = csum[-1] - csum[below]

    out = phi - stoch
    idx = np.flatnonzero(path.jump_sizes)
    if idx.size:
        ll = path.left_limits[idx][:, None]
        post = x[idx][:, None]
        out = out + np.sum(np.maximum(ll - a, 0.0) - np.maximum(post - a, 0.0), axis=0)
    return float(out[0]) if scalar else out


def local_time_tanaka(path: SamplePath, xgrid) -> LocalTimeCurve:
    xgrid = np.asarray(xgrid, dtype=float)
    return LocalTimeCurve(xgrid, tanaka_local_time(path, xgrid), path.T, "tanaka")


def _ramp_sums(points, weights, e):
    """Σ_k weights_k (points_k - e)^+ for each e, via sorted prefix sums."""
    order = np.argsort(points, kind="stable")
    p, w = points[order], weights[order]
    s0 = np.concatenate([[0.0], np.cumsum(w)])
    s1 = np.concatenate([[0.0], np.cumsum(w * p)])
    k = np.searchsorted(p, e, side="right")
    return (s1[-1] - s1[k]) - e * (s0[-1] - s0[k])


def tanaka_cell_average(path: SamplePath, xgrid) -> LocalTimeCurve:
    """Exact average of the Tanaka local time over the bins used by binning.

    a -> L(a) is piecewise linear with steps, so its bin averages follow from
    prefix sums; this is the like-for-like counterpart of local_time_binning.
    """
    xgrid = np.asarray(xgrid, dtype=float)
    dx = float(xgrid[1] - xgrid[0])
    lo, hi = xgrid - 0.5 * dx, xgrid + 0.5 * dx
    x = path.values

    def hinge_avg(c):
        c = np.atleast_1d(c)[:, None]
        z = 0.5 * (np.maximum(c - lo, 0.0) ** 2 - np.maximum(c - hi, 0.0) ** 2)
        return z / dx

    out = hinge_avg(x[-1])[0] - hinge_avg(x[0])[0]
    pre, cont = x[:-1], path.continuous_increments
    out = out - (_ramp_sums(pre, cont, lo) - _ramp_sums(pre, cont, hi)) / dx
    idx = np.flatnonzero(path.jump_sizes)
    if idx.size:
        out = out + hinge_avg(path.left_limits[idx]).sum(0) - hinge_avg(x[idx]).sum(0)
    return LocalTimeCurve(xgrid, out, path.T, "tanaka-cell")


def tanaka_terms(path: SamplePath, a: float, model: LevyModel, eps: float) -> TanakaTerms:
    """Split the Tanaka local time into drift, martingale and jump parts.

    The compensator of the hinge term is integrated exactly in y and by the
    trapezoid rule in s; the same quantity enters K2 and K3, so it cancels
    in the recombination. The indicator integral I uses left points, as the
    stochastic sums do.
    """
    model.require_diffusion()
    x = path.values
    pre = x[:-1]
    dts = np.diff(path.times)
    above = pre > a
    phi = max(x[-1] - a, 0.0) - max(x[0] - a, 0.0)
    I = float(np.sum(dts[above]))
    dB = (path.continuous_increments - path.b_eff * dts) / path.sigma
    Bhat = float(np.sum(dB[above]))

    idx = np.flatnonzero(path.jump_sizes)
    size = path.jump_sizes[idx]
    J1 = np.maximum(path.left_limits[idx] - a, 0.0) - np.maximum(x[idx] - a, 0.0)
    big = np.abs(size) >= 1.0
    K1 = float(np.sum(J1[big]))

    has_small = eps is not None and 0 <= eps < 1
    if has_small:
        h_left = small_hinge_integral(model.jump_spec, pre - a, eps)
        h_right = small_hinge_integral(model.jump_spec, path.left_limits[1:] - a, eps)
        comp = float(np.sum(0.5 * (h_left + h_right) * dts))
        c = compensator_drift(model, eps)
    else:
        comp, c = 0.0, 0.0
    K2 = float(np.sum(J1[~big])) - comp
    K3 = comp + c * I
    return TanakaTerms(phi, I, Bhat, K1, K2, K3, float(model.drift_b), float(path.sigma))


# ---------------------------------------------------------------------------
# jump decompositions of the hinge differences
# ---------------------------------------------------------------------------


def _ind(c):
    return 1.0 if c else 0.0


def j_star(x_s: float, x_sm: float, a_i: float, a_i1: float) -> float:
    """Seven-term expansion of J1(a_i1) - J1(a_i), J1(a) = (x_sm-a)^+ - (x_s-a)^+."""
    if not a_i < a_i1:
        raise ValueError("need a_i < a_i1")
    w = a_i1 - a_i
    s_low = x_s <= a_i
    s_mid = a_i < x_s <= a_i1
    s_high = x_s > a_i1
    m_low = x_sm <= a_i
    m_mid = a_i < x_sm <= a_i1
    m_high = x_sm > a_i1
    return (-(x_sm - a_i) * _ind(s_low and m_mid)
            - w * _ind(s_low and m_high)
            + (x_s - a_i) * _ind(s_mid and m_low)
            - (a_i1 - x_s) * _ind(s_mid and m_high)
            + w * _ind(s_high and m_low)
            + (a_i1 - x_sm) * _ind(s_high and m_mid)
            + (x_s - x_sm) * _ind(s_mid and m_mid))


def j_star2(x_s: float, x_sm: float, a_i: float, a_i1: float) -> float:
    """Six-term expansion of [J1 + J2](a_i1) - [J1 + J2](a_i), J2(a) = 1{x_sm>a}(x_s-x_sm)."""
    if not a_i < a_i1:
        raise ValueError("need a_i < a_i1")
    w = a_i1 - a_i
    s_low = x_s <= a_i
    s_mid = a_i < x_s <= a_i1
    s_high = x_s > a_i1
    m_low = x_sm <= a_i
    m_mid = a_i < x_sm <= a_i1
    m_high = x_sm > a_i1
    return (-(x_s - a_i) * _ind(s_low and m_mid)
            - w * _ind(s_low and m_high)
            + (x_s - a_i) * _ind(s_mid and m_low)
            - (a_i1 - x_s) * _ind(s_mid and m_high)
            + w * _ind(s_high and m_low)
            + (a_i1 - x_s) * _ind(s_high and m_mid))


def hinge_jump_difference(x_s, x_sm, a_i, a_i1, with_drift_term=False):
    """Direct evaluation of J1(a_i1) - J1(a_i) (plus the J2 difference if asked)."""
    def J1(a):
        return max(x_sm - a, 0.0) - max(x_s - a, 0.0)

    out = J1(a_i1) - J1(a_i)
    if with_drift_term:
        dx = x_s - x_sm
        out += _ind(x_sm > a_i1) * dx - _ind(x_sm > a_i) * dx
    return out
