"""Jump-adapted discrete sample paths of a Lévy process."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .levy_model import LevyModel, effective_drift, sample_jumps


@dataclass(frozen=True)
class SamplePath:
    """Càdlàg path sampled on a grid that contains every jump time.

    ``values[i]`` is the post-jump value at ``times[i]``; ``jump_sizes[i]`` is
    the jump at that time (0 off the jump set).
    """

    times: np.ndarray
    values: np.ndarray
    jump_sizes: np.ndarray
    sigma: float
    b_eff: float
    seed: int
    path_id: int = 0
    model_hash: str = ""

    @property
    def jumps(self) -> list[tuple[int, float]]:
        idx = np.flatnonzero(self.jump_sizes)
        return [(int(i), float(self.jump_sizes[i])) for i in idx]

    @property
    def X0(self) -> float:
        return float(self.values[0])

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def left_limits(self) -> np.ndarray:
        return self.values - self.jump_sizes

    @property
    def continuous_increments(self) -> np.ndarray:
        """sigma*dB + b_eff*dt over each grid step (length n-1)."""
        return self.left_limits[1:] - self.values[:-1]

    def truncate(self, t: float) -> "SamplePath":
        k = int(np.searchsorted(self.times, t, side="right"))
        return SamplePath(self.times[:k], self.values[:k], self.jump_sizes[:k],
                          self.sigma, self.b_eff, self.seed, self.path_id, self.model_hash)


def _gaussian_stream(seed: int, path_id: int) -> np.random.Generator:
    # Philox is counter based: the draws for (seed, path_id) are the
    # counter sequence 0, 1, 2, ... under a fixed key, independent of
    # every other path.
    key = (int(seed) & (2**64 - 1)) << 64 | (int(path_id) & (2**64 - 1))
    return np.random.Generator(np.random.Philox(key=key))


def simulate(model: LevyModel, X0: float, T: float, dt: float, eps: float, seed: int,
             path_id: int = 0, jumps: Optional[Sequence[tuple[float, float]]] = None) -> SamplePath:
    """Simulate X on the union of a uniform dt-mesh and the jump times.

    ``jumps`` overrides the sampled jump list (used to condition on a
    prescribed jump configuration).
    """
    if not dt > 0 or not T > 0:
        raise ValueError("dt and T must be positive")
    if jumps is None:
        jumps = sample_jumps(model, T, eps, seed=(seed, path_id))
    jt = np.array([t for t, _ in jumps], dtype=float)
    js = np.array([s for _, s in jumps], dtype=float)
    if jt.size and (jt.min() <= 0 or jt.max() > T):
        raise ValueError("jump times must lie in (0, T]")

    n = int(np.ceil(T / dt - 1e-9))
    mesh = np.minimum(np.arange(n + 1) * dt, T)
    mesh[-1] = T
    times = np.union1d(mesh, jt)
    jump_sizes = np.zeros_like(times)
    if jt.size:
        np.add.at(jump_sizes, np.searchsorted(times, jt), js)

    b_eff = effective_drift(model, eps)
    dts = np.diff(times)
    z = _gaussian_stream(seed, path_id).standard_normal(dts.size)
    cont = b_eff * dts + model.sigma * np.sqrt(dts) * z
    values = np.empty_like(times)
    values[0] = X0
    values[1:] = X0 + np.cumsum(cont + jump_sizes[1:])
    return SamplePath(times, values, jump_sizes, float(model.sigma), float(b_eff),
                      int(seed), int(path_id), model.model_hash())


def left_limit(path: SamplePath, index: int) -> float:
    """X_{s-} at grid index ``index``."""
    return float(path.values[index] - path.jump_sizes[index])


def continuous_qv(path: SamplePath, t: float) -> float:
    """[X, X]^c_t = sigma^2 t."""
    if not 0 <= t <= path.T:
        raise ValueError("t outside [0, T]")
    return path.sigma ** 2 * t


# ---------------------------------------------------------------------------
# CSV cache
# ---------------------------------------------------------------------------


def path_to_csv(path: SamplePath) -> str:
    buf = io.StringIO()
    buf.write(f"# model_hash={path.model_hash}\n")
    buf.write(f"# seed={path.seed}\n# path_id={path.path_id}\n")
    buf.write(f"# sigma={path.sigma!r}\n# b_eff={path.b_eff!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "value", "jump_size"])
    for t, v, j in zip(path.times, path.values, path.jump_sizes):
        w.writerow([repr(float(t)), repr(float(v)), repr(float(j))])
    return buf.getvalue()


def write_path_csv(path: SamplePath, filename) -> None:
    Path(filename).write_text(path_to_csv(path))


def read_path_csv(filename) -> SamplePath:
    meta = {}
    rows = []
    with open(filename) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            elif line.startswith("time"):
                continue
            elif line.strip():
                rows.append([float(x) for x in line.split(",")])
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return SamplePath(arr[:, 0], arr[:, 1], arr[:, 2], float(meta.get("sigma", "nan")),
                      float(meta.get("b_eff", "nan")), int(meta.get("seed", 0)),
                      int(meta.get("path_id", 0)), meta.get("model_hash", ""))
