"""INI experiment configuration with per-field diagnostics.

Sections: [model], [simulation], [analysis], [integrand], [output]. Keys are
flat ``key = value`` pairs; only ``simulation.seed`` has no default.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .levy_model import SIZE_LAWS, CompoundPoisson, LevyModel, NoJumps, PowerSmall, SizeLaw
from .presets import F_PRESETS, G_PRESETS
from .qvar_control import DEFAULT_HAT_Q


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSection:
    sigma: float = 1.0
    b: float = 0.0
    jumps: str = "none"
    rate: float = 1.0
    size_law: str = "rademacher"
    size_params: tuple = (0.5,)
    alpha: float = 0.8
    c_plus: float = 1.0
    c_minus: float = 1.0


@dataclass(frozen=True)
class SimulationSection:
    seed: int
    T: float = 1.0
    dt: float = 1e-4
    eps: float = 0.01
    n_paths: int = 10
    X0: float = 0.0


@dataclass(frozen=True)
class AnalysisSection:
    p: float = 2.5
    q: float = 1.0
    theta: Optional[float] = None
    hat_q: float = DEFAULT_HAT_Q
    m_max: int = 8
    depth: int = 10
    grid_points: int = 1023
    estimator: str = "binning"
    route: str = "auto"
    a: Optional[float] = None
    b: Optional[float] = None
    test_function: str = "square"
    level: float = 0.0


@dataclass(frozen=True)
class IntegrandSection:
    preset: str = "polynomial"
    coeffs: tuple = (0.0, 1.0)
    value: float = 1.0
    beta: float = 0.6
    center: float = 0.0
    steps: tuple = ()
    hurst: float = 2.0 / 3.0
    terms: int = 12
    n: int = 4097
    csv: Optional[str] = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSection
    simulation: SimulationSection
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    integrand: IntegrandSection = field(default_factory=IntegrandSection)
    output_dir: str = "out"
    source: str = ""

    def levy_model(self) -> LevyModel:
        m = self.model
        if m.jumps == "none":
            spec = NoJumps()
        elif m.jumps == "compound_poisson":
            spec = CompoundPoisson(m.rate, SizeLaw(m.size_law, tuple(m.size_params)))
        else:
            spec = PowerSmall(m.alpha, m.c_plus, m.c_minus)
        return LevyModel(m.sigma, m.b, spec)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("source")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Inverse of ``to_dict`` (used to rebuild a run from its manifest)."""
        tup = lambda v: tuple(tuple(x) if isinstance(x, list) else x for x in v)
        model = {**d["model"], "size_params": tuple(d["model"]["size_params"])}
        ig = {**d["integrand"], "coeffs": tuple(d["integrand"]["coeffs"]),
              "steps": tup(d["integrand"]["steps"])}
        return cls(ModelSection(**model), SimulationSection(**d["simulation"]),
                   AnalysisSection(**d["analysis"]), IntegrandSection(**ig), d["output_dir"])

    def config_hash(self) -> str:
        """Digest of the experiment settings; the output location is not part of it."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        sim = SimulationSection(**{**asdict(self.simulation), "seed": int(seed)})
        return ExperimentConfig(self.model, sim, self.analysis, self.integrand, self.output_dir, self.source)

    def with_output(self, out: str) -> "ExperimentConfig":
        return ExperimentConfig(self.model, self.simulation, self.analysis, self.integrand, out, self.source)


def _line_numbers(text: str) -> dict:
    """(section, key) -> 1-based line number, for diagnostics."""
    where, section = {}, None
    for k, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = k
        elif section and "=" in s and not s.startswith(("#", ";")):
            where[(section, s.split("=", 1)[0].strip())] = k
    return where


class _Reader:
    def __init__(self, parser, lines, name):
        self.p, self.lines, self.name = parser, lines, name

    def fail(self, section, key, msg):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        loc = f"{self.name}:{line}" if line else self.name
        raise ConfigError(f"{loc}: [{section}] {key}: {msg}")

    def get(self, section, key, conv, default=None, required=False):
        if not self.p.has_option(section, key):
            if required:
                self.fail(section, key, "missing required field")
            return default
        raw = self.p.get(section, key).strip()
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            self.fail(section, key, f"cannot parse {raw!r} ({exc})")


def _floats(raw: str) -> tuple:
    return tuple(float(s) for s in raw.replace(",", " ").split())


def _steps(raw: str) -> tuple:
    out = []
    for item in raw.replace(";", ",").split(","):
        if item.strip():
            x, s = item.split(":")
            out.append((float(x), float(s)))
    return tuple(out)


def _opt_float(raw: str):
    return None if raw.lower() in ("", "none", "auto") else float(raw)


def _int(raw: str) -> int:
    v = float(raw)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


_KNOWN = {
    "model": {"sigma", "b", "jumps", "rate", "size_law", "size_params", "alpha", "c_plus", "c_minus"},
    "simulation": {"seed", "t", "dt", "eps", "n_paths", "x0"},
    "analysis": {"p", "q", "theta", "hat_q", "m_max", "depth", "grid_points", "estimator", "route",
                 "a", "b", "test_function", "level"},
    "integrand": {"preset", "coeffs", "value", "beta", "center", "steps", "hurst", "terms", "n", "csv"},
    "output": {"dir"},
}


def parse_config(text: str, name: str = "<config>", base_dir: Optional[Path] = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=name)
    except configparser.Error as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    lines = _line_numbers(text)
    r = _Reader(parser, lines, name)
    for section in parser.sections():
        if section not in _KNOWN:
            r.fail(section, None, f"unknown section; expected one of {sorted(_KNOWN)}")
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                r.fail(section, key, "unknown field")
    if not parser.has_section("simulation"):
        raise ConfigError(f"{name}: [simulation] section with a seed is required")

    d = ModelSection()
    model = ModelSection(
        sigma=r.get("model", "sigma", float, d.sigma),
        b=r.get("model", "b", float, d.b),
        jumps=r.get("model", "jumps", str, d.jumps),
        rate=r.get("model", "rate", float, d.rate),
        size_law=r.get("model", "size_law", str, d.size_law),
        size_params=r.get("model", "size_params", _floats, d.size_params),
        alpha=r.get("model", "alpha", float, d.alpha),
        c_plus=r.get("model", "c_plus", float, d.c_plus),
        c_minus=r.get("model", "c_minus", float, d.c_minus),
    )
    if model.jumps not in ("none", "compound_poisson", "power_small"):
        r.fail("model", "jumps", "expected none, compound_poisson or power_small")
    if model.jumps == "compound_poisson":
        if model.size_law not in SIZE_LAWS:
            r.fail("model", "size_law", f"expected one of {SIZE_LAWS}")
        if not model.rate > 0:
            r.fail("model", "rate", "must be positive")
    if not model.sigma >= 0:
        r.fail("model", "sigma", "must be >= 0")
    if model.jumps == "power_small" and not 0 < model.alpha < 2:
        r.fail("model", "alpha", "must lie in (0, 2)")

    ds = SimulationSection(seed=0)
    sim = SimulationSection(
        seed=r.get("simulation", "seed", _int, required=True),
        T=r.get("simulation", "t", float, ds.T),
        dt=r.get("simulation", "dt", float, ds.dt),
        eps=r.get("simulation", "eps", float, ds.eps),
        n_paths=r.get("simulation", "n_paths", _int, ds.n_paths),
        X0=r.get("simulation", "x0", float, ds.X0),
    )
    for key, val in (("t", sim.T), ("dt", sim.dt)):
        if not val > 0:
            r.fail("simulation", key, "must be positive")
    if sim.n_paths < 1:
        r.fail("simulation", "n_paths", "must be >= 1")
    if not 0 <= sim.eps < 1:
        r.fail("simulation", "eps", "must lie in [0, 1)")

    da = AnalysisSection()
    an = AnalysisSection(
        p=r.get("analysis", "p", float, da.p),
        q=r.get("analysis", "q", float, da.q),
        theta=r.get("analysis", "theta", _opt_float, da.theta),
        hat_q=r.get("analysis", "hat_q", float, da.hat_q),
        m_max=r.get("analysis", "m_max", _int, da.m_max),
        depth=r.get("analysis", "depth", _int, da.depth),
        grid_points=r.get("analysis", "grid_points", _int, da.grid_points),
        estimator=r.get("analysis", "estimator", str, da.estimator),
        route=r.get("analysis", "route", str, da.route),
        a=r.get("analysis", "a", _opt_float, da.a),
        b=r.get("analysis", "b", _opt_float, da.b),
        test_function=r.get("analysis", "test_function", str, da.test_function),
        level=r.get("analysis", "level", float, da.level),
    )
    if an.estimator not in ("binning", "tanaka"):
        r.fail("analysis", "estimator", "expected binning or tanaka")
    if an.route not in ("auto", "young", "rough"):
        r.fail("analysis", "route", "expected auto, young or rough")
    if an.test_function not in F_PRESETS:
        r.fail("analysis", "test_function", f"expected one of {F_PRESETS}")
    if an.grid_points < 8:
        r.fail("analysis", "grid_points", "need at least 8 points")
    if an.depth < an.m_max + 1:
        r.fail("analysis", "depth", "must be at least m_max + 1")
    if an.theta is not None and an.route in ("rough", "auto") and not an.q < an.theta < 3:
        r.fail("analysis", "theta", f"must lie strictly between q={an.q} and 3")

    di = IntegrandSection()
    ig = IntegrandSection(
        preset=r.get("integrand", "preset", str, di.preset),
        coeffs=r.get("integrand", "coeffs", _floats, di.coeffs),
        value=r.get("integrand", "value", float, di.value),
        beta=r.get("integrand", "beta", float, di.beta),
        center=r.get("integrand", "center", float, di.center),
        steps=r.get("integrand", "steps", _steps, di.steps),
        hurst=r.get("integrand", "hurst", float, di.hurst),
        terms=r.get("integrand", "terms", _int, di.terms),
        n=r.get("integrand", "n", _int, di.n),
        csv=r.get("integrand", "csv", str, di.csv),
    )
    if ig.preset not in G_PRESETS:
        r.fail("integrand", "preset", f"expected one of {G_PRESETS}")
    if ig.preset == "csv":
        if not ig.csv:
            r.fail("integrand", "csv", "required for preset csv")
        path = Path(ig.csv)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            r.fail("integrand", "csv", f"file not found: {path}")
        ig = IntegrandSection(**{**asdict(ig), "csv": str(path)})

    out = r.get("output", "dir", str, "out")
    return ExperimentConfig(model, sim, an, ig, out, name)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config(text, str(path), path.parent)
