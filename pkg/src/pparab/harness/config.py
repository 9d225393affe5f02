"""Experiment configuration: INI sections plus --set overrides.

Every reader validates against the admissible parameter ranges and reports
the violated constraint by its formula, so a bad config dies with exit
code 2 before any numerics start.
"""

import configparser
import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError
from ..grid import Grid, InitialTrace, make_grid
from ..params import Exponents, derive_exponents
from ..solver import SolverConfig

_DEFAULTS = {
    "problem": {"p": "3.0", "n": "1", "mass": "1.0"},
    "grid": {"lo": "-3.0", "hi": "3.0", "h": "0.015625"},
    "trace": {"atoms": "0.0:1.0", "density": "none", "delta": "0.05"},
    "solver": {
        "T": "1.0",
        "output_times": "log:0.01:1.0:16",
        "eps_reg": "0.0",
        "cfl_safety": "0.9",
        "max_steps": "20000000",
        "fault": "none",
    },
    "barenblatt": {"times": "0.25, 1.0, 4.0", "points": "100", "write_profiles": "true"},
    "stability": {
        "p_list": "3.4, 3.2, 3.1, 3.05",
        "q": "2.0",
        "window_t0": "0.01",
        "window_t1": "1.0",
        "window_lo": "-3.0",
        "window_hi": "3.0",
        "source": "both",
    },
    "propagation": {"source": "solver", "x0": "4.5", "fit_t_min": "0.0"},
    "smoothing": {"source": "solver"},
    "decay": {
        "source": "exact",
        "j0": "0.3",
        "levels": "6",
        "window_t0": "1e-7",
        "window_t1": "8.0",
        "window_lo": "-5.0",
        "window_hi": "5.0",
    },
    "selftest": {"iterations": "100000"},
}


def _parse_floats(text: str):
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def parse_times(text: str):
    """Comma list, or log:a:b:k / lin:a:b:k ladders (endpoints included)."""
    text = text.strip()
    if text.startswith("log:") or text.startswith("lin:"):
        kind, a, b, k = text.split(":")
        a, b, k = float(a), float(b), int(k)
        if k < 2:
            raise ConfigError(f"time ladder needs at least 2 points, got {k}")
        pts = np.geomspace(a, b, k) if kind == "log" else np.linspace(a, b, k)
        return tuple(float(t) for t in pts)
    vals = _parse_floats(text)
    if not vals:
        raise ConfigError(f"no output times in {text!r}")
    return tuple(vals)


def _parse_atoms(text: str, n: int):
    """Atoms as `pos:mass` separated by `;`, pos comma-separated for n = 2."""
    atoms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk or chunk == "none":
            continue
        pos_text, _, mass_text = chunk.rpartition(":")
        pos = [float(tok) for tok in pos_text.split(",")]
        if len(pos) != n:
            raise ConfigError(
                f"atom position {pos_text!r} has {len(pos)} coordinates, expected n = {n}"
            )
        atoms.append((tuple(pos), float(mass_text)))
    return atoms


def _parse_density(text: str, n: int):
    """`bump:center:radius:mass` smooth compact density, or `none`."""
    text = text.strip()
    if text in ("", "none"):
        return None, None, 0.0
    kind, rest = text.split(":", 1)
    if kind != "bump":
        raise ConfigError(f"unknown density kind {kind!r} (supported: bump)")
    parts = rest.split(":")
    center = [float(tok) for tok in parts[0].split(",")]
    if len(center) != n:
        raise ConfigError(f"density center must have n = {n} coordinates")
    radius, mass = float(parts[1]), float(parts[2])
    if radius <= 0 or mass <= 0:
        raise ConfigError("density radius and mass must be positive")

    def unnorm(*coords):
        if n == 1:
            r2 = (coords[0] - center[0]) ** 2 / radius**2
        else:
            r2 = ((coords[0] - center[0]) ** 2 + (coords[1] - center[1]) ** 2) / radius**2
        out = np.zeros(np.broadcast(*coords).shape if n > 1 else np.shape(coords[0]))
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    box = (
        tuple(c - radius for c in center),
        tuple(c + radius for c in center),
    )
    return unnorm, box, mass


@dataclass
class ExperimentConfig:
    """Everything a command needs, already validated."""

    raw: configparser.ConfigParser
    exps: Exponents
    mass: float
    grid: Grid
    trace: InitialTrace
    delta: float
    solver: SolverConfig

    def get(self, section: str, key: str) -> str:
        return self.raw.get(section, key)

    def getfloat(self, section: str, key: str) -> float:
        return self.raw.getfloat(section, key)

    def getint(self, section: str, key: str) -> int:
        return self.raw.getint(section, key)

    def getbool(self, section: str, key: str) -> bool:
        return self.raw.getboolean(section, key)


def _apply_overrides(parser: configparser.ConfigParser, overrides):
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override {item!r} is not section.key=value")
        section, option = key.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), option.strip(), value.strip())


def load_config(path: Optional[str], overrides=None) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.read_dict(_DEFAULTS)
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file {path!r} not found")
    _apply_overrides(parser, overrides)

    try:
        p = parser.getfloat("problem", "p")
        n = parser.getint("problem", "n")
        mass = parser.getfloat("problem", "mass")
    except ValueError as exc:
        raise ConfigError(f"bad [problem] value: {exc}") from None
    if not p > 2.0:
        raise ConfigError(f"p = {p} violates the degeneracy range p > 2")
    if n not in (1, 2):
        raise ConfigError(f"n = {n} not in {{1, 2}}")
    if not mass > 0.0:
        raise ConfigError(f"mass = {mass} must be positive")
    exps = derive_exponents(p, n)

    lo = _parse_floats(parser.get("grid", "lo"))
    hi = _parse_floats(parser.get("grid", "hi"))
    h = parser.getfloat("grid", "h")
    if len(lo) == 1 and n == 2:
        lo, hi = lo * 2, hi * 2
    if len(lo) != n or len(hi) != n:
        raise ConfigError(f"grid corners must have n = {n} coordinates")
    try:
        grid = make_grid(tuple(lo) if n == 2 else lo[0], tuple(hi) if n == 2 else hi[0], h)
    except ValueError as exc:
        raise ConfigError(f"bad grid: {exc}") from None

    atoms = _parse_atoms(parser.get("trace", "atoms"), n)
    density, box, dmass = _parse_density(parser.get("trace", "density"), n)
    try:
        trace = InitialTrace(
            atoms=atoms, density=density, density_box=box, density_mass=dmass
        )
    except ValueError as exc:
        raise ConfigError(f"bad trace: {exc}") from None
    delta = parser.getfloat("trace", "delta")

    T = parser.getfloat("solver", "T")
    times = parse_times(parser.get("solver", "output_times"))
    fault = parser.get("solver", "fault")
    try:
        solver = SolverConfig(
            exps=exps,
            T=T,
            output_times=tuple(t for t in times),
            eps_reg=parser.getfloat("solver", "eps_reg"),
            cfl_safety=parser.getfloat("solver", "cfl_safety"),
            max_steps=parser.getint("solver", "max_steps"),
            fault=fault,
        )
    except ValueError as exc:
        raise ConfigError(f"bad solver config: {exc}") from None

    return ExperimentConfig(
        raw=parser,
        exps=exps,
        mass=mass,
        grid=grid,
        trace=trace,
        delta=delta,
        solver=solver,
    )


def stability_params(cfg: ExperimentConfig):
    """Validated sweep parameters from the [stability] section."""
    p_list = _parse_floats(cfg.get("stability", "p_list"))
    if not p_list:
        raise ConfigError("empty p_list")
    p = cfg.exps.p
    for pi in p_list:
        if not pi > 2.0:
            raise ConfigError(f"p_i = {pi} violates the degeneracy range p > 2")
    gaps = [abs(pi - p) for pi in p_list]
    if any(a < b - 1e-12 for a, b in zip(gaps[:-1], gaps[1:])):
        raise ConfigError("p_list must be sorted by |p_i - p| descending")
    q = cfg.getfloat("stability", "q")
    bound = min(derive_exponents(pi, cfg.exps.n).q_grad_max for pi in p_list + [p])
    if not 0.0 < q < bound:
        raise ConfigError(f"q = {q} exceeds p - 1 + 1/(n+1) = {bound} on the sweep")
    w = window_params(cfg, "stability")
    source = cfg.get("stability", "source")
    if source not in ("solver", "closed_form", "both"):
        raise ConfigError(f"unknown stability source {source!r}")
    return p_list, q, w, source


def window_params(cfg: ExperimentConfig, section: str):
    from ..analysis import Window

    t0 = cfg.getfloat(section, "window_t0")
    t1 = cfg.getfloat(section, "window_t1")
    lo = _parse_floats(cfg.get(section, "window_lo"))
    hi = _parse_floats(cfg.get(section, "window_hi"))
    n = cfg.exps.n
    if len(lo) == 1 and n == 2:
        lo, hi = lo * 2, hi * 2
    try:
        w = Window(lo=tuple(lo), hi=tuple(hi), t0=t0, t1=t1)
    except ValueError as exc:
        raise ConfigError(f"bad window: {exc}") from None
    for i in range(n):
        if w.lo[i] < cfg.grid.lo[i] - 1e-12 or w.hi[i] > cfg.grid.hi[i] + 1e-12:
            raise ConfigError("window leaves the grid box")
    return w


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable digest of every resolved key = value pair."""
    parts = []
    for section in sorted(cfg.raw.sections()):
        for key in sorted(cfg.raw.options(section)):
            parts.append(f"{section}.{key}={cfg.raw.get(section, key)}")
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]
