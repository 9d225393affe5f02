"""Uniform node-centered grids, sampled fields, and mollified initial data.

Fields carry nonnegative samples on a box grid whose outermost node layer
(the collar) stays identically zero, so every field extends by zero to the
whole space. Initial measures (atoms plus an optional bounded density) are
turned into grid data by mollification with a compactly supported bump.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.ndimage import convolve as nd_convolve

from .errors import ResolutionError, SupportError
from .exact import BarenblattSpec, bracket_coefficient, support_radius

__all__ = [
    "Field",
    "Grid",
    "InitialTrace",
    "Trajectory",
    "discrete_mass",
    "make_grid",
    "mollify_trace",
    "read_field_csv",
    "sample_exact",
    "write_field_csv",
    "write_trajectory_csv",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid on a box; nodes at lo + i*h inclusive of both faces."""

    n: int
    h: float
    lo: np.ndarray
    hi: np.ndarray
    shape: tuple

    def axis(self, i: int) -> np.ndarray:
        return self.lo[i] + self.h * np.arange(self.shape[i])

    def node_coordinates(self):
        """Coordinate arrays broadcastable to `shape` (open meshgrid)."""
        axes = [self.axis(i) for i in range(self.n)]
        if self.n == 1:
            return (axes[0],)
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    def radius_from(self, x0: np.ndarray) -> np.ndarray:
        """Distance of every node from the point x0, shaped like the grid."""
        if self.n == 1:
            return np.abs(self.axis(0) - x0[0])
        X, Y = self.node_coordinates()
        return np.sqrt((X - x0[0]) ** 2 + (Y - x0[1]) ** 2)


def make_grid(lo, hi, h: float) -> Grid:
    """Build a grid; box edges must be integer multiples of h, >= 8 cells/axis."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.size != hi.size or lo.size not in (1, 2):
        raise ValueError(f"box corners must have 1 or 2 coordinates, got {lo.size}/{hi.size}")
    if not h > 0.0:
        raise ValueError(f"spacing h = {h} must be positive")
    n = lo.size
    shape = []
    for i in range(n):
        span = hi[i] - lo[i]
        if span <= 0.0:
            raise ValueError(f"axis {i}: hi must exceed lo")
        cells = span / h
        if abs(cells - round(cells)) > 1e-9 * max(1.0, cells):
            raise ValueError(f"axis {i}: span {span} is not an integer multiple of h = {h}")
        cells = int(round(cells))
        if cells < 8:
            raise ValueError(f"axis {i}: {cells} cells < 8")
        shape.append(cells + 1)
    return Grid(n=n, h=float(h), lo=lo, hi=hi, shape=tuple(shape))


def _collar_mask(shape):
    mask = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[ax] = 0
        mask[tuple(sl)] = True
        sl[ax] = -1
        mask[tuple(sl)] = True
    return mask


@dataclass(eq=False)
class Field:
    """Nonnegative samples on a grid at one time; zero on the boundary collar."""

    grid: Grid
    values: np.ndarray
    time: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        vmin = self.values.min() if self.values.size else 0.0
        if vmin < 0.0:
            raise ValueError(f"negative sample {vmin} in field")
        collar = _collar_mask(self.grid.shape)
        if np.any(self.values[collar] != 0.0):
            raise SupportError("field does not vanish on the boundary collar")

    def sup(self) -> float:
        return float(self.values.max())


@dataclass(eq=False)
class Trajectory:
    """Snapshots on a shared grid at strictly increasing times."""

    fields: list = field(default_factory=list)

    def append(self, f: Field):
        if self.fields:
            if f.grid is not self.fields[0].grid and (
                f.grid.shape != self.fields[0].grid.shape
                or f.grid.h != self.fields[0].grid.h
                or np.any(f.grid.lo != self.fields[0].grid.lo)
            ):
                raise ValueError("snapshot grid differs from the trajectory grid")
            if f.time <= self.fields[-1].time:
                raise ValueError(
                    f"snapshot time {f.time} not above previous {self.fields[-1].time}"
                )
        self.fields.append(f)

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.fields])

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)


@dataclass(eq=False)
class InitialTrace:
    """Initial measure: point atoms plus an optional bounded density.

    atoms: sequence of (position, mass) pairs. density: nonnegative function
    of the coordinates with support inside density_box; density_mass is its
    nominal integral (the discrete normalization is exact regardless).
    """

    atoms: Sequence = ()
    density: Optional[Callable] = None
    density_box: Optional[tuple] = None
    density_mass: float = 0.0

    def __post_init__(self):
        self.atoms = [(np.atleast_1d(np.asarray(x, dtype=float)), float(m)) for x, m in self.atoms]
        for _, m in self.atoms:
            if m <= 0.0:
                raise ValueError(f"atom mass {m} must be positive")
        if self.density is not None and self.density_box is None:
            raise ValueError("density requires density_box support bounds")
        if self.total_mass <= 0.0:
            raise ValueError("trace carries no mass")

    @property
    def total_mass(self) -> float:
        return sum(m for _, m in self.atoms) + (self.density_mass if self.density else 0.0)

    def support_bounds(self, n: int):
        """Bounding box (lo, hi) of the measure support."""
        pts_lo, pts_hi = [], []
        for x, _ in self.atoms:
            pts_lo.append(x)
            pts_hi.append(x)
        if self.density is not None:
            blo, bhi = self.density_box
            pts_lo.append(np.atleast_1d(np.asarray(blo, dtype=float)))
            pts_hi.append(np.atleast_1d(np.asarray(bhi, dtype=float)))
        lo = np.min(np.stack(pts_lo), axis=0)
        hi = np.max(np.stack(pts_hi), axis=0)
        if lo.size != n:
            raise ValueError(f"trace coordinates have size {lo.size}, expected {n}")
        return lo, hi


def _bump(r2):
    """exp(-1/(1-r2)) for r2 < 1, zero beyond; r2 is |x/delta|^2."""
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def mollify_trace(trace: InitialTrace, grid: Grid, delta: float) -> Field:
    """Sample the mollified measure on the grid and renormalize exactly.

    The kernel is the standard bump exp(-1/(1 - |x/delta|^2)) scaled to unit
    mass; after sampling, the discrete mass h^n * sum is rescaled to the
    trace's total mass so conservation checks start from an exact reference.
    """
    h = grid.h
    if delta < 2.0 * h:
        raise ResolutionError(f"delta = {delta} under-resolved: needs delta >= 2h = {2*h}")
    lo_s, hi_s = trace.support_bounds(grid.n)
    # inflated support must stay inside the grid with the collar untouched
    if np.any(lo_s - delta < grid.lo + h - 1e-12) or np.any(hi_s + delta > grid.hi - h + 1e-12):
        raise SupportError(
            f"support inflated by delta = {delta} leaves the grid interior "
            f"[{grid.lo + h}, {grid.hi - h}]"
        )
    values = np.zeros(grid.shape)
    # continuum normalization of the bump (discrete renormalization follows anyway)
    for pos, m in trace.atoms:
        r = grid.radius_from(pos)
        values += m * _bump((r / delta) ** 2)
    if trace.density is not None:
        coords = grid.node_coordinates()
        dens = np.asarray(trace.density(*coords), dtype=float)
        dens = np.broadcast_to(dens, grid.shape).copy()
        if dens.min() < 0.0:
            raise ValueError("density takes negative values")
        # kernel stencil on lattice offsets, discrete unit mass
        reach = int(math.floor(delta / h))
        offs = h * np.arange(-reach, reach + 1)
        if grid.n == 1:
            ker = _bump((offs / delta) ** 2)
        else:
            ox, oy = np.meshgrid(offs, offs, indexing="ij")
            ker = _bump((ox**2 + oy**2) / delta**2)
        ker /= ker.sum()
        values += nd_convolve(dens, ker, mode="constant", cval=0.0)
    total = values.sum() * h**grid.n
    if total <= 0.0:
        raise ValueError("mollified trace vanished on the grid")
    values *= trace.total_mass / total
    return Field(grid=grid, values=values, time=0.0)


def discrete_mass(f: Field) -> float:
    """h^n times the sum of the samples (exact for collar-supported fields)."""
    return float(f.values.sum()) * f.grid.h**f.grid.n


def sample_exact(spec: BarenblattSpec, grid: Grid, t: float) -> Field:
    """Sample the closed form at time t; the support must fit the interior."""
    r_t = support_radius(spec, t)
    if np.any(spec.center - r_t < grid.lo + grid.h - 1e-12) or np.any(
        spec.center + r_t > grid.hi - grid.h + 1e-12
    ):
        raise SupportError(
            f"support radius {r_t} at t = {t} does not fit the grid interior"
        )
    r = grid.radius_from(spec.center)
    e = spec.exps
    k = bracket_coefficient(e)
    b = e.p / (e.p - 1.0)
    m = (e.p - 1.0) / (e.p - 2.0)
    bracket = spec.C - k * (r * t ** (-1.0 / e.lam)) ** b
    values = t ** (-e.alpha) * np.where(bracket > 0.0, bracket, 0.0) ** m
    return Field(grid=grid, values=values, time=t)


def write_field_csv(f: Field, path):
    """Snapshot format: '# t=<t> h=<h> n=<n>' then x[,y],u rows."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# t={f.time!r} h={f.grid.h!r} n={f.grid.n}\n")
        w = csv.writer(fh)
        if f.grid.n == 1:
            w.writerow(["x", "u"])
            for x, u in zip(f.grid.axis(0), f.values):
                w.writerow([repr(float(x)), repr(float(u))])
        else:
            w.writerow(["x", "y", "u"])
            xs = f.grid.axis(0)
            ys = f.grid.axis(1)
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(f.values[i, j]))])


def read_field_csv(path) -> Field:
    """Inverse of write_field_csv (grid is reconstructed from the coordinates)."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header.startswith("# t="):
            raise ValueError(f"{path}: missing snapshot header")
        meta = dict(tok.split("=") for tok in header[2:].split())
        t = float(meta["t"])
        h = float(meta["h"])
        n = int(meta["n"])
        rows = list(csv.reader(fh))
    rows = rows[1:]  # column header
    if n == 1:
        xs = np.array([float(r[0]) for r in rows])
        us = np.array([float(r[1]) for r in rows])
        grid = make_grid([xs[0]], [xs[-1]], h)
        return Field(grid=grid, values=us, time=t)
    xs = np.array([float(r[0]) for r in rows])
    ys = np.array([float(r[1]) for r in rows])
    us = np.array([float(r[2]) for r in rows])
    ux = np.unique(xs)
    uy = np.unique(ys)
    grid = make_grid([ux[0], uy[0]], [ux[-1], uy[-1]], h)
    return Field(grid=grid, values=us.reshape(grid.shape), time=t)


def write_trajectory_csv(traj: Trajectory, outdir, basename: str):
    """One snapshot file per time plus an index CSV; returns written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    index = outdir / f"{basename}_index.csv"
    with index.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "t", "file"])
        for k, f in enumerate(traj):
            name = f"{basename}_{k:04d}.csv"
            write_field_csv(f, outdir / name)
            w.writerow([k, repr(float(f.time)), name])
            paths.append(outdir / name)
    return index, paths
