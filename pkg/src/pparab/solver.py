"""Explicit conservative scheme for u_t = div(|grad u|^{p-2} grad u).

Two-point flux on faces, forward Euler in time. The face flux telescopes, so
the discrete mass is conserved to rounding as long as the support stays away
from the zero collar; under the monotone time-step bound the update is a
convex combination of neighbor values, which is what the comparison and
sup-norm properties in the test suite lean on.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CFLError, PropertyError, StepBudgetError, SupportError
from .grid import Field, Grid, InitialTrace, Trajectory, mollify_trace
from .params import Exponents

__all__ = [
    "SolverConfig",
    "flux_diffusivity",
    "monotone_dt",
    "solve",
    "stable_dt",
    "step",
]


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters for the explicit scheme.

    eps_reg regularizes the diffusivity as (|g|^2 + eps_reg^2)^{(p-2)/2};
    the default 0 keeps the scheme honestly degenerate. cfl_safety is the
    fraction of the stability bound used for the adaptive step. `fault` is a
    self-test hook ("none" or "flux_sign") that deliberately corrupts the
    flux so that the property battery can prove it would notice.
    """

    exps: Exponents
    T: float
    output_times: tuple
    eps_reg: float = 0.0
    cfl_safety: float = 0.9
    max_steps: int = 20_000_000
    fault: str = "none"

    def __post_init__(self):
        if not self.T > 0.0:
            raise ValueError(f"T = {self.T} must be positive")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety = {self.cfl_safety} must lie in (0, 1]")
        if self.eps_reg < 0.0:
            raise ValueError(f"eps_reg = {self.eps_reg} must be >= 0")
        if self.fault not in ("none", "flux_sign"):
            raise ValueError(f"unknown fault mode {self.fault!r}")
        times = tuple(sorted(float(t) for t in self.output_times))
        if any(t <= 0.0 or t > self.T + 1e-12 for t in times):
            raise ValueError("output times must lie in (0, T]")
        object.__setattr__(self, "output_times", times)


def flux_diffusivity(grad_mag, exps: Exponents, eps_reg: float = 0.0):
    """(|g|^2 + eps_reg^2)^{(p-2)/2} for an array of gradient magnitudes."""
    g2 = np.asarray(grad_mag, dtype=float) ** 2 + eps_reg**2
    ex = 0.5 * (exps.p - 2.0)
    return np.sqrt(g2) if ex == 0.5 else g2**ex


def _diffusivity_sq(g2, exps, eps_reg, fault):
    # g2 is |face gradient|^2; the fault mode flips the sign of the
    # regularization term (clipped at zero), deadening low-gradient regions
    if fault == "flux_sign":
        g2 = np.maximum(g2 - eps_reg**2, 0.0)
    else:
        g2 = g2 + eps_reg**2
    ex = 0.5 * (exps.p - 2.0)
    return np.sqrt(g2) if ex == 0.5 else g2**ex


def _fluxes(u, h, cfg):
    """Per-axis face fluxes a * (forward difference) and the max diffusivity."""
    e = cfg.exps
    if e.n == 1:
        d = u[1:] - u[:-1]
        g2 = (d / h) ** 2
        a = _diffusivity_sq(g2, e, cfg.eps_reg, cfg.fault)
        amax = float(a.max()) if a.size else 0.0
        return (a * d,), amax
    dx = u[1:, :] - u[:-1, :]
    dy = u[:, 1:] - u[:, :-1]
    # tangential component on a face: mean of the four adjacent transverse
    # differences (collar faces keep zero tangential part; their flux vanishes
    # anyway while the collar stays empty)
    tx = np.zeros_like(dx)
    tx[:, 1:-1] = 0.25 * (dy[:-1, :-1] + dy[:-1, 1:] + dy[1:, :-1] + dy[1:, 1:])
    ty = np.zeros_like(dy)
    ty[1:-1, :] = 0.25 * (dx[:-1, :-1] + dx[1:, :-1] + dx[:-1, 1:] + dx[1:, 1:])
    ax = _diffusivity_sq((dx**2 + tx**2) / h**2, e, cfg.eps_reg, cfg.fault)
    ay = _diffusivity_sq((dy**2 + ty**2) / h**2, e, cfg.eps_reg, cfg.fault)
    amax = max(float(ax.max()), float(ay.max()))
    return (ax * dx, ay * dy), amax


def _apply(u, fluxes, dt_over_h2):
    div = np.zeros_like(u)
    if u.ndim == 1:
        F = fluxes[0]
        div[1:-1] = F[1:] - F[:-1]
        div[0] = F[0]
        div[-1] = -F[-1]
    else:
        Fx, Fy = fluxes
        div[1:-1, :] += Fx[1:, :] - Fx[:-1, :]
        div[0, :] += Fx[0, :]
        div[-1, :] -= Fx[-1, :]
        div[:, 1:-1] += Fy[:, 1:] - Fy[:, :-1]
        div[:, 0] += Fy[:, 0]
        div[:, -1] -= Fy[:, -1]
    return u + dt_over_h2 * div


def _postcheck(unew, collar_slices):
    sup = float(unew.max())
    mn = float(unew.min())
    if mn < 0.0:
        if mn < -1e-12 * max(sup, 1.0):
            raise PropertyError(f"scheme produced negative value {mn}")
        np.maximum(unew, 0.0, out=unew)  # clip forward-Euler rounding dust
    for sl in collar_slices:
        if float(unew[sl].max(initial=0.0)) > 0.0:
            raise SupportError("support touched the boundary collar; enlarge the box")
    return unew


def _collar_slices(shape):
    out = []
    for ax in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[ax] = 0
        out.append(tuple(sl))
        sl[ax] = -1
        out.append(tuple(sl))
    return out


def stable_dt(f: Field, cfg: SolverConfig) -> float:
    """cfl_safety * h^2 / (2 n a_max); infinite for a flat field."""
    _, amax = _fluxes(f.values, f.grid.h, cfg)
    if amax == 0.0:
        return float("inf")
    return cfg.cfl_safety * f.grid.h**2 / (2.0 * f.grid.n * amax)


def monotone_dt(f: Field, cfg: SolverConfig) -> float:
    """Step bound with the flux-derivative factor (p-1); ordered data stay ordered."""
    return stable_dt(f, cfg) / (cfg.exps.p - 1.0)


def step(f: Field, dt: float, cfg: SolverConfig) -> Field:
    """One forward-Euler step of length dt; dt must respect the CFL bound."""
    if not dt > 0.0:
        raise ValueError(f"dt = {dt} must be positive")
    fluxes, amax = _fluxes(f.values, f.grid.h, cfg)
    if amax > 0.0:
        bound = cfg.cfl_safety * f.grid.h**2 / (2.0 * f.grid.n * amax)
        if dt > bound * (1.0 + 1e-12):
            raise CFLError(f"dt = {dt} above the stability bound {bound}")
    unew = _apply(f.values, fluxes, dt / f.grid.h**2)
    unew = _postcheck(unew, _collar_slices(f.values.shape))
    return Field(grid=f.grid, values=unew, time=f.time + dt)


def solve(trace: InitialTrace, grid: Grid, delta: float, cfg: SolverConfig) -> Trajectory:
    """March the mollified trace to T, snapshotting at the output times.

    The adaptive step runs at the monotone bound
    cfl_safety * h^2 / (2 n (p-1) a_max), re-evaluated every step, and is
    shortened to land exactly on each output time. The initial field is
    included as the first snapshot (time 0).
    """
    u0 = mollify_trace(trace, grid, delta)
    h = grid.h
    n = grid.n
    pm1 = cfg.exps.p - 1.0
    collar = _collar_slices(u0.values.shape)
    traj = Trajectory()
    traj.append(u0)
    pending = [t for t in cfg.output_times]
    u = u0.values.copy()
    t = 0.0
    steps = 0
    while pending:
        target = pending[0]
        while t < target - 1e-13 * max(1.0, target):
            fluxes, amax = _fluxes(u, h, cfg)
            if amax == 0.0:
                dt = target - t
            else:
                dt = cfg.cfl_safety * h**2 / (2.0 * n * pm1 * amax)
                dt = min(dt, target - t)
            u = _postcheck(_apply(u, fluxes, dt / h**2), collar)
            t += dt
            steps += 1
            if steps > cfg.max_steps:
                raise StepBudgetError(
                    f"exceeded {cfg.max_steps} steps at t = {t:.6g} (of T = {cfg.T})"
                )
        t = target  # land exactly
        traj.append(Field(grid=grid, values=u.copy(), time=t))
        pending.pop(0)
    return traj
