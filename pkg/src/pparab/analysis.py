"""Norms, energies, level sets, mollifiers, and weak-form diagnostics.

All space-time quantities are built the same way: spatial sums h^n * sum
over the nodes of a window box, then trapezoid in time over the snapshot
times inside the window. Gradients of sampled fields are nodewise central
differences (one-sided at the boundary).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError, SupportError
from .grid import Field, Grid, InitialTrace, Trajectory
from .params import Exponents

__all__ = [
    "BumpFunction",
    "PlateauBump",
    "SpaceTimeBump",
    "TimeMollifier",
    "Window",
    "dead_zone_radius",
    "gradient_field",
    "level_set_measure",
    "lq_integral",
    "lq_spacetime",
    "monotonicity_gap_check",
    "power_diff_bound_check",
    "smoothing_ratio",
    "sobolev_distance",
    "sobolev_ratio",
    "time_mollify",
    "trace_pairing",
    "truncation_energy",
    "weak_form_terms",
    "weak_residual",
]


@dataclass(frozen=True)
class Window:
    """Space-time box: spatial box [lo, hi] times the interval [t0, t1]."""

    lo: tuple
    hi: tuple
    t0: float
    t1: float

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("window corners disagree in dimension")
        if any(a >= b for a, b in zip(lo, hi)) or not self.t0 < self.t1:
            raise ValueError("window must have positive extent in space and time")


def _box_mask(grid: Grid, w: Window) -> np.ndarray:
    if len(w.lo) != grid.n:
        raise ValueError(f"window dimension {len(w.lo)} != grid dimension {grid.n}")
    masks = []
    for i in range(grid.n):
        ax = grid.axis(i)
        masks.append((ax >= w.lo[i] - 1e-12) & (ax <= w.hi[i] + 1e-12))
    if grid.n == 1:
        return masks[0]
    return masks[0][:, None] & masks[1][None, :]


def _window_snapshots(traj: Trajectory, w: Window, min_count: int = 4):
    sel = [f for f in traj if w.t0 - 1e-12 <= f.time <= w.t1 + 1e-12]
    if len(sel) < min_count:
        raise ResolutionError(
            f"{len(sel)} snapshots inside [{w.t0}, {w.t1}]; need at least {min_count}"
        )
    return sel


def _trapezoid(times, vals) -> float:
    times = np.asarray(times, dtype=float)
    vals = np.asarray(vals, dtype=float)
    return float(0.5 * np.sum((times[1:] - times[:-1]) * (vals[1:] + vals[:-1])))


def lq_integral(traj: Trajectory, q: float, w: Window, gradient: bool = False) -> float:
    """Space-time integral of u^q (or |grad u|^q) over the window, no q-th root."""
    if not q > 0.0:
        raise ValueError(f"q = {q} must be positive")
    sel = _window_snapshots(traj, w)
    grid = traj.grid
    mask = _box_mask(grid, w)
    hn = grid.h**grid.n
    if gradient:
        slices = [hn * float(np.sum(_gradient_mag_sq(f)[mask] ** (0.5 * q))) for f in sel]
    else:
        slices = [hn * float(np.sum(f.values[mask] ** q)) for f in sel]
    return _trapezoid([f.time for f in sel], slices)


def lq_spacetime(traj: Trajectory, q: float, w: Window, gradient: bool = False) -> float:
    """L^q norm over the window: (trapezoid-in-time of h^n sum u^q)^{1/q}."""
    return lq_integral(traj, q, w, gradient=gradient) ** (1.0 / q)


def gradient_field(f: Field):
    """Nodewise gradient, one tuple entry per axis (central, one-sided at edges)."""
    g = np.gradient(f.values, f.grid.h)
    if f.grid.n == 1:
        return (g,)
    return tuple(g)


def _gradient_mag_sq(f: Field):
    comps = gradient_field(f)
    out = comps[0] ** 2
    for c in comps[1:]:
        out = out + c**2
    return out


def _check_same_grid(a: Grid, b: Grid):
    if a.n != b.n or a.shape != b.shape or abs(a.h - b.h) > 1e-12 * a.h:
        raise ValueError("incompatible grids")
    if np.any(np.abs(a.lo - b.lo) > 1e-9):
        raise ValueError("incompatible grids (offset boxes)")


def sobolev_distance(a: Trajectory, b: Trajectory, q: float, w: Window) -> float:
    """(||a-b||_q^q + ||grad a - grad b||_q^q)^{1/q} over the window.

    Snapshot times are matched nearest-neighbor with tolerance h^2.
    """
    if not q > 0.0:
        raise ValueError(f"q = {q} must be positive")
    _check_same_grid(a.grid, b.grid)
    grid = a.grid
    tol = grid.h**2
    tb = b.times
    pairs = []
    for fa in a:
        if not (w.t0 - 1e-12 <= fa.time <= w.t1 + 1e-12):
            continue
        i = int(np.argmin(np.abs(tb - fa.time)))
        if abs(tb[i] - fa.time) > tol:
            raise ResolutionError(
                f"no matching snapshot within {tol} of t = {fa.time} in the second trajectory"
            )
        pairs.append((fa, b.fields[i]))
    if len(pairs) < 4:
        raise ResolutionError(f"only {len(pairs)} matched snapshots in the window; need 4")
    mask = _box_mask(grid, w)
    hn = grid.h**grid.n
    times, slices = [], []
    for fa, fb in pairs:
        du = fa.values - fb.values
        ga = gradient_field(fa)
        gb = gradient_field(fb)
        dg2 = (ga[0] - gb[0]) ** 2
        for ca, cb in zip(ga[1:], gb[1:]):
            dg2 = dg2 + (ca - cb) ** 2
        s = np.abs(du[mask]) ** q + dg2[mask] ** (0.5 * q)
        slices.append(hn * float(np.sum(s)))
        times.append(fa.time)
    return _trapezoid(times, slices) ** (1.0 / q)


def truncation_energy(traj: Trajectory, j: float, w: Window, p: float):
    """Energy pair of the truncation min(u, j) over the window.

    Returns (sup-term, gradient-term): the max over snapshots of
    h^n sum min(u,j)^2, and the time integral of h^n sum of
    |grad u|^p over the nodes where u < j (chain rule for min).
    """
    if not j > 0.0:
        raise ValueError(f"truncation level j = {j} must be positive")
    sel = _window_snapshots(traj, w)
    grid = traj.grid
    mask = _box_mask(grid, w)
    hn = grid.h**grid.n
    sup_term = 0.0
    times, gslices = [], []
    for f in sel:
        uj = np.minimum(f.values, j)
        sup_term = max(sup_term, hn * float(np.sum(uj[mask] ** 2)))
        g2 = _gradient_mag_sq(f)
        gmask = mask & (f.values < j)
        gslices.append(hn * float(np.sum(g2[gmask] ** (0.5 * p))))
        times.append(f.time)
    return sup_term, _trapezoid(times, gslices)


def level_set_measure(traj: Trajectory, j: float, w: Window) -> float:
    """Space-time measure of the dyadic slab {j <= u < 2j} inside the window."""
    if not j > 0.0:
        raise ValueError(f"level j = {j} must be positive")
    sel = _window_snapshots(traj, w)
    grid = traj.grid
    mask = _box_mask(grid, w)
    hn = grid.h**grid.n
    times, slices = [], []
    for f in sel:
        u = f.values
        slices.append(hn * float(np.sum(mask & (u >= j) & (u < 2.0 * j))))
        times.append(f.time)
    return _trapezoid(times, slices)


def sobolev_ratio(traj: Trajectory, w: Window, j: float, p: float) -> float:
    """Ratio of the embedding inequality for the truncation min(u, j).

    integral of u_j^{kappa p} over the window, divided by
    (integral of |grad u_j|^p) * (max_t integral of u_j^2)^{p/n}.
    """
    if not j > 0.0:
        raise ValueError(f"truncation level j = {j} must be positive")
    sel = _window_snapshots(traj, w)
    grid = traj.grid
    n = grid.n
    kappa = (n + 2.0) / n
    mask = _box_mask(grid, w)
    hn = grid.h**n
    times, top, gslices = [], [], []
    sup_l2 = 0.0
    for f in sel:
        uj = np.minimum(f.values, j)
        top.append(hn * float(np.sum(uj[mask] ** (kappa * p))))
        sup_l2 = max(sup_l2, hn * float(np.sum(uj[mask] ** 2)))
        g2 = _gradient_mag_sq(f)
        gmask = mask & (f.values < j)
        gslices.append(hn * float(np.sum(g2[gmask] ** (0.5 * p))))
        times.append(f.time)
    denom = _trapezoid(times, gslices) * sup_l2 ** (p / n)
    if denom == 0.0:
        raise ValueError("zero field: embedding ratio undefined")
    return _trapezoid(times, top) / denom


def dead_zone_radius(f: Field, x0) -> float:
    """Largest radius around x0 whose nodes all sit below 1e-12 * max(u).

    Sub-cell distances snap to zero (x0 inside the sampled support). A field
    with no node above the threshold returns the distance from x0 to the
    grid boundary.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    grid = f.grid
    boundary = min(
        min(x0[i] - grid.lo[i], grid.hi[i] - x0[i]) for i in range(grid.n)
    )
    threshold = 1e-12 * f.sup()
    hot = f.values > threshold if threshold > 0.0 else np.zeros(grid.shape, dtype=bool)
    if not hot.any():
        return float(boundary)
    r = grid.radius_from(x0)
    nearest = float(r[hot].min())
    if nearest <= grid.h * math.sqrt(grid.n) * (1.0 + 1e-9):
        return 0.0
    return nearest


def smoothing_ratio(traj: Trajectory, exps: Exponents, mass: float):
    """[(t, sup_x u(t) * t^alpha / mass^sigma)] over the positive snapshot times."""
    if not mass > 0.0:
        raise ValueError(f"mass = {mass} must be positive")
    out = []
    for f in traj:
        if f.time > 0.0:
            out.append((f.time, f.sup() * f.time**exps.alpha / mass**exps.sigma))
    if not out:
        raise ResolutionError("no positive-time snapshots")
    return out


@dataclass(frozen=True)
class TimeMollifier:
    """Exponential time mollifier with width sigma, starting at time eps."""

    sigma: float
    eps: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma = {self.sigma} must be positive")
        if self.eps < 0.0:
            raise ValueError(f"eps = {self.eps} must be >= 0")


def time_mollify(traj: Trajectory, m: TimeMollifier) -> Trajectory:
    """Exponentially weighted past average on the snapshot grid.

    u_s(x,t) = (1/sigma) * integral_eps^t exp((s-t)/sigma) u(x,s) ds,
    accumulated panel by panel with the rule that is exact when u is piecewise
    linear in time. The panel weights are then positive and sum to
    1 - exp(-(t-eps)/sigma) < 1, so the discrete operator never expands the
    data. Requires a snapshot at eps, uniform snapshot spacing, and spacing
    dt_s <= sigma/4.
    """
    times = traj.times
    keep = np.flatnonzero(times >= m.eps - 1e-12)
    if keep.size < 2:
        raise ResolutionError(f"need at least 2 snapshots at or after eps = {m.eps}")
    sel = [traj.fields[i] for i in keep]
    if abs(sel[0].time - m.eps) > 1e-9 * max(1.0, m.eps):
        raise ResolutionError(
            f"first snapshot {sel[0].time} is not at eps = {m.eps}"
        )
    ts = np.array([f.time for f in sel])
    dts = np.diff(ts)
    dt_s = float(dts.mean())
    if np.any(np.abs(dts - dt_s) > 1e-6 * dt_s):
        raise ResolutionError("snapshot spacing is not uniform")
    if dt_s > m.sigma / 4.0 + 1e-15:
        raise ResolutionError(
            f"snapshot spacing {dt_s} too coarse for sigma = {m.sigma} (needs <= sigma/4)"
        )
    sig = m.sigma
    # panel weights for linear-in-time u over one step of size dt, x = dt/sigma:
    #   contribution = (A - B) u(t_k) + B u(t_{k+1}),
    #   A = 1 - e^{-x},  B = 1 - A/x
    x = dt_s / sig
    decay = math.exp(-x)
    A = 1.0 - decay
    B = 1.0 - A / x
    w_prev = A - B
    out = Trajectory()
    acc = np.zeros_like(sel[0].values)
    out.append(Field(grid=traj.grid, values=acc.copy(), time=sel[0].time))
    for prev, cur in zip(sel[:-1], sel[1:]):
        acc = decay * acc + w_prev * prev.values + B * cur.values
        out.append(Field(grid=traj.grid, values=acc.copy(), time=cur.time))
    return out


def _bump_profile(s2):
    """Bump exp(-1/(1-s2)) on s2 < 1 and its derivative with respect to s2."""
    s2 = np.asarray(s2, dtype=float)
    inside = s2 < 1.0
    val = np.zeros_like(s2)
    dval = np.zeros_like(s2)
    one_minus = np.where(inside, 1.0 - s2, 1.0)
    val[inside] = np.exp(-1.0 / one_minus[inside])
    dval[inside] = -val[inside] / one_minus[inside] ** 2
    return val, dval


@dataclass(frozen=True, eq=False)
class BumpFunction:
    """Smooth compactly supported bump exp(-1/(1-|x-c|^2/R^2)) on |x-c| < R."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(
            self, "center", np.atleast_1d(np.asarray(self.center, dtype=float))
        )
        if not self.radius > 0.0:
            raise ValueError(f"radius = {self.radius} must be positive")

    def _r(self, x):
        x = np.asarray(x, dtype=float)
        if self.center.size == 1:
            return np.abs(x - self.center[0])
        return np.sqrt(
            (x[..., 0] - self.center[0]) ** 2 + (x[..., 1] - self.center[1]) ** 2
        )

    def value(self, x):
        val, _ = _bump_profile((self._r(x) / self.radius) ** 2)
        return val if val.shape else float(val)

    def value_on_grid(self, grid: Grid):
        r = grid.radius_from(self.center)
        val, _ = _bump_profile((r / self.radius) ** 2)
        return val

    def gradient_on_grid(self, grid: Grid):
        """Tuple of gradient components on the grid nodes (analytic)."""
        r = grid.radius_from(self.center)
        _, dval = _bump_profile((r / self.radius) ** 2)
        scale = 2.0 / self.radius**2
        if grid.n == 1:
            return (dval * scale * (grid.axis(0) - self.center[0]),)
        X, Y = grid.node_coordinates()
        return (dval * scale * (X - self.center[0]), dval * scale * (Y - self.center[1]))


@dataclass(frozen=True, eq=False)
class PlateauBump:
    """Smooth cutoff equal to 1 on |x-c| <= r_inner, 0 beyond r_outer."""

    center: np.ndarray
    r_inner: float
    r_outer: float

    def __post_init__(self):
        object.__setattr__(
            self, "center", np.atleast_1d(np.asarray(self.center, dtype=float))
        )
        if not 0.0 < self.r_inner < self.r_outer:
            raise ValueError("need 0 < r_inner < r_outer")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.center.size == 1:
            r = np.abs(x - self.center[0])
        else:
            r = np.sqrt(
                (x[..., 0] - self.center[0]) ** 2 + (x[..., 1] - self.center[1]) ** 2
            )
        val = self._value_from_r(r)
        return val if val.shape else float(val)

    def value_on_grid(self, grid: Grid):
        return self._value_from_r(grid.radius_from(self.center))

    def _value_from_r(self, r):
        # smooth step through f(s)/(f(s)+f(1-s)) with f(s) = exp(-1/s)
        s = (self.r_outer - r) / (self.r_outer - self.r_inner)
        s = np.clip(s, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            fs = np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
            f1 = np.where(
                s < 1.0, np.exp(-1.0 / np.where(s < 1.0, 1.0 - s, 1.0)), 0.0
            )
        return fs / (fs + f1)


@dataclass(frozen=True, eq=False)
class SpaceTimeBump:
    """Separable test function phi(x, t) = bump(x) * bump((t - tc)/tr)."""

    space: BumpFunction
    t_center: float
    t_radius: float

    def __post_init__(self):
        if not self.t_radius > 0.0:
            raise ValueError(f"t_radius = {self.t_radius} must be positive")

    def time_value(self, t: float) -> float:
        val, _ = _bump_profile(np.asarray(((t - self.t_center) / self.t_radius) ** 2))
        return float(val)

    def time_derivative(self, t: float) -> float:
        s2 = np.asarray(((t - self.t_center) / self.t_radius) ** 2)
        _, dval = _bump_profile(s2)
        return float(dval * 2.0 * (t - self.t_center) / self.t_radius**2)


def weak_form_terms(traj: Trajectory, exps: Exponents, phi: SpaceTimeBump):
    """Flux term and time term of the weak formulation against phi.

    Returns (integral of |grad u|^{p-2} grad u . grad phi,
             integral of u * dphi/dt) over the snapshots covering the bump's
    time support.
    """
    grid = traj.grid
    c = phi.space.center
    R = phi.space.radius
    if np.any(c - R < grid.lo + grid.h - 1e-12) or np.any(c + R > grid.hi - grid.h + 1e-12):
        raise SupportError("test function support leaves the grid interior")
    times = traj.times
    t_lo = phi.t_center - phi.t_radius
    t_hi = phi.t_center + phi.t_radius
    if t_lo < times[0] - 1e-12 or t_hi > times[-1] + 1e-12:
        raise SupportError(
            f"bump time support [{t_lo}, {t_hi}] not covered by snapshots "
            f"[{times[0]}, {times[-1]}]"
        )
    sel = [f for f in traj if t_lo - 1e-12 <= f.time <= t_hi + 1e-12]
    if len(sel) < 4:
        raise ResolutionError(f"{len(sel)} snapshots inside the bump time support; need 4")
    hn = grid.h**grid.n
    p = exps.p
    phi_x = phi.space.value_on_grid(grid)
    gphi = phi.space.gradient_on_grid(grid)
    ts, flux_slices, time_slices = [], [], []
    for f in sel:
        eta = phi.time_value(f.time)
        deta = phi.time_derivative(f.time)
        gu = gradient_field(f)
        mag2 = gu[0] ** 2
        for comp in gu[1:]:
            mag2 = mag2 + comp**2
        coef = mag2 ** (0.5 * (p - 2.0)) if p != 3.0 else np.sqrt(mag2)
        dot = gu[0] * gphi[0]
        for comp, gp in zip(gu[1:], gphi[1:]):
            dot = dot + comp * gp
        flux_slices.append(hn * float(np.sum(coef * dot)) * eta)
        time_slices.append(hn * float(np.sum(f.values * phi_x)) * deta)
        ts.append(f.time)
    return _trapezoid(ts, flux_slices), _trapezoid(ts, time_slices)


def weak_residual(traj: Trajectory, exps: Exponents, phi: SpaceTimeBump) -> float:
    """Signed defect of the weak form: flux term minus time term."""
    flux_term, time_term = weak_form_terms(traj, exps, phi)
    return flux_term - time_term


def trace_pairing(traj: Trajectory, phi, trace: InitialTrace):
    """[(t, |integral u(t) phi - trace(phi)|)] over the snapshots with t <= 0.1."""
    grid = traj.grid
    hn = grid.h**grid.n
    if grid.n == 1:
        phi_nodes = np.asarray(phi.value(grid.axis(0)))
    else:
        phi_nodes = phi.value_on_grid(grid)
    target = 0.0
    for pos, mass in trace.atoms:
        target += mass * float(np.asarray(phi.value(pos if grid.n > 1 else pos[0])))
    if trace.density is not None:
        coords = grid.node_coordinates()
        dens = np.broadcast_to(
            np.asarray(trace.density(*coords), dtype=float), grid.shape
        )
        target += hn * float(np.sum(dens * phi_nodes))
    out = []
    for f in traj:
        if f.time <= 0.1 + 1e-12 and f.time > 0.0:
            pair = hn * float(np.sum(f.values * phi_nodes))
            out.append((f.time, abs(pair - target)))
    if not out:
        raise ResolutionError("no snapshots at times in (0, 0.1]")
    return out


def power_diff_bound_check(zeta, a: float, b: float, gamma_pen: float, slack: float = 1e-12):
    """Check | |z|^a - |z|^b | <= (|z|^{max+g}/g + (1/a + 1/b)/e) |a-b| + slack."""
    if not (a > 0.0 and b > 0.0 and gamma_pen > 0.0):
        raise ValueError("exponents a, b and the penalty gamma must be positive")
    z = np.abs(np.asarray(zeta, dtype=float))
    lhs = np.abs(z**a - z**b)
    rhs = (
        z ** (max(a, b) + gamma_pen) / gamma_pen + (1.0 / a + 1.0 / b) / math.e
    ) * abs(a - b)
    return bool(np.all(lhs <= rhs + slack))


def monotonicity_gap_check(a, b, p: float, slack: float = 1e-12):
    """Check 2^{2-p} |a-b|^p <= (|a|^{p-2}a - |b|^{p-2}b) . (a-b) for vectors."""
    if not p > 2.0:
        raise ValueError(f"p = {p} must be > 2")
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError("vector batches disagree in shape")
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    lhs = 2.0 ** (2.0 - p) * np.linalg.norm(a - b, axis=-1) ** p
    flux_gap = np.sum(
        (na[..., None] ** (p - 2.0) * a - nb[..., None] ** (p - 2.0) * b) * (a - b),
        axis=-1,
    )
    return bool(np.all(lhs <= flux_gap + slack))
