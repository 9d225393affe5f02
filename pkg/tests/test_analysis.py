"""Window functionals, mollification in time, test functions, and inequalities.

Independent oracles used here:
  * dyadic slab measures of the closed form reduce to a 1d quadrature of the
    level-width difference len_j(t) - len_{2j}(t);
  * window integrals of u^q and |grad u|^q reduce to power laws in time, so
    increment ratios across epsilon decades are known exponentials;
  * the initial-trace pairing gap against a curved test function is, to
    leading order, |phi''(0)|/2 times the second moment of the profile.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from pparab.errors import ResolutionError, SupportError
from pparab.exact import make_barenblatt, support_radius
from pparab.grid import Field, InitialTrace, Trajectory, make_grid, sample_exact
from pparab.params import derive_exponents
from pparab.analysis import (
    BumpFunction,
    PlateauBump,
    SpaceTimeBump,
    TimeMollifier,
    Window,
    dead_zone_radius,
    gradient_field,
    level_set_measure,
    lq_integral,
    lq_spacetime,
    monotonicity_gap_check,
    power_diff_bound_check,
    smoothing_ratio,
    sobolev_distance,
    sobolev_ratio,
    time_mollify,
    trace_pairing,
    truncation_energy,
    weak_form_terms,
    weak_residual,
)


def smooth_time_trajectory(g, times, envelope):
    """Compact spatial profile scaled by a smooth positive function of time."""
    x = g.axis(0)
    prof = np.maximum(1.0 - (x / 2.0) ** 2, 0.0) ** 2
    traj = Trajectory()
    for t in times:
        traj.append(Field(grid=g, values=envelope(t) * prof, time=float(t)))
    return traj


class TestWindowing:
    def test_window_validation(self):
        with pytest.raises(ValueError):
            Window(lo=(-1.0,), hi=(1.0,), t0=0.5, t1=0.5)

    def test_too_few_snapshots(self, b31):
        g = make_grid(-3.0, 3.0, 1.0 / 32)
        traj = Trajectory()
        for t in (0.2, 0.4, 0.6):
            traj.append(sample_exact(b31, g, t))
        w = Window(lo=(-3.0,), hi=(3.0,), t0=0.1, t1=1.0)
        with pytest.raises(ResolutionError):
            lq_integral(traj, 2.0, w)

    def test_q_must_be_positive(self, b31):
        g = make_grid(-3.0, 3.0, 1.0 / 32)
        traj = Trajectory()
        for t in (0.2, 0.4, 0.6, 0.8):
            traj.append(sample_exact(b31, g, t))
        w = Window(lo=(-3.0,), hi=(3.0,), t0=0.1, t1=1.0)
        with pytest.raises(ValueError, match="must be positive"):
            lq_integral(traj, 0.0, w)


class TestIntegrabilityLadders:
    """Increment ratios across epsilon decades follow the time power law.

    With I(eps) the window integral over (eps, 1), the three increments
    I(1e-(i+1)) - I(1e-i) form a geometric sequence with the two-step ratio
    10^{-2*e} where e is the exponent of the primitive of t^{(1-q)/lam}
    (solution) or t^{(1-2q)/lam} (gradient).
    """

    CASES = [
        # (q, gradient, two-step ratio of increments)
        (4.5, False, 10.0 ** -0.25),
        (5.5, False, 10.0 ** 0.25),
        (2.3, True, 10.0 ** -0.2),
        (2.8, True, 10.0 ** 0.3),
    ]

    @pytest.mark.parametrize("q,grad,ratio", CASES)
    def test_increment_ratio(self, ladder31, q, grad, ratio):
        vals = [
            lq_integral(
                ladder31, q, Window(lo=(-3.0,), hi=(3.0,), t0=ep, t1=1.0), gradient=grad
            )
            for ep in (1e-1, 1e-2, 1e-3, 1e-4)
        ]
        incs = [vals[i + 1] - vals[i] for i in range(3)]
        measured = incs[-1] / incs[0]
        assert measured == pytest.approx(ratio, rel=5e-3), (
            f"two-step increment ratio {measured} vs power law {ratio} at q={q}"
        )

    def test_convergent_vs_divergent_direction(self, ladder31):
        # below the threshold the increments shrink, above they grow
        for q, grad in ((4.5, False), (2.3, True)):
            vals = [
                lq_integral(
                    ladder31, q, Window(lo=(-3.0,), hi=(3.0,), t0=ep, t1=1.0),
                    gradient=grad,
                )
                for ep in (1e-2, 1e-3, 1e-4)
            ]
            assert vals[2] - vals[1] < vals[1] - vals[0]
        for q, grad in ((5.5, False), (2.8, True)):
            vals = [
                lq_integral(
                    ladder31, q, Window(lo=(-3.0,), hi=(3.0,), t0=ep, t1=1.0),
                    gradient=grad,
                )
                for ep in (1e-2, 1e-3, 1e-4)
            ]
            assert vals[2] - vals[1] > vals[1] - vals[0]

    def test_lq_spacetime_is_qth_root(self, ladder31):
        w = Window(lo=(-3.0,), hi=(3.0,), t0=1e-2, t1=1.0)
        assert lq_spacetime(ladder31, 2.0, w) == pytest.approx(
            math.sqrt(lq_integral(ladder31, 2.0, w)), rel=1e-13
        )


def slab_measure_oracle(spec, j, t0, t1):
    """Quadrature of the closed-form width of {j <= u < 2j} over (t0, t1)."""
    e = spec.exps
    p, lam, al = e.p, e.lam, e.alpha
    C = spec.C
    k = (p - 2.0) / p * lam ** (1.0 / (1.0 - p))
    m = (p - 1.0) / (p - 2.0)
    b = p / (p - 1.0)

    def halfwidth(lvl, t):
        top = C - (lvl * t**al) ** (1.0 / m)
        if top <= 0.0:
            return 0.0
        return t ** (1.0 / lam) * (top / k) ** (1.0 / b)

    cuts = sorted(
        {t0, t1}
        | {min(max((C**m / lvl) ** lam, t0), t1) for lvl in (j, 2.0 * j)}
    )
    total = 0.0
    for a_, b_ in zip(cuts[:-1], cuts[1:]):
        v, _ = quad(lambda t: 2.0 * (halfwidth(j, t) - halfwidth(2.0 * j, t)), a_, b_, limit=400)
        total += v
    return total


@pytest.fixture(scope="module")
def decay_traj(b31):
    g = make_grid(-4.0, 4.0, 1.0 / 128)
    traj = Trajectory()
    for t in np.geomspace(1e-5, 4.0, 160):
        traj.append(sample_exact(b31, g, float(t)))
    return traj


class TestLevelSets:
    def test_slab_measure_against_quadrature(self, decay_traj, b31):
        w = Window(lo=(-4.0,), hi=(4.0,), t0=1e-5, t1=4.0)
        for j in (0.3, 0.6, 1.2):
            measured = level_set_measure(decay_traj, j, w)
            oracle = slab_measure_oracle(b31, j, 1e-5, 4.0)
            assert measured == pytest.approx(oracle, rel=2e-2), (
                f"slab j={j}: grid {measured} vs quadrature {oracle}"
            )

    def test_dyadic_slope(self, decay_traj):
        w = Window(lo=(-4.0,), hi=(4.0,), t0=1e-5, t1=4.0)
        js = [0.3, 0.6, 1.2]
        ms = [level_set_measure(decay_traj, j, w) for j in js]
        slope = np.polyfit(np.log(js), np.log(ms), 1)[0]
        assert abs(slope - (-5.0)) <= 0.15, f"dyadic slope {slope}"

    def test_truncation_energy_positive(self, decay_traj, e31):
        w = Window(lo=(-4.0,), hi=(4.0,), t0=1e-5, t1=4.0)
        sup_term, grad_term = truncation_energy(decay_traj, 0.3, w, e31.p)
        assert sup_term > 0.0 and grad_term > 0.0

    def test_sobolev_ratio_runs(self, decay_traj, e31):
        w = Window(lo=(-4.0,), hi=(4.0,), t0=1e-2, t1=4.0)
        r = sobolev_ratio(decay_traj, w, 0.3, e31.p)
        assert r > 0.0

    def test_sobolev_ratio_zero_field(self, e31):
        g = make_grid(-1.0, 1.0, 0.25)
        traj = Trajectory()
        for t in (0.1, 0.2, 0.3, 0.4):
            traj.append(Field(grid=g, values=np.zeros(g.shape), time=t))
        w = Window(lo=(-1.0,), hi=(1.0,), t0=0.05, t1=0.5)
        with pytest.raises(ValueError, match="embedding ratio undefined"):
            sobolev_ratio(traj, w, 1.0, 3.0)


class TestSobolevDistance:
    def _traj(self, g, scale, times):
        x = g.axis(0)
        prof = scale * np.maximum(1.0 - (x / 2.0) ** 2, 0.0) ** 2
        traj = Trajectory()
        for t in times:
            traj.append(Field(grid=g, values=prof, time=t))
        return traj

    def test_identical_trajectories(self):
        g = make_grid(-3.0, 3.0, 1.0 / 32)
        times = (0.1, 0.2, 0.3, 0.4, 0.5)
        a = self._traj(g, 1.0, times)
        b = self._traj(g, 1.0, times)
        w = Window(lo=(-3.0,), hi=(3.0,), t0=0.05, t1=0.6)
        assert sobolev_distance(a, b, 2.0, w) == 0.0

    def test_homogeneity(self):
        g = make_grid(-3.0, 3.0, 1.0 / 32)
        times = (0.1, 0.2, 0.3, 0.4, 0.5)
        zero = self._traj(g, 0.0, times)
        one = self._traj(g, 1.0, times)
        three = self._traj(g, 3.0, times)
        w = Window(lo=(-3.0,), hi=(3.0,), t0=0.05, t1=0.6)
        d1 = sobolev_distance(zero, one, 2.0, w)
        d3 = sobolev_distance(zero, three, 2.0, w)
        assert d3 == pytest.approx(3.0 * d1, rel=1e-12)

    def test_grid_mismatch(self):
        g1 = make_grid(-3.0, 3.0, 1.0 / 32)
        g2 = make_grid(-3.0, 3.0, 1.0 / 64)
        times = (0.1, 0.2, 0.3, 0.4)
        w = Window(lo=(-3.0,), hi=(3.0,), t0=0.05, t1=0.6)
        with pytest.raises(ValueError):
            sobolev_distance(self._traj(g1, 1.0, times), self._traj(g2, 1.0, times), 2.0, w)


class TestDeadZone:
    def test_matches_support_radius(self, b31):
        g = make_grid(-5.0, 5.0, 1.0 / 128)
        x0 = 4.5
        for t in (0.25, 1.0, 4.0):
            f = sample_exact(b31, g, t)
            measured = x0 - dead_zone_radius(f, x0)
            assert abs(measured - support_radius(b31, t)) <= 2.0 * g.h, (
                f"front position at t={t}: {measured} vs {support_radius(b31, t)}"
            )

    def test_probe_inside_support(self, b31):
        g = make_grid(-5.0, 5.0, 1.0 / 128)
        f = sample_exact(b31, g, 1.0)
        assert dead_zone_radius(f, 0.3) == 0.0

    def test_empty_field(self):
        g = make_grid(-5.0, 5.0, 1.0 / 128)
        f = Field(grid=g, values=np.zeros(g.shape), time=1.0)
        assert dead_zone_radius(f, 2.0) == pytest.approx(3.0)


class TestSmoothing:
    def test_exact_ratio_is_flat(self, b31, e31):
        g = make_grid(-5.0, 5.0, 1.0 / 64)
        traj = Trajectory()
        for t in np.geomspace(1e-3, 4.0, 12):
            traj.append(sample_exact(b31, g, float(t)))
        rows = smoothing_ratio(traj, e31, 1.0)
        vals = [v for _, v in rows]
        # center sits on a node, so the scaled sup is the profile constant
        assert max(vals) - min(vals) <= 1e-10, f"spread {max(vals) - min(vals)}"
        assert vals[0] == pytest.approx(b31.C ** ((e31.p - 1.0) / (e31.p - 2.0)), rel=1e-12)

    def test_mass_rejected(self, b31, e31):
        g = make_grid(-5.0, 5.0, 1.0 / 64)
        traj = Trajectory()
        traj.append(sample_exact(b31, g, 1.0))
        with pytest.raises(ValueError, match="must be positive"):
            smoothing_ratio(traj, e31, 0.0)


class TestTimeMollifier:
    SIGMA = 0.1

    def _traj(self, dt, t_end=1.0, envelope=None):
        g = make_grid(-3.0, 3.0, 1.0 / 16)
        if envelope is None:
            envelope = lambda t: 1.0 + 0.5 * math.sin(3.0 * t)
        times = np.arange(0.1, t_end + 1e-12, dt)
        return smooth_time_trajectory(g, times, envelope)

    def test_derivative_identity(self):
        # d/dt u_sigma = (u - u_sigma)/sigma, checked with centered differences
        # past the startup transient (u_sigma ramps from 0 on the scale sigma,
        # so early snapshots carry third derivatives of order 1/sigma^3)
        dt = self.SIGMA / 10.0
        traj = self._traj(dt, t_end=2.0, envelope=lambda t: 1.0 + 0.5 * math.sin(t))
        mol = time_mollify(traj, TimeMollifier(sigma=self.SIGMA, eps=0.1))
        worst = 0.0
        for i in range(1, len(mol) - 1):
            if mol.fields[i].time < 0.1 + 8.0 * self.SIGMA:
                continue
            lhs = (mol.fields[i + 1].values - mol.fields[i - 1].values) / (2.0 * dt)
            rhs = (traj.fields[i].values - mol.fields[i].values) / self.SIGMA
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        assert worst <= 1e-4, f"derivative identity error {worst}"

    def test_never_expands(self):
        traj = self._traj(self.SIGMA / 10.0)
        mol = time_mollify(traj, TimeMollifier(sigma=self.SIGMA, eps=0.1))
        sup_in = max(f.sup() for f in traj)
        sup_out = max(f.sup() for f in mol)
        assert sup_out <= sup_in + 1e-10, f"mollifier expanded {sup_in} -> {sup_out}"

    def test_halving_sigma_halves_distance(self):
        dt = 0.002
        traj = self._traj(dt)
        dists = []
        for sigma in (0.04, 0.02):
            mol = time_mollify(traj, TimeMollifier(sigma=sigma, eps=0.1))
            gap = 0.0
            for f, m in zip(traj, mol):
                if f.time >= 0.7:  # past the startup transient
                    gap = max(gap, float(np.abs(f.values - m.values).max()))
            dists.append(gap)
        ratio = dists[0] / dists[1]
        assert 1.8 <= ratio <= 2.2, f"sigma-halving ratio {ratio}"

    def test_exact_on_constant_in_time(self):
        # the panel rule is exact for linear-in-time data; a constant signal
        # must produce exactly (1 - e^{-(t-eps)/sigma}) u
        dt = self.SIGMA / 8.0
        traj = self._traj(dt, envelope=lambda t: 1.0)
        mol = time_mollify(traj, TimeMollifier(sigma=self.SIGMA, eps=0.1))
        for f, m in zip(traj, mol):
            w = 1.0 - math.exp(-(f.time - 0.1) / self.SIGMA)
            assert np.allclose(m.values, w * f.values, rtol=1e-12, atol=1e-14)

    def test_guards(self):
        traj = self._traj(0.01, t_end=0.5)
        with pytest.raises(ResolutionError, match="not at eps"):
            time_mollify(traj, TimeMollifier(sigma=0.1, eps=0.157))
        with pytest.raises(ResolutionError, match="too coarse"):
            time_mollify(traj, TimeMollifier(sigma=0.02, eps=0.1))
        g = make_grid(-3.0, 3.0, 1.0 / 16)
        uneven = smooth_time_trajectory(g, [0.1, 0.2, 0.25, 0.5], lambda t: 1.0)
        with pytest.raises(ResolutionError, match="not uniform"):
            time_mollify(uneven, TimeMollifier(sigma=1.0, eps=0.1))


class TestBumps:
    def test_gradient_matches_finite_differences(self):
        g = make_grid(-2.0, 2.0, 1.0 / 64)
        phi = BumpFunction(center=(0.3,), radius=1.1)
        (gx,) = phi.gradient_on_grid(g)
        x = g.axis(0)
        h = 1e-6
        for i in range(0, g.shape[0], 17):
            fd = (phi.value(x[i] + h) - phi.value(x[i] - h)) / (2.0 * h)
            assert gx[i] == pytest.approx(fd, rel=1e-6, abs=1e-10)

    def test_compact_support(self):
        phi = BumpFunction(center=(0.0,), radius=1.0)
        assert phi.value(1.0) == 0.0
        assert phi.value(-1.7) == 0.0
        assert phi.value(0.0) == pytest.approx(math.exp(-1.0))

    def test_2d_bump(self):
        g = make_grid((-2.0, -2.0), (2.0, 2.0), 1.0 / 16)
        phi = BumpFunction(center=(0.0, 0.0), radius=1.5)
        vals = phi.value_on_grid(g)
        assert vals.shape == g.shape
        gx, gy = phi.gradient_on_grid(g)
        assert gx.shape == g.shape and gy.shape == g.shape

    def test_plateau(self):
        phi = PlateauBump(center=(0.0,), r_inner=0.5, r_outer=1.0)
        assert phi.value(0.0) == 1.0
        assert phi.value(0.49) == 1.0
        assert phi.value(1.01) == 0.0
        mid = phi.value(0.75)
        assert 0.0 < mid < 1.0

    def test_time_derivative_matches_fd(self):
        phi = SpaceTimeBump(
            space=BumpFunction(center=(0.0,), radius=1.0), t_center=0.5, t_radius=0.2
        )
        h = 1e-7
        for t in (0.38, 0.5, 0.61):
            fd = (phi.time_value(t + h) - phi.time_value(t - h)) / (2.0 * h)
            assert phi.time_derivative(t) == pytest.approx(fd, rel=1e-5, abs=1e-9)


@pytest.fixture(scope="module")
def short_run(b31):
    g = make_grid(-3.0, 3.0, 1.0 / 128)
    traj = Trajectory()
    for t in np.arange(0.3, 0.7001, 0.00125):
        traj.append(sample_exact(b31, g, float(t)))
    return traj


class TestWeakForm:
    def test_residual_small_on_closed_form(self, short_run, e31):
        for xc, R, tc, tR in ((0.2, 1.0, 0.5, 0.18), (-0.4, 1.4, 0.5, 0.15)):
            phi = SpaceTimeBump(
                space=BumpFunction(center=(xc,), radius=R), t_center=tc, t_radius=tR
            )
            fl, tm = weak_form_terms(short_run, e31, phi)
            rel = abs(weak_residual(short_run, e31, phi)) / (abs(fl) + abs(tm))
            assert rel <= 1e-3, f"weak residual {rel} for bump at {xc}"

    def test_space_support_guard(self, short_run, e31):
        phi = SpaceTimeBump(
            space=BumpFunction(center=(2.5,), radius=1.0), t_center=0.5, t_radius=0.1
        )
        with pytest.raises(SupportError, match="grid interior"):
            weak_form_terms(short_run, e31, phi)

    def test_time_support_guard(self, short_run, e31):
        phi = SpaceTimeBump(
            space=BumpFunction(center=(0.0,), radius=1.0), t_center=0.1, t_radius=0.05
        )
        with pytest.raises(SupportError, match="not covered"):
            weak_form_terms(short_run, e31, phi)


class TestTracePairing:
    def test_gap_decreases_and_matches_moment_oracle(self, b31):
        g = make_grid(-3.0, 3.0, 1.0 / 256)
        traj = Trajectory()
        for t in (0.001, 0.01, 0.1):
            traj.append(sample_exact(b31, g, t))
        phi = BumpFunction(center=(0.0,), radius=2.5)
        trace = InitialTrace(atoms=[((0.0,), 1.0)])
        rows = trace_pairing(traj, phi, trace)
        gaps = {t: gap for t, gap in rows}
        assert gaps[0.001] < gaps[0.01] < gaps[0.1]
        # leading order: |phi''(0)|/2 * second moment of the profile
        C = b31.C
        k = (1.0 / 3.0) * 4.0 ** (-0.5)
        mom, _ = quad(lambda x: x * x * max(C - k * abs(x) ** 1.5, 0.0) ** 2, -3.0, 3.0)
        phi_dd = 2.0 * math.exp(-1.0) / 2.5**2
        for t in (0.001, 0.01):
            oracle = 0.5 * phi_dd * mom * math.sqrt(t)
            assert gaps[t] == pytest.approx(oracle, rel=0.05), (
                f"pairing gap {gaps[t]} vs curvature oracle {oracle} at t={t}"
            )

    def test_needs_early_snapshots(self, b31):
        g = make_grid(-3.0, 3.0, 1.0 / 64)
        traj = Trajectory()
        traj.append(sample_exact(b31, g, 0.5))
        phi = BumpFunction(center=(0.0,), radius=2.5)
        with pytest.raises(ResolutionError):
            trace_pairing(traj, phi, InitialTrace(atoms=[((0.0,), 1.0)]))


class TestInequalities:
    @given(
        zeta=st.lists(
            st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
            min_size=1,
            max_size=20,
        ),
        a=st.floats(min_value=0.1, max_value=6.0, allow_nan=False),
        b=st.floats(min_value=0.1, max_value=6.0, allow_nan=False),
        gamma_pen=st.floats(min_value=0.05, max_value=3.0, allow_nan=False),
    )
    @settings(max_examples=100, deadline=None)
    def test_power_difference_bound(self, zeta, a, b, gamma_pen):
        assert power_diff_bound_check(np.array(zeta), a, b, gamma_pen)

    @given(
        comps=st.lists(
            st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
            min_size=4,
            max_size=4,
        ),
        p=st.floats(min_value=2.05, max_value=6.0, allow_nan=False),
    )
    @settings(max_examples=100, deadline=None)
    def test_vector_monotonicity(self, comps, p):
        a = np.array(comps[:2])
        b = np.array(comps[2:])
        assert monotonicity_gap_check(a, b, p)

    def test_checkers_can_fail(self):
        # negative slack turns a tight case into a detected violation
        assert not power_diff_bound_check(np.array([0.0]), 1.0, 2.0, 1.0, slack=-1.0)
        assert not monotonicity_gap_check(
            np.array([1.0, 0.0]), np.array([1.0, 0.0]), 3.0, slack=-1.0
        )

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            power_diff_bound_check(np.array([1.0]), -1.0, 2.0, 1.0)
        with pytest.raises(ValueError, match="must be > 2"):
            monotonicity_gap_check(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 2.0)


class TestGradientField:
    def test_linear_profile(self):
        g = make_grid(-1.0, 1.0, 0.125)
        x = g.axis(0)
        vals = np.maximum(1.0 - np.abs(x), 0.0) * 0.5
        vals[0] = vals[-1] = 0.0
        f = Field(grid=g, values=vals, time=0.1)
        (gx,) = gradient_field(f)
        # away from kinks the slope is exactly +-1/2
        assert gx[2] == pytest.approx(0.5)
        assert gx[-3] == pytest.approx(-0.5)
