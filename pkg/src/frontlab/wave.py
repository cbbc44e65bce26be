"""Travelling-wave solver for bistable fronts.

Computes the unique pair (c, phi) with

    phi'' + c phi' + f(phi) = 0,   phi(-inf) = 1, phi(+inf) = 0, phi(0) = theta

on a truncated grid by a bordered Newton iteration: the unknowns are the
grid values of phi together with the speed c, closed by linearized-tail
Robin conditions and the phase row phi(0) = theta.

The tails behave like 1 - phi ~ e^{mu xi} (xi -> -inf) and phi ~ e^{lambda xi}
(xi -> +inf), with

    mu     = (-c + sqrt(c^2 - 4 f'(1))) / 2 > 0,
    lambda = (-c - sqrt(c^2 - 4 f'(0))) / 2 < 0,

so the consistent Robin closures are phi' = -mu (1 - phi) on the left and
phi' = lambda phi on the right.

For the cubic f(u) = u(1-u)(u-theta) the exact wave is

    phi(xi) = 1 / (1 + e^{(xi - xi0)/sqrt(2)}),   c = (1 - 2 theta) / sqrt(2),

which is the oracle used throughout the test-suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.stats import linregress
from scipy.interpolate import InterpolatedUnivariateSpline

from .nonlinearity import NonlinearitySpec


class NoConvergence(Exception):
    pass


class GridTooShort(Exception):
    pass


class FitWindowUnderResolved(Exception):
    pass


@dataclass(frozen=True)
class WaveGrid:
    """Uniform grid on [xi_min, xi_max] that contains xi = 0 as a node."""

    xi_min: float
    xi_max: float
    n_points: int

    def __post_init__(self) -> None:
        if not (self.xi_min < 0.0 < self.xi_max):
            raise ValueError("grid must straddle xi = 0")
        if self.n_points < 3:
            raise ValueError("need at least 3 grid points")
        # xi = 0 must be a node for the phase condition phi(0) = theta
        pos = -self.xi_min / self.h
        if abs(pos - round(pos)) > 1e-9:
            raise ValueError("xi = 0 is not a grid node; adjust n_points")

    @property
    def h(self) -> float:
        return (self.xi_max - self.xi_min) / (self.n_points - 1)

    @property
    def origin_index(self) -> int:
        return int(round(-self.xi_min / self.h))

    @property
    def xi(self) -> np.ndarray:
        return self.xi_min + self.h * np.arange(self.n_points)

    @classmethod
    def from_spacing(cls, xi_min: float, xi_max: float, h: float) -> "WaveGrid":
        n = int(round((xi_max - xi_min) / h)) + 1
        return cls(xi_min, xi_max, n)


@dataclass(frozen=True)
class WaveProfile:
    grid: WaveGrid
    phi: np.ndarray
    phi_prime: np.ndarray
    c: float
    lam: float          # decay rate of phi at +inf (negative)
    mu: float           # decay rate of 1 - phi at -inf (positive)
    spec: NonlinearitySpec
    residual_inf: float = 0.0
    # closed-form callables when available (exact cubic oracle); otherwise
    # quintic-spline interpolants are built lazily
    phi_fn: Callable | None = field(default=None, repr=False, compare=False)
    phi_prime_fn: Callable | None = field(default=None, repr=False, compare=False)

    def interpolators(self):
        """Return (phi(.), phi'(.)) callables usable at arbitrary points.

        Outside the grid the tails are continued by their exponentials,
        matching the Robin closures of the solve.
        """
        if self.phi_fn is not None and self.phi_prime_fn is not None:
            return self.phi_fn, self.phi_prime_fn
        xi = self.grid.xi
        sp_phi = InterpolatedUnivariateSpline(xi, self.phi, k=5, ext=0)
        sp_dphi = InterpolatedUnivariateSpline(xi, self.phi_prime, k=5, ext=0)
        lo, hi = xi[0], xi[-1]
        phi_lo, phi_hi = self.phi[0], self.phi[-1]
        lam, mu = self.lam, self.mu

        def phi_eval(x):
            x = np.asarray(x, dtype=float)
            out = sp_phi(np.clip(x, lo, hi))
            out = np.where(x > hi, phi_hi * np.exp(lam * (x - hi)), out)
            out = np.where(x < lo, 1.0 - (1.0 - phi_lo) * np.exp(mu * (x - lo)), out)
            return out if out.ndim else float(out)

        def dphi_eval(x):
            x = np.asarray(x, dtype=float)
            out = sp_dphi(np.clip(x, lo, hi))
            out = np.where(x > hi, lam * phi_hi * np.exp(lam * (x - hi)), out)
            out = np.where(x < lo, -mu * (1.0 - phi_lo) * np.exp(mu * (x - lo)), out)
            return out if out.ndim else float(out)

        return phi_eval, dphi_eval

    def check_invariants(self, tol_char: float = 1e-10) -> None:
        """Raise AssertionError if a profile invariant is violated."""
        f0 = float(self.spec.f_prime(0.0))
        f1 = float(self.spec.f_prime(1.0))
        assert abs(self.lam ** 2 + self.c * self.lam + f0) <= tol_char
        assert abs(self.mu ** 2 + self.c * self.mu + f1) <= tol_char
        assert abs(self.phi[self.grid.origin_index] - self.spec.theta) <= 1e-9
        assert np.all(np.diff(self.phi) < 0.0), "phi not strictly decreasing"
        interior = self.phi[1:-1]
        assert np.all((interior > 0.0) & (interior < 1.0))
        # far tails sit at the floating-noise floor; allow that much slack
        assert np.all(self.phi_prime < 1e-12), "phi' not negative"


def decay_rates(spec: NonlinearitySpec, c: float) -> tuple[float, float]:
    """(lambda, mu) from the characteristic equations at the two end states."""
    f0 = float(spec.f_prime(0.0))
    f1 = float(spec.f_prime(1.0))
    if f0 >= 0 or f1 >= 0:
        raise ValueError("decay rates need f'(0) < 0 and f'(1) < 0")
    lam = 0.5 * (-c - math.sqrt(c * c - 4.0 * f0))
    mu = 0.5 * (-c + math.sqrt(c * c - 4.0 * f1))
    return lam, mu


def exact_cubic_wave(theta: float, grid: WaveGrid) -> WaveProfile:
    """Closed-form travelling wave of the cubic nonlinearity.

    phi(xi) = 1/(1 + e^{(xi - xi0)/sqrt(2)}) with xi0 fixing phi(0) = theta,
    and c = (1 - 2 theta)/sqrt(2).
    """
    if not (0.0 < theta < 1.0) or theta == 0.5:
        raise ValueError("exact cubic wave needs theta in (0,1), theta != 1/2")
    spec = NonlinearitySpec(kind="cubic", theta=theta)
    sqrt2 = math.sqrt(2.0)
    xi0 = -sqrt2 * math.log((1.0 - theta) / theta)
    c = (1.0 - 2.0 * theta) / sqrt2

    def phi_fn(x):
        x = np.asarray(x, dtype=float)
        out = 1.0 / (1.0 + np.exp((x - xi0) / sqrt2))
        return out if out.ndim else float(out)

    def dphi_fn(x):
        p = phi_fn(x)
        return -p * (1.0 - p) / sqrt2

    lam, mu = decay_rates(spec, c)
    xi = grid.xi
    return WaveProfile(grid=grid, phi=np.asarray(phi_fn(xi)), phi_prime=np.asarray(dphi_fn(xi)),
                       c=c, lam=lam, mu=mu, spec=spec, residual_inf=0.0,
                       phi_fn=phi_fn, phi_prime_fn=dphi_fn)


def _derivative_4th(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative with one-sided edge formulas."""
    d = np.empty_like(y)
    d[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return d


def solve_wave(spec: NonlinearitySpec, grid: WaveGrid, tol: float = 1e-10,
               max_iter: int = 50) -> WaveProfile:
    """Newton solve of the discrete travelling-wave problem with unknown speed.

    Rows: left Robin phi' + mu(c)(1 - phi) = 0, interior centered
    second-order residuals of phi'' + c phi' + f(phi), right Robin
    phi' - lambda(c) phi = 0, and the phase row phi(0) = theta.  The
    Jacobian is tridiagonal plus the dense speed column.
    """
    n = grid.n_points
    h = grid.h
    i0 = grid.origin_index
    theta = spec.theta
    f0 = float(spec.f_prime(0.0))
    f1 = float(spec.f_prime(1.0))

    # initial guess: shifted sigmoid with the cubic slope, generic speed guess
    sqrt2 = math.sqrt(2.0)
    xi = grid.xi
    xi0 = -sqrt2 * math.log((1.0 - theta) / theta)
    phi = 1.0 / (1.0 + np.exp((xi - xi0) / sqrt2))
    c = (1.0 - 2.0 * theta) / sqrt2

    lam_pred, mu_pred = decay_rates(spec, c)
    if math.exp(lam_pred * grid.xi_max) >= tol or math.exp(-mu_pred * abs(grid.xi_min)) >= tol:
        raise GridTooShort(
            f"predicted tails exceed tol={tol:g} on [{grid.xi_min}, {grid.xi_max}]")

    def rates_and_dc(c):
        s0 = math.sqrt(c * c - 4.0 * f0)
        s1 = math.sqrt(c * c - 4.0 * f1)
        lam = 0.5 * (-c - s0)
        mu = 0.5 * (-c + s1)
        dlam = 0.5 * (-1.0 - c / s0)
        dmu = 0.5 * (-1.0 + c / s1)
        return lam, mu, dlam, dmu

    def residual(phi, c):
        lam, mu, _, _ = rates_and_dc(c)
        r = np.empty(n + 1)
        r[0] = (-3 * phi[0] + 4 * phi[1] - phi[2]) / (2 * h) + mu * (1.0 - phi[0])
        r[1:n - 1] = ((phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h ** 2
                      + c * (phi[2:] - phi[:-2]) / (2 * h)
                      + spec.f(phi[1:-1]))
        r[n - 1] = (3 * phi[-1] - 4 * phi[-2] + phi[-3]) / (2 * h) - lam * phi[-1]
        r[n] = phi[i0] - theta
        return r

    res = residual(phi, c)
    res_norm = float(np.max(np.abs(res)))

    for _ in range(max_iter):
        if res_norm <= tol:
            break
        lam, mu, dlam, dmu = rates_and_dc(c)

        rows, cols, vals = [], [], []

        def add(i, j, v):
            rows.append(i); cols.append(j); vals.append(v)

        add(0, 0, -3 / (2 * h) - mu)
        add(0, 1, 4 / (2 * h))
        add(0, 2, -1 / (2 * h))
        add(0, n, dmu * (1.0 - phi[0]))

        idx = np.arange(1, n - 1)
        lo = np.full(n - 2, 1 / h ** 2 - c / (2 * h))
        di = -2 / h ** 2 + np.asarray(spec.f_prime(phi[1:-1]), dtype=float)
        up = np.full(n - 2, 1 / h ** 2 + c / (2 * h))
        dc = (phi[2:] - phi[:-2]) / (2 * h)
        rows.extend(np.repeat(idx, 4))
        cols.extend(np.stack([idx - 1, idx, idx + 1, np.full(n - 2, n)], axis=1).ravel())
        vals.extend(np.stack([lo, di, up, dc], axis=1).ravel())

        add(n - 1, n - 1, 3 / (2 * h) - lam)
        add(n - 1, n - 2, -4 / (2 * h))
        add(n - 1, n - 3, 1 / (2 * h))
        add(n - 1, n, -dlam * phi[-1])
        add(n, i0, 1.0)

        jac = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
        delta = spsolve(jac, -res)

        # damped update: halve the step while the residual does not improve
        step = 1.0
        for _ in range(30):
            phi_new = phi + step * delta[:n]
            c_new = c + step * delta[n]
            if c_new * c_new - 4.0 * min(f0, f1) <= 0:
                step *= 0.5
                continue
            res_new = residual(phi_new, c_new)
            norm_new = float(np.max(np.abs(res_new)))
            if norm_new < res_norm or norm_new <= tol:
                break
            step *= 0.5
        else:
            raise NoConvergence(f"Newton stalled; last residual {res_norm:.3e}")
        phi, c, res, res_norm = phi_new, c_new, res_new, norm_new
    else:
        raise NoConvergence(f"no convergence after {max_iter} iterations; "
                            f"last residual {res_norm:.3e}")

    if abs(1.0 - phi[0]) > 100.0 * max(tol, 1e-14) + math.exp(-mu * abs(grid.xi_min)) * 10.0:
        raise GridTooShort(f"left tail closure inconsistent: |1 - phi(xi_min)| = {abs(1 - phi[0]):.3e}")

    lam, mu = decay_rates(spec, c)
    return WaveProfile(grid=grid, phi=phi, phi_prime=_derivative_4th(phi, h),
                       c=float(c), lam=lam, mu=mu, spec=spec, residual_inf=res_norm)


@dataclass(frozen=True)
class TailReport:
    slope_phi_right: float
    slope_one_minus_phi_left: float
    slope_dphi_right: float
    slope_dphi_left: float
    lam: float
    mu: float
    C1: float
    C2: float
    within_2pct: bool


def check_tail_estimates(profile: WaveProfile, min_points: int = 20) -> TailReport:
    """Fit the exponential tails of phi, 1-phi and -phi' against (lambda, mu).

    The right window is xi in [xi_max/2, 0.9 xi_max], the left window its
    mirror image; fitted log-slopes must match the characteristic rates
    within 2 percent.  C1 and C2 are the observed two-sided envelope
    constants over the windows.
    """
    xi = profile.grid.xi
    right = (xi >= profile.grid.xi_max / 2) & (xi <= 0.9 * profile.grid.xi_max)
    left = (xi <= profile.grid.xi_min / 2) & (xi >= 0.9 * profile.grid.xi_min)
    if right.sum() < min_points or left.sum() < min_points:
        raise FitWindowUnderResolved(
            f"fit windows hold {int(left.sum())}/{int(right.sum())} points, need {min_points}")

    phi_r = profile.phi[right]
    one_minus_l = 1.0 - profile.phi[left]
    dphi_r = -profile.phi_prime[right]
    dphi_l = -profile.phi_prime[left]
    if np.any(phi_r <= 0) or np.any(one_minus_l <= 0) or np.any(dphi_r <= 0) or np.any(dphi_l <= 0):
        raise FitWindowUnderResolved("tail values non-positive inside fit window")

    s_phi = linregress(xi[right], np.log(phi_r)).slope
    s_one = linregress(xi[left], np.log(one_minus_l)).slope
    s_dr = linregress(xi[right], np.log(dphi_r)).slope
    s_dl = linregress(xi[left], np.log(dphi_l)).slope

    lam, mu = profile.lam, profile.mu
    ratios = np.concatenate([
        phi_r * np.exp(-lam * xi[right]),
        one_minus_l * np.exp(-mu * xi[left]),
        dphi_r * np.exp(-lam * xi[right]),
        dphi_l * np.exp(-mu * xi[left]),
    ])
    within = (abs(s_phi - lam) <= 0.02 * abs(lam)
              and abs(s_one - mu) <= 0.02 * abs(mu)
              and abs(s_dr - lam) <= 0.02 * abs(lam)
              and abs(s_dl - mu) <= 0.02 * abs(mu))
    return TailReport(slope_phi_right=float(s_phi), slope_one_minus_phi_left=float(s_one),
                      slope_dphi_right=float(s_dr), slope_dphi_left=float(s_dl),
                      lam=lam, mu=mu, C1=float(np.min(ratios)), C2=float(np.max(ratios)),
                      within_2pct=bool(within))


def check_rate_constraint(kappa: float, profile: WaveProfile) -> bool:
    """Admissibility of the heterogeneity rate: 0 < kappa < -lambda - c/2."""
    return 0.0 < kappa < (-profile.lam - profile.c / 2.0)
