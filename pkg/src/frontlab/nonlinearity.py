"""Bistable reaction terms.

A reaction term f is *bistable* when f(0) = f(theta) = f(1) = 0 for some
interior zero theta in (0, 1), both end states are linearly stable
(f'(0) < 0, f'(1) < 0), f is negative on (0, theta) and positive on
(theta, 1).  When additionally int_0^1 f > 0 the state u = 1 invades.

The canonical instance is the cubic f(u) = u (1 - u) (u - theta), which has
a closed-form travelling wave and therefore serves as the end-to-end oracle
for everything downstream.  Arbitrary C^3 bistable terms are supported
through cubic-spline tabulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.integrate import quad


class NotInvading(Exception):
    """int_0^1 f <= 0: the state 1 does not invade."""


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    witness: float | None = None  # point at which the hypothesis fails
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[HypothesisCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed]


@dataclass(frozen=True)
class NonlinearitySpec:
    """A bistable reaction term.

    kind = "cubic": f(u) = u (1 - u) (u - theta), evaluated by the polynomial
    everywhere (smooth extension outside [0, 1] keeps transient overshoots of
    the parabolic solvers well-defined).

    kind = "tabulated": cubic-spline interpolant through (u, f(u)) knots,
    with cubic extrapolation outside the knot range.
    """

    kind: str
    theta: float
    knots: tuple[tuple[float, float], ...] | None = None
    _spline: CubicSpline | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("cubic", "tabulated"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.kind == "tabulated":
            if self.knots is None or len(self.knots) < 4:
                raise ValueError("tabulated spec needs >= 4 knots")
            u = np.array([k[0] for k in self.knots], dtype=float)
            fu = np.array([k[1] for k in self.knots], dtype=float)
            if np.any(np.diff(u) <= 0):
                raise ValueError("knot abscissae must be strictly increasing")
            spline = CubicSpline(u, fu, extrapolate=True)
            object.__setattr__(self, "_spline", spline)

    def f(self, u):
        """Evaluate f(u); accepts scalars or arrays."""
        if self.kind == "cubic":
            return u * (1.0 - u) * (u - self.theta)
        return self._spline(u)

    def f_prime(self, u):
        """Evaluate f'(u); for the cubic, -3u^2 + 2(1+theta)u - theta."""
        if self.kind == "cubic":
            return -3.0 * u * u + 2.0 * (1.0 + self.theta) * u - self.theta
        return self._spline(u, 1)


def cubic(theta: float) -> NonlinearitySpec:
    return NonlinearitySpec(kind="cubic", theta=theta)


def tabulated_from(spec: NonlinearitySpec, n_knots: int = 201) -> NonlinearitySpec:
    """Tabulate an existing spec on n_knots equispaced points of [0, 1]."""
    u = np.linspace(0.0, 1.0, n_knots)
    return NonlinearitySpec(
        kind="tabulated",
        theta=spec.theta,
        knots=tuple(zip(u.tolist(), np.asarray(spec.f(u), dtype=float).tolist())),
    )


def eval_f(spec: NonlinearitySpec, u):
    return spec.f(u)


def eval_f_prime(spec: NonlinearitySpec, u):
    return spec.f_prime(u)


def sup_norm_f_prime(spec: NonlinearitySpec, n_samples: int = 20001) -> float:
    """max |f'| over [0, 1], dense sampling plus critical-point refinement.

    Critical points of f' are located by sign changes of f'' on the sample
    grid and refined with a few bisection steps; this captures interior
    extrema of f' that fall between samples.
    """
    u = np.linspace(0.0, 1.0, n_samples)
    fp = np.asarray(spec.f_prime(u), dtype=float)
    best = float(np.max(np.abs(fp)))

    # refine where f'' changes sign (extrema of f')
    h = 1e-6
    fpp = (np.asarray(spec.f_prime(u[1:-1] + h)) - np.asarray(spec.f_prime(u[1:-1] - h))) / (2 * h)
    sign_change = np.nonzero(fpp[:-1] * fpp[1:] < 0)[0]
    for i in sign_change:
        a, b = u[i + 1], u[i + 2]
        for _ in range(60):
            m = 0.5 * (a + b)
            da = (spec.f_prime(a + h) - spec.f_prime(a - h)) / (2 * h)
            dm = (spec.f_prime(m + h) - spec.f_prime(m - h)) / (2 * h)
            if da * dm <= 0:
                b = m
            else:
                a = m
        best = max(best, abs(float(spec.f_prime(0.5 * (a + b)))))
    return best


def integral_f(spec: NonlinearitySpec) -> float:
    """int_0^1 f by adaptive quadrature (abs error <= 1e-10).

    Raises NotInvading when the integral is non-positive, i.e. the state 1
    does not invade.
    """
    val, _ = quad(lambda s: float(spec.f(s)), 0.0, 1.0, epsabs=1e-12, limit=200)
    if val <= 0.0:
        raise NotInvading(f"int_0^1 f = {val:.3e} <= 0")
    return val


def validate(spec: NonlinearitySpec, n_samples: int = 10001) -> ValidationReport:
    """Check every bistability hypothesis; failures are reported, not raised."""
    checks: list[HypothesisCheck] = []
    zero_tol = 1e-12 if spec.kind == "cubic" else 1e-9

    for name, point in (("f(0) = 0", 0.0), ("f(theta) = 0", spec.theta), ("f(1) = 0", 1.0)):
        val = float(spec.f(point))
        checks.append(HypothesisCheck(name, abs(val) <= zero_tol, None if abs(val) <= zero_tol else point,
                                      f"f({point:g}) = {val:.3e}"))

    for name, point in (("f'(0) < 0", 0.0), ("f'(1) < 0", 1.0)):
        val = float(spec.f_prime(point))
        checks.append(HypothesisCheck(name, val < 0.0, None if val < 0.0 else point,
                                      f"f'({point:g}) = {val:.6g}"))

    # sign pattern on dense grids, excluding the zeros themselves
    eps = 1e-9
    lower = np.linspace(eps, spec.theta - eps, n_samples)
    upper = np.linspace(spec.theta + eps, 1.0 - eps, n_samples)
    f_lower = np.asarray(spec.f(lower), dtype=float)
    f_upper = np.asarray(spec.f(upper), dtype=float)
    bad_lower = np.nonzero(f_lower >= 0)[0]
    bad_upper = np.nonzero(f_upper <= 0)[0]
    checks.append(HypothesisCheck("f < 0 on (0, theta)", bad_lower.size == 0,
                                  float(lower[bad_lower[0]]) if bad_lower.size else None))
    checks.append(HypothesisCheck("f > 0 on (theta, 1)", bad_upper.size == 0,
                                  float(upper[bad_upper[0]]) if bad_upper.size else None))

    integral, _ = quad(lambda s: float(spec.f(s)), 0.0, 1.0, epsabs=1e-12, limit=200)
    checks.append(HypothesisCheck("int_0^1 f > 0", integral > 0.0,
                                  None if integral > 0.0 else 1.0,
                                  f"integral = {integral:.6e}"))

    return ValidationReport(tuple(checks))
