"""Native-space norms of candidate impulse responses.

The ``dc`` and ``tc`` families induce reproducing-kernel Hilbert spaces of
exponentially decaying functions.  Three independent routes to the squared
norm are provided:

* `dc_norm_integral` / `tc_norm_integral` -- the first-order differential
  form, integrated after the substitution tau = exp(-2 beta t) so the
  semi-infinite range never needs truncating;
* `dc_norm_series` -- partial sums of squared eigen-coefficients divided by
  eigenvalues;
* `genspline_norm_integral` -- the unit-interval form for functions of the
  transformed coordinate, which the half-line routes must agree with.

`membership_necessary_check` screens exponential decay rates: a function
behaving like exp(-gamma t) can only have finite norm when gamma exceeds
the kernel's diagonal decay rate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .kernels import KernelSpec, stable_params
from .mercer import EigenSystem, _power_sine, eigenvalue
from .quadrature import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    composite_rule,
    integrate_refining,
    unit_breakpoints,
)

__all__ = [
    "FunctionHandle",
    "MembershipVerdict",
    "membership_necessary_check",
    "dc_norm_integral",
    "tc_norm_integral",
    "dc_norm_series",
    "genspline_norm_integral",
]

_FD_RELATIVE_STEP = 1e-6


def _vector_call(fn, x):
    x = np.asarray(x, dtype=float)
    y = np.asarray(fn(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    return y


@dataclass(frozen=True)
class FunctionHandle:
    """A scalar function with optional analytic derivative.

    ``func`` and ``deriv`` must accept numpy arrays (ufunc style).  When no
    derivative is supplied a second-order finite difference with relative
    step 1e-6 stands in.  ``decay_hint`` is the dominant exponential decay
    rate, used for membership screening; ``corners`` lists argument values
    where the derivative jumps, so quadratures can split there.
    """

    func: Callable
    deriv: Callable | None = None
    decay_hint: float | None = None
    corners: tuple = ()

    def evaluate(self, t):
        return _vector_call(self.func, t)

    def derivative(self, t):
        if self.deriv is not None:
            return _vector_call(self.deriv, t)
        return self.finite_difference(t)

    def finite_difference(self, t):
        """Second-order difference quotient, one-sided near the left edge."""
        t = np.asarray(t, dtype=float)
        h = _FD_RELATIVE_STEP * np.maximum(np.abs(t), 1.0)
        interior = t - h >= 0.0
        hi = self.evaluate(t + h)
        lo = self.evaluate(np.where(interior, t - h, t))
        central = (hi - lo) / (2.0 * h)
        forward = (
            -3.0 * self.evaluate(t) + 4.0 * self.evaluate(t + h) - self.evaluate(t + 2.0 * h)
        ) / (2.0 * h)
        out = np.where(interior, central, forward)
        return out


def _check_derivative(handle: FunctionHandle, lo: float, hi: float, seed: int = 1) -> None:
    """Spot-check an analytic derivative against finite differences.

    Ten deterministic points in (lo, hi), skipping neighbourhoods of the
    declared corners.  A gross mismatch means the caller wired the wrong
    derivative; tolerance is loose so legitimate stiffness passes.
    """
    if handle.deriv is None:
        return
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=10)
    if handle.corners:
        corners = np.asarray(handle.corners, dtype=float)
        gap = np.min(np.abs(pts[:, None] - corners[None, :]), axis=1)
        pts = pts[gap > 1e-3 * (1.0 + np.abs(pts))]
    if pts.size == 0:
        return
    analytic = handle.derivative(pts)
    numeric = handle.finite_difference(pts)
    scale = np.maximum(np.abs(analytic), np.maximum(np.abs(handle.evaluate(pts)), 1e-8))
    bad = np.abs(analytic - numeric) > 1e-3 * scale
    if np.any(bad):
        worst = int(np.argmax(np.abs(analytic - numeric) / scale))
        raise DomainError(
            "analytic derivative disagrees with a finite difference "
            f"(t={pts[worst]:.6g}: {analytic[worst]:.6g} vs {numeric[worst]:.6g})"
        )


class MembershipVerdict(enum.Enum):
    """Outcome of the necessary-condition screen (it is not sufficient)."""

    PASSES_NECESSARY = "passes_necessary"
    FAILS_NECESSARY = "fails_necessary"


def membership_necessary_check(gamma, spec: KernelSpec) -> MembershipVerdict:
    """Screen exp(-gamma t) decay against the kernel's diagonal decay."""
    g = float(gamma)
    if not np.isfinite(g) or g <= 0.0:
        raise DomainError("decay rate must be finite and > 0")
    alpha, beta, rho = stable_params(spec)
    threshold = (2.0 * rho + 1.0) * beta
    if abs(threshold - alpha) > 1e-15 * max(1.0, abs(alpha)):
        raise RuntimeError(
            f"internal inconsistency: (2 rho + 1) beta = {threshold!r} != alpha = {alpha!r}"
        )
    if g > threshold:
        return MembershipVerdict.PASSES_NECESSARY
    return MembershipVerdict.FAILS_NECESSARY


def _corner_splits(corners, beta):
    return tuple(float(np.exp(-2.0 * beta * c)) for c in corners)


def dc_norm_integral(
    handle: FunctionHandle, spec: KernelSpec, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """Squared dc-norm via the weighted first-order differential form.

    Substituting tau = exp(-2 beta t) maps the half line onto (0, 1]; the
    integrand is evaluated in a scaled form that avoids premature overflow
    and the tail toward tau = 0 is extended until it settles.  Divergence
    (decay too slow for the space) raises `DivergenceError`.
    """
    _, beta, rho = stable_params(spec)
    _check_derivative(handle, 0.05, 4.0 / beta)

    def integrand(tau):
        t = np.log(tau) / (-2.0 * beta)
        q = handle.derivative(t) / (2.0 * beta) + rho * handle.evaluate(t)
        scaled = tau ** (-(rho + 1.0)) * q
        return scaled * scaled

    return integrate_refining(integrand, quad, splits=_corner_splits(handle.corners, beta))


def tc_norm_integral(
    handle: FunctionHandle, spec: KernelSpec, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """Squared tc-norm, the unweighted special case of the differential form."""
    if spec.variant != "tc":
        raise DomainError("tc_norm_integral expects a tc kernel spec")
    beta = spec.beta
    _check_derivative(handle, 0.05, 4.0 / beta)

    def integrand(tau):
        t = np.log(tau) / (-2.0 * beta)
        q = handle.derivative(t) / (2.0 * beta)
        scaled = q / tau
        return scaled * scaled

    return integrate_refining(integrand, quad, splits=_corner_splits(handle.corners, beta))


def genspline_norm_integral(
    handle: FunctionHandle, rho: float, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """Squared norm of a unit-interval function in the power-weighted space.

    ``handle`` lives on [0, 1] (with f(0) = 0); the integrand is the squared
    derivative of f(tau) / tau^rho.  Equals the half-line dc norm of
    f(exp(-2 beta t)) for every beta, which tests exploit.
    """
    rho = float(rho)
    if rho <= -0.5:
        raise DomainError("rho must be > -0.5")
    _check_derivative(handle, 0.05, 0.95)

    def integrand(tau):
        num = handle.derivative(tau) * tau - rho * handle.evaluate(tau)
        scaled = tau ** (-(rho + 1.0)) * num
        return scaled * scaled

    splits = tuple(float(c) for c in handle.corners)
    return integrate_refining(integrand, quad, splits=splits)


def dc_norm_series(
    handle: FunctionHandle,
    system: EigenSystem,
    truncation: int | None = None,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
):
    """Partial series norm: coefficients and sum of coeff^2 / eigenvalue.

    Coefficients are inner products against the eigenfunctions under the
    half-line measure, computed on the unit interval after the coordinate
    change.  Returns ``(norm_sq_partial, coefficients)``; the partial sums
    are nondecreasing, so the value approaches the squared norm from below.
    Small coefficients are kept as computed, never truncated to zero.
    """
    if system.kernel.variant not in ("dc", "tc"):
        raise DomainError("series norm expects a dc/tc eigen-system")
    m = system.truncation if truncation is None else int(truncation)
    if m < 1:
        raise DomainError("truncation must be >= 1")
    beta = system.kernel.beta
    rho = system.rho
    if handle.decay_hint is not None:
        verdict = membership_necessary_check(handle.decay_hint, system.kernel)
        if verdict is MembershipVerdict.FAILS_NECESSARY:
            raise DomainError(
                f"decay hint {handle.decay_hint!r} fails the necessary membership condition"
            )
    _check_derivative(handle, 0.05, 4.0 / beta)

    graded = rho != 0.0
    splits = _corner_splits(handle.corners, beta)
    pts, wts = composite_rule(
        unit_breakpoints(quad, graded=graded, splits=splits), quad.nodes
    )
    t = np.log(pts) / (-2.0 * beta)
    g = handle.evaluate(t)
    if rho == 0.0:
        base = wts * g
    else:
        base = wts * g * pts ** (-rho)
    idx = np.arange(1, m + 1)
    sines = _power_sine(0.0, idx[:, None], pts[None, :])
    coeffs = sines @ base
    lam = eigenvalue(idx)
    norm_sq = float(np.sum(coeffs * coeffs / lam))
    return norm_sq, coeffs
