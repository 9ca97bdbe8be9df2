"""Deterministic large-population limit of the type-0 proportion.

As N grows, the proportion process Z^N converges to the flow of

    z'(t) = drift(z(t)),   drift(x) = s x (1 - x) + u nu0 (1 - x) - u nu1 x,

a Riccati equation solved in closed form below. For s > 0 the drift
has roots

    x_minus < 0 <= x_plus <= 1,   x_{+/-} = (s - u +/- sqrt(disc)) / (2 s),

with disc = (s - u)^2 + 4 s u nu0; x_plus attracts every start in
[0, 1] at exponential rate sqrt(disc). For s = 0, u > 0 the flow
relaxes to nu0 at rate u. For s = u = 0 every point is a fixed point.

The same flow arises from a linear two-type growth system: y' = y A
with per-capita birth rates (1 + s, 1) and mutation exchange, whose
normalised first coordinate reproduces z(t) and whose total mass obeys
y0 + y1 = exp(t + s * int_0^t z).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import rk4
from .model import DomainError, ModelParams, UnsupportedModelError

ArrayLike = Union[float, np.ndarray]

# Width of the band around 0 and 1 treated as representation rounding
# of a boundary value. Excursions beyond it are real and left visible.
_UNIT_SNAP = 1e-13


class Regime(enum.Enum):
    """Qualitative behaviour of the limiting flow."""

    NEUTRAL = "NEUTRAL"              # s = u = 0: frozen
    MUTATION_ONLY = "MUTATION_ONLY"  # s = 0, u > 0: exponential relaxation to nu0
    SELECTION = "SELECTION"          # s > 0: rational-exponential relaxation to x_plus


def classify_regime(params: ModelParams) -> Regime:
    if params.s > 0.0:
        return Regime.SELECTION
    if params.u > 0.0:
        return Regime.MUTATION_ONLY
    return Regime.NEUTRAL


class DriftFunctions:
    """Drift, drift slope, and jump-activity polynomials of one model.

    diffusion(x) is the total per-capita jump activity
    kernel_q(x, +1) + kernel_q(x, -1): the finite chain's total event
    rate at proportion p equals N * diffusion(p), and the same function
    is the noise coefficient of the Gaussian fluctuation law. For u > 0
    it is bounded below on [0, 1] by u * min(nu0, nu1) > 0.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        s, u, nu0, nu1 = params.s, params.u, params.nu0, params.nu1
        # drift(x) = -s x^2 + (s - u) x + u nu0
        self._a = -s
        self._b = s - u
        self._c = u * nu0
        # diffusion(x) = -(2 + s) x^2 + (2 + s - u (nu0 - nu1)) x + u nu0
        self._ga = -(2.0 + s)
        self._gb = 2.0 + s - u * (nu0 - nu1)
        self._gc = u * nu0

    def drift(self, x: ArrayLike) -> ArrayLike:
        return (self._a * x + self._b) * x + self._c

    def drift_slope(self, x: ArrayLike) -> ArrayLike:
        return 2.0 * self._a * x + self._b

    def diffusion(self, x: ArrayLike) -> ArrayLike:
        return (self._ga * x + self._gb) * x + self._gc

    @property
    def discriminant(self) -> float:
        """(s - u)^2 + 4 s u nu0 for s > 0; u for s = 0, u > 0.

        Undefined in the frozen regime s = u = 0.
        """
        s, u = self.params.s, self.params.u
        if s > 0.0:
            return (s - u) ** 2 + 4.0 * s * u * self.params.nu0
        if u > 0.0:
            return u
        raise UnsupportedModelError(
            "discriminant is undefined for s = u = 0 (every point is stationary)"
        )


@dataclass(frozen=True)
class Equilibria:
    """Fixed points of the limiting flow and their linear stability.

    x_stable attracts all of [0, 1]; slope_stable is the drift slope
    there and is always negative. x_unstable (present only under
    selection) lies at or below 0 and repels; its slope is positive.
    relaxation_rate = -slope_stable is the exponential approach rate,
    equal to sqrt(discriminant) when s > 0 and to u when s = 0.
    """

    regime: Regime
    x_stable: float
    x_unstable: Optional[float]
    slope_stable: float
    slope_unstable: Optional[float]
    discriminant: float

    @property
    def relaxation_rate(self) -> float:
        return -self.slope_stable


def _drift_roots(params: ModelParams) -> tuple[float, float]:
    """Roots (x_minus, x_plus) of the drift for s > 0, cancellation-free.

    The drift vanishes where s x^2 - (s - u) x - u nu0 = 0. The root on
    the same side as the sign of (s - u) is computed from the quadratic
    formula (no cancellation there) and the other from the root product
    -u nu0 / s, which stays accurate when the subtraction would cancel.
    """
    s, u, nu0 = params.s, params.u, params.nu0
    disc = (s - u) ** 2 + 4.0 * s * u * nu0
    root = math.sqrt(disc)
    if s - u >= 0.0:
        x_plus = (s - u + root) / (2.0 * s)
        x_minus = -(u * nu0) / (s * x_plus) if x_plus != 0.0 else 0.0
    else:
        x_minus = (s - u - root) / (2.0 * s)
        x_plus = -(u * nu0) / (s * x_minus)
    return x_minus, x_plus


def equilibria(params: ModelParams) -> Equilibria:
    """Classify the flow and report its fixed points.

    Raises:
        UnsupportedModelError: for s = u = 0, where every point is a
            fixed point and no isolated equilibrium exists.
    """
    regime = classify_regime(params)
    if regime is Regime.NEUTRAL:
        raise UnsupportedModelError(
            "s = u = 0 freezes the flow; no isolated equilibrium exists"
        )
    if regime is Regime.MUTATION_ONLY:
        return Equilibria(
            regime=regime,
            x_stable=params.nu0,
            x_unstable=None,
            slope_stable=-params.u,
            slope_unstable=None,
            discriminant=params.u,
        )
    x_minus, x_plus = _drift_roots(params)
    disc = (params.s - params.u) ** 2 + 4.0 * params.s * params.u * params.nu0
    root = math.sqrt(disc)
    return Equilibria(
        regime=regime,
        x_stable=x_plus,
        x_unstable=x_minus,
        slope_stable=-root,
        slope_unstable=root,
        discriminant=disc,
    )


def _snap_unit_scalar(z: float) -> float:
    if -_UNIT_SNAP < z < 0.0:
        return 0.0
    if 1.0 < z < 1.0 + _UNIT_SNAP:
        return 1.0
    return z


def _snap_unit(z: np.ndarray) -> np.ndarray:
    z = np.where((z > -_UNIT_SNAP) & (z < 0.0), 0.0, z)
    z = np.where((z < 1.0 + _UNIT_SNAP) & (z > 1.0), 1.0, z)
    return z


def _validate_times(t: ArrayLike) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("t must be finite")
    if np.any(arr < 0.0):
        raise DomainError("t must be >= 0")
    return arr


def _validate_z0(z0: float) -> float:
    if isinstance(z0, bool) or not isinstance(z0, (int, float, np.floating, np.integer)):
        raise DomainError(f"z0 must be a real number, got {z0!r}")
    z0 = float(z0)
    if not 0.0 <= z0 <= 1.0:
        raise DomainError(f"z0 must lie in [0, 1], got {z0}")
    return z0


class DeterministicSolution:
    """Closed-form flow t -> z(z0, t) of the limiting proportion ODE.

    Callable on scalars or arrays of non-negative times. Satisfies the
    flow property z(z(z0, t), r) = z(z0, t + r) and stays inside [0, 1].
    """

    def __init__(self, z0: float, params: ModelParams):
        self.z0 = _validate_z0(z0)
        self.params = params
        self.regime = classify_regime(params)
        self.equilibria: Optional[Equilibria] = (
            None if self.regime is Regime.NEUTRAL else equilibria(params)
        )

    @property
    def x_stable(self) -> Optional[float]:
        return None if self.equilibria is None else self.equilibria.x_stable

    def __call__(self, t: ArrayLike) -> ArrayLike:
        arr = _validate_times(t)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        values = self._evaluate(arr)
        values = _snap_unit(values)
        return float(values[0]) if scalar else values

    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        z0 = self.z0
        if self.regime is Regime.NEUTRAL:
            return np.full_like(t, z0)
        if self.regime is Regime.MUTATION_ONLY:
            nu0 = self.params.nu0
            return nu0 + (z0 - nu0) * np.exp(-self.params.u * t)
        eq = self.equilibria
        x_plus, x_minus = eq.x_stable, eq.x_unstable
        if z0 == x_plus or z0 == x_minus:
            return np.full_like(t, z0)
        d_minus = z0 - x_minus
        d_plus = z0 - x_plus
        decay = np.exp(-eq.relaxation_rate * t)
        numerator = x_plus * d_minus - x_minus * d_plus * decay
        denominator = d_minus - d_plus * decay
        return numerator / denominator


def solve_deterministic(z0: float, params: ModelParams) -> DeterministicSolution:
    """Closed-form solution of the limiting ODE started at z0 in [0, 1]."""
    return DeterministicSolution(z0, params)


def ode_oracle(
    z0: float, t_end: float, step: float, params: ModelParams
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step RK4 integration of the limiting ODE, for cross-checks.

    Deliberately shares no code with the closed form: it sees only the
    drift polynomial. Returns (times, values) at every integration node
    from 0 to t_end; a shorter final step covers any remainder.
    """
    z0 = _validate_z0(z0)
    drift = DriftFunctions(params).drift
    return rk4.integrate(
        lambda _t, z: drift(z), z0, t_end, step, post=_snap_unit_scalar
    )


def ode_oracle_at(
    z0: float, times: ArrayLike, step: float, params: ModelParams
) -> np.ndarray:
    """RK4 state at the requested times, sub-stepping at most `step`."""
    z0 = _validate_z0(z0)
    drift = DriftFunctions(params).drift
    return rk4.integrate_at(
        lambda _t, z: drift(z), z0, times, step, post=_snap_unit_scalar
    )


class LinearModelSolution:
    """Absolute type frequencies (y0, y1) of the linear growth system.

    The two-type branching description assigns per-capita birth rates
    1 + s and 1 and mutation exchange at rates u nu1, u nu0; its mean
    y(t) = (y0, y1) solves y' = y A started from (z0, 1 - z0). Both
    coordinates grow like exp((1 + s x_plus) t) and the normalised
    first coordinate y0 / (y0 + y1) equals the proportion flow z(z0, t).
    """

    def __init__(self, z0: float, params: ModelParams):
        if params.s <= 0.0:
            raise UnsupportedModelError(
                "the linear two-type reduction requires s > 0"
            )
        self.z0 = _validate_z0(z0)
        self.params = params
        eq = equilibria(params)
        self._x_plus = eq.x_stable
        self._x_minus = eq.x_unstable
        self._gap = eq.relaxation_rate  # = s * (x_plus - x_minus)
        self.growth_rates = (
            1.0 + params.s * self._x_plus,
            1.0 + params.s * self._x_minus,
        )

    def __call__(self, t: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
        arr = _validate_times(t)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        x_plus, x_minus = self._x_plus, self._x_minus
        d_minus = self.z0 - x_minus
        d_plus = self.z0 - x_plus
        decay = np.exp(-self._gap * arr)
        scale = np.exp(self.growth_rates[0] * arr) / (x_plus - x_minus)
        y0 = scale * (x_plus * d_minus - x_minus * d_plus * decay)
        y1 = scale * ((1.0 - x_plus) * d_minus - (1.0 - x_minus) * d_plus * decay)
        if scalar:
            return float(y0[0]), float(y1[0])
        return y0, y1

    def proportion(self, t: ArrayLike) -> ArrayLike:
        """y0 / (y0 + y1), which reproduces the proportion flow."""
        y0, y1 = self(t)
        return y0 / (y0 + y1)


def linear_model_solution(z0: float, params: ModelParams) -> LinearModelSolution:
    """Evaluator t -> (y0, y1) for the linear two-type system.

    Raises:
        UnsupportedModelError: when s = 0; the reduction needs a
            selection gap.
    """
    return LinearModelSolution(z0, params)
