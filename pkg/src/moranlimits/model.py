"""Two-type Moran model: parameters and transition rates.

A population of N individuals carries one of two types. Type-0
individuals reproduce at rate 1 + s, type-1 individuals at rate 1, and
each offspring replaces a uniformly chosen individual. Independently,
every individual mutates into type j at rate u * nu_j. The number of
type-0 individuals is then a birth-death chain on {0, ..., N} whose
rates scale with N through a density-dependent kernel: with p = k / N,

    birth rate   lambda_k = N * q(p, +1),   q(p, +1) = (1+s) p (1-p) + u nu0 (1-p)
    death rate   mu_k     = N * q(p, -1),   q(p, -1) = p (1-p) + u nu1 p

and q(p, jump) = 0 for any other jump size.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain the operation is defined on."""


class UnsupportedModelError(ValueError):
    """The parameter regime does not define the requested quantity."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter quadruple of one model instance.

    Attributes:
        N: population size, integer >= 1.
        s: selective advantage of type 0, >= 0.
        u: total mutation rate per individual, >= 0.
        nu0: probability that a mutation produces type 0, strictly
            inside (0, 1). The type-1 probability is always derived as
            nu1 = 1 - nu0 so the pair sums to one exactly.
    """

    N: int
    s: float
    u: float
    nu0: float

    def __post_init__(self) -> None:
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)):
            raise DomainError(f"N must be an integer, got {self.N!r}")
        if self.N < 1:
            raise DomainError(f"N must be >= 1, got {self.N}")
        for name in ("s", "u", "nu0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise DomainError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.s < 0.0:
            raise DomainError(f"s must be >= 0, got {self.s}")
        if self.u < 0.0:
            raise DomainError(f"u must be >= 0, got {self.u}")
        if not 0.0 < self.nu0 < 1.0:
            raise DomainError(f"nu0 must lie strictly inside (0, 1), got {self.nu0}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def nu1(self) -> float:
        return 1.0 - self.nu0

    @classmethod
    def from_dict(cls, block: dict) -> "ModelParams":
        """Build from a key-value block with exactly the keys N, s, u, nu0."""
        required = ("N", "s", "u", "nu0")
        missing = [key for key in required if key not in block]
        if missing:
            raise DomainError(f"missing model keys: {', '.join(missing)}")
        unknown = [key for key in block if key not in required]
        if unknown:
            raise DomainError(f"unknown model keys: {', '.join(sorted(unknown))}")
        return cls(N=block["N"], s=block["s"], u=block["u"], nu0=block["nu0"])

    def to_dict(self) -> dict:
        return {"N": self.N, "s": self.s, "u": self.u, "nu0": self.nu0}


@dataclass(frozen=True)
class KernelValue:
    """One non-trivial entry of the rescaled jump kernel at a fixed p."""

    jump: int
    rate: float

    def __post_init__(self) -> None:
        if self.jump not in (-1, 1):
            raise DomainError(f"jump must be +1 or -1, got {self.jump}")
        if not (self.rate >= 0.0):
            raise DomainError(f"rate must be >= 0, got {self.rate}")


def kernel_q(p: float, jump: int, params: ModelParams) -> float:
    """Rescaled jump kernel q(p, jump) of the density-dependent chain.

    Args:
        p: type-0 proportion, must lie in [0, 1].
        jump: change in the type-0 count; only +1 and -1 carry rate.
        params: model parameters (N is not used here).

    Returns:
        The per-capita rate density; 0.0 for |jump| != 1.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    if jump == 1:
        return (1.0 + params.s) * p * (1.0 - p) + params.u * params.nu0 * (1.0 - p)
    if jump == -1:
        return p * (1.0 - p) + params.u * params.nu1 * p
    return 0.0


def kernel_values(p: float, params: ModelParams) -> tuple[KernelValue, KernelValue]:
    """Both non-trivial kernel entries at proportion p."""
    return (
        KernelValue(jump=1, rate=kernel_q(p, 1, params)),
        KernelValue(jump=-1, rate=kernel_q(p, -1, params)),
    )


def chain_rates(k: int, params: ModelParams) -> tuple[float, float]:
    """Birth and death rates (lambda_k, mu_k) of the finite chain at state k.

    Computed as N * kernel_q(k / N, +/-1) so the density-dependence
    identity holds exactly, not merely up to rounding.

    Args:
        k: type-0 count, integer in {0, ..., N}.
        params: model parameters.

    Returns:
        Pair (lambda_k, mu_k). lambda_N = 0 and mu_0 = 0 always; for
        u = 0 the boundary states 0 and N are absorbing.
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise DomainError(f"k must be an integer, got {k!r}")
    if not 0 <= k <= params.N:
        raise DomainError(f"k must lie in 0..{params.N}, got {k}")
    p = k / params.N
    return params.N * kernel_q(p, 1, params), params.N * kernel_q(p, -1, params)


def rate_tables(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised chain rates for every state 0..N.

    Returns arrays (lam, mu) with lam[k] = lambda_k and mu[k] = mu_k.
    The arithmetic mirrors kernel_q term for term, so entries agree
    bit-for-bit with chain_rates.
    """
    n = params.N
    p = np.arange(n + 1) / n
    lam = n * ((1.0 + params.s) * p * (1.0 - p) + params.u * params.nu0 * (1.0 - p))
    mu = n * (p * (1.0 - p) + params.u * params.nu1 * p)
    return lam, mu
