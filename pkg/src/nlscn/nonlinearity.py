"""Defocusing nonlinearity models and the energy-difference quotient.

A model bundles the density-dependent coefficient ``gamma``, its
antiderivative ``Gamma`` (supplied in closed form, never by runtime
quadrature: the quotient below is evaluated at every quadrature point of
every fixed-point iteration) and the derivative ``gamma_prime``.  The
difference quotient

    (Gamma(b) - Gamma(a)) / (b - a)

replaces gamma in the implicit stepper; by the fundamental theorem of
calculus it is the mean of gamma over [a, b], which is exactly what makes
the discrete energy a conserved quantity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, ModelError

#: default relative threshold below which the quotient switches to its
#: second-order midpoint limit gamma((a+b)/2)
DEFAULT_EPS_DEN = 1e-12

# central-difference validation settings (see validate_model)
_FD_STEP = 1e-5
_FD_RTOL = 1e-6


@dataclass(frozen=True)
class NonlinearityModel:
    """Coefficient triple (gamma, Gamma, gamma_prime) with Gamma' = gamma.

    All three callables must accept scalars and numpy arrays of
    nonnegative densities.  Instances are immutable and safe to share
    between concurrent runs.
    """

    name: str
    gamma: Callable
    Gamma: Callable
    gamma_prime: Callable
    params: dict = field(default_factory=dict)

    def __repr__(self):
        pars = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"NonlinearityModel({self.name}, {pars})"


def power_law(kappa, q):
    """gamma(r) = kappa * r**q with q > 0 (q = 1 recovers the cubic NLS)."""
    if kappa < 0:
        raise ConfigError("power-law kappa must be >= 0 (defocusing regime)")
    if q <= 0:
        raise ConfigError("power-law exponent q must be positive")
    return NonlinearityModel(
        name="power",
        gamma=lambda r: kappa * np.power(r, q),
        Gamma=lambda r: kappa / (q + 1.0) * np.power(r, q + 1.0),
        gamma_prime=lambda r: kappa * q * np.power(r, q - 1.0),
        params={"kappa": kappa, "q": q},
    )


def cubic(kappa):
    """gamma(r) = kappa * r, the Gross-Pitaevskii nonlinearity."""
    if kappa < 0:
        raise ConfigError("cubic kappa must be >= 0 (defocusing regime)")
    return NonlinearityModel(
        name="cubic",
        gamma=lambda r: kappa * np.asarray(r, dtype=float),
        Gamma=lambda r: 0.5 * kappa * np.square(r),
        gamma_prime=lambda r: np.full_like(np.asarray(r, dtype=float), kappa),
        params={"kappa": kappa},
    )


def saturated(kappa, alpha):
    """gamma(r) = kappa*r/(1 + alpha*r), bounded optical-saturation model."""
    if kappa < 0 or alpha < 0:
        raise ConfigError("saturated model needs kappa, alpha >= 0")
    if alpha == 0:
        return cubic(kappa)
    return NonlinearityModel(
        name="saturated",
        gamma=lambda r: kappa * r / (1.0 + alpha * r),
        Gamma=lambda r: (kappa / alpha**2) * (alpha * r - np.log1p(alpha * r)),
        gamma_prime=lambda r: kappa / np.square(1.0 + alpha * r),
        params={"kappa": kappa, "alpha": alpha},
    )


def linear():
    """gamma identically zero: plain linear Schrodinger dynamics."""
    return NonlinearityModel(
        name="none",
        gamma=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        Gamma=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        gamma_prime=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        params={},
    )


def from_config(spec):
    """Build a model from a config mapping, e.g.

    ``{"type": "saturated", "kappa": 10.0, "alpha": 1.0}``
    ``{"type": "power", "kappa": 1.0, "q": 1.0}``
    ``{"type": "cubic", "kappa": 1.0}`` or ``{"type": "none"}``
    """
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"nonlinearity spec must be a mapping with a 'type': {spec!r}")
    kind = spec["type"]
    try:
        if kind == "power":
            return power_law(float(spec["kappa"]), float(spec["q"]))
        if kind == "cubic":
            return cubic(float(spec["kappa"]))
        if kind == "saturated":
            return saturated(float(spec["kappa"]), float(spec["alpha"]))
        if kind == "none":
            return linear()
    except KeyError as missing:
        raise ConfigError(f"nonlinearity {kind!r} is missing parameter {missing}") from None
    raise ConfigError(f"unknown nonlinearity type {kind!r}")


def gamma_quotient(a, b, model, eps_den=DEFAULT_EPS_DEN):
    """Mean of gamma over [a, b]: (Gamma(b) - Gamma(a)) / (b - a).

    Switches to gamma((a+b)/2), the second-order-accurate limit, once
    |b - a| < eps_den * max(1, a, b); this keeps the conservation algebra
    intact to rounding when a step barely changes the density.

    Accepts scalars or arrays (densities must be nonnegative); the result
    always lies between min and max of gamma over [a, b].
    """
    if eps_den <= 0:
        raise ConfigError("eps_den must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.min() < 0 or b.min() < 0:
        raise DomainError("densities must be nonnegative")
    scale = np.maximum(1.0, np.maximum(a, b))
    diff = b - a
    degenerate = np.abs(diff) < eps_den * scale
    safe = np.where(degenerate, 1.0, diff)
    quot = (model.Gamma(b) - model.Gamma(a)) / safe
    mid = model.gamma(0.5 * (a + b))
    out = np.where(degenerate, mid, quot)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ValidationReport:
    """Maximum deviations observed while checking a model's invariants."""

    model: str
    r_max: float
    n_samples: int
    antiderivative_dev: float  # |central diff of Gamma - gamma|, scaled
    derivative_dev: float      # |central diff of gamma - gamma_prime|, scaled
    min_gamma: float
    passed: bool


def validate_model(model, r_max, n_samples=100):
    """Cross-check the (gamma, Gamma, gamma_prime) triple numerically.

    Samples a log-spaced grid in (0, r_max] and verifies

    * gamma(0) = 0 and Gamma(0) = 0,
    * gamma >= 0 (defocusing),
    * the central difference of Gamma matches gamma,
    * the central difference of gamma matches gamma_prime,

    the differences taken with step 1e-5*max(1, r) and compared at
    relative tolerance 1e-6 (relative to max(1, |gamma|), which keeps the
    check meaningful where gamma itself vanishes).  Raises ModelError
    naming the failed property; returns a ValidationReport on success.
    """
    if r_max <= 0:
        raise ConfigError("r_max must be positive")
    if n_samples < 10:
        raise ConfigError("need at least 10 samples")

    # two decades below r_max: far enough down to catch a wrong antiderivative,
    # high enough that the finite-difference truncation stays below tolerance
    # even for sublinear power laws
    r = np.logspace(np.log10(r_max) - 2.0, np.log10(r_max), n_samples)

    g0 = float(np.asarray(model.gamma(0.0)))
    G0 = float(np.asarray(model.Gamma(0.0)))
    if abs(g0) > 1e-14 or abs(G0) > 1e-14:
        raise ModelError(f"model {model.name!r}: gamma(0)={g0:g}, Gamma(0)={G0:g}; both must vanish")

    gam = np.asarray(model.gamma(r), dtype=float)
    min_gamma = float(gam.min())
    if min_gamma < 0:
        raise ModelError(f"model {model.name!r}: gamma takes negative value {min_gamma:g} (focusing not supported)")

    step = _FD_STEP * np.maximum(1.0, r)
    scale = np.maximum(1.0, np.abs(gam))

    cd_Gamma = (model.Gamma(r + step) - model.Gamma(r - step)) / (2.0 * step)
    dev_G = float(np.max(np.abs(cd_Gamma - gam) / scale))
    if dev_G > _FD_RTOL:
        raise ModelError(
            f"model {model.name!r}: antiderivative check failed, Gamma' deviates from gamma by {dev_G:.3e} (tol {_FD_RTOL:g})"
        )

    cd_gamma = (model.gamma(r + step) - model.gamma(r - step)) / (2.0 * step)
    gp = np.asarray(model.gamma_prime(r), dtype=float)
    dev_g = float(np.max(np.abs(cd_gamma - gp) / scale))
    if dev_g > _FD_RTOL:
        raise ModelError(
            f"model {model.name!r}: derivative check failed, gamma' deviates from central difference by {dev_g:.3e} (tol {_FD_RTOL:g})"
        )

    return ValidationReport(
        model=model.name,
        r_max=float(r_max),
        n_samples=int(n_samples),
        antiderivative_dev=dev_G,
        derivative_dev=dev_g,
        min_gamma=min_gamma,
        passed=True,
    )
