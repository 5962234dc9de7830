"""Canonical angles, wrap counts, and circular densities.

Angles are plain floats (or float arrays) kept in the canonical interval
[0, 2*pi); ``wrap`` is the single place where values are reduced.  A linear
(unwrapped) value x* splits into ``(wrap(x*), floor(x* / 2pi))``; the integer
part is the wrap count that the samplers treat as an explicit latent variable.

Densities
---------
``von_mises_logpdf``      exp(kappa*cos(theta - mu)) / (2*pi*I0(kappa))
``wrapped_normal_logpdf`` sum_k N(theta + 2*pi*k; mu, sigma2), truncated

The wrapped-normal truncation keeps K = ceil(5*sigma/(2*pi)) + 2 terms on each
side of the nearest-turn center (never fewer than 3), which bounds the omitted
mass below 1e-12 for sigma <= 40.
"""

import math

import numpy as np
from scipy import special

TWO_PI = 2.0 * math.pi

UNITS = ("radians", "degrees", "clock24")

__all__ = [
    "TWO_PI",
    "UNITS",
    "wrap",
    "split_turns",
    "convert",
    "von_mises_logpdf",
    "von_mises_sample",
    "wrapped_normal_logpdf",
    "wrapped_normal_sample",
]


def _finite(values, name):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} must be finite")


def wrap(theta):
    """Reduce angles to the canonical interval [0, 2*pi).

    Accepts scalars or arrays; non-finite input raises ValueError.  The
    upper endpoint is excluded: values whose reduction rounds up to 2*pi
    map to 0.0.
    """
    th = np.asarray(theta, dtype=float)
    _finite(th, "angle")
    out = np.mod(th, TWO_PI)
    # np.mod can round up to the divisor for tiny negative inputs.
    out = np.where(out >= TWO_PI, 0.0, out)
    if th.ndim == 0:
        return float(out)
    return out


def split_turns(value):
    """Split linear values into (canonical angle, integer wrap count).

    ``angle + 2*pi*count`` reconstructs the input up to one rounding of the
    final subtraction (exactly, for non-negative inputs).
    """
    x = np.asarray(value, dtype=float)
    _finite(x, "value")
    count = np.floor(x / TWO_PI)
    angle = x - TWO_PI * count
    # Guard the two float edges: the division rounding can put the residual
    # just outside [0, 2*pi).
    high = angle >= TWO_PI
    count = np.where(high, count + 1.0, count)
    angle = np.where(high, 0.0, angle)
    angle = np.where(angle < 0.0, 0.0, angle)
    if x.ndim == 0:
        return float(angle), int(count)
    return angle, count.astype(np.int64)


def convert(values, unit):
    """Convert values in the named unit to canonical radians.

    Supported units: ``radians``, ``degrees`` (pi/180 per degree), and
    ``clock24`` (2*pi/24 per hour; input must lie in [0, 24)).
    """
    vals = np.asarray(values, dtype=float)
    _finite(vals, "values")
    if unit == "radians":
        return wrap(vals)
    if unit == "degrees":
        return wrap(vals * (math.pi / 180.0))
    if unit == "clock24":
        bad = (vals < 0.0) | (vals >= 24.0)
        if np.any(bad):
            idx = int(np.argmax(np.atleast_1d(bad)))
            raise ValueError(
                f"clock24 value {np.atleast_1d(vals)[idx]} outside [0, 24)"
            )
        return wrap(vals * (TWO_PI / 24.0))
    raise ValueError(f"unknown unit {unit!r}; expected one of {UNITS}")


def von_mises_logpdf(theta, mu, kappa):
    """Log density of the von Mises distribution on [0, 2*pi).

    ``kappa`` must be a positive finite scalar.  Uses the exponentially
    scaled Bessel function, so the evaluation is stable for large kappa.
    """
    kappa = float(kappa)
    if not (math.isfinite(kappa) and kappa > 0.0):
        raise ValueError("kappa must be positive and finite")
    th = np.asarray(theta, dtype=float)
    mu_ = np.asarray(mu, dtype=float)
    _finite(th, "theta")
    _finite(mu_, "mu")
    # log I0(kappa) = log i0e(kappa) + kappa; the kappa terms combine.
    out = kappa * (np.cos(th - mu_) - 1.0) - math.log(TWO_PI) - math.log(
        special.i0e(kappa)
    )
    if out.ndim == 0:
        return float(out)
    return out


def von_mises_sample(rng, mu, kappa, size=None):
    """Draw von Mises angles (Best-Fisher rejection), wrapped to [0, 2*pi)."""
    kappa = float(kappa)
    if not (math.isfinite(kappa) and kappa > 0.0):
        raise ValueError("kappa must be positive and finite")
    return wrap(rng.vonmises(mu, kappa, size=size))


def _wn_terms(sigma2):
    sigma2 = float(sigma2)
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError("sigma2 must be positive and finite")
    sigma = math.sqrt(sigma2)
    return sigma2, max(3, math.ceil(5.0 * sigma / TWO_PI) + 2)


def wrapped_normal_logpdf(theta, mu, sigma2):
    """Log density of the wrapped normal distribution on [0, 2*pi).

    ``theta`` and ``mu`` broadcast; ``sigma2`` is a scalar variance.  The
    truncated sum is centered on the nearest turn, so shifting ``mu`` by
    full turns relabels the terms instead of dropping mass.
    """
    sigma2, nterms = _wn_terms(sigma2)
    th = np.asarray(theta, dtype=float)
    mu_ = np.asarray(mu, dtype=float)
    _finite(th, "theta")
    _finite(mu_, "mu")
    delta = th - mu_
    center = np.round(delta / TWO_PI)
    ks = np.arange(-nterms, nterms + 1, dtype=float)
    # residuals theta - mu - 2*pi*(center + k), shape (..., 2K+1)
    resid = delta[..., None] - TWO_PI * (center[..., None] + ks)
    log_terms = -0.5 * resid**2 / sigma2
    out = special.logsumexp(log_terms, axis=-1) - 0.5 * math.log(
        2.0 * math.pi * sigma2
    )
    if out.ndim == 0:
        return float(out)
    return out


def wrapped_normal_sample(rng, mu, sigma2, size=None):
    """Draw (angle, wrap count) pairs from the wrapped normal distribution.

    Returns the canonical angle together with the integer number of turns of
    the underlying normal draw, so angle + 2*pi*count recovers it.
    """
    sigma2 = float(sigma2)
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError("sigma2 must be positive and finite")
    draws = rng.normal(loc=mu, scale=math.sqrt(sigma2), size=size)
    return split_turns(draws)
