"""Synthetic series from the benchmark nonlinear circular dynamics.

The latent angle follows a damped drift with a periodic forcing term and
the observation pushes the angle through a tangent link, both reduced to
[0, 2*pi).  This is the standard hard test case: multimodal conditionals
and a sharply nonlinear observation map.
"""

import math
from dataclasses import dataclass

import numpy as np

from .circular import TWO_PI, von_mises_sample, wrap

__all__ = ["SimConfig", "generate"]

_POLE_TOL = 1e-8
_MAX_RESAMPLE = 100


@dataclass
class SimConfig:
    """Generator settings; defaults reproduce the usual benchmark run."""

    T: int = 101
    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 0.2
    sigma_eta: float = 0.1
    sigma_eps: float = 0.1
    x_init: float | None = None  # None draws from vonMises(pi, 3)
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        # Zero is allowed so the noise-free map stays testable.
        if self.sigma_eta < 0.0 or self.sigma_eps < 0.0:
            raise ValueError("noise scales must be nonnegative")
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.x_init is not None and not math.isfinite(self.x_init):
            raise ValueError("x_init must be finite")


def _near_pole(x):
    """True within the guard band of either tangent pole."""
    return (
        abs(x - 0.5 * math.pi) < _POLE_TOL
        or abs(x - 1.5 * math.pi) < _POLE_TOL
    )


def generate(cfg):
    """Return (y, x): observed angles y_1..y_T and latent path x_0..x_T.

    The drift reads the previous angle as a plain real in [0, 2*pi); the
    observation map evaluates tan at the canonical angle.  A latent angle
    landing within 1e-8 of a tangent pole gets its noise redrawn, up to 100
    times, before the generator gives up.
    """
    rng = np.random.default_rng(cfg.seed)
    T = cfg.T
    x = np.empty(T + 1)
    if cfg.x_init is None:
        x[0] = von_mises_sample(rng, math.pi, 3.0)
    else:
        x[0] = wrap(float(cfg.x_init))
    y = np.empty(T)
    for t in range(1, T + 1):
        prev = x[t - 1]
        drift = (
            cfg.alpha * prev
            + cfg.beta * prev / (1.0 + prev * prev)
            + cfg.gamma * math.cos(1.2 * (t - 2))
        )
        for attempt in range(_MAX_RESAMPLE + 1):
            xt = wrap(drift + cfg.sigma_eta * rng.standard_normal())
            if not _near_pole(xt):
                break
        else:
            raise RuntimeError(
                f"latent angle stuck within {_POLE_TOL} of a tangent pole "
                f"at t={t} after {_MAX_RESAMPLE} noise redraws"
            )
        x[t] = xt
        tn = math.tan(xt)
        y[t - 1] = wrap(-tn + tn * tn / 20.0 + cfg.sigma_eps * rng.standard_normal())
    return y, x
