"""Gaussian process over time-angle points.

The process has linear-circular mean h(t, z)'beta with h = (1, t, cos z,
sin z)' and separable correlation

    c((t1, z1), (t2, z2)) = exp(-sigma^4 (t1 - t2)^2) * cos(|z1 - z2|),

where the angles enter through the plain absolute difference of their
canonical values.  The correlation vanishes when the angular separation is
pi/2 and decays to zero as the time separation grows.  All conditioning goes
through one cached Cholesky factor per conditioning set; solves use the
factor directly, never an explicit inverse.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalSingularityError

JITTER_START = 1e-10
JITTER_MAX = 1e-6

__all__ = [
    "ConditionalGaussian",
    "KernelMatrices",
    "design_vector",
    "design_matrix",
    "kernel",
    "kernel_matrix",
    "chol_with_jitter",
    "build_kernel_matrices",
    "gp_conditional",
    "gp_logpdf",
    "gp_prior_draw",
]


def design_vector(t, z):
    """Mean basis h(t, z) = (1, t, cos z, sin z)'."""
    return np.array([1.0, float(t), math.cos(z), math.sin(z)])


def design_matrix(times, angles):
    """Stack h(t_i, z_i)' rows for arrays of points; shape (m, 4)."""
    times = np.asarray(times, dtype=float)
    angles = np.asarray(angles, dtype=float)
    return np.column_stack(
        [np.ones_like(times), times, np.cos(angles), np.sin(angles)]
    )


def kernel(t1, z1, t2, z2, sigma):
    """Separable time-angle correlation; broadcasts over its arguments."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    s4 = float(sigma) ** 4
    out = np.exp(-s4 * (t1 - t2) ** 2) * np.cos(np.abs(z1 - z2))
    if out.ndim == 0:
        return float(out)
    return out


def kernel_matrix(times, angles, sigma):
    """Dense correlation matrix of a point set; unit diagonal by construction."""
    times = np.asarray(times, dtype=float)
    angles = np.asarray(angles, dtype=float)
    return kernel(
        times[:, None], angles[:, None], times[None, :], angles[None, :], sigma
    )


def _nearest_pair(A):
    """Index pair of the two most correlated distinct points."""
    m = A.shape[0]
    off = np.abs(A - np.eye(m) * A.diagonal())
    i, j = np.unravel_index(np.argmax(off), off.shape)
    return (int(i), int(j)) if i < j else (int(j), int(i))


def chol_with_jitter(A, jitter=None, times=None, angles=None):
    """Lower Cholesky factor of A + jitter*I.

    With ``jitter=None`` the ridge escalates tenfold from 1e-10 up to 1e-6
    until the factorization succeeds; a deterministic function of A.  On
    exhaustion (or failure at an explicitly requested jitter) raises
    ``NumericalSingularityError`` naming the closest pair of points.
    """
    ladder = (
        [float(jitter)]
        if jitter is not None
        else [JITTER_START * 10.0**k for k in range(8)]
    )
    m = A.shape[0]
    eye = np.eye(m)
    for j in ladder:
        if j > JITTER_MAX and jitter is None:
            break
        try:
            return np.linalg.cholesky(A + j * eye), j
        except np.linalg.LinAlgError:
            continue
    i, k = _nearest_pair(A) if m > 1 else (0, 0)
    detail = ""
    if times is not None and angles is not None and m > 1:
        detail = (
            f": points (t={times[i]:.6g}, z={angles[i]:.6g}) and "
            f"(t={times[k]:.6g}, z={angles[k]:.6g}) are nearly duplicate"
        )
    raise NumericalSingularityError(
        f"kernel matrix not positive definite after jitter escalation{detail}"
    )


@dataclass
class KernelMatrices:
    """Cached factorization for one conditioning set.

    ``A`` is the pre-jitter correlation matrix, ``chol`` the lower factor of
    A + jitter*I, and ``H`` the stacked design rows.  Rebuild the object
    whenever a conditioning point moves.
    """

    times: np.ndarray
    angles: np.ndarray
    sigma: float
    A: np.ndarray
    H: np.ndarray
    chol: np.ndarray
    jitter: float
    logdet: float = field(default=0.0)

    def __len__(self):
        return self.times.shape[0]


def build_kernel_matrices(times, angles, sigma, jitter=None):
    """Assemble correlation matrix, design matrix, and Cholesky factor."""
    times = np.asarray(times, dtype=float)
    angles = np.asarray(angles, dtype=float)
    A = kernel_matrix(times, angles, sigma)
    L, j = chol_with_jitter(A, jitter=jitter, times=times, angles=angles)
    logdet = 2.0 * float(np.sum(np.log(L.diagonal()))) if len(times) else 0.0
    return KernelMatrices(
        times=times,
        angles=angles,
        sigma=float(sigma),
        A=A,
        H=design_matrix(times, angles),
        chol=L,
        jitter=j,
        logdet=logdet,
    )


class ConditionalGaussian(NamedTuple):
    mean: float
    variance: float


def _clamp_variance(raw, sigma2_gp):
    if raw < -1e-10:
        raise NumericalSingularityError(
            f"conditional variance {raw:.3e} below tolerance"
        )
    return sigma2_gp * max(raw, 0.0)


def gp_conditional(t, z, km, values, beta, sigma2_gp):
    """Conditional law of the process at (t, z) given values on ``km``.

    mean = h'beta + s'A^{-1}(values - H beta)
    var  = sigma2_gp * (1 - s'A^{-1} s)

    An empty conditioning set returns the prior (h'beta, sigma2_gp).  The
    variance is clamped to zero when roundoff drives it within 1e-10 below
    zero; anything more negative raises.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (len(km),):
        raise ValueError(
            f"conditioning values have shape {values.shape}, expected ({len(km)},)"
        )
    h = design_vector(t, z)
    prior_mean = float(h @ beta)
    if len(km) == 0:
        return ConditionalGaussian(prior_mean, float(sigma2_gp))
    s = kernel(t, z, km.times, km.angles, km.sigma)
    u = solve_triangular(km.chol, s, lower=True)
    r = solve_triangular(km.chol, values - km.H @ beta, lower=True)
    mean = prior_mean + float(u @ r)
    raw = 1.0 - float(u @ u)
    return ConditionalGaussian(mean, _clamp_variance(raw, float(sigma2_gp)))


def gp_logpdf(values, km, beta, sigma2_gp):
    """Log density of N(values; H beta, sigma2_gp * (A + jitter*I))."""
    m = len(km)
    if m == 0:
        return 0.0
    r = solve_triangular(km.chol, values - km.H @ beta, lower=True)
    return -0.5 * (
        m * math.log(2.0 * math.pi * sigma2_gp)
        + km.logdet
        + float(r @ r) / sigma2_gp
    )


def gp_prior_draw(rng, km, beta, sigma2_gp):
    """One draw of the process values on ``km``'s point set."""
    m = len(km)
    xi = rng.standard_normal(m)
    return km.H @ beta + math.sqrt(sigma2_gp) * (km.chol @ xi)
