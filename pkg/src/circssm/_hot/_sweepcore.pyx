# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the pure latent-path scan.

Same signature, same proposal-stream contract, same jitter ladder.  The
surface-kernel factorization goes through LAPACK dpotrf on a row-major
buffer: factoring the 'U' triangle of the column-major view leaves the
numpy-lower factor L with A = L L'.
"""

import numpy as np

from ..errors import NumericalSingularityError

cimport cython
from libc.math cimport cos, sin, fabs, fmod, log, pow

from scipy.linalg.cython_blas cimport dtrsv
from scipy.linalg.cython_lapack cimport dpotrf

cdef double TWO_PI = 6.283185307179586476925287
cdef double LOG_2PI = 1.837877066409345483560659
cdef double JITTER_START = 1e-10
cdef double JITTER_MAX = 1e-6


cdef inline double c_wrap(double v) nogil:
    cdef double r = fmod(v, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r = 0.0
    return r


cdef int _factor(double[:, ::1] Ef, double[:] z, double[:, ::1] buf,
                 int m, double jitter) nogil:
    """Cholesky of Ef*cos|dz| + ridge into buf; 0 on success, -1 otherwise."""
    cdef int i, j, k, info
    cdef double jit, a
    cdef char uplo = b'U'
    for k in range(8):
        if jitter >= 0.0:
            jit = jitter
        else:
            jit = JITTER_START * pow(10.0, k)
            if jit > JITTER_MAX:
                return -1
        for i in range(m):
            for j in range(i):
                a = Ef[i, j] * cos(fabs(z[i] - z[j]))
                buf[i, j] = a
                buf[j, i] = a
            buf[i, i] = Ef[i, i] + jit
        dpotrf(&uplo, &m, &buf[0, 0], &m, &info)
        if info == 0:
            return 0
        if jitter >= 0.0:
            return -1
    return -1


cdef double _quad_logdet(double[:, ::1] L, double[:] z, double[:] fstar_vals,
                         double[:] beta_f, double var_f, double[:] work,
                         int m) nogil:
    """Gaussian log density given the factored kernel in L."""
    cdef int i, one = 1
    cdef double t, logdet = 0.0, quad = 0.0
    cdef char uplo = b'U', trans = b'T', diag = b'N'
    for i in range(m):
        t = i + 1.0
        work[i] = fstar_vals[i] - (
            beta_f[0] + beta_f[1] * t + beta_f[2] * cos(z[i])
            + beta_f[3] * sin(z[i])
        )
    dtrsv(&uplo, &trans, &diag, &m, &L[0, 0], &m, &work[0], &one)
    for i in range(m):
        logdet += 2.0 * log(L[i, i])
        quad += work[i] * work[i]
    return -0.5 * (m * (LOG_2PI + log(var_f)) + logdet + quad / var_f)


cdef void _transition(int t, double z_prev, double[:, ::1] Eg,
                      double[:] grid_angles, double[:, ::1] Ainv, double[:] w,
                      double[:] beta_g, double var_eta, double var_g,
                      double[:] s, double* mu_out, double* var_out) nogil:
    cdef int i, j, n = grid_angles.shape[0]
    cdef double mu, q = 0.0, acc
    mu = (beta_g[0] + beta_g[1] * t + beta_g[2] * cos(z_prev)
          + beta_g[3] * sin(z_prev))
    for i in range(n):
        s[i] = Eg[t, i] * cos(fabs(z_prev - grid_angles[i]))
        mu += s[i] * w[i]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += Ainv[i, j] * s[j]
        q += s[i] * acc
    acc = 1.0 - q
    if acc < 0.0:
        acc = 0.0
    mu_out[0] = mu
    var_out[0] = var_eta + var_g * acc


def latent_scan(double[:] x, long long[:] K, double[:] fstar,
                double[:, ::1] Ef, double[:] beta_f, double var_f,
                double gstar, double var_eta, double var_g,
                double[:] beta_g, double[:] grid_angles, double[:, ::1] Eg,
                double[:, ::1] Ainv, double[:] w,
                double[:] incr, double[:] logu, double jitter):
    """See the pure twin; mutates x in place, returns accepted count."""
    cdef int T = x.shape[0] - 2
    cdef int m = T + 1
    cdef int n = grid_angles.shape[0]
    cdef int t, accepted = 0, fail = 0
    cdef double x_prop, mu_in, var_in, v_cur, v_prop, v_out, delta
    cdef double mu_c, var_c, mu_p, var_p, cur_gp, prop_gp
    buf_np = np.empty((m, m))
    z_np = np.asarray(x[1:]).copy()
    work_np = np.empty(m)
    s_np = np.empty(n)
    fs_np = np.asarray(fstar[1:]).copy()
    cdef double[:, ::1] buf = buf_np
    cdef double[:] z = z_np
    cdef double[:] work = work_np
    cdef double[:] s = s_np
    cdef double[:] fs = fs_np
    with nogil:
        if _factor(Ef, z, buf, m, jitter) != 0:
            fail = 1
        else:
            cur_gp = _quad_logdet(buf, z, fs, beta_f, var_f, work, m)
            for t in range(1, T + 2):
                x_prop = c_wrap(x[t] + incr[t - 1])
                if t == 1:
                    mu_in = gstar
                    var_in = var_eta
                else:
                    _transition(t, x[t - 1], Eg, grid_angles, Ainv, w,
                                beta_g, var_eta, var_g, s, &mu_in, &var_in)
                v_cur = x[t] + TWO_PI * K[t] - mu_in
                v_prop = x_prop + TWO_PI * K[t] - mu_in
                delta = -0.5 * (v_prop * v_prop - v_cur * v_cur) / var_in
                if t <= T:
                    _transition(t + 1, x[t], Eg, grid_angles, Ainv, w,
                                beta_g, var_eta, var_g, s, &mu_c, &var_c)
                    _transition(t + 1, x_prop, Eg, grid_angles, Ainv, w,
                                beta_g, var_eta, var_g, s, &mu_p, &var_p)
                    v_out = x[t + 1] + TWO_PI * K[t + 1]
                    delta += -0.5 * (
                        (v_out - mu_p) * (v_out - mu_p) / var_p
                        - (v_out - mu_c) * (v_out - mu_c) / var_c
                        + log(var_p) - log(var_c)
                    )
                z[t - 1] = x_prop
                if _factor(Ef, z, buf, m, jitter) != 0:
                    # Singular kernel at the proposal only: reject the move.
                    z[t - 1] = x[t]
                    continue
                prop_gp = _quad_logdet(buf, z, fs, beta_f, var_f, work, m)
                delta += prop_gp - cur_gp
                if logu[t - 1] < delta:
                    x[t] = x_prop
                    cur_gp = prop_gp
                    accepted += 1
                else:
                    z[t - 1] = x[t]
    if fail:
        raise NumericalSingularityError(
            "surface kernel matrix not positive definite after jitter escalation"
        )
    return accepted
