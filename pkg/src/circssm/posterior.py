"""Posterior containers and downstream analysis.

Everything here consumes the draw matrix produced by the sampler: one-step
forecasting, highest-density arcs for circular quantities, marginal
latent-angle histograms, convergence diagnostics, and leave-one-out
cross-validation.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circular import TWO_PI, wrap
from .errors import NumericalSingularityError, SeriesFormatError
from .model import LookupGrid

__all__ = [
    "PosteriorSamples",
    "CircularHPD",
    "DensityGrid",
    "LooResult",
    "circular_mean",
    "circular_concentration",
    "forecast_y_next",
    "hpd_circular",
    "density_grid",
    "effective_sample_size",
    "geweke_z",
    "summarize",
    "loo_cv",
]


@dataclass
class PosteriorSamples:
    """Kept draws as a dense matrix with named columns plus run metadata."""

    names: list
    draws: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.asarray(self.draws, dtype=float)
        if self.draws.ndim != 2 or self.draws.shape[1] != len(self.names):
            raise ValueError("draw matrix shape does not match column names")
        self._index = {name: i for i, name in enumerate(self.names)}

    def __len__(self):
        return self.draws.shape[0]

    def column(self, name):
        try:
            return self.draws[:, self._index[name]]
        except KeyError:
            raise KeyError(f"no column {name!r} in samples") from None

    def has_column(self, name):
        return name in self._index

    def prefixed(self, prefix):
        """Columns whose name starts with prefix, in storage order."""
        cols = [n for n in self.names if n.startswith(prefix)]
        return cols, self.draws[:, [self._index[n] for n in cols]]

    def to_csv(self, path):
        np.savetxt(
            path,
            self.draws,
            delimiter=",",
            header=",".join(self.names),
            comments="",
            fmt="%.17g",
        )

    @classmethod
    def from_csv(cls, path, meta=None):
        with open(path) as fh:
            header = fh.readline().strip()
        if not header:
            raise SeriesFormatError(f"{path}: empty draws file")
        names = header.split(",")
        draws = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(names=names, draws=draws, meta=meta or {})


def circular_mean(angles):
    """Direction of the resultant vector, in [0, 2*pi)."""
    angles = np.asarray(angles, dtype=float)
    return wrap(math.atan2(float(np.mean(np.sin(angles))), float(np.mean(np.cos(angles)))))


def circular_concentration(angles):
    """Mean resultant length in [0, 1]; 1 means no dispersion."""
    angles = np.asarray(angles, dtype=float)
    return float(
        np.hypot(np.mean(np.cos(angles)), np.mean(np.sin(angles)))
    )


def forecast_y_next(samples, seed=0):
    """Per-draw predictive angles for the observation after the series end.

    Each kept draw contributes wrap(f*(T+1) + eps) with eps drawn from that
    draw's observation variance; a fixed seed pins the noise stream.
    """
    if not samples.has_column("fstar_T1"):
        raise ValueError(
            "samples lack the forecast-point column fstar_T1; rerun the chain"
            " with forecast storage enabled"
        )
    rng = np.random.default_rng(seed)
    f = samples.column("fstar_T1")
    sd = np.sqrt(samples.column("sigma2_eps"))
    return wrap(f + sd * rng.standard_normal(len(samples)))


@dataclass
class CircularHPD:
    """Union of highest-density arcs on the circle.

    Arcs are (start, end) with start in [0, 2*pi) and end > start; an arc
    whose end exceeds 2*pi crosses the origin.  ``mass`` is the achieved
    sample fraction, at least the requested level.
    """

    intervals: list
    mass: float

    def contains(self, theta):
        th = wrap(theta)
        for lo, hi in self.intervals:
            if lo <= th < hi or lo <= th + TWO_PI < hi:
                return True
        return False

    def total_length(self):
        return sum(hi - lo for lo, hi in self.intervals)


def hpd_circular(angles, mass=0.95, n_bins=360):
    """Highest-density arc set from samples of a circular quantity.

    Greedy bin selection on a regular histogram of [0, 2*pi): bins enter by
    descending count until the requested mass is covered, then adjacent
    selected bins merge into arcs, including across the origin.  Resolution
    is 2*pi/n_bins; the achieved mass overshoots by at most one bin's
    content.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.size < 100:
        raise ValueError("need at least 100 samples for a stable arc estimate")
    if not 0.0 < mass < 1.0:
        raise ValueError("mass must be strictly between 0 and 1")
    edges = np.linspace(0.0, TWO_PI, n_bins + 1)
    counts, _ = np.histogram(wrap(angles), bins=edges)
    order = np.argsort(counts, kind="stable")[::-1]
    total = counts.sum()
    cum = 0
    chosen = np.zeros(n_bins, dtype=bool)
    for b in order:
        if cum >= mass * total:
            break
        chosen[b] = True
        cum += counts[b]
    runs = []
    b = 0
    while b < n_bins:
        if not chosen[b]:
            b += 1
            continue
        start = b
        while b < n_bins and chosen[b]:
            b += 1
        runs.append((start, b))
    # Merge a run ending at the top with one starting at zero.
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == n_bins:
        first = runs.pop(0)
        last = runs.pop()
        runs.append((last[0], n_bins + first[1]))
    width = TWO_PI / n_bins
    intervals = [(s * width, e * width) for s, e in runs]
    return CircularHPD(intervals=intervals, mass=cum / total)


@dataclass
class DensityGrid:
    """Marginal latent-angle histograms, one stochastic row per time."""

    times: np.ndarray  # integer times 1..T
    edges: np.ndarray  # (n_bins + 1,) shared bin edges over [0, 2*pi]
    density: np.ndarray  # (T, n_bins) rows summing to 1

    def rows(self):
        """Long-form (time, bin_lo, bin_hi, density) tuples."""
        out = []
        for i, t in enumerate(self.times):
            for b in range(self.density.shape[1]):
                out.append(
                    (
                        int(t),
                        float(self.edges[b]),
                        float(self.edges[b + 1]),
                        float(self.density[i, b]),
                    )
                )
        return out


def density_grid(samples, n_bins=72):
    """Posterior marginal histogram of each latent angle x_1..x_T.

    Bin probabilities are sample fractions on a regular partition of
    [0, 2*pi); every row is renormalized so it sums to one exactly.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    T = samples.meta.get("T")
    if T is None:
        xs = [n for n in samples.names if n.startswith("x_")]
        T = len(xs) - 2
    if T < 1:
        raise ValueError("samples contain no interior latent columns")
    edges = np.linspace(0.0, TWO_PI, n_bins + 1)
    dens = np.empty((T, n_bins))
    for i, t in enumerate(range(1, T + 1)):
        col = wrap(samples.column(f"x_{t}"))
        counts, _ = np.histogram(col, bins=edges)
        total = counts.sum()
        if total == 0:
            raise ValueError(f"no draws for latent column x_{t}")
        dens[i] = counts / total
        dens[i] /= dens[i].sum()
    return DensityGrid(times=np.arange(1, T + 1), edges=edges, density=dens)


def _autocovariance(x):
    n = x.shape[0]
    xc = x - x.mean()
    m = 1
    while m < 2 * n:
        m <<= 1
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n].real / n
    return acov


def effective_sample_size(x):
    """ESS from the initial monotone positive pair-sum sequence.

    Pairs of autocorrelations rho_{2m} + rho_{2m+1} enter while they stay
    positive and nonincreasing; a constant series returns its length.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 4:
        return float(n)
    acov = _autocovariance(x)
    if acov[0] <= 0.0:
        return float(n)
    rho = acov / acov[0]
    tau = -1.0
    prev = np.inf
    m = 0
    while 2 * m + 1 < n:
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0.0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
        m += 1
    tau = max(tau, 1.0)
    return float(min(n, n / tau))


def geweke_z(x, first=0.1, last=0.5):
    """Z score comparing the means of the early and late chain segments.

    Segment standard errors are inflated by their effective sample sizes.
    A degenerate (constant) chain returns 0.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    a = x[: max(1, int(first * n))]
    b = x[n - max(1, int(last * n)) :]
    va = a.var(ddof=1) if a.size > 1 else 0.0
    vb = b.var(ddof=1) if b.size > 1 else 0.0
    denom = va / effective_sample_size(a) + vb / effective_sample_size(b)
    if denom <= 0.0:
        return 0.0
    return float((a.mean() - b.mean()) / math.sqrt(denom))


def summarize(samples):
    """Per-column summary rows: moments, ESS, and a split-mean z score.

    Latent-angle columns (x_*) are summarized circularly and diagnosed on
    their cosine and sine projections; the larger |z| is reported.
    """
    rows = []
    for name in samples.names:
        col = samples.column(name)
        degenerate = bool(np.all(col == col[0]))
        if name.startswith("x_"):
            z = max(abs(geweke_z(np.cos(col))), abs(geweke_z(np.sin(col))))
            ess = min(
                effective_sample_size(np.cos(col)),
                effective_sample_size(np.sin(col)),
            )
            rows.append(
                {
                    "name": name,
                    "mean": circular_mean(col),
                    "spread": 1.0 - circular_concentration(col),
                    "ess": ess,
                    "z": z,
                    "circular": True,
                    "degenerate": degenerate,
                }
            )
        else:
            rows.append(
                {
                    "name": name,
                    "mean": float(col.mean()),
                    "spread": float(col.std(ddof=1)) if len(col) > 1 else 0.0,
                    "ess": effective_sample_size(col),
                    "z": geweke_z(col),
                    "circular": False,
                    "degenerate": degenerate,
                }
            )
    return rows


@dataclass
class LooResult:
    """Per-fold predictive checks from leave-one-out refits."""

    folds: list
    mass: float
    coverage: float
    control_coverage: float = float("nan")

    def summary_lines(self):
        out = [
            f"leave-one-out folds: {len(self.folds)}",
            f"target mass: {self.mass:.3f}",
            f"holdout coverage: {self.coverage:.3f}",
        ]
        if not math.isnan(self.control_coverage):
            out.append(f"full-data control coverage: {self.control_coverage:.3f}")
        return out


def _fold_predictive(samples, t, pred_seed):
    f = samples.column(f"fstar_{t}")
    sd = np.sqrt(samples.column("sigma2_eps"))
    rng = np.random.default_rng(pred_seed)
    return wrap(f + sd * rng.standard_normal(len(samples)))


def _run_fold(args):
    (
        y,
        grid_times,
        grid_angles,
        t,
        n_iter,
        burn_in,
        thin,
        seed,
        prior,
        variances,
        sample_variances,
        proposals,
        backend,
        jitter,
        mass,
    ) = args
    from .mcmc import run_chain

    T = y.shape[0]
    observed = np.ones(T, dtype=bool)
    if t > 0:
        observed[t - 1] = False
    grid = LookupGrid(times=grid_times, angles=grid_angles)
    try:
        samples = run_chain(
            y,
            grid,
            n_iter,
            burn_in=burn_in,
            thin=thin,
            seed=seed,
            prior=prior,
            variances=variances,
            sample_variances=sample_variances,
            proposals=proposals,
            observed=observed,
            backend=backend,
            jitter=jitter,
            store_fstar=True,
        )
    except NumericalSingularityError as exc:
        raise NumericalSingularityError(f"fold t={t}: {exc}") from exc
    if t > 0:
        pred = _fold_predictive(samples, t, seed + 100003)
        hpd = hpd_circular(pred, mass=mass)
        return t, {
            "t": t,
            "y_true": float(y[t - 1]),
            "point": circular_mean(pred),
            "hit": hpd.contains(y[t - 1]),
            "hpd_mass": hpd.mass,
            "hpd_length": hpd.total_length(),
            "pred": pred,
        }
    # Control fold: full-data fit, checked in sample at every time.
    hits = []
    for tt in range(1, T + 1):
        pred = _fold_predictive(samples, tt, seed + 100003 + tt)
        hits.append(hpd_circular(pred, mass=mass).contains(y[tt - 1]))
    return 0, {"t": 0, "hits": hits}


def loo_cv(
    y,
    grid,
    n_iter,
    burn_in=0,
    thin=1,
    seed=0,
    prior=None,
    variances=None,
    sample_variances=False,
    proposals=None,
    backend="auto",
    jitter=None,
    mass=0.95,
    n_jobs=1,
    include_control=False,
):
    """Leave-one-out coverage of predictive highest-density arcs.

    Each fold refits the chain with one observation masked and checks
    whether the fold's predictive arc set covers the held-out angle.  Folds
    are independent seeded runs, so results do not depend on ``n_jobs``.
    The optional control fits the full series once and reports in-sample
    coverage under the same machinery.
    """
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    if T < 3:
        raise ValueError("leave-one-out needs a series of at least 3 angles")
    fold_ids = list(range(1, T + 1)) + ([0] if include_control else [])
    jobs = [
        (
            y,
            grid.times,
            grid.angles,
            t,
            n_iter,
            burn_in,
            thin,
            seed + 7919 * t,
            prior,
            variances,
            sample_variances,
            proposals,
            backend,
            jitter,
            mass,
        )
        for t in fold_ids
    ]
    if n_jobs is None:
        n_jobs = int(os.environ.get("CIRCSSM_THREADS", "1"))
    results = {}
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            for t, res in pool.map(_run_fold, jobs):
                results[t] = res
    else:
        for job in jobs:
            t, res = _run_fold(job)
            results[t] = res
    folds = [results[t] for t in range(1, T + 1)]
    coverage = float(np.mean([f["hit"] for f in folds]))
    control_cov = float("nan")
    if include_control:
        control_cov = float(np.mean(results[0]["hits"]))
    return LooResult(
        folds=folds, mass=mass, coverage=coverage, control_coverage=control_cov
    )
