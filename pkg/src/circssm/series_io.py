"""Series files, flat config files, and run manifests.

Series live in delimited text (comma or tab, header row required) with one
value column named by the caller; angles are converted to radians on read
and stored canonically.  Configs are flat ``key = value`` lines.  The
manifest captures everything needed to reproduce a run, with a digest that
ignores key order.
"""

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .circular import convert, wrap
from .errors import (
    CellParseError,
    ConfigError,
    EmptySeriesError,
    MissingColumnError,
    UnitDomainError,
)

__all__ = [
    "CircularSeries",
    "read_series",
    "write_series",
    "parse_config",
    "CONFIG_KEYS",
    "RunManifest",
]

UNITS = ("radians", "degrees", "clock24")


@dataclass
class CircularSeries:
    """Observed angles y_1..y_T with their source unit and a label."""

    values: np.ndarray
    unit_of_origin: str = "radians"
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("series needs at least one angle")

    @property
    def T(self):
        return self.values.size

    def __len__(self):
        return self.values.size


def _sniff_delimiter(header_line):
    return "\t" if "\t" in header_line else ","


def read_series(path, unit="radians", column="y"):
    """Parse a delimited series file into canonical angles.

    The header must contain ``column``; rows are read in file order, which
    is time order 1..T.  Unit conversion happens per cell so a domain
    violation names its row.
    """
    if unit not in UNITS:
        raise ConfigError(f"unknown unit {unit!r}; expected one of {UNITS}")
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise EmptySeriesError(f"{path}: no header row")
        delim = _sniff_delimiter(first)
        header = [h.strip() for h in first.rstrip("\n").split(delim)]
        if column not in header:
            raise MissingColumnError(
                f"{path}: column {column!r} not in header {header}"
            )
        idx = header.index(column)
        values = []
        for row_no, row in enumerate(csv.reader(fh, delimiter=delim), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if idx >= len(row):
                raise CellParseError(
                    row_no, f"{path}: row {row_no} has no {column!r} cell"
                )
            cell = row[idx].strip()
            try:
                raw = float(cell)
            except ValueError:
                raise CellParseError(
                    row_no,
                    f"{path}: row {row_no}: cannot parse {cell!r} as a number",
                ) from None
            try:
                values.append(convert(raw, unit))
            except ValueError as exc:
                raise UnitDomainError(
                    f"{path}: row {row_no}: {exc}", row=row_no
                ) from None
    if not values:
        raise EmptySeriesError(f"{path}: no data rows")
    return CircularSeries(
        values=np.array(values), unit_of_origin=unit, label=path
    )


def write_series(path, values, column="y"):
    """Write canonical angles as a one-column CSV with header."""
    values = wrap(np.asarray(values, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(f"{column}\n")
        for v in values:
            fh.write(f"{v:.17g}\n")


# Recognized config keys with their parsers; unknown keys are refused so a
# typo cannot silently fall back to a default.
def _parse_bool(s):
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


CONFIG_KEYS = {
    "unit": str,
    "column": str,
    "T": int,
    "seed": int,
    "grid_size": int,
    "n_iter": int,
    "burn_in": int,
    "thin": int,
    "sample_variances": _parse_bool,
    "store_dz": _parse_bool,
    "store_fstar": _parse_bool,
    "backend": str,
    "jitter": float,
    "mu0": float,
    "kappa0": float,
    "x0_sigma2": float,
    "alpha_f": float,
    "gamma_f": float,
    "alpha_eps": float,
    "gamma_eps": float,
    "alpha_g": float,
    "gamma_g": float,
    "alpha_eta": float,
    "gamma_eta": float,
    "sigma_f": float,
    "sigma_eps": float,
    "sigma_g": float,
    "sigma_eta": float,
    "kappa_x_narrow": float,
    "kappa_x_wide": float,
    "mix_weight_wide": float,
    "kappa_x0": float,
    "wrap_rw_sd": float,
    "k_bound": int,
    "var_rw_logstep": float,
    "sa_n_outer": int,
    "sa_n_mc": int,
    "sa_t0": float,
    "sa_rho": float,
    "sa_step_sd": float,
    "sa_restarts": int,
    "sim_T": int,
    "sim_alpha": float,
    "sim_beta": float,
    "sim_gamma": float,
    "sim_sigma_eta": float,
    "sim_sigma_eps": float,
    "sim_x_init": float,
    "mass": float,
    "n_bins": int,
    "threads": int,
}


def parse_config(path):
    """Read a flat key = value file; '#' starts a comment.

    Every key must appear in CONFIG_KEYS and parse under its declared type.
    """
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    with fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(
                    f"{path}:{line_no}: expected 'key = value', got {stripped!r}"
                )
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            try:
                out[key] = CONFIG_KEYS[key](raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}:{line_no}: bad value for {key!r}: {exc}"
                ) from None
    return out


@dataclass
class RunManifest:
    """Reproducibility record attached to every CLI run.

    ``params`` holds the semantically meaningful settings; the digest is a
    sha256 over their sorted-key JSON, so key order cannot change it.  The
    runtime block (wall clock, timestamp) stays outside the digest.
    """

    command: str
    params: dict
    seed: int
    runtime: dict = field(default_factory=dict)
    version: str = __version__

    def digest(self):
        payload = json.dumps(
            {"command": self.command, "params": self.params, "seed": self.seed,
             "version": self.version},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_dict(self):
        return {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "version": self.version,
            "digest": self.digest(),
            "runtime": self.runtime,
        }

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def now():
        return {"wall_clock_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
