"""Latent-path scan backends.

``pure`` is the numpy reference; ``_sweepcore`` is the optional compiled
twin built from Cython at install time.  Both expose ``latent_scan`` with
the same signature and consume the same pre-drawn proposal streams, so a
chain is reproducible within a backend and the two agree to roundoff.
"""

import os

from ..errors import ConfigError
from . import pure

try:
    from . import _sweepcore
except ImportError:
    _sweepcore = None

__all__ = ["get_backend", "available_backends", "backend_name"]

_ENV_VAR = "CIRCSSM_BACKEND"


def available_backends():
    names = ["pure"]
    if _sweepcore is not None:
        names.append("compiled")
    return names


def get_backend(name="auto"):
    """Resolve a backend module by name.

    ``auto`` prefers the compiled extension when it imported, unless the
    CIRCSSM_BACKEND environment variable forces a choice.
    """
    if name == "auto":
        name = os.environ.get(_ENV_VAR, "auto")
    if name == "auto":
        return _sweepcore if _sweepcore is not None else pure
    if name == "pure":
        return pure
    if name == "compiled":
        if _sweepcore is None:
            raise ConfigError(
                "compiled backend requested but the extension is not built"
            )
        return _sweepcore
    raise ConfigError(
        f"unknown backend {name!r}; expected auto, pure, or compiled"
    )


def backend_name(module):
    return "compiled" if module is _sweepcore and module is not None else "pure"
