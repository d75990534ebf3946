"""Conformal flatness of graph hypersurfaces.

Thin wrapper over the compiled core. Tensors come back as numpy arrays,
reports as plain dicts.
"""

import json

import numpy as np

from ._conflat import (
    DomainError,
    Error,
    Expr,
    NumericalError,
    OutOfDomainError,
    ParseError,
    SpecError,
    Surface,
    __version__,
    conformal_defect,
    load_spec,
    load_spec_text,
    parse,
    run_cli,
    sample_points,
)
from . import _conflat

__all__ = [
    "DomainError", "Error", "Expr", "NumericalError", "OutOfDomainError", "ParseError", "SpecError",
    "Surface", "__version__", "conformal_defect", "curvature", "grid_scan", "jet", "load_spec",
    "load_spec_text", "parse", "run_cli", "sample_points", "surface",
]


def _arrays(obj):
    """Nested numeric lists become arrays; dicts are walked."""
    if isinstance(obj, dict):
        return {k: _arrays(v) for k, v in obj.items()}
    if isinstance(obj, list) and obj and all(isinstance(v, (list, int, float)) for v in obj):
        try:
            return np.asarray(obj, dtype=float)
        except ValueError:
            return obj
    return obj


def surface(spec):
    """Surface from a spec dict, JSON text, or path ending in .json."""
    if isinstance(spec, dict):
        return load_spec_text(json.dumps(spec))
    if isinstance(spec, str) and spec.endswith(".json"):
        return load_spec(spec)
    return load_spec_text(spec)


def jet(surf, x, order=2, provider="auto"):
    """r and its derivatives at x. provider: auto, builtin or fd."""
    return _arrays(json.loads(_conflat._jet(surf, np.asarray(x, dtype=float), order, provider)))


def curvature(surf, x, mode="analytic"):
    """Every curvature tensor at x plus invariant residuals."""
    return _arrays(json.loads(_conflat._curvature(surf, np.asarray(x, dtype=float), mode)))


def grid_scan(surf, points=100, seed=0, grid=None, criterion=None, tol=None, mode="analytic"):
    """Flatness scan; returns the report as a dict."""
    return json.loads(_conflat._grid_scan(surf, points, seed, grid, criterion, tol, mode))
