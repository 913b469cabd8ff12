"""Plot-ready curve tables: influence functions and weight functions."""

from __future__ import annotations

import numpy as np

from .asymptotics import influence, model_jkxi
from .bregman import Triplet, weight
from .models import Model


def emit_curve(kind: str, model: Model | None, theta, trip: Triplet, grid):
    """Tabulate a curve on a grid.

    ``kind`` is "weight" (abscissa is the density argument t >= 0, one value
    column) or "influence" (abscissa is an observation value, one column per
    parameter component).  Returns (column_names, table) with the table rows
    ordered by abscissa.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    order = np.argsort(grid, kind="stable")
    grid = grid[order]

    if kind == "weight":
        if np.any(grid < 0.0):
            raise ValueError("weight curves need a nonnegative density grid")
        vals = np.atleast_1d(weight(grid, trip))
        return ["t", "weight"], np.column_stack([grid, vals])

    if kind == "influence":
        if model is None or theta is None:
            raise ValueError("influence curves need a model and parameters")
        theta = model.check_params(theta)
        matrices = model_jkxi(model, theta, trip)
        vals = influence(grid, model, theta, trip, matrices)
        names = ["y"] + [f"IF_{p}" for p in model.param_names]
        return names, np.column_stack([grid, np.atleast_2d(vals)])

    raise ValueError(f"unknown curve kind {kind!r}; use 'influence' or 'weight'")
