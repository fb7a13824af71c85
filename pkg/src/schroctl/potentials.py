"""Named analytic potential families and CSV loading.

A family spec is a short string: ``zero``, ``linear a``, ``quadratic a``,
``cosine a k`` (-> a*cos(k*pi*x/L)) or ``gauss a x0 w``
(-> a*exp(-(x-x0)^2/(2 w^2))).  Alternatively a CSV file with header
``x,v,q`` supplies both potentials sampled at the interior grid nodes.
"""
from __future__ import annotations

import csv

import numpy as np

from .errors import InputError

FAMILY_ARITY = {"zero": 0, "linear": 1, "quadratic": 1, "cosine": 2, "gauss": 3}


def family_callable(spec):
    """Turn a family spec string into a callable f(x_array) -> samples."""
    parts = spec.split()
    if not parts:
        raise InputError("empty potential spec")
    name, raw_args = parts[0], parts[1:]
    if name not in FAMILY_ARITY:
        raise InputError(f"unknown potential family {name!r} "
                         f"(expected one of {sorted(FAMILY_ARITY)})")
    if len(raw_args) != FAMILY_ARITY[name]:
        raise InputError(f"family {name!r} takes {FAMILY_ARITY[name]} "
                         f"parameter(s), got {len(raw_args)}")
    try:
        args = [float(a) for a in raw_args]
    except ValueError as exc:
        raise InputError(f"non-numeric parameter in potential spec {spec!r}") from exc

    if name == "zero":
        return lambda x: np.zeros_like(x)
    if name == "linear":
        a, = args
        return lambda x: a * x
    if name == "quadratic":
        a, = args
        return lambda x: a * x ** 2
    if name == "cosine":
        a, k = args
        return lambda x: a * np.cos(k * np.pi * x)
    a, x0, w = args
    if w <= 0:
        raise InputError("gauss family needs width w > 0")
    return lambda x: a * np.exp(-((x - x0) ** 2) / (2.0 * w ** 2))


def evaluate_family(spec, grid):
    """Sample a family spec at the interior nodes of ``grid``."""
    return family_callable(spec)(grid.nodes())


def load_potential_csv(path, grid):
    """Read ``x,v,q`` rows sampled at the interior nodes; returns (v, q)."""
    xs, vs, qs = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["x", "v", "q"]:
            raise InputError(f"{path}: expected header 'x,v,q'")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise InputError(f"{path}: malformed row {row!r}")
            xs.append(float(row[0]))
            vs.append(float(row[1]))
            qs.append(float(row[2]))
    nodes = grid.nodes()
    if len(xs) != grid.n_points:
        raise InputError(f"{path}: {len(xs)} rows, grid has {grid.n_points} nodes")
    if not np.allclose(xs, nodes, rtol=0.0, atol=1e-9 * grid.length):
        raise InputError(f"{path}: x column does not match the grid nodes")
    v = np.asarray(vs, dtype=float)
    q = np.asarray(qs, dtype=float)
    if not (np.isfinite(v).all() and np.isfinite(q).all()):
        raise InputError(f"{path}: non-finite potential samples")
    return v, q
