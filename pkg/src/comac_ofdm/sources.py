"""Quantized data sources, desired/sub-function evaluation and reconstruction.

Two function families are supported: the weighted arithmetic sum and the
type function (per-symbol histogram of node values). Reconstruction of the
desired function from sub-function values is exact by construction: scalar
addition for the arithmetic sum, elementwise histogram addition for the
type function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .combinatorics import is_valid_partition
from .core import STREAM_DATA

ARITHMETIC_SUM = "arithmetic-sum"
TYPE = "type"


@dataclass(frozen=True)
class DataMatrix:
    """Quantized source data: T_d rows (time) x K columns (nodes), entries
    in [0:p-1]."""

    values: np.ndarray
    alphabet_size: int

    @property
    def t_d(self):
        return self.values.shape[0]

    @property
    def k(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class FunctionSpec:
    kind: str
    weights: np.ndarray | None = None
    alphabet_size: int | None = None

    def __post_init__(self):
        if self.kind == ARITHMETIC_SUM:
            if self.weights is None:
                raise ValueError("arithmetic-sum spec needs a weight vector")
        elif self.kind == TYPE:
            if self.alphabet_size is None or self.alphabet_size < 2:
                raise ValueError("type spec needs an alphabet size >= 2")
        else:
            raise ValueError(f"unknown function kind: {self.kind!r}")


def arithmetic_sum(k, weights=None):
    """Weighted sum spec; unit weights by default."""
    w = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ValueError(f"expected {k} weights, got shape {w.shape}")
    return FunctionSpec(ARITHMETIC_SUM, weights=w)


def mean_function(k):
    """Arithmetic sum with weights 1/K (the mean of all node values)."""
    return FunctionSpec(ARITHMETIC_SUM, weights=np.full(k, 1.0 / k))


def type_function(p):
    """Histogram-of-values spec over the alphabet [0:p-1]."""
    return FunctionSpec(TYPE, alphabet_size=p)


def sample_data_matrix(p, k, t_d, seed):
    """Uniform i.i.d. entries over [0:p-1], deterministic under seed."""
    if p < 2:
        raise ValueError(f"alphabet size must be >= 2, got {p}")
    if k < 1 or t_d < 1:
        raise ValueError("k and t_d must be positive")
    rng = np.random.default_rng([seed, STREAM_DATA])
    return DataMatrix(rng.integers(0, p, size=(t_d, k)), alphabet_size=p)


def eval_desired(spec: FunctionSpec, row):
    """Desired function over all K nodes of one data row."""
    row = np.asarray(row)
    if spec.kind == ARITHMETIC_SUM:
        if row.shape != spec.weights.shape:
            raise ValueError(
                f"row length {row.shape} does not match weights {spec.weights.shape}"
            )
        return float(spec.weights @ row)
    return np.bincount(row, minlength=spec.alphabet_size)


def eval_subfunction(spec: FunctionSpec, row, members):
    """Same functional form restricted to the 1-based node indexes in members."""
    row = np.asarray(row)
    idx = np.asarray(sorted(members), dtype=int)
    if idx.size == 0 or idx.min() < 1 or idx.max() > row.size:
        raise ValueError(f"members {sorted(members)} out of range [1:{row.size}]")
    sub = row[idx - 1]
    if spec.kind == ARITHMETIC_SUM:
        return float(spec.weights[idx - 1] @ sub)
    return np.bincount(sub, minlength=spec.alphabet_size)


def reconstruct(spec: FunctionSpec, sub_values, parts):
    """Compose B sub-function values back into the desired function value."""
    parts = list(parts)
    k = sum(len(p) for p in parts)
    if not is_valid_partition(parts, k):
        raise ValueError("parts must be a disjoint cover of [1:K]")
    if len(sub_values) != len(parts):
        raise ValueError("one sub-function value is required per part")
    if spec.kind == ARITHMETIC_SUM:
        return float(sum(sub_values))
    return np.sum(np.asarray(sub_values), axis=0)
