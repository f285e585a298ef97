"""Shared test utilities: random models and gradient-check helpers."""

from __future__ import annotations

import numpy as np

from unmix.dnn import DnnModel


def random_dnn(rng: np.random.Generator, layer_sizes, weight_scale: float = 2.0) -> DnnModel:
    """Random sigmoid network with moderate weights (keeps units unsaturated
    so gradients are informative)."""
    weights = [
        weight_scale * rng.standard_normal((n_out, n_in)) / np.sqrt(n_in)
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:])
    ]
    biases = [0.1 * rng.standard_normal(n_out) for n_out in layer_sizes[1:]]
    return DnnModel(weights, biases)


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest entrywise error relative to the gradient's own scale."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(numeric)), np.max(np.abs(analytic)), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def central_diff(fun, x0: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of a vector."""
    x0 = np.asarray(x0, dtype=np.float64)
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        bump = np.zeros_like(x0)
        bump[i] = step
        grad[i] = (fun(x0 + bump) - fun(x0 - bump)) / (2.0 * step)
    return grad
