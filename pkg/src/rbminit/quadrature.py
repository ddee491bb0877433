"""Gaussian quadrature for the standard-normal measure.

Every mean-field formula in this package is an average against

    Dz = (2*pi)^(-1/2) exp(-z^2/2) dz.

Gauss-Hermite quadrature gives nodes/weights for int exp(-x^2) g(x) dx;
substituting z = sqrt(2) x and dividing the weights by sqrt(pi) turns it
into a probability rule:

    int Dz f(z) ~= sum_i w_i f(z_i),   sum_i w_i = 1.

Nodes and weights come from the Golub-Welsch eigen-decomposition of the
Jacobi matrix of the (physicists') Hermite recurrence, which is exact to
machine precision at any order, so no tabulated constants are needed.
The integrands used downstream are smooth bounded compositions of tanh and
sigmoid, for which a high fixed order converges far below solver tolerance;
the default order is 101.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_ORDER = 101


class NodeEvaluationError(ValueError):
    """The integrand returned a non-finite value at a quadrature node."""

    def __init__(self, node: float, value: float):
        self.node = float(node)
        self.value = float(value)
        super().__init__(f"integrand not finite at node z={node!r} (got {value!r})")


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights such that sum(w_i * f(z_i)) ~= int Dz f(z)."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        z = np.asarray(self.nodes, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if z.ndim != 1 or w.shape != z.shape or len(z) != self.order:
            raise ValueError("nodes/weights must be 1-D arrays of length `order`")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 (probability measure)")
        if np.any(np.diff(z) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.max(np.abs(z + z[::-1])) > 1e-12 * max(1.0, np.max(np.abs(z))):
            raise ValueError("nodes must be symmetric about 0")
        z.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", z)
        object.__setattr__(self, "weights", w)


@functools.lru_cache(maxsize=None)
def gauss_hermite(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Build (and cache) the order-`order` rule for int Dz f(z).

    Golub-Welsch: the monic Hermite recurrence for weight exp(-x^2) has
    Jacobi matrix with zero diagonal and off-diagonal sqrt(k/2); the nodes
    are its eigenvalues and the weights are mu_0 * (first eigenvector
    component)^2 with mu_0 = sqrt(pi).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > 340:
        # Christoffel sums overflow float64 near exp(x_max^2) ~ 1e308
        raise ValueError("orders above 340 are not supported in float64")
    if order == 1:
        x = np.array([0.0])
        w = np.array([1.0])
    else:
        off = np.sqrt(np.arange(1, order) / 2.0)
        x = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
        # Weights via the Christoffel function 1/sum_j p_j(x_k)^2 with the
        # orthonormal Hermite recurrence.  This equals the squared first
        # eigenvector component but stays positive where the eigensolver's
        # extreme components underflow to exact zero.
        p_prev = np.full(order, np.pi ** -0.25)
        ssq = p_prev**2
        p = np.sqrt(2.0) * x * p_prev
        ssq += p**2
        for k in range(1, order - 1):
            p, p_prev = (
                x * np.sqrt(2.0 / (k + 1)) * p - np.sqrt(k / (k + 1)) * p_prev,
                p,
            )
            ssq += p**2
        w = 1.0 / ssq / np.sqrt(np.pi)
    z = np.sqrt(2.0) * x
    # symmetrize: eigensolver asymmetries would otherwise leak into odd
    # integrals that must vanish exactly
    z = 0.5 * (z - z[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    return QuadratureRule(nodes=z, weights=w, order=order)


def gaussian_integrate(rule: QuadratureRule, f: Callable) -> float:
    """Evaluate int Dz f(z) with the given rule.

    `f` may be scalar-only or vectorized over numpy arrays; non-finite
    values at any node are rejected.
    """
    try:
        vals = np.asarray(f(rule.nodes), dtype=np.float64)
        if vals.shape != rule.nodes.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f(z)) for z in rule.nodes])
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NodeEvaluationError(rule.nodes[i], vals[i])
    return float(rule.weights @ vals)
