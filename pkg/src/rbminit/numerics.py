"""Stable elementary functions shared by the mean-field and RBM code.

All of these must stay finite for arguments up to |a| ~ 1e4 (weights grow
during training and the enumeration engine feeds raw local fields in here).
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit as sigmoid  # noqa: F401  (re-exported)

LOG2 = float(np.log(2.0))


def log2cosh(a):
    """log(2 cosh a) = |a| + log1p(exp(-2|a|))."""
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a))


def softplus(a):
    """log(1 + exp(a)) = max(a, 0) + log1p(exp(-|a|))."""
    return np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a)))


def log2cosh_from_tanh(a, t):
    """log(2 cosh a) given t = tanh(a); exp(-2|a|) = (1-|t|)/(1+|t|).

    Saves one transcendental pass on large arrays where tanh(a) is needed
    anyway.
    """
    t = np.abs(t)
    return np.abs(a) + np.log1p((1.0 - t) / (1.0 + t))


def softplus_from_sigmoid(a, s):
    """log(1 + exp(a)) given s = sigmoid(a); exp(-|a|) = min(s,1-s)/max(s,1-s)."""
    lo = np.minimum(s, 1.0 - s)
    hi = np.maximum(s, 1.0 - s)
    return np.maximum(a, 0.0) + np.log1p(lo / hi)
