"""Replica-symmetric mean-field analysis of the initial RBM ensemble.

The initial RBM has uniform biases (b on the visible layer, c on the hidden
layer) and i.i.d. Gaussian weights of standard deviation beta/sqrt(n+m).
In the thermodynamic limit at fixed layer ratio alpha = m/n its quenched
free energy is governed by two order parameters (q_v, q_h) and two
auxiliary parameters (qhat_v, qhat_h) solving

    qhat_v = beta^2 * alpha * q_h / (1+alpha)
    qhat_h = beta^2 * q_v / (1+alpha)
    q_v    = int Dz tanh^2(b + z*sqrt(qhat_v))
    q_h    = int Dz tanh^2(c + z*sqrt(qhat_h))            (ising hidden)
    q_h    = int Dz sig(c + beta^2/(2(1+alpha))
                         - qhat_h/2 + z*sqrt(qhat_h))^2   (binary hidden)

The layer correlation -- the response of one layer's magnetization to the
other layer's bias -- is the off-diagonal entry of a 2x2 susceptibility
matrix assembled from Gaussian moments of the single-site conditional
expectations.  The weight scale maximizing |chi_vh| is the quantity this
package exists to compute; for ising hidden units with b = c = 0 it is
known in closed form, beta_max^2 = sqrt(alpha) + 1/sqrt(alpha), the
paramagnetic/spin-glass transition point of the bipartite SK model.

Only the location of the |chi_vh| maximum is meaningful: the ensemble
average that defines the layer correlation fixes it up to a positive
proportionality constant, so reported chi values are comparable across
beta but carry no absolute normalization.

A symmetry worth knowing about: chi_vh is odd in b (flipping every visible
unit together with the sign of the weights is measure-preserving), so it
vanishes identically at b = 0 and a literal evaluation there returns pure
roundoff.  The scan/search operations therefore substitute a small
documented bias EPS_BIAS for any exactly-zero bias whose moment integral
would be symmetry-degenerate (b always; c only for ising hidden units).
The maximum's location is insensitive to the substitute value to O(eps^2).
Pointwise operations (solve_saddle_point, free_energy, susceptibility)
never substitute anything.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .numerics import log2cosh, sigmoid, softplus
from .quadrature import QuadratureRule, gauss_hermite
from .spaces import HiddenSpace

# Saddle solver: damped successive substitution.  The map is a contraction
# away from the transition; damping keeps it stable near it.
DAMPING = 0.5
SOLVER_TOL = 1e-12
MAX_ITERATIONS = 50_000
# Nontrivial-branch selection: starting at q ~ 1 falls into the nonzero
# solution whenever it exists; the trivial branch is reached only when
# attracting.
Q_INIT = 0.999

SINGULAR_DET = 1e-12
EPS_BIAS = 1e-3


class SaddleConvergenceError(RuntimeError):
    """Fixed-point iteration did not reach tolerance within the budget."""

    def __init__(self, beta, last, residual, iterations):
        self.beta = beta
        self.last = last
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"saddle-point iteration not converged at beta={beta!r}: "
            f"residual={residual!r} after {iterations} iterations, last iterate {last!r}"
        )


class SingularSusceptibilityError(RuntimeError):
    """det(I - beta^2 W T_alpha) below threshold: chi_vh diverges here."""

    def __init__(self, beta: float, det: float):
        self.beta = float(beta)
        self.det = float(det)
        super().__init__(
            f"susceptibility matrix singular at beta={beta!r} (det={det!r}); "
            "treat |chi_vh| as a divergence candidate"
        )


class SearchFailureError(RuntimeError):
    """No interior maximum of |chi_vh| found on the scan grid."""

    def __init__(self, message: str, betas: np.ndarray, values: np.ndarray):
        self.betas = np.asarray(betas)
        self.values = np.asarray(values)
        super().__init__(message)


@dataclass(frozen=True)
class ModelConfig:
    """One mean-field problem instance."""

    alpha: float
    b: float
    c: float
    hidden: HiddenSpace
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0) or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not (self.beta >= 0) or not math.isfinite(self.beta):
            raise ValueError(f"beta must be nonnegative and finite, got {self.beta!r}")
        if not (math.isfinite(self.b) and math.isfinite(self.c)):
            raise ValueError("biases must be finite")


@dataclass(frozen=True)
class SaddlePoint:
    q_v: float
    q_h: float
    qhat_v: float
    qhat_h: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class SusceptibilityMatrix:
    chi_vv: float
    chi_vh: float
    chi_hv: float
    chi_hh: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.chi_vv, self.chi_vh], [self.chi_hv, self.chi_hh]])


@dataclass(frozen=True)
class PhaseScan:
    betas: Tuple[float, ...]
    abs_chi_vh: Tuple[float, ...]
    argmax_beta: float
    singular_betas: Tuple[float, ...] = ()


@dataclass(frozen=True)
class SearchConfig:
    """Grid + refinement parameters for the |chi_vh| maximization."""

    beta_hi: Optional[float] = None  # default: 2*(1 + beta_critical + |c|)
    grid_step: float = 0.01
    refine_tol: float = 1e-4
    bias_epsilon: float = EPS_BIAS


def beta_critical(alpha: float) -> float:
    """Paramagnetic/spin-glass transition scale: sqrt(sqrt(a) + 1/sqrt(a))."""
    if not (alpha > 0) or not math.isfinite(alpha):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    r = math.sqrt(alpha)
    return math.sqrt(r + 1.0 / r)


# ---------------------------------------------------------------------------
# saddle-point equations
# ---------------------------------------------------------------------------


def _coupling(alpha: float, betas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Auxiliary-parameter map coefficients (qhat = beta^2 T_alpha q)."""
    b2 = betas * betas
    return b2 * alpha / (1.0 + alpha), b2 / (1.0 + alpha)


def _binary_shift(alpha: float, betas, qhat_h):
    """Field offset of a {0,1} hidden unit: beta^2/(2(1+alpha)) - qhat_h/2."""
    return betas * betas / (2.0 * (1.0 + alpha)) - 0.5 * qhat_h


def _solve_saddle_batch(
    alpha: float,
    b: float,
    c: float,
    hidden: HiddenSpace,
    betas: np.ndarray,
    rule: QuadratureRule,
    q_init: float = Q_INIT,
    q0: Optional[Tuple[float, float]] = None,
    tol: float = SOLVER_TOL,
    max_iterations: int = MAX_ITERATIONS,
):
    """Solve the saddle equations at every beta of a batch.

    Each point runs the same damped iteration from the same start as the
    scalar solver; batching is purely a vectorization of independent
    solves, with converged points dropped from the active set.
    Returns (q_v, q_h, residual, iterations) arrays.
    """
    betas = np.asarray(betas, dtype=np.float64)
    z = rule.nodes
    w = rule.weights
    nb = betas.shape[0]

    if q0 is None:
        qv = np.full(nb, q_init)
        qh = np.full(nb, q_init)
    else:
        qv = np.full(nb, float(q0[0]))
        qh = np.full(nb, float(q0[1]))
    residual = np.full(nb, np.inf)
    iterations = np.zeros(nb, dtype=np.int64)
    active = np.arange(nb)

    cv, ch = _coupling(alpha, betas)
    ising = hidden is HiddenSpace.ISING

    for it in range(1, max_iterations + 1):
        qv_a = qv[active]
        qh_a = qh[active]
        qhat_v = cv[active] * qh_a
        qhat_h = ch[active] * qv_a

        tv = np.tanh(b + np.sqrt(qhat_v)[:, None] * z)
        gv = (tv * tv) @ w
        if ising:
            th = np.tanh(c + np.sqrt(qhat_h)[:, None] * z)
        else:
            shift = _binary_shift(alpha, betas[active], qhat_h)
            th = sigmoid((c + shift)[:, None] + np.sqrt(qhat_h)[:, None] * z)
        gh = (th * th) @ w

        r = np.maximum(np.abs(gv - qv_a), np.abs(gh - qh_a))
        residual[active] = r
        iterations[active] = it

        done = r <= tol
        if np.any(done):
            # freeze converged points at the iterate whose residual was
            # just certified (no further update)
            still = ~done
            qv[active[still]] = qv_a[still] + DAMPING * (gv[still] - qv_a[still])
            qh[active[still]] = qh_a[still] + DAMPING * (gh[still] - qh_a[still])
            active = active[still]
            if active.size == 0:
                return qv, qh, residual, iterations
        else:
            qv[active] = qv_a + DAMPING * (gv - qv_a)
            qh[active] = qh_a + DAMPING * (gh - qh_a)

    bad = active[0]
    raise SaddleConvergenceError(
        beta=float(betas[bad]),
        last=(float(qv[bad]), float(qh[bad])),
        residual=float(residual[bad]),
        iterations=int(iterations[bad]),
    )


def solve_saddle_point(
    config: ModelConfig,
    rule: Optional[QuadratureRule] = None,
    q0: Optional[Tuple[float, float]] = None,
) -> SaddlePoint:
    """Solve the saddle-point equations for one configuration.

    Damped successive substitution (damping 0.5, max-norm tolerance 1e-12)
    started at q = 0.999 so that the nontrivial branch is selected whenever
    it exists.  `q0` overrides the start (used to warm-start refinements).
    Raises SaddleConvergenceError after 50,000 iterations.
    """
    rule = rule or gauss_hermite()
    betas = np.array([config.beta])
    qv, qh, res, its = _solve_saddle_batch(
        config.alpha, config.b, config.c, config.hidden, betas, rule, q0=q0
    )
    cv, ch = _coupling(config.alpha, betas)
    return SaddlePoint(
        q_v=float(qv[0]),
        q_h=float(qh[0]),
        qhat_v=float(cv[0] * qh[0]),
        qhat_h=float(ch[0] * qv[0]),
        residual=float(res[0]),
        iterations=int(its[0]),
    )


def conditional_moment(
    config: ModelConfig, layer: str, saddle: SaddlePoint, z: float, r: int
) -> float:
    """Single-site conditional moment E_layer^(r)(z) at the saddle.

    For the visible layer E^(1) = tanh(b + z*sqrt(qhat_v)) and E^(2) = 1;
    for ising hidden units likewise with (c, qhat_h); for binary hidden
    units every moment equals sig(c + beta^2/(2(1+alpha)) - qhat_h/2
    + z*sqrt(qhat_h)) because h^r = h on {0,1}.
    """
    if r not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {r!r}")
    if layer == "v":
        if r == 2:
            return 1.0
        return float(np.tanh(config.b + z * math.sqrt(saddle.qhat_v)))
    if layer != "h":
        raise ValueError(f"layer must be 'v' or 'h', got {layer!r}")
    if config.hidden is HiddenSpace.ISING:
        if r == 2:
            return 1.0
        return float(np.tanh(config.c + z * math.sqrt(saddle.qhat_h)))
    x = (
        config.c
        + _binary_shift(config.alpha, config.beta, saddle.qhat_h)
        + z * math.sqrt(saddle.qhat_h)
    )
    return float(sigmoid(x))


def free_energy(
    config: ModelConfig, saddle: SaddlePoint, rule: Optional[QuadratureRule] = None
) -> float:
    """RS free energy per unit at the given saddle point.

    Five terms: the q_v*q_h coupling, the two auxiliary-parameter terms,
    and the two Gaussian-averaged log-sums over the single-site states.
    For ising hidden units the quadratic part of the effective energy is
    state-independent (h^2 = 1) and contributes the constant
    (beta^2/(1+alpha) - qhat_h)/2 to the hidden log-sum.
    """
    rule = rule or gauss_hermite()
    a = config.alpha
    z, w = rule.nodes, rule.weights
    s = saddle

    lsv = float(w @ log2cosh(config.b + math.sqrt(s.qhat_v) * z))
    if config.hidden is HiddenSpace.ISING:
        lsh = 0.5 * (config.beta**2 / (1.0 + a) - s.qhat_h) + float(
            w @ log2cosh(config.c + math.sqrt(s.qhat_h) * z)
        )
    else:
        x = (
            config.c
            + _binary_shift(a, config.beta, s.qhat_h)
            + math.sqrt(s.qhat_h) * z
        )
        lsh = float(w @ softplus(x))

    return (
        a * config.beta**2 * s.q_v * s.q_h / (2.0 * (1.0 + a) ** 2)
        - s.qhat_v * (s.q_v - 1.0) / (2.0 * (1.0 + a))
        - a * s.qhat_h * s.q_h / (2.0 * (1.0 + a))
        - lsv / (1.0 + a)
        - a * lsh / (1.0 + a)
    )


def magnetizations(
    config: ModelConfig, saddle: SaddlePoint, rule: Optional[QuadratureRule] = None
) -> Tuple[float, float]:
    """(M_v, M_h): the bias derivatives -df/db and -df/dc at the saddle."""
    rule = rule or gauss_hermite()
    a = config.alpha
    z, w = rule.nodes, rule.weights
    e1v = np.tanh(config.b + math.sqrt(saddle.qhat_v) * z)
    if config.hidden is HiddenSpace.ISING:
        e1h = np.tanh(config.c + math.sqrt(saddle.qhat_h) * z)
    else:
        x = (
            config.c
            + _binary_shift(a, config.beta, saddle.qhat_h)
            + math.sqrt(saddle.qhat_h) * z
        )
        e1h = sigmoid(x)
    return float(w @ e1v) / (1.0 + a), a * float(w @ e1h) / (1.0 + a)


# ---------------------------------------------------------------------------
# susceptibility matrix
# ---------------------------------------------------------------------------


def _chi_batch(
    alpha: float,
    b: float,
    c: float,
    hidden: HiddenSpace,
    betas: np.ndarray,
    qv: np.ndarray,
    qh: np.ndarray,
    rule: QuadratureRule,
):
    """chi entries and det(I - beta^2 W T_alpha) at solved saddles.

    V, U, W are the Gaussian moments of the single-site conditionals
    (variance, first-moment-weighted variance, and the fourth-order
    combination E2^2 - 4 E2 E1^2 + 3 E1^4); the 2x2 inversion is written
    out in closed form.
    """
    z, w = rule.nodes, rule.weights
    betas = np.asarray(betas, dtype=np.float64)
    cv, ch = _coupling(alpha, betas)
    qhat_v = cv * qh
    qhat_h = ch * qv

    e1v = np.tanh(b + np.sqrt(qhat_v)[:, None] * z)
    e1v2 = e1v * e1v
    # visible units are +-1: E2 = 1
    v_v = (1.0 - e1v2) @ w
    u_v = (e1v * (1.0 - e1v2)) @ w
    w_v = (1.0 - 4.0 * e1v2 + 3.0 * e1v2 * e1v2) @ w

    if hidden is HiddenSpace.ISING:
        e1h = np.tanh(c + np.sqrt(qhat_h)[:, None] * z)
        e1h2 = e1h * e1h
        v_h = (1.0 - e1h2) @ w
        u_h = (e1h * (1.0 - e1h2)) @ w
        w_h = (1.0 - 4.0 * e1h2 + 3.0 * e1h2 * e1h2) @ w
    else:
        shift = _binary_shift(alpha, betas, qhat_h)
        e1h = sigmoid((c + shift)[:, None] + np.sqrt(qhat_h)[:, None] * z)
        e1h2 = e1h * e1h
        # on {0,1} every conditional moment equals E1
        v_h = (e1h - e1h2) @ w
        u_h = (e1h * (e1h - e1h2)) @ w
        w_h = (e1h2 - 4.0 * e1h * e1h2 + 3.0 * e1h2 * e1h2) @ w

    one = 1.0 + alpha
    b2 = betas * betas
    s = b2 / one
    det = 1.0 - s * s * alpha * w_v * w_h

    with np.errstate(divide="ignore", invalid="ignore"):
        chi_vh = -2.0 * b2 * alpha * u_v * u_h / (one * one * det)
        chi_vv = (v_v - 2.0 * b2 * alpha * s * w_h * u_v * u_v / (one * det)) / one
        chi_hh = alpha * (v_h - 2.0 * b2 * alpha * s * w_v * u_h * u_h / (one * det)) / one
    return chi_vv, chi_vh, chi_vh.copy(), chi_hh, det


def susceptibility(
    config: ModelConfig, saddle: SaddlePoint, rule: Optional[QuadratureRule] = None
) -> SusceptibilityMatrix:
    """Bias-response matrix d(M_v, M_h)/d(b, c) at the solved saddle.

    Raises SingularSusceptibilityError when |det(I - beta^2 W T_alpha)|
    falls below 1e-12; the caller treats |chi_vh| there as a divergence
    candidate (this is exactly the zero-bias ising cusp).
    """
    rule = rule or gauss_hermite()
    betas = np.array([config.beta])
    chi_vv, chi_vh, chi_hv, chi_hh, det = _chi_batch(
        config.alpha,
        config.b,
        config.c,
        config.hidden,
        betas,
        np.array([saddle.q_v]),
        np.array([saddle.q_h]),
        rule,
    )
    if abs(det[0]) < SINGULAR_DET:
        raise SingularSusceptibilityError(config.beta, det[0])
    return SusceptibilityMatrix(
        chi_vv=float(chi_vv[0]),
        chi_vh=float(chi_vh[0]),
        chi_hv=float(chi_hv[0]),
        chi_hh=float(chi_hh[0]),
    )


# ---------------------------------------------------------------------------
# |chi_vh| scan and beta_max search
# ---------------------------------------------------------------------------


def _effective_biases(
    b: float, c: float, hidden: HiddenSpace, eps: float = EPS_BIAS
) -> Tuple[float, float]:
    """Substitute eps for symmetry-degenerate zero biases (see module doc)."""
    b_eff = b if b != 0.0 else eps
    c_eff = c if (c != 0.0 or hidden is HiddenSpace.BINARY) else eps
    return b_eff, c_eff


def _abs_chi_profile(
    alpha: float,
    b: float,
    c: float,
    hidden: HiddenSpace,
    betas: np.ndarray,
    rule: QuadratureRule,
):
    """|chi_vh| on a beta grid; singular points come back as +inf.

    Returns (values, det, qv, qh).
    """
    qv, qh, _, _ = _solve_saddle_batch(alpha, b, c, hidden, betas, rule)
    _, chi_vh, _, _, det = _chi_batch(alpha, b, c, hidden, betas, qv, qh, rule)
    values = np.abs(chi_vh)
    values[np.abs(det) < SINGULAR_DET] = np.inf
    return values, det, qv, qh


def phase_scan(
    alpha: float,
    b: float,
    c: float,
    hidden: HiddenSpace,
    betas: Sequence[float],
    rule: Optional[QuadratureRule] = None,
) -> PhaseScan:
    """|chi_vh| over an increasing beta grid, plus the grid argmax.

    Grid points where the susceptibility is singular are flagged and
    recorded at the largest finite neighboring value so the scan stays
    finite while the argmax still lands on the divergence.  Zero biases
    are eps-substituted (module doc); solver failures propagate with the
    offending beta attached.
    """
    rule = rule or gauss_hermite()
    betas = np.asarray(list(betas), dtype=np.float64)
    if betas.size == 0:
        raise ValueError("beta grid must be non-empty")
    if np.any(betas <= 0):
        raise ValueError("all scan betas must be positive")
    if betas.size > 1 and np.any(np.diff(betas) <= 0):
        raise ValueError("scan betas must be strictly increasing")

    b_eff, c_eff = _effective_biases(b, c, hidden)
    values, _, _, _ = _abs_chi_profile(alpha, b_eff, c_eff, hidden, betas, rule)

    singular = ~np.isfinite(values)
    if np.all(singular):
        raise SearchFailureError(
            "susceptibility singular on the entire grid", betas, values
        )
    filled = values.copy()
    if np.any(singular):
        finite_idx = np.nonzero(~singular)[0]
        for i in np.nonzero(singular)[0]:
            left = finite_idx[finite_idx < i]
            right = finite_idx[finite_idx > i]
            neighbors = []
            if left.size:
                neighbors.append(values[left[-1]])
            if right.size:
                neighbors.append(values[right[0]])
            filled[i] = max(neighbors)
    argmax_beta = float(betas[int(np.argmax(filled))])
    return PhaseScan(
        betas=tuple(float(x) for x in betas),
        abs_chi_vh=tuple(float(x) for x in filled),
        argmax_beta=argmax_beta,
        singular_betas=tuple(float(x) for x in betas[singular]),
    )


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section_max(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section maximization of a unimodal f on [lo, hi]."""
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def find_beta_max(
    alpha: float,
    b: float,
    c: float,
    hidden: HiddenSpace,
    search: SearchConfig = SearchConfig(),
    rule: Optional[QuadratureRule] = None,
) -> float:
    """Weight scale maximizing the layer correlation |chi_vh|.

    For ising hidden units with b = c = 0 exactly, this is the transition
    point sqrt(sqrt(alpha) + 1/sqrt(alpha)) in closed form (the production
    path; the zero-bias numeric profile is a cusp buried in roundoff).
    Otherwise the profile is scanned on a 0.01-step grid over
    (0, beta_hi], the maximum is bracketed, and golden-section refinement
    narrows it to `refine_tol`.
    """
    if not (alpha > 0) or not math.isfinite(alpha):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    if hidden is HiddenSpace.ISING and b == 0.0 and c == 0.0:
        return beta_critical(alpha)

    rule = rule or gauss_hermite()
    b_eff, c_eff = _effective_biases(b, c, hidden, search.bias_epsilon)
    beta_hi = search.beta_hi
    if beta_hi is None:
        beta_hi = 2.0 * (1.0 + beta_critical(alpha) + abs(c))
    step = search.grid_step
    betas = np.arange(step, beta_hi + 0.5 * step, step)

    values, _, qv, qh = _abs_chi_profile(alpha, b_eff, c_eff, hidden, betas, rule)
    k = int(np.argmax(values))
    if k == 0 or k == len(betas) - 1:
        raise SearchFailureError(
            f"no interior |chi_vh| maximum in (0, {beta_hi!r}] "
            f"(grid argmax at beta={betas[k]!r})",
            betas,
            values,
        )

    warm = (float(qv[k]), float(qh[k]))

    def objective(beta: float) -> float:
        cfg_q0 = warm
        point = np.array([beta])
        qv1, qh1, _, _ = _solve_saddle_batch(
            alpha, b_eff, c_eff, hidden, point, rule, q0=cfg_q0
        )
        _, chi_vh, _, _, det = _chi_batch(
            alpha, b_eff, c_eff, hidden, point, qv1, qh1, rule
        )
        if abs(det[0]) < SINGULAR_DET:
            return math.inf
        return abs(float(chi_vh[0]))

    return _golden_section_max(
        objective, float(betas[k - 1]), float(betas[k + 1]), search.refine_tol
    )
