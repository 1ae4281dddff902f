"""Bayesian-regularized objective and evidence-framework hyperparameter updates.

The objective is ``F = beta * SSE + alpha * SSW`` with ``SSE`` the sum of
squared residuals and ``SSW`` the sum of squares of all network parameters
(biases included). Writing the loss with ``1/N`` in front of both terms only
rescales ``alpha`` and ``beta``; the minimizer is the same, and the
re-estimation formulas below are stated for the unscaled form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .network import Network, forward

ALPHA_MIN = 1e-20
BETA_MIN = 1e-20
HESSIAN_JITTER = 1e-10


@dataclass(frozen=True)
class BayesState:
    alpha: float = 0.0
    beta: float = 1.0
    gamma: float = 0.0
    ssw: float = 0.0
    sse: float = 0.0
    # set when a clamp or fallback replaced a raw re-estimate
    clamped: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if self.alpha < 0 or self.beta <= 0:
            raise ValueError(f"need alpha >= 0 and beta > 0, got alpha={self.alpha}, beta={self.beta}")

    def objective(self, sse: float | None = None, ssw: float | None = None) -> float:
        sse = self.sse if sse is None else sse
        ssw = self.ssw if ssw is None else ssw
        return self.beta * sse + self.alpha * ssw


def sum_squared_errors(net: Network, X, Y) -> float:
    pred = forward(net, X)
    Y = np.asarray(Y, dtype=float).reshape(pred.shape)
    r = Y - pred
    return float(np.sum(r * r))


def sum_squared_weights(net: Network) -> float:
    w = net.flatten()
    return float(w @ w)


def regularized_loss(net: Network, X, Y, state: BayesState) -> float:
    return state.beta * sum_squared_errors(net, X, Y) + state.alpha * sum_squared_weights(net)


def gauss_newton_hessian(J: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """``H = 2*beta*J^T J + 2*alpha*I``."""
    H = 2.0 * beta * (J.T @ J)
    H[np.diag_indices_from(H)] += 2.0 * alpha
    return H


def _cholesky(H: np.ndarray):
    try:
        return linalg.cho_factor(H, lower=True, check_finite=True)
    except linalg.LinAlgError:
        return linalg.cho_factor(H + HESSIAN_JITTER * np.eye(H.shape[0]), lower=True, check_finite=True)


def hessian_trace_inverse(H: np.ndarray) -> float:
    """``tr(H^-1)`` via a Cholesky solve.

    A singular ``H`` is retried once with ``1e-10 * I`` added. If that still
    fails (rank-deficient Jacobian with ``alpha`` near zero), the eigenvalues
    are floored at ``1e-10 * max(1, largest eigenvalue)``.
    """
    try:
        factor = _cholesky(H)
    except linalg.LinAlgError:
        lam = linalg.eigvalsh(H)
        floor = HESSIAN_JITTER * max(1.0, float(lam[-1]))
        return float(np.sum(1.0 / np.maximum(lam, floor)))
    inv = linalg.cho_solve(factor, np.eye(H.shape[0]))
    return float(np.trace(inv))


def hessian_logdet(H: np.ndarray) -> float:
    """``ln det H``, or ``nan`` when ``H`` is not positive definite."""
    try:
        c, _ = _cholesky(H)
    except linalg.LinAlgError:
        return math.nan
    return float(2.0 * np.sum(np.log(np.diag(c))))


def update_hyperparameters(state: BayesState, hessian_trace_inverse: float, k: int,
                           n_targets: int) -> BayesState:
    """Re-estimate ``(gamma, alpha, beta)`` at the current weights.

    ``state.sse`` and ``state.ssw`` must already describe the new point.
    ``gamma = k - 2*alpha*tr(H^-1)`` is clamped to ``[0, k]``. When ``SSW`` or
    ``SSE`` is zero (or so small that the ratio overflows), or when
    ``n_targets - gamma`` is not positive, the affected hyperparameter keeps
    its previous value (raised to the floor if needed) and the result is
    flagged as clamped.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    clamped = False
    gamma = k - 2.0 * state.alpha * hessian_trace_inverse
    if not math.isfinite(gamma):
        gamma, clamped = float(k), True
    if gamma < 0.0 or gamma > k:
        gamma, clamped = min(max(gamma, 0.0), float(k)), True

    alpha = gamma / (2.0 * state.ssw) if state.ssw > 0.0 else math.nan
    if not math.isfinite(alpha):
        alpha, clamped = state.alpha, True
    beta = (n_targets - gamma) / (2.0 * state.sse) if state.sse > 0.0 and n_targets > gamma else math.nan
    if not math.isfinite(beta):
        beta, clamped = state.beta, True

    if alpha < ALPHA_MIN:
        alpha, clamped = ALPHA_MIN, True
    if beta < BETA_MIN:
        beta, clamped = BETA_MIN, True
    return replace(state, alpha=float(alpha), beta=float(beta), gamma=float(gamma), clamped=clamped)


def log_evidence_terms(state: BayesState, k: int, n_targets: int, hessian_logdet: float) -> float:
    """Gaussian (Laplace) approximation of ``ln P(D | alpha, beta, M)``.

    Uses the convention of the objective above, where the weight prior has
    precision ``2*alpha`` and the noise precision is ``2*beta``. Diagnostic
    only; returns ``nan`` when the log-determinant is unavailable.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not math.isfinite(hessian_logdet):
        return math.nan
    alpha = max(state.alpha, ALPHA_MIN)
    return (
        -state.objective()
        - 0.5 * hessian_logdet
        + 0.5 * k * math.log(2.0 * alpha)
        + 0.5 * n_targets * math.log(2.0 * state.beta)
        - 0.5 * n_targets * math.log(2.0 * math.pi)
    )
