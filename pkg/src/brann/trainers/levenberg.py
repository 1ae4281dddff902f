"""Levenberg-Marquardt steps and the Bayesian-regularization epoch."""

from __future__ import annotations

from dataclasses import replace
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .. import bayes
from ..network import Network, forward, jacobian


class LMFactorizationError(linalg.LinAlgError):
    """The damped system was not positive definite; retry with a larger mu."""


def lm_step(J: np.ndarray, residuals: np.ndarray, mu: float, alpha: float = 0.0,
            beta: float = 1.0, w: np.ndarray | None = None) -> np.ndarray:
    """Solve ``(2b J^T J + (2a + mu) I) delta = -(2b J^T r + 2a w)``.

    ``residuals`` are prediction minus target, stacked sample-major to match
    the Jacobian rows. ``w`` is needed only when ``alpha > 0``.
    """
    J = np.asarray(J, dtype=float)
    r = np.asarray(residuals, dtype=float).reshape(-1)
    k = J.shape[1]
    if w is None:
        w = np.zeros(k)
    A = 2.0 * beta * (J.T @ J)
    A[np.diag_indices_from(A)] += 2.0 * alpha + mu
    rhs = -(2.0 * beta * (J.T @ r) + 2.0 * alpha * np.asarray(w, dtype=float))
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise LMFactorizationError(str(exc)) from exc
    return linalg.cho_solve(factor, rhs)


class EpochResult(NamedTuple):
    net: Network
    state: bayes.BayesState
    mu: float
    accepted: bool
    # objective under the hyperparameters that governed the step
    step_objective: float


def _residuals(net: Network, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return (forward(net, X) - Y).reshape(-1)


def _lm_inner(net: Network, X: np.ndarray, Y: np.ndarray, alpha: float, beta: float,
              mu: float, mu_inc: float, mu_dec: float, max_rejections: int, mu_max: float):
    """One accepted (or exhausted) damped Gauss-Newton step on ``beta*SSE + alpha*SSW``."""
    w = net.flatten()
    r = _residuals(net, X, Y)
    f0 = beta * float(r @ r) + alpha * float(w @ w)
    J = jacobian(net, X)
    for _ in range(max_rejections):
        try:
            delta = lm_step(J, r, mu, alpha, beta, w)
        except LMFactorizationError:
            mu *= mu_inc
            continue
        w_new = w + delta
        if np.all(np.isfinite(w_new)):
            cand = net.with_params(w_new)
            r_new = _residuals(cand, X, Y)
            f_new = beta * float(r_new @ r_new) + alpha * float(w_new @ w_new)
            if np.isfinite(f_new) and f_new < f0:
                return cand, max(mu / mu_dec, 1e-20), True, f_new
        mu *= mu_inc
        if mu > mu_max:
            break
    return net, mu, False, f0


def trainlm_epoch(net: Network, X, Y, mu: float, *, mu_inc: float = 10.0, mu_dec: float = 10.0,
                  max_rejections: int = 10, mu_max: float = 1e10) -> EpochResult:
    """Plain Levenberg-Marquardt on SSE (``alpha = 0``, ``beta = 1``)."""
    net2, mu2, ok, f = _lm_inner(net, X, Y, 0.0, 1.0, mu, mu_inc, mu_dec, max_rejections, mu_max)
    ssw = bayes.sum_squared_weights(net2)
    state = bayes.BayesState(alpha=0.0, beta=1.0, gamma=float(net.n_params), ssw=ssw, sse=f)
    return EpochResult(net2, state, mu2, ok, f)


def refresh_state(net: Network, X, Y, state: bayes.BayesState) -> bayes.BayesState:
    return replace(state, sse=bayes.sum_squared_errors(net, X, Y), ssw=bayes.sum_squared_weights(net))


def reestimate(net: Network, X, Y, state: bayes.BayesState) -> bayes.BayesState:
    """Evidence update of ``(gamma, alpha, beta)`` at ``net`` using the Gauss-Newton Hessian."""
    state = refresh_state(net, X, Y, state)
    J = jacobian(net, X)
    H = bayes.gauss_newton_hessian(J, state.alpha, state.beta)
    tr_inv = bayes.hessian_trace_inverse(H)
    return bayes.update_hyperparameters(state, tr_inv, net.n_params, J.shape[0])


def trainbr_epoch(net: Network, X, Y, state: bayes.BayesState, mu: float, *,
                  mu_inc: float = 10.0, mu_dec: float = 10.0, max_rejections: int = 10,
                  mu_max: float = 1e10) -> EpochResult:
    """One LM step on ``F = beta*SSE + alpha*SSW`` followed by the evidence update.

    A step is accepted only if it lowers ``F`` at the current hyperparameters;
    after ``max_rejections`` consecutive failures the network is returned
    unchanged with ``accepted=False``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(X.shape[0], -1)
    net2, mu2, ok, f_step = _lm_inner(net, X, Y, state.alpha, state.beta, mu,
                                      mu_inc, mu_dec, max_rejections, mu_max)
    if not ok:
        return EpochResult(net, refresh_state(net, X, Y, state), mu2, False, f_step)
    return EpochResult(net2, reestimate(net2, X, Y, state), mu2, True, f_step)
