from __future__ import annotations

import math

import numpy as np

from .. import bayes
from ..network import InvalidInputError, Network, ShapeError, gradient, unflatten
from .config import AlgorithmKind, StopReason, TrainingConfig
from .first_order import first_order_step, init_state
from .levenberg import refresh_state, trainbr_epoch, trainlm_epoch
from .trace import TraceRow, TrainingTrace


class TrainingAborted(RuntimeError):
    """Training produced a non-finite objective; ``trace`` holds the rows so far."""

    def __init__(self, message: str, trace: TrainingTrace):
        super().__init__(message)
        self.trace = trace


def _unpack(train_set):
    if hasattr(train_set, "X") and hasattr(train_set, "Y"):
        X, Y = train_set.X, train_set.Y
    else:
        X, Y = train_set
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    return X, Y


def _check(net: Network, X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    if X.ndim != 2 or X.shape[1] != net.layout.n_inputs:
        raise ShapeError(f"inputs have shape {X.shape}, network expects {net.layout.n_inputs} columns")
    if Y.shape != (X.shape[0], net.layout.n_outputs):
        raise ShapeError(f"targets have shape {Y.shape}, network expects {net.layout.n_outputs} columns")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InvalidInputError("training data contains non-finite values (fill missing features first)")


class _Plateau:
    """Counts consecutive epochs whose relative improvement stays below ``rel_tol``."""

    def __init__(self, epochs: int, rel_tol: float):
        self.epochs, self.rel_tol = epochs, rel_tol
        self.count = 0

    def update(self, before: float, after: float) -> bool:
        improvement = (before - after) / max(abs(before), 1e-300)
        self.count = self.count + 1 if improvement < self.rel_tol else 0
        return self.count >= self.epochs


def train(net: Network, train_set, config: TrainingConfig | None = None) -> tuple[Network, TrainingTrace]:
    """Train ``net`` on ``train_set`` (a Dataset or an ``(X, Y)`` pair).

    Returns the best network seen and the per-epoch trace. For fixed-objective
    algorithms "best" means lowest objective. For ``trainbr`` the objective
    changes with the hyperparameters, so every visited point is re-scored
    under the final ``(alpha, beta)``.
    """
    config = config or TrainingConfig()
    X, Y = _unpack(train_set)
    _check(net, X, Y)
    if config.algorithm is AlgorithmKind.TRAINBR:
        return _train_br(net, X, Y, config)
    if config.algorithm is AlgorithmKind.TRAINLM:
        return _train_lm(net, X, Y, config)
    return _train_first_order(net, X, Y, config)


def _finish(trace: TrainingTrace, reason: StopReason, best_epoch: int) -> None:
    trace.stop_reason = reason
    trace.best_epoch = best_epoch


def _abort(trace: TrainingTrace, epoch: int, what: str):
    trace.events.append(f"epoch {epoch}: aborted, non-finite {what}")
    raise TrainingAborted(f"non-finite {what} at epoch {epoch}", trace)


def _train_br(net: Network, X, Y, config: TrainingConfig):
    stop = config.stop
    k = net.n_params
    state = refresh_state(net, X, Y, bayes.BayesState(alpha=0.0, beta=1.0, gamma=float(k)))
    mu = config.mu
    trace = TrainingTrace()
    plateau = _Plateau(stop.plateau_epochs, stop.plateau_rel_tol)
    visited = [net.flatten()]
    reason = StopReason.MAX_EPOCHS
    for epoch in range(1, config.max_epochs + 1):
        before = state
        res = trainbr_epoch(net, X, Y, state, mu, mu_inc=config.mu_inc, mu_dec=config.mu_dec,
                            max_rejections=config.max_rejections, mu_max=stop.mu_max)
        net, state, mu = res.net, res.state, res.mu
        if state.clamped:
            trace.events.append(f"epoch {epoch}: hyperparameter clamp/fallback applied")
        # the row reports the objective the step minimized, under the
        # hyperparameters in force during the epoch; gamma is the new estimate
        objective = before.objective(state.sse, state.ssw)
        g = gradient(net, X, Y, before.beta, before.alpha)
        gnorm = float(np.linalg.norm(g))
        if not (math.isfinite(objective) and math.isfinite(gnorm)):
            _abort(trace, epoch, "objective")
        trace.append(TraceRow(epoch, objective, state.sse, state.ssw, before.alpha,
                              before.beta, state.gamma, mu, gnorm))
        visited.append(net.flatten())
        if gnorm < stop.grad_tol:
            reason = StopReason.GRAD_TOL
            break
        if not res.accepted or mu > stop.mu_max:
            reason = StopReason.MU_MAX
            break
        if plateau.update(before.objective(), objective):
            reason = StopReason.PLATEAU
            break
    scores = []
    for w in visited:
        cand = net.with_params(w)
        scores.append(state.beta * bayes.sum_squared_errors(cand, X, Y) + state.alpha * float(w @ w))
    best = int(np.argmin(scores))
    _finish(trace, reason, best)
    return net.with_params(visited[best]), trace


def _train_lm(net: Network, X, Y, config: TrainingConfig):
    stop = config.stop
    k = net.n_params
    mu = config.mu
    trace = TrainingTrace()
    plateau = _Plateau(stop.plateau_epochs, stop.plateau_rel_tol)
    sse = bayes.sum_squared_errors(net, X, Y)
    best_net, best_f, best_epoch = net, sse, 0
    reason = StopReason.MAX_EPOCHS
    for epoch in range(1, config.max_epochs + 1):
        res = trainlm_epoch(net, X, Y, mu, mu_inc=config.mu_inc, mu_dec=config.mu_dec,
                            max_rejections=config.max_rejections, mu_max=stop.mu_max)
        sse_before = sse
        net, mu = res.net, res.mu
        sse = res.step_objective
        g = gradient(net, X, Y, 1.0, 0.0)
        gnorm = float(np.linalg.norm(g))
        if not (math.isfinite(sse) and math.isfinite(gnorm)):
            _abort(trace, epoch, "objective")
        trace.append(TraceRow(epoch, sse, sse, res.state.ssw, 0.0, 1.0, float(k), mu, gnorm))
        if sse < best_f:
            best_net, best_f, best_epoch = net, sse, epoch
        if gnorm < stop.grad_tol:
            reason = StopReason.GRAD_TOL
            break
        if not res.accepted or mu > stop.mu_max:
            reason = StopReason.MU_MAX
            break
        if plateau.update(sse_before, sse):
            reason = StopReason.PLATEAU
            break
    _finish(trace, reason, best_epoch)
    return best_net, trace


def _train_first_order(net: Network, X, Y, config: TrainingConfig):
    """Minimize the mean squared error over all target entries."""
    stop = config.stop
    k = net.n_params
    scale = 1.0 / Y.size
    layout = net.layout

    def fun(w):
        cand = net.with_params(w) if np.all(np.isfinite(w)) else None
        if cand is None:
            return math.inf, np.full(k, np.nan)
        try:
            sse = bayes.sum_squared_errors(cand, X, Y)
            g = gradient(cand, X, Y, scale, 0.0)
        except InvalidInputError:
            return math.inf, np.full(k, np.nan)
        if not math.isfinite(sse):
            return math.inf, np.full(k, np.nan)
        return scale * sse, g

    st = init_state(fun, net.flatten(), config)
    if not math.isfinite(st.f):
        _abort(TrainingTrace(), 0, "objective")
    trace = TrainingTrace()
    plateau = _Plateau(stop.plateau_epochs, stop.plateau_rel_tol)
    best_w, best_f, best_epoch = st.w.copy(), st.f, 0
    reason = StopReason.MAX_EPOCHS
    n_events = 0
    for epoch in range(1, config.max_epochs + 1):
        f_before = st.f
        first_order_step(config.algorithm, st, epoch=epoch)
        trace.events.extend(st.events[n_events:])
        n_events = len(st.events)
        gnorm = float(np.linalg.norm(st.g))
        if not (math.isfinite(st.f) and math.isfinite(gnorm)):
            _abort(trace, epoch, "objective")
        ssw = float(st.w @ st.w)
        trace.append(TraceRow(epoch, st.f, st.f / scale, ssw, 0.0, scale, float(k), math.nan, gnorm))
        if st.f < best_f:
            best_w, best_f, best_epoch = st.w.copy(), st.f, epoch
        if gnorm < stop.grad_tol:
            reason = StopReason.GRAD_TOL
            break
        if plateau.update(f_before, st.f):
            reason = StopReason.PLATEAU
            break
    _finish(trace, reason, best_epoch)
    return unflatten(layout, best_w), trace
