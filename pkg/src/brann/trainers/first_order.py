"""Gradient-based trainers that do not use the Jacobian.

Each optimizer works on a generic objective ``fun(w) -> (value, gradient)``
so it can be exercised on plain test functions as well as networks. One call
to :func:`first_order_step` performs one epoch (one iteration) and leaves the
new point, value and gradient in the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import AlgorithmKind, FIRST_ORDER_KINDS, TrainingConfig

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass
class OptimizerState:
    fun: Objective
    w: np.ndarray
    f: float
    g: np.ndarray
    config: TrainingConfig = field(default_factory=TrainingConfig)
    velocity: np.ndarray | None = None
    lr: float = 0.0
    step_sizes: np.ndarray | None = None
    prev_grad: np.ndarray | None = None
    direction: np.ndarray | None = None
    prev_step: float = 0.0
    prev_slope: float = 0.0
    inv_hessian: np.ndarray | None = None
    since_restart: int = 0
    # scaled conjugate gradient
    scg_lambda: float = 0.0
    scg_success: bool = True
    scg_theta: float = 0.0
    scg_successes: int = 0
    events: list[str] = field(default_factory=list)


def init_state(fun: Objective, w0, config: TrainingConfig | None = None) -> OptimizerState:
    config = config or TrainingConfig()
    w0 = np.array(w0, dtype=float)
    f, g = fun(w0)
    st = OptimizerState(fun=fun, w=w0, f=float(f), g=np.asarray(g, dtype=float), config=config)
    st.lr = config.lr
    st.velocity = np.zeros_like(w0)
    st.step_sizes = np.full_like(w0, config.delta0)
    st.prev_grad = np.zeros_like(w0)
    st.scg_lambda = config.scg_lambda
    return st


def _move(st: OptimizerState, delta: np.ndarray, f=None, g=None) -> np.ndarray:
    st.w = st.w + delta
    if f is None:
        f, g = st.fun(st.w)
    st.f, st.g = float(f), np.asarray(g, dtype=float)
    return delta


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through ``(a, fa, da)`` and ``(b, fb, db)``, or None."""
    if a == b:
        return None
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    x = b - (b - a) * (db + d2 - d1) / denom
    return x if math.isfinite(x) else None


def line_search(fun: Objective, w: np.ndarray, f0: float, g0: np.ndarray, d: np.ndarray,
                step0: float, c1: float = 1e-4, c2: float = 0.9, max_iter: int = 25):
    """Strong-Wolfe line search with cubic interpolation.

    After a first trial point that already meets the Wolfe conditions, one
    extra cubic refinement is tried and kept if it is better; on a quadratic
    this lands on the exact minimizer along ``d``. Returns
    ``(step, f, g)`` or None on failure.
    """
    slope0 = float(g0 @ d)
    if not slope0 < 0:
        return None

    def phi(a):
        f, g = fun(w + a * d)
        f = float(f)
        if not math.isfinite(f):
            return math.inf, None, math.inf
        return f, g, float(g @ d)

    def zoom(lo, hi):
        a_lo, f_lo, d_lo, g_lo = lo
        a_hi, f_hi, d_hi, _ = hi
        for _ in range(max_iter):
            a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi) if math.isfinite(f_hi) else None
            lo_b, hi_b = min(a_lo, a_hi), max(a_lo, a_hi)
            margin = 0.1 * (hi_b - lo_b)
            if a is None or not (lo_b + margin <= a <= hi_b - margin):
                a = 0.5 * (a_lo + a_hi)
            f, g, da = phi(a)
            if f > f0 + c1 * a * slope0 or f >= f_lo:
                a_hi, f_hi, d_hi = a, f, da
            else:
                if abs(da) <= -c2 * slope0:
                    return a, f, g
                if da * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo, g_lo = a, f, da, g
            if abs(a_hi - a_lo) < 1e-16 * max(1.0, abs(a_lo)):
                break
        if a_lo > 0 and f_lo < f0:
            return a_lo, f_lo, g_lo
        return None

    prev = (0.0, f0, slope0, g0)
    a = step0
    for i in range(max_iter):
        f, g, da = phi(a)
        if f > f0 + c1 * a * slope0 or (i > 0 and f >= prev[1]):
            return zoom(prev, (a, f, da, g))
        if abs(da) <= -c2 * slope0:
            if i == 0:
                ac = _cubic_min(0.0, f0, slope0, a, f, da)
                if ac is not None and 0 < ac < 4 * a and ac != a:
                    fc, gc, dc = phi(ac)
                    if fc <= f0 + c1 * ac * slope0 and fc < f and abs(dc) <= -c2 * slope0:
                        return ac, fc, gc
            return a, f, g
        if da >= 0:
            return zoom((a, f, da, g), prev)
        ac = _cubic_min(prev[0], prev[1], prev[2], a, f, da)
        prev = (a, f, da, g)
        a = min(max(2.0 * a, ac if ac is not None else 0.0), 10.0 * a)
    return None


def _searched_step(st: OptimizerState, d: np.ndarray, epoch: int) -> np.ndarray:
    cfg = st.config
    slope = float(st.g @ d)
    if st.prev_step > 0 and st.prev_slope < 0 and slope < 0:
        step0 = st.prev_step * st.prev_slope / slope
    else:
        step0 = 1.0 / max(1.0, float(np.linalg.norm(d)))
    res = line_search(st.fun, st.w, st.f, st.g, d, step0, cfg.wolfe_c1, cfg.wolfe_c2)
    if res is None:
        st.events.append(f"epoch {epoch}: line search failed, steepest-descent fallback")
        d = -st.g
        slope = float(st.g @ d)
        res = line_search(st.fun, st.w, st.f, st.g, d,
                          1.0 / max(1.0, float(np.linalg.norm(d))), cfg.wolfe_c1, cfg.wolfe_c2)
        st.since_restart = 0
        if res is None:
            st.events.append(f"epoch {epoch}: steepest-descent fallback failed, no move")
            st.prev_step = 0.0
            st.direction = None
            return np.zeros_like(st.w)
    step, f, g = res
    st.prev_step, st.prev_slope = step, slope
    st.direction = d
    return _move(st, step * d, f, g)


def _gd(st: OptimizerState, momentum: float, adaptive: bool) -> np.ndarray:
    cfg = st.config
    # a diverging run overflows here; the caller detects the non-finite objective
    with np.errstate(over="ignore", invalid="ignore"):
        delta = momentum * st.velocity - (1.0 - momentum) * st.lr * st.g
    if not adaptive:
        st.velocity = delta
        return _move(st, delta)
    f_new, g_new = st.fun(st.w + delta)
    if not math.isfinite(f_new) or f_new > st.f * cfg.max_perf_inc:
        st.lr *= cfg.lr_dec
        st.velocity = np.zeros_like(st.w)
        return np.zeros_like(st.w)
    if f_new < st.f:
        st.lr *= cfg.lr_inc
    st.velocity = delta
    return _move(st, delta, f_new, g_new)


def _rprop(st: OptimizerState) -> np.ndarray:
    cfg = st.config
    agree = st.g * st.prev_grad
    sizes = np.where(agree > 0, st.step_sizes * cfg.eta_plus,
                     np.where(agree < 0, st.step_sizes * cfg.eta_minus, st.step_sizes))
    st.step_sizes = np.clip(sizes, cfg.delta_min, cfg.delta_max)
    st.prev_grad = st.g.copy()
    return _move(st, -np.sign(st.g) * st.step_sizes)


def _conjugate_gradient(st: OptimizerState, kind: AlgorithmKind, epoch: int) -> np.ndarray:
    g = st.g
    n = g.size
    d_prev, g_prev = st.direction, st.prev_grad
    restart = d_prev is None or st.since_restart >= n or not np.any(g_prev)
    if not restart and kind is AlgorithmKind.TRAINCGB:
        # Powell's restart test: consecutive gradients far from orthogonal
        restart = abs(float(g @ g_prev)) >= 0.2 * float(g @ g)
    if restart:
        d = -g
        st.since_restart = 0
    else:
        denom = float(g_prev @ g_prev)
        if kind is AlgorithmKind.TRAINCGF:
            coef = float(g @ g) / denom
        else:
            coef = float(g @ (g - g_prev)) / denom
        d = -g + coef * d_prev
        if float(d @ g) >= 0:
            d = -g
            st.since_restart = 0
    st.prev_grad = g.copy()
    st.since_restart += 1
    return _searched_step(st, d, epoch)


def _bfgs(st: OptimizerState, epoch: int) -> np.ndarray:
    n = st.w.size
    if st.inv_hessian is None:
        st.inv_hessian = np.eye(n)
    g_old = st.g
    d = -st.inv_hessian @ g_old
    if float(d @ g_old) >= 0:
        st.inv_hessian = np.eye(n)
        d = -g_old
    delta = _searched_step(st, d, epoch)
    s = delta
    y = st.g - g_old
    sy = float(s @ y)
    if not np.any(s):
        return delta
    if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)) and sy > 0:
        if epoch == 1 or st.since_restart == 0:
            st.inv_hessian = np.eye(n) * (sy / float(y @ y))
        rho = 1.0 / sy
        Hy = st.inv_hessian @ y
        st.inv_hessian = (st.inv_hessian - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                          + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s))
        st.since_restart += 1
    else:
        st.inv_hessian = np.eye(n)
        st.since_restart = 0
        st.events.append(f"epoch {epoch}: BFGS curvature check failed, reset to identity")
    return delta


def _scg(st: OptimizerState, epoch: int) -> np.ndarray:
    """Moller's scaled conjugate gradient (no line search, one iteration)."""
    cfg = st.config
    n = st.w.size
    if st.direction is None:
        st.direction = -st.g
        st.scg_success = True
        st.scg_successes = 0
    d = st.direction
    g = st.g
    mu = float(d @ g)
    if st.scg_success:
        if mu >= 0:
            d = -g
            st.direction = d
            mu = float(d @ g)
        kappa = float(d @ d)
        if kappa < np.finfo(float).eps:
            return np.zeros_like(st.w)
        sigma = cfg.scg_sigma / math.sqrt(kappa)
        _, g_plus = st.fun(st.w + sigma * d)
        st.scg_theta = float(d @ (np.asarray(g_plus) - g)) / sigma
    kappa = float(d @ d)
    lam = st.scg_lambda
    delta_c = st.scg_theta + lam * kappa
    if delta_c <= 0:
        delta_c = lam * kappa
        lam = lam - st.scg_theta / kappa
    step = -mu / delta_c
    w_new = st.w + step * d
    f_new, g_new = st.fun(w_new)
    f_new = float(f_new)
    comparison = 2.0 * (f_new - st.f) / (step * mu) if math.isfinite(f_new) else -1.0
    moved = np.zeros_like(st.w)
    if comparison >= 0:
        st.scg_success = True
        st.scg_successes += 1
        g_old = st.g
        moved = _move(st, step * d, f_new, g_new)
        if st.scg_successes >= n:
            st.direction = -st.g
            st.scg_successes = 0
        else:
            coef = float((st.g - g_old) @ st.g) / mu
            st.direction = coef * d - st.g
    else:
        st.scg_success = False
    if comparison < 0.25:
        lam = min(4.0 * lam, 1e100)
    if comparison > 0.75:
        lam = max(0.5 * lam, 1e-15)
    st.scg_lambda = lam
    return moved


def first_order_step(kind: AlgorithmKind | str, state: OptimizerState,
                     gradient: np.ndarray | None = None, epoch: int = 1) -> np.ndarray:
    """Advance ``state`` by one epoch of ``kind`` and return the parameter change.

    ``gradient`` overrides the gradient stored in the state (it must belong to
    ``state.w``).
    """
    kind = AlgorithmKind.parse(str(getattr(kind, "value", kind)))
    if kind not in FIRST_ORDER_KINDS:
        raise ValueError(f"{kind.value} is not a first-order trainer")
    if gradient is not None:
        state.g = np.asarray(gradient, dtype=float)
    cfg = state.config
    if kind is AlgorithmKind.TRAINGDM:
        return _gd(state, cfg.momentum, adaptive=False)
    if kind is AlgorithmKind.TRAINGDA:
        return _gd(state, 0.0, adaptive=True)
    if kind is AlgorithmKind.TRAINGDX:
        return _gd(state, cfg.momentum, adaptive=True)
    if kind is AlgorithmKind.TRAINRP:
        return _rprop(state)
    if kind is AlgorithmKind.TRAINSCG:
        return _scg(state, epoch)
    if kind is AlgorithmKind.TRAINBFG:
        return _bfgs(state, epoch)
    return _conjugate_gradient(state, kind, epoch)
