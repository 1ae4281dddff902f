"""Independent reference implementations used by the tests.

None of these call into the derivative or solver code they check.
"""

import math
from collections import Counter

import numpy as np

from brann.network import NetworkLayout, forward, init_weights

DIFFERENTIABLE_FOR_FD = ("tansig", "logsig", "elliotsig", "purelin", "radbas")


def loss(net, X, Y, beta=1.0, alpha=0.0):
    r = forward(net, X) - Y
    w = net.flatten()
    return beta * float(np.sum(r * r)) + alpha * float(w @ w)


def fd_gradient(net, X, Y, beta=1.0, alpha=0.0, h=1e-6):
    w = net.flatten()
    g = np.empty_like(w)
    for i in range(w.size):
        wp, wm = w.copy(), w.copy()
        wp[i] += h
        wm[i] -= h
        g[i] = (loss(net.with_params(wp), X, Y, beta, alpha)
                - loss(net.with_params(wm), X, Y, beta, alpha)) / (2 * h)
    return g


def fd_jacobian(net, X, h=1e-6):
    w = net.flatten()
    cols = []
    for i in range(w.size):
        wp, wm = w.copy(), w.copy()
        wp[i] += h
        wm[i] -= h
        cols.append(((forward(net.with_params(wp), X) - forward(net.with_params(wm), X)) / (2 * h)).reshape(-1))
    return np.column_stack(cols)


def rel_error(a, b):
    """Norm-wise relative error, guarded against an all-zero reference."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), np.linalg.norm(a), 1e-12))


def random_network(rng, max_sizes=(4, 8, 8, 2), transfers=DIFFERENTIABLE_FOR_FD):
    """Random layout no larger than ``max_sizes`` with random transfer functions."""
    n_hidden = int(rng.integers(0, len(max_sizes) - 1))
    sizes = [int(rng.integers(1, max_sizes[0] + 1))]
    sizes += [int(rng.integers(1, max_sizes[1 + i] + 1)) for i in range(n_hidden)]
    sizes.append(int(rng.integers(1, max_sizes[-1] + 1)))
    kinds = [str(rng.choice(transfers)) for _ in range(len(sizes) - 1)]
    layout = NetworkLayout(tuple(sizes), tuple(kinds))
    net = init_weights(layout, int(rng.integers(0, 2**31)))
    # perturb so the parameters are not confined to the initializer's ranges
    return net.with_params(net.flatten() + rng.normal(0, 0.3, net.n_params))


def dense_lm_solve(J, r, mu, alpha=0.0, beta=1.0, w=None):
    """Damped normal equations solved with an explicit matrix inverse."""
    k = J.shape[1]
    w = np.zeros(k) if w is None else w
    A = 2 * beta * J.T @ J + (2 * alpha + mu) * np.eye(k)
    return -np.linalg.inv(A) @ (2 * beta * J.T @ r + 2 * alpha * w)


def brute_mi(a, b):
    """Plug-in mutual information (nats) by explicit counting over label pairs."""
    n = len(a)
    ca, cb, cab = Counter(a), Counter(b), Counter(zip(a, b))
    total = 0.0
    for (x, y), c in cab.items():
        total += (c / n) * math.log((c / n) / ((ca[x] / n) * (cb[y] / n)))
    return total


def brute_entropy(a):
    n = len(a)
    return -sum((c / n) * math.log(c / n) for c in Counter(a).values())


def brute_mrmr_order(labels, y_labels):
    """Greedy MID ordering recomputed from scratch with the brute-force MI."""
    d = len(labels)
    rel = [brute_mi(list(f), list(y_labels)) for f in labels]
    order, remaining = [], list(range(d))
    while remaining:
        def score(j):
            if not order:
                return rel[j]
            return rel[j] - sum(brute_mi(list(labels[j]), list(labels[s])) for s in order) / len(order)
        best = max(remaining, key=lambda j: (score(j), -j))
        order.append(best)
        remaining.remove(best)
    return order
