"""Feedforward networks: transfer functions, forward pass and analytic derivatives.

Parameters are stored per layer as ``W`` (``n_out x n_in``) and ``b``
(``n_out``). The flat parameter vector walks the layers in order and, inside
each layer, lists ``W`` row-major followed by ``b``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised for non-finite or otherwise unusable numeric input."""


class ShapeError(ValueError):
    """Raised when array dimensions disagree with the network layout."""


class TransferKind(str, enum.Enum):
    TANSIG = "tansig"
    LOGSIG = "logsig"
    PURELIN = "purelin"
    POSLIN = "poslin"
    SATLIN = "satlin"
    HARDLIM = "hardlim"
    TRIBAS = "tribas"
    RADBAS = "radbas"
    ELLIOTSIG = "elliotsig"
    COMPET = "compet"

    @property
    def differentiable(self) -> bool:
        return self not in (TransferKind.HARDLIM, TransferKind.COMPET)


def _check_finite(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("transfer input contains non-finite values")
    return z


def _compet(z: np.ndarray) -> np.ndarray:
    # one-hot along the last axis; argmax picks the lowest index on ties
    out = np.zeros_like(z)
    if z.shape[-1] == 0:
        return out
    idx = np.argmax(z, axis=-1)
    np.put_along_axis(out, np.expand_dims(idx, -1), 1.0, axis=-1)
    return out


def transfer_apply(kind: TransferKind | str, z) -> np.ndarray:
    """Apply a transfer function.

    Every kind acts elementwise except ``compet``, which returns the one-hot
    encoding of the argmax along the last axis (one row per sample when ``z``
    is a matrix).
    """
    kind = TransferKind(kind)
    z = _check_finite(z)
    if kind is TransferKind.TANSIG:
        # 2 / (1 + exp(-2z)) - 1 == tanh(z); tanh avoids overflow
        return np.tanh(z)
    if kind is TransferKind.LOGSIG:
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if kind is TransferKind.PURELIN:
        return z.copy()
    if kind is TransferKind.POSLIN:
        return np.maximum(z, 0.0)
    if kind is TransferKind.SATLIN:
        return np.clip(z, 0.0, 1.0)
    if kind is TransferKind.HARDLIM:
        return (z >= 0).astype(float)
    if kind is TransferKind.TRIBAS:
        return np.maximum(0.0, 1.0 - np.abs(z))
    if kind is TransferKind.RADBAS:
        return np.exp(-z * z)
    if kind is TransferKind.ELLIOTSIG:
        return z / (1.0 + np.abs(z))
    return _compet(z)


def transfer_derivative(kind: TransferKind | str, z) -> np.ndarray:
    """Elementwise derivative of a transfer function.

    Piecewise-linear kinds use the right-hand derivative at their breakpoints.
    ``hardlim`` and ``compet`` are treated as having zero derivative, so no
    gradient flows through layers that use them.
    """
    kind = TransferKind(kind)
    z = _check_finite(z)
    if kind is TransferKind.TANSIG:
        t = np.tanh(z)
        return 1.0 - t * t
    if kind is TransferKind.LOGSIG:
        s = 0.5 * (1.0 + np.tanh(0.5 * z))
        return s * (1.0 - s)
    if kind is TransferKind.PURELIN:
        return np.ones_like(z)
    if kind is TransferKind.POSLIN:
        return (z >= 0).astype(float)
    if kind is TransferKind.SATLIN:
        return ((z >= 0) & (z < 1)).astype(float)
    if kind is TransferKind.TRIBAS:
        # right-hand slope: +1 on [-1, 0), -1 on [0, 1), 0 elsewhere
        return np.where((z >= -1) & (z < 0), 1.0, np.where((z >= 0) & (z < 1), -1.0, 0.0))
    if kind is TransferKind.RADBAS:
        return -2.0 * z * np.exp(-z * z)
    if kind is TransferKind.ELLIOTSIG:
        d = 1.0 + np.abs(z)
        return 1.0 / (d * d)
    return np.zeros_like(z)


@dataclass(frozen=True)
class NetworkLayout:
    layer_sizes: tuple[int, ...]
    transfers: tuple[TransferKind, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        transfers = tuple(TransferKind(t) for t in self.transfers)
        if len(sizes) < 2:
            raise ValueError("a layout needs at least an input and an output layer")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        if len(transfers) != len(sizes) - 1:
            raise ValueError(
                f"expected {len(sizes) - 1} transfer functions, got {len(transfers)}"
            )
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "transfers", transfers)

    @classmethod
    def mlp(cls, n_in: int, hidden: Sequence[int], n_out: int,
            transfer: TransferKind | str = TransferKind.TANSIG,
            output_transfer: TransferKind | str = TransferKind.PURELIN) -> "NetworkLayout":
        """Hidden layers share ``transfer``; the output layer uses ``output_transfer``."""
        sizes = (n_in, *hidden, n_out)
        transfers = (TransferKind(transfer),) * len(hidden) + (TransferKind(output_transfer),)
        return cls(sizes, transfers)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        return sum((a + 1) * b for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def __str__(self) -> str:
        sizes = "-".join(str(s) for s in self.layer_sizes)
        return f"{sizes} [{','.join(t.value for t in self.transfers)}]"


@dataclass(frozen=True, eq=False)
class Network:
    layout: NetworkLayout
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = self.layout.layer_sizes
        ws, bs = [], []
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("number of weight/bias arrays does not match the layout")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.array(w, dtype=float)
            b = np.array(b, dtype=float).reshape(-1)
            if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise ShapeError(
                    f"layer {l}: expected W {(sizes[l + 1], sizes[l])} and b ({sizes[l + 1]},), "
                    f"got {w.shape} and {b.shape}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError(f"layer {l} has non-finite parameters")
            w.setflags(write=False)
            b.setflags(write=False)
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def n_params(self) -> int:
        return self.layout.n_params

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def with_params(self, values) -> "Network":
        return unflatten(self.layout, values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.flatten(), other.flatten())


def unflatten(layout: NetworkLayout, values) -> Network:
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != layout.n_params:
        raise ShapeError(f"expected {layout.n_params} parameters, got {values.size}")
    ws, bs = [], []
    pos = 0
    for n_in, n_out in zip(layout.layer_sizes[:-1], layout.layer_sizes[1:]):
        ws.append(values[pos:pos + n_in * n_out].reshape(n_out, n_in))
        pos += n_in * n_out
        bs.append(values[pos:pos + n_out])
        pos += n_out
    return Network(layout, tuple(ws), tuple(bs))


def init_weights(layout: NetworkLayout, seed: int) -> Network:
    """Seeded initialization: uniform [-0.5, 0.5] draws, Nguyen-Widrow scaled
    for hidden layers."""
    rng = np.random.default_rng(seed)
    sizes = layout.layer_sizes
    ws, bs = [], []
    for l, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = rng.uniform(-0.5, 0.5, size=(n_out, n_in))
        b = rng.uniform(-0.5, 0.5, size=n_out)
        if l < len(sizes) - 2:
            scale = 0.7 * n_out ** (1.0 / n_in)
            norms = np.linalg.norm(w, axis=1, keepdims=True)
            w = scale * w / np.where(norms > 0, norms, 1.0)
            b = 2.0 * scale * b
        ws.append(w)
        bs.append(b)
    return Network(layout, tuple(ws), tuple(bs))


def _as_inputs(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.layout.n_inputs:
        raise ShapeError(f"expected inputs of shape (N, {net.layout.n_inputs}), got {X.shape}")
    return X


def _forward_cache(net: Network, X: np.ndarray):
    """Return pre-activations and activations for every layer (activations[0] is X)."""
    acts = [X]
    pre = []
    for w, b, kind in zip(net.weights, net.biases, net.layout.transfers):
        z = acts[-1] @ w.T + b
        pre.append(z)
        acts.append(transfer_apply(kind, z))
    return pre, acts


def forward(net: Network, X) -> np.ndarray:
    X = _as_inputs(net, X)
    return _forward_cache(net, X)[1][-1]


def _as_targets(net: Network, X: np.ndarray, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if Y.shape != (X.shape[0], net.layout.n_outputs):
        raise ShapeError(f"expected targets of shape {(X.shape[0], net.layout.n_outputs)}, got {Y.shape}")
    return Y


def gradient(net: Network, X, Y, beta: float = 1.0, alpha: float = 0.0) -> np.ndarray:
    """Gradient of ``beta * SSE + alpha * SSW`` with respect to the flat parameters."""
    X = _as_inputs(net, X)
    Y = _as_targets(net, X, Y)
    pre, acts = _forward_cache(net, X)
    n_layers = len(net.weights)
    delta = 2.0 * beta * (acts[-1] - Y) * transfer_derivative(net.layout.transfers[-1], pre[-1])
    grads: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for l in range(n_layers - 1, -1, -1):
        gw = delta.T @ acts[l]
        gb = delta.sum(axis=0)
        grads[l] = np.concatenate([gw.ravel(), gb])
        if l > 0:
            delta = (delta @ net.weights[l]) * transfer_derivative(net.layout.transfers[l - 1], pre[l - 1])
    return np.concatenate(grads) + 2.0 * alpha * net.flatten()


def jacobian(net: Network, X) -> np.ndarray:
    """Jacobian of the stacked outputs, shape ``(N*m, k)``.

    Row ``i*m + j`` is the derivative of output ``j`` at sample ``i``.
    """
    X = _as_inputs(net, X)
    pre, acts = _forward_cache(net, X)
    n, m = X.shape[0], net.layout.n_outputs
    n_layers = len(net.weights)
    # delta[i, j, :] = d output_j(x_i) / d pre-activation of the current layer
    delta = np.einsum("jk,ik->ijk", np.eye(m), transfer_derivative(net.layout.transfers[-1], pre[-1]))
    blocks: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for l in range(n_layers - 1, -1, -1):
        jw = np.einsum("ijo,ic->ijoc", delta, acts[l]).reshape(n, m, -1)
        blocks[l] = np.concatenate([jw, delta], axis=2)
        if l > 0:
            delta = (delta @ net.weights[l]) * transfer_derivative(net.layout.transfers[l - 1], pre[l - 1])[:, None, :]
    return np.concatenate(blocks, axis=2).reshape(n * m, net.n_params)


CHECKPOINT_MAGIC = "# brann checkpoint v1"


def save_checkpoint(net: Network, path, seed: int | None = None, extra: dict | None = None) -> None:
    """Write a text checkpoint: ``key = value`` header, ``---``, one parameter per line.

    Values use Python's shortest round-trip float repr, so reloading is exact.
    """
    lines = [
        CHECKPOINT_MAGIC,
        f"layout = {','.join(str(s) for s in net.layout.layer_sizes)}",
        f"transfers = {','.join(t.value for t in net.layout.transfers)}",
        f"seed = {'' if seed is None else int(seed)}",
        f"n_params = {net.n_params}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    lines.append("---")
    lines.extend(repr(float(v)) for v in net.flatten())
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path) -> tuple[Network, dict[str, str]]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a brann checkpoint")
    header: dict[str, str] = {}
    for lineno, line in enumerate(text[1:], start=2):
        if line.strip() == "---":
            body = text[lineno:]
            break
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        header[key.strip()] = value.strip()
    else:
        raise ValueError(f"{path}: missing '---' separator")
    layout = NetworkLayout(
        tuple(int(s) for s in header["layout"].split(",")),
        tuple(header["transfers"].split(",")),
    )
    values = np.array([float(v) for v in body if v.strip()])
    return unflatten(layout, values), header
