"""Trainable multi-scale density-filter network.

Architecture: one or more filter-bank layers over a fixed covariance matrix
(one inverse temperature per output scale, optionally learnable), applied
independently to every time point of the input signal, followed by a flatten
across channels and time and a single-hidden-layer fully connected head.

The covariance is computed once from training data and held fixed, so every
scale's density eigenvalues live on the same fixed spectrum; beta gradients
therefore flow through the eigenvalue map only, via
d rho_i / d beta = rho_i (E_q[lambda] - lambda_i).

All gradients are analytic (no autodiff dependency) and are validated against
central finite differences in the test suite.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import spectral
from .covariance import CovarianceMatrix, as_matrix
from .density import DensityOperator
from .errors import ShapeError, TrainingError
from .filtering import FilterSpec, filter_apply

AGGREGATIONS = ("concatenate", "sum", "mean")
TASKS = ("regression", "classification")
LOSSES = ("mse", "mae", "cross_entropy")


def _tanh(x):
    return np.tanh(x)


def _dtanh(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _elu(x):
    return np.where(x > 0, x, np.expm1(x))


def _delu(x):
    return np.where(x > 0, 1.0, np.exp(x))


def _relu(x):
    return np.maximum(x, 0.0)


def _drelu(x):
    return np.where(x > 0, 1.0, 0.0)


def _identity(x):
    return x


def _didentity(x):
    return np.ones_like(x)


ACTIVATIONS = {
    "tanh": (_tanh, _dtanh),
    "elu": (_elu, _delu),
    "relu": (_relu, _drelu),
    "identity": (_identity, _didentity),
}


@dataclass
class LayerParams:
    """One filter-bank layer: coeffs[scale, in_channel, tap] plus a beta per scale."""

    coeffs: np.ndarray
    betas: np.ndarray
    betas_learnable: bool = False
    aggregation: str = "concatenate"
    activation: str = "tanh"
    skip_k0: bool = False

    def __post_init__(self):
        self.coeffs = np.array(self.coeffs, dtype=float)
        self.betas = np.array(self.betas, dtype=float)
        if self.coeffs.ndim != 3:
            raise ShapeError("coeffs must have shape (f_out, f_in, order + 1)")
        if self.betas.shape != (self.coeffs.shape[0],):
            raise ShapeError("need exactly one beta per output scale")
        if not np.all(np.isfinite(self.coeffs)) or not np.all(np.isfinite(self.betas)):
            raise ValueError("layer parameters must be finite")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def f_out(self) -> int:
        return self.coeffs.shape[0]

    @property
    def f_in(self) -> int:
        return self.coeffs.shape[1]

    @property
    def order(self) -> int:
        return self.coeffs.shape[2] - 1

    @property
    def k_start(self) -> int:
        return 1 if self.skip_k0 else 0

    def out_channels(self) -> int:
        """Channel count seen by the next layer (aggregation folds scales)."""
        return self.f_out if self.aggregation == "concatenate" else 1


@dataclass
class HeadParams:
    """Single hidden layer: out = w2 @ act(w1 @ flat + b1) + b2."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        self.w1 = np.array(self.w1, dtype=float)
        self.b1 = np.array(self.b1, dtype=float)
        self.w2 = np.array(self.w2, dtype=float)
        self.b2 = np.array(self.b2, dtype=float)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_outputs(self) -> int:
        return self.w2.shape[0]


@dataclass
class ModelParams:
    layers: list[LayerParams]
    head: HeadParams
    task: str = "regression"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if not self.layers:
            raise ValueError("need at least one layer")
        channels = self.layers[0].f_in
        for i, layer in enumerate(self.layers):
            if layer.f_in != channels:
                raise ShapeError(f"layer {i} expects {layer.f_in} channels, got {channels}")
            channels = layer.out_channels()


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    loss: str = "mse"
    dropout: float = 0.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def as_decomposition(c) -> spectral.SpectralDecomposition:
    if isinstance(c, spectral.SpectralDecomposition):
        return c
    return spectral.eigh(as_matrix(c))


def _density_values(beta: float, eigenvalues: np.ndarray) -> np.ndarray:
    exponents = -beta * eigenvalues
    weights = np.exp(exponents - np.max(exponents))
    return weights / weights.sum()


def _poly_and_derivative(coeffs: np.ndarray, rho: np.ndarray, k_start: int):
    """sum_k h_k rho^k and its rho-derivative, for coeffs (f_in, K+1) over rho (m,)."""
    f_in, n_taps = coeffs.shape
    response = np.zeros((f_in, rho.shape[0]))
    d_response = np.zeros_like(response)
    power = np.ones_like(rho)
    prev_power = np.zeros_like(rho)
    for k in range(n_taps):
        if k >= k_start:
            response += coeffs[:, k, None] * power
            if k >= 1:
                d_response += coeffs[:, k, None] * (k * prev_power)
        prev_power = power
        power = power * rho
    return response, d_response


def perceptron_forward(f: FilterSpec, rho: DensityOperator, activation: str, x) -> np.ndarray:
    """Single perceptron: activation applied to the filtered signal."""
    act, _ = ACTIVATIONS[activation]
    return act(filter_apply(f, rho, x))


def layer_forward(p: LayerParams, rhos: Sequence[DensityOperator], x_in) -> np.ndarray:
    """Aggregated layer output for f_in input channels (each a dim vector).

    ``rhos`` supplies one density operator per output scale, all over the same
    covariance.  concatenate stacks the per-scale outputs; sum/mean fold them.
    """
    if len(rhos) != p.f_out:
        raise ShapeError(f"need {p.f_out} density operators, got {len(rhos)}")
    decomp = rhos[0].basis
    x = np.asarray(x_in, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape != (p.f_in, decomp.dim):
        raise ShapeError(f"expected input shape ({p.f_in}, {decomp.dim}), got {x.shape}")
    rho_values = np.stack([r.density_eigenvalues for r in rhos])
    channels = _layer_channels(p, decomp, rho_values, x[:, :, None])[0][:, :, 0]
    return aggregate(p.aggregation, channels)


def aggregate(mode: str, channels: np.ndarray) -> np.ndarray:
    """Fold per-scale outputs: concatenate, sum, or mean over the scale axis."""
    if mode == "concatenate":
        return channels.reshape(-1, *channels.shape[2:]) if channels.ndim > 2 else channels.reshape(-1)
    if mode == "sum":
        return channels.sum(axis=0)
    if mode == "mean":
        return channels.mean(axis=0)
    raise ValueError(f"unknown aggregation {mode!r}")


def _layer_channels(p: LayerParams, decomp, rho_values: np.ndarray, x: np.ndarray):
    """Activated per-scale outputs for input channels x of shape (f_in, m, T).

    Returns (activated outputs (f_out, m, T), tape dict for backprop).
    """
    v = decomp.eigenvectors
    x_hat = np.einsum("ji,gjt->git", v, x)
    response = np.empty((p.f_out, p.f_in, decomp.dim))
    d_response = np.empty_like(response)
    for mo in range(p.f_out):
        r, dr = _poly_and_derivative(p.coeffs[mo], rho_values[mo], p.k_start)
        response[mo], d_response[mo] = r, dr
    y_hat = np.einsum("ogi,git->oit", response, x_hat)
    y = np.einsum("ij,ojt->oit", v, y_hat)
    act, dact = ACTIVATIONS[p.activation]
    out = act(y)
    tape = {
        "x_hat": x_hat,
        "response": response,
        "d_response": d_response,
        "rho_values": rho_values,
        "pre_activation": y,
        "dact": dact,
    }
    return out, tape


def model_forward(model: ModelParams, c, x) -> np.ndarray:
    """Predict from a signal (dim,) or (dim, time): per-time filtering, flatten, head."""
    out, _ = _forward_tape(model, as_decomposition(c), _as_signal(x), rng=None, dropout=0.0)
    return out


def _as_signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"signal must be (dim,) or (dim, time), got shape {x.shape}")
    return x


def _forward_tape(model, decomp, x, rng, dropout):
    signal = x[None, :, :]
    layer_tapes = []
    for layer in model.layers:
        rho_values = np.stack([_density_values(b, decomp.eigenvalues) for b in layer.betas])
        out, tape = _layer_channels(layer, decomp, rho_values, signal)
        tape["in_channels"] = signal
        layer_tapes.append(tape)
        last_out = out
        if layer.aggregation == "concatenate":
            signal = out
        else:
            signal = aggregate(layer.aggregation, out)[None, :, :]
    final = aggregate(model.layers[-1].aggregation, last_out)
    flat = final.reshape(-1)

    head = model.head
    if head.w1.shape[1] != flat.size:
        raise ShapeError(
            f"head expects {head.w1.shape[1]} flattened features, got {flat.size} "
            f"(check dim/time_points against the model)"
        )
    z1 = head.w1 @ flat + head.b1
    act, dact = ACTIVATIONS[head.activation]
    h1 = act(z1)
    if dropout > 0.0 and rng is not None:
        mask = (rng.random(h1.shape) >= dropout) / (1.0 - dropout)
        h1 = h1 * mask
    else:
        mask = None
    out = head.w2 @ h1 + head.b2
    tape = {
        "layers": layer_tapes,
        "final_shape": final.shape,
        "flat": flat,
        "z1": z1,
        "h1": h1,
        "mask": mask,
        "dact_head": dact,
    }
    return out, tape


@dataclass
class ModelGradients:
    layer_coeffs: list[np.ndarray]
    layer_betas: list[np.ndarray]
    head_w1: np.ndarray
    head_b1: np.ndarray
    head_w2: np.ndarray
    head_b2: np.ndarray

    @classmethod
    def zeros_like(cls, model: ModelParams) -> "ModelGradients":
        return cls(
            layer_coeffs=[np.zeros_like(l.coeffs) for l in model.layers],
            layer_betas=[np.zeros_like(l.betas) for l in model.layers],
            head_w1=np.zeros_like(model.head.w1),
            head_b1=np.zeros_like(model.head.b1),
            head_w2=np.zeros_like(model.head.w2),
            head_b2=np.zeros_like(model.head.b2),
        )

    def add_scaled(self, other: "ModelGradients", scale: float = 1.0):
        for mine, theirs in zip(self.layer_coeffs, other.layer_coeffs):
            mine += scale * theirs
        for mine, theirs in zip(self.layer_betas, other.layer_betas):
            mine += scale * theirs
        self.head_w1 += scale * other.head_w1
        self.head_b1 += scale * other.head_b1
        self.head_w2 += scale * other.head_w2
        self.head_b2 += scale * other.head_b2


def _loss_and_grad(out: np.ndarray, target, loss: str):
    if loss == "mse":
        target = np.asarray(target, dtype=float).reshape(out.shape)
        diff = out - target
        return float(np.mean(diff * diff)), 2.0 * diff / diff.size
    if loss == "mae":
        target = np.asarray(target, dtype=float).reshape(out.shape)
        diff = out - target
        return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size
    if loss == "cross_entropy":
        label = int(target)
        shifted = out - np.max(out)
        log_z = math.log(float(np.sum(np.exp(shifted))))
        log_probs = shifted - log_z
        grad = np.exp(log_probs)
        grad[label] -= 1.0
        return float(-log_probs[label]), grad
    raise ValueError(f"unknown loss {loss!r}")


def _backward_sample(model, decomp, tape, d_out, grads: ModelGradients):
    head = model.head
    d_h1 = head.w2.T @ d_out
    grads.head_w2 += np.outer(d_out, tape["h1"])
    grads.head_b2 += d_out
    if tape["mask"] is not None:
        d_h1 = d_h1 * tape["mask"]
    d_z1 = d_h1 * tape["dact_head"](tape["z1"])
    grads.head_w1 += np.outer(d_z1, tape["flat"])
    grads.head_b1 += d_z1
    d_flat = head.w1.T @ d_z1

    d_final = d_flat.reshape(tape["final_shape"])
    last = model.layers[-1]
    if last.aggregation == "concatenate":
        d_channels = d_final.reshape(last.f_out, decomp.dim, -1)
    elif last.aggregation == "sum":
        d_channels = np.broadcast_to(d_final, (last.f_out, *d_final.shape)).copy()
    else:
        d_channels = np.broadcast_to(d_final / last.f_out, (last.f_out, *d_final.shape)).copy()

    v = decomp.eigenvectors
    lam = decomp.eigenvalues
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        ltape = tape["layers"][idx]
        d_y = d_channels * ltape["dact"](ltape["pre_activation"])
        d_y_hat = np.einsum("ji,ojt->oit", v, d_y)
        d_resp = np.einsum("oit,git->ogi", d_y_hat, ltape["x_hat"])
        # Coefficient taps: d h_k = sum_i d_resp_i rho_i^k.
        rho_values = ltape["rho_values"]
        order = layer.order
        power = np.ones_like(rho_values)
        for k in range(order + 1):
            if k >= layer.k_start:
                grads.layer_coeffs[idx][:, :, k] += np.einsum("ogi,oi->og", d_resp, power)
            power = power * rho_values
        if layer.betas_learnable:
            mean_lambda = rho_values @ lam
            d_rho_d_beta = rho_values * (mean_lambda[:, None] - lam[None, :])
            d_beta_resp = ltape["d_response"] * d_rho_d_beta[:, None, :]
            grads.layer_betas[idx] += np.einsum("ogi,ogi->o", d_resp, d_beta_resp)
        d_x_hat = np.einsum("ogi,oit->git", ltape["response"], d_y_hat)
        d_in = np.einsum("ij,gjt->git", v, d_x_hat)
        if idx == 0:
            break
        prev = model.layers[idx - 1]
        if prev.aggregation == "concatenate":
            d_channels = d_in
        elif prev.aggregation == "sum":
            d_channels = np.broadcast_to(d_in[0], (prev.f_out, *d_in.shape[1:])).copy()
        else:
            d_channels = np.broadcast_to(d_in[0] / prev.f_out, (prev.f_out, *d_in.shape[1:])).copy()


def model_gradients(model: ModelParams, c, batch_x, batch_y, loss: str):
    """Mean batch loss and analytic gradients for coeffs, betas, and head weights.

    Raises:
        TrainingError: the loss is non-finite.
    """
    decomp = as_decomposition(c)
    grads = ModelGradients.zeros_like(model)
    total = 0.0
    n = len(batch_x)
    for x, y in zip(batch_x, batch_y):
        out, tape = _forward_tape(model, decomp, _as_signal(x), rng=None, dropout=0.0)
        value, d_out = _loss_and_grad(out, y, loss)
        total += value
        _backward_sample(model, decomp, tape, d_out / n, grads)
    mean_loss = total / n
    if not math.isfinite(mean_loss):
        raise TrainingError(f"non-finite batch loss {mean_loss!r}")
    return mean_loss, grads


def evaluate_loss(model: ModelParams, c, xs, ys, loss: str) -> float:
    decomp = as_decomposition(c)
    total = 0.0
    for x, y in zip(xs, ys):
        out, _ = _forward_tape(model, decomp, _as_signal(x), rng=None, dropout=0.0)
        value, _ = _loss_and_grad(out, y, loss)
        total += value
    return total / len(xs)


def accuracy(model: ModelParams, c, xs, ys) -> float:
    decomp = as_decomposition(c)
    hits = 0
    for x, y in zip(xs, ys):
        out, _ = _forward_tape(model, decomp, _as_signal(x), rng=None, dropout=0.0)
        hits += int(np.argmax(out) == int(y))
    return hits / len(xs)


@dataclass
class TrainResult:
    model: ModelParams
    history: dict
    best_epoch: int
    diverged: bool = False


class _Adam:
    def __init__(self, params: list[np.ndarray], lr, betas, eps):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]):
        self.t += 1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            m_hat = m / (1 - self.b1**self.t)
            v_hat = v / (1 - self.b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _trainable_params(model: ModelParams):
    params = []
    for layer in model.layers:
        params.append(layer.coeffs)
        if layer.betas_learnable:
            params.append(layer.betas)
    params.extend([model.head.w1, model.head.b1, model.head.w2, model.head.b2])
    return params


def _gradient_list(model: ModelParams, grads: ModelGradients):
    out = []
    for i, layer in enumerate(model.layers):
        out.append(grads.layer_coeffs[i])
        if layer.betas_learnable:
            out.append(grads.layer_betas[i])
    out.extend([grads.head_w1, grads.head_b1, grads.head_w2, grads.head_b2])
    return out


def train(model: ModelParams, c, train_data, val_data, cfg: TrainConfig) -> TrainResult:
    """Adam training with validation-based model selection.

    ``train_data`` and ``val_data`` are (xs, ys) pairs.  The returned model is
    a copy of the parameters at the epoch with the lowest validation loss
    (ties broken by the earliest epoch).  If the loss goes non-finite, training
    aborts and the last finite state is kept, with ``diverged=True``.
    """
    decomp = as_decomposition(c)
    xs, ys = train_data
    val_xs, val_ys = val_data
    rng = np.random.default_rng(cfg.seed)
    optimizer = _Adam(_trainable_params(model), cfg.learning_rate, cfg.adam_betas, cfg.adam_eps)
    history = {"train_loss": [], "val_loss": []}
    best_val = math.inf
    best_epoch = 0
    best_model = copy.deepcopy(model)
    diverged = False
    n = len(xs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        try:
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                batch_x = [xs[i] for i in idx]
                batch_y = [ys[i] for i in idx]
                if cfg.dropout > 0.0:
                    _, grads = _gradients_with_dropout(
                        model, decomp, batch_x, batch_y, cfg.loss, rng, cfg.dropout
                    )
                else:
                    _, grads = model_gradients(model, decomp, batch_x, batch_y, cfg.loss)
                optimizer.step(_gradient_list(model, grads))
        except TrainingError:
            diverged = True
            break
        train_loss = evaluate_loss(model, decomp, xs, ys, cfg.loss)
        val_loss = evaluate_loss(model, decomp, val_xs, val_ys, cfg.loss)
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            diverged = True
            break
        history["train_loss"].append(train_loss)
        history["val_loss"].append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_model = copy.deepcopy(model)
    return TrainResult(model=best_model, history=history, best_epoch=best_epoch, diverged=diverged)


def _gradients_with_dropout(model, decomp, batch_x, batch_y, loss, rng, dropout):
    grads = ModelGradients.zeros_like(model)
    total = 0.0
    n = len(batch_x)
    for x, y in zip(batch_x, batch_y):
        out, tape = _forward_tape(model, decomp, _as_signal(x), rng=rng, dropout=dropout)
        value, d_out = _loss_and_grad(out, y, loss)
        total += value
        _backward_sample(model, decomp, tape, d_out / n, grads)
    mean_loss = total / n
    if not math.isfinite(mean_loss):
        raise TrainingError(f"non-finite batch loss {mean_loss!r}")
    return mean_loss, grads


def init_model(
    dim: int,
    n_outputs: int,
    betas,
    order: int = 2,
    hidden_dim: int = 16,
    num_layers: int = 1,
    activation: str = "tanh",
    head_activation: str = "tanh",
    aggregation: str = "concatenate",
    task: str = "regression",
    betas_learnable: bool = False,
    skip_k0: bool = False,
    time_points: int = 1,
    seed: int = 0,
) -> ModelParams:
    """Build a model with small random weights sized for (dim, time_points) inputs."""
    rng = np.random.default_rng(seed)
    betas = np.asarray(betas, dtype=float)
    f_out = betas.size
    layers = []
    f_in = 1
    for _ in range(num_layers):
        coeffs = rng.normal(0.0, 0.3, size=(f_out, f_in, order + 1))
        layers.append(
            LayerParams(
                coeffs=coeffs,
                betas=betas.copy(),
                betas_learnable=betas_learnable,
                aggregation=aggregation,
                activation=activation,
                skip_k0=skip_k0,
            )
        )
        f_in = layers[-1].out_channels()
    final_dim = f_out * dim if aggregation == "concatenate" else dim
    flat_dim = final_dim * time_points
    head = HeadParams(
        w1=rng.normal(0.0, 1.0 / math.sqrt(flat_dim), size=(hidden_dim, flat_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.normal(0.0, 1.0 / math.sqrt(hidden_dim), size=(n_outputs, hidden_dim)),
        b2=np.zeros(n_outputs),
        activation=head_activation,
    )
    return ModelParams(layers=layers, head=head, task=task)


CHECKPOINT_VERSION = 1


def model_to_dict(model: ModelParams, cov: CovarianceMatrix | np.ndarray) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "task": model.task,
        "covariance": np.asarray(as_matrix(cov)).tolist(),
        "layers": [
            {
                "coeffs": layer.coeffs.tolist(),
                "betas": layer.betas.tolist(),
                "betas_learnable": layer.betas_learnable,
                "aggregation": layer.aggregation,
                "activation": layer.activation,
                "skip_k0": layer.skip_k0,
            }
            for layer in model.layers
        ],
        "head": {
            "w1": model.head.w1.tolist(),
            "b1": model.head.b1.tolist(),
            "w2": model.head.w2.tolist(),
            "b2": model.head.b2.tolist(),
            "activation": model.head.activation,
        },
    }


def model_from_dict(payload: dict) -> tuple[ModelParams, np.ndarray]:
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    layers = [
        LayerParams(
            coeffs=np.array(entry["coeffs"], dtype=float),
            betas=np.array(entry["betas"], dtype=float),
            betas_learnable=bool(entry["betas_learnable"]),
            aggregation=entry["aggregation"],
            activation=entry["activation"],
            skip_k0=bool(entry.get("skip_k0", False)),
        )
        for entry in payload["layers"]
    ]
    head = HeadParams(
        w1=np.array(payload["head"]["w1"], dtype=float),
        b1=np.array(payload["head"]["b1"], dtype=float),
        w2=np.array(payload["head"]["w2"], dtype=float),
        b2=np.array(payload["head"]["b2"], dtype=float),
        activation=payload["head"]["activation"],
    )
    model = ModelParams(layers=layers, head=head, task=payload["task"])
    covariance = np.array(payload["covariance"], dtype=float)
    return model, covariance


def save_model(path, model: ModelParams, cov) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, cov), fh, indent=1)


def load_model(path) -> tuple[ModelParams, np.ndarray]:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
