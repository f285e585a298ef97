"""Joint two-output sigmoid network over normalized magnitude frames.

Covers layerwise RBM pretraining (CD-1), squared-error backprop
fine-tuning, forward evaluation, and the analytic gradient of each output
with respect to the input vector, which the separation solver consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class TrainConfig:
    rbm_epochs: int = 150
    bp_epochs: int = 500
    output_only_epochs: int = 5
    learning_rate: float = 0.05
    momentum: float = 0.9
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.rbm_epochs, self.bp_epochs, self.batch_size) < 1:
            raise ValueError("epoch and batch counts must be >= 1")
        if not 0 <= self.output_only_epochs <= self.bp_epochs:
            raise ValueError("output_only_epochs must lie in [0, bp_epochs]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class DnnModel:
    """Sigmoid layers h_k = g(W_k h_{k-1} + b_k); two outputs, one per source.

    weights[k] has shape (n_{k+1}, n_k) and biases[k] shape (n_{k+1},).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.weights) < 1 or len(self.weights) != len(self.biases):
            raise ValueError("need matching, non-empty weight and bias lists")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer {k}: weight/bias shapes inconsistent")
            if k > 0 and W.shape[1] != self.weights[k - 1].shape[0]:
                raise ValueError(f"layer {k}: input size breaks the layer chain")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {k}: parameters must be finite")
        if self.weights[-1].shape[0] != 2:
            raise ValueError("output layer must have exactly 2 units")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)


def forward(model: DnnModel, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Evaluate the network on one input vector.

    Returns (outputs in (0,1)^2, activations [h_0 ... h_K]); the activation
    list is reused by input_gradient.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ValueError(f"expected input of shape ({model.input_dim},), got {x.shape}")
    activations = [x]
    for W, b in zip(model.weights, model.biases):
        activations.append(expit(W @ activations[-1] + b))
    return activations[-1], activations


def forward_batch(model: DnnModel, X: np.ndarray) -> np.ndarray:
    """Outputs for a batch of column vectors; returns a (2, N) matrix."""
    H = np.asarray(X, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != model.input_dim:
        raise ValueError(f"expected inputs of shape ({model.input_dim}, N)")
    for W, b in zip(model.weights, model.biases):
        H = expit(W @ H + b[:, None])
    return H


def input_gradient(
    model: DnnModel, x: np.ndarray, activations: list[np.ndarray]
) -> np.ndarray:
    """Jacobian of the two outputs with respect to the input, shape (2, d).

    Backpropagates f_i(1-f_i) times the output-layer row through each
    layer's sigmoid derivative. Requires the activation list produced by a
    forward() call on the same model and input.
    """
    sizes = model.layer_sizes
    if len(activations) != len(sizes) or any(
        np.shape(a) != (n,) for a, n in zip(activations, sizes)
    ):
        raise ValueError("activations do not match the model (stale forward pass?)")
    f = activations[-1]
    Q = (f * (1.0 - f))[:, None] * model.weights[-1]
    for k in range(model.n_layers - 2, -1, -1):
        h = activations[k + 1]
        Q = (Q * (h * (1.0 - h))[None, :]) @ model.weights[k]
    return Q


def loss_and_gradients(
    model: DnnModel, X: np.ndarray, labels: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Total squared error sum ||f(x) - label||^2 over a batch of columns,
    with its gradients for every weight matrix and bias vector."""
    H = [np.asarray(X, dtype=np.float64)]
    for W, b in zip(model.weights, model.biases):
        H.append(expit(W @ H[-1] + b[:, None]))
    err = H[-1] - labels
    loss = float(np.sum(err * err))
    delta = 2.0 * err * H[-1] * (1.0 - H[-1])
    n = model.n_layers
    grad_w: list[np.ndarray] = [np.empty(0)] * n
    grad_b: list[np.ndarray] = [np.empty(0)] * n
    for k in range(n - 1, -1, -1):
        grad_w[k] = delta @ H[k].T
        grad_b[k] = delta.sum(axis=1)
        if k > 0:
            delta = (model.weights[k].T @ delta) * H[k] * (1.0 - H[k])
    return loss, grad_w, grad_b


def train_rbm(
    data: np.ndarray, n_hidden: int, cfg: TrainConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CD-1 training of a Bernoulli-Bernoulli RBM with biases.

    data holds one sample per column, entries in [0, 1]. Returns
    (weights (n_hidden, n_visible), visible bias, hidden bias).
    """
    V = np.asarray(data, dtype=np.float64).T
    n_samples, n_visible = V.shape
    if n_samples == 0:
        raise ValueError("empty training data")
    W = 0.01 * rng.standard_normal((n_hidden, n_visible))
    b_vis = np.zeros(n_visible)
    b_hid = np.zeros(n_hidden)
    vel_w = np.zeros_like(W)
    vel_v = np.zeros_like(b_vis)
    vel_h = np.zeros_like(b_hid)
    for _ in range(cfg.rbm_epochs):
        order = rng.permutation(n_samples)
        for lo in range(0, n_samples, cfg.batch_size):
            v0 = V[order[lo : lo + cfg.batch_size]]
            ph0 = expit(v0 @ W.T + b_hid)
            h0 = (rng.random(ph0.shape) < ph0).astype(np.float64)
            pv1 = expit(h0 @ W + b_vis)
            ph1 = expit(pv1 @ W.T + b_hid)
            n_batch = v0.shape[0]
            vel_w = cfg.momentum * vel_w + cfg.learning_rate * (
                (ph0.T @ v0 - ph1.T @ pv1) / n_batch
            )
            vel_v = cfg.momentum * vel_v + cfg.learning_rate * np.mean(v0 - pv1, axis=0)
            vel_h = cfg.momentum * vel_h + cfg.learning_rate * np.mean(ph0 - ph1, axis=0)
            W += vel_w
            b_vis += vel_v
            b_hid += vel_h
    return W, b_vis, b_hid


def rbm_reconstruction_error(
    W: np.ndarray, b_vis: np.ndarray, b_hid: np.ndarray, data: np.ndarray
) -> float:
    """Mean squared error of a deterministic encode/decode pass."""
    V = np.asarray(data, dtype=np.float64).T
    ph = expit(V @ W.T + b_hid)
    pv = expit(ph @ W + b_vis)
    return float(np.mean((V - pv) ** 2))


def pretrain_rbm_stack(
    data: np.ndarray, layer_sizes: list[int], cfg: TrainConfig
) -> DnnModel:
    """Greedy layerwise CD-1 pretraining of the hidden layers.

    Each hidden layer's RBM trains on the previous layer's deterministic
    activations; the output layer is initialized uniformly in
    [-0.01, 0.01]. Inputs are clipped to [0, 1] (normalized magnitude
    frames already live there).
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("empty training data")
    if X.shape[0] != layer_sizes[0]:
        raise ValueError(
            f"data dimension {X.shape[0]} does not match layer_sizes[0]={layer_sizes[0]}"
        )
    if layer_sizes[-1] != 2:
        raise ValueError("last layer size must be 2")
    if X.shape[1] < cfg.batch_size:
        raise ValueError(
            f"need at least one full batch ({cfg.batch_size} samples), got {X.shape[1]}"
        )
    streams = np.random.SeedSequence(cfg.seed).spawn(len(layer_sizes) - 1)
    v = np.clip(X, 0.0, 1.0)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for k in range(1, len(layer_sizes) - 1):
        rng = np.random.default_rng(streams[k - 1])
        W, _, b_hid = train_rbm(v, layer_sizes[k], cfg, rng)
        weights.append(W)
        biases.append(b_hid)
        v = expit(W @ v + b_hid[:, None])
    rng = np.random.default_rng(streams[-1])
    weights.append(rng.uniform(-0.01, 0.01, size=(2, layer_sizes[-2])))
    biases.append(np.zeros(2))
    return DnnModel(weights, biases)


def train_supervised(
    init: DnnModel, X: np.ndarray, labels: np.ndarray, cfg: TrainConfig
) -> tuple[DnnModel, list[float]]:
    """Minibatch gradient descent with momentum on the squared error.

    labels must be one-hot indicator columns, (1,0) for source 1 and (0,1)
    for source 2. For the first output_only_epochs epochs only the output
    layer moves; the pretrained lower layers stay untouched. Returns the
    trained model and the per-epoch loss trace.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or Y.shape != (2, X.shape[1]):
        raise ValueError("labels must be a (2, N) matrix aligned with the data")
    if not np.all((Y == 0.0) | (Y == 1.0)) or not np.all(Y.sum(axis=0) == 1.0):
        raise ValueError("labels must be binary indicator columns (1,0) or (0,1)")
    weights = [W.copy() for W in init.weights]
    biases = [b.copy() for b in init.biases]
    model = DnnModel(weights, biases)
    vel_w = [np.zeros_like(W) for W in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    rng = np.random.default_rng(cfg.seed)
    n_samples = X.shape[1]
    n_layers = model.n_layers
    losses: list[float] = []
    for epoch in range(cfg.bp_epochs):
        order = rng.permutation(n_samples)
        first_layer = n_layers - 1 if epoch < cfg.output_only_epochs else 0
        epoch_loss = 0.0
        for lo in range(0, n_samples, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, grad_w, grad_b = loss_and_gradients(model, X[:, idx], Y[:, idx])
            epoch_loss += loss
            step = cfg.learning_rate / idx.size
            for k in range(first_layer, n_layers):
                vel_w[k] = cfg.momentum * vel_w[k] - step * grad_w[k]
                vel_b[k] = cfg.momentum * vel_b[k] - step * grad_b[k]
                weights[k] += vel_w[k]
                biases[k] += vel_b[k]
        losses.append(epoch_loss)
    return model, losses
