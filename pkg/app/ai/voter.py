"""
Voter Network

Single-hidden-layer network (ReLU hidden layer, sigmoid output) trained with
class-weighted cross-entropy and Adam. Each voter of the ensemble is one of
these, fed a fixed subset of the transformed features.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from app.errors import DataError, DimensionError
from app.models.schemas import LossConfig, TrainConfig

logger = logging.getLogger(__name__)

PROBABILITY_CLAMP = 1e-12
PARAM_NAMES = ("W1", "b1", "w2", "b2")


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class VoterNet:
    """
    Parameters of one voter.

    W1 is (hidden, r), b1 and w2 are (hidden,), b2 is a scalar.
    """
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __post_init__(self):
        hidden = self.W1.shape[0]
        if self.W1.ndim != 2 or self.b1.shape != (hidden,) or self.w2.shape != (hidden,):
            raise DimensionError(
                f"inconsistent voter shapes W1={self.W1.shape} b1={self.b1.shape} w2={self.w2.shape}"
            )
        if not all(np.isfinite(p).all() for p in (self.W1, self.b1, self.w2)) or not np.isfinite(self.b2):
            raise DataError("voter parameters must be finite")

    @property
    def hidden_units(self) -> int:
        return self.W1.shape[0]

    @property
    def input_width(self) -> int:
        return self.W1.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "w2": self.w2, "b2": np.asarray(self.b2, dtype=np.float64)}

    @classmethod
    def from_params(cls, params: dict[str, np.ndarray]) -> "VoterNet":
        return cls(W1=params["W1"], b1=params["b1"], w2=params["w2"], b2=float(params["b2"]))

    @classmethod
    def zeros(cls, input_width: int, hidden_units: int = 20) -> "VoterNet":
        return cls(
            W1=np.zeros((hidden_units, input_width)),
            b1=np.zeros(hidden_units),
            w2=np.zeros(hidden_units),
            b2=0.0,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VoterNet):
            return NotImplemented
        return (
            np.array_equal(self.W1, other.W1)
            and np.array_equal(self.b1, other.b1)
            and np.array_equal(self.w2, other.w2)
            and self.b2 == other.b2
        )

    __hash__ = None  # type: ignore[assignment]


def init_voter(input_width: int, hidden_units: int, rng: np.random.Generator) -> VoterNet:
    """Glorot-uniform weights, zero biases."""
    limit1 = np.sqrt(6.0 / (input_width + hidden_units))
    limit2 = np.sqrt(6.0 / (hidden_units + 1))
    return VoterNet(
        W1=rng.uniform(-limit1, limit1, size=(hidden_units, input_width)),
        b1=np.zeros(hidden_units),
        w2=rng.uniform(-limit2, limit2, size=hidden_units),
        b2=0.0,
    )


# ============= Forward / loss / backward =============

def forward(net: VoterNet, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Hidden activations and output probability for one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_width,):
        raise DimensionError(f"voter expects {net.input_width} inputs, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise DataError("voter input contains non-finite values")
    hidden = np.maximum(net.W1 @ x + net.b1, 0.0)
    return hidden, float(sigmoid(net.w2 @ hidden + net.b2))


def forward_batch(net: VoterNet, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(pre-activations, hidden activations, probabilities) for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_width:
        raise DimensionError(f"voter expects {net.input_width} inputs, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise DataError("voter input contains non-finite values")
    pre = X @ net.W1.T + net.b1
    hidden = np.maximum(pre, 0.0)
    return pre, hidden, sigmoid(hidden @ net.w2 + net.b2)


def sample_loss(p, y, cfg: LossConfig):
    """-w1*y*log(p) - w0*(1-y)*log(1-p), with p clamped away from 0 and 1."""
    p = np.clip(p, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    loss = -cfg.w1 * y * np.log(p) - cfg.w0 * (1.0 - y) * np.log(1.0 - p)
    return float(loss) if np.ndim(loss) == 0 else loss


def _output_delta(p: np.ndarray, y: np.ndarray, cfg: LossConfig) -> np.ndarray:
    return cfg.w1 * y * (p - 1.0) + cfg.w0 * (1.0 - y) * p


def backward(net: VoterNet, x: np.ndarray, y: int, cfg: LossConfig) -> dict[str, np.ndarray]:
    """Gradient of sample_loss(forward(net, x), y) w.r.t. every parameter."""
    grads, _ = batch_gradients(net, np.asarray(x, dtype=np.float64)[None, :], np.array([y]), cfg)
    return grads


def batch_gradients(
    net: VoterNet, X: np.ndarray, y: np.ndarray, cfg: LossConfig
) -> tuple[dict[str, np.ndarray], float]:
    """
    Mean gradient and summed loss over a mini-batch.

    Args:
        net: Voter being trained
        X: (b, r) inputs
        y: (b,) labels in {0, 1}
        cfg: Class weights

    Returns:
        (gradient dict keyed like VoterNet.params(), total loss)
    """
    y = np.asarray(y, dtype=np.float64)
    pre, hidden, p = forward_batch(net, X)
    delta = _output_delta(p, y, cfg)
    # ReLU subgradient at 0 is 0
    hidden_delta = np.outer(delta, net.w2) * (pre > 0)
    b = len(y)
    grads = {
        "W1": hidden_delta.T @ X / b,
        "b1": hidden_delta.sum(axis=0) / b,
        "w2": hidden.T @ delta / b,
        "b2": np.asarray(delta.sum() / b),
    }
    return grads, float(np.sum(sample_loss(p, y, cfg)))


# ============= Adam =============

@dataclass
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_config(cls, cfg: TrainConfig) -> "AdamState":
        return cls(learning_rate=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, epsilon=cfg.epsilon)


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """
    One bias-corrected Adam update.

    Moments live in `state` and are updated in place; `params` is not mutated.

    Returns:
        New parameter dict
    """
    if params.keys() != grads.keys():
        raise DimensionError(f"parameter keys {sorted(params)} do not match gradient keys {sorted(grads)}")
    for name in params:
        if np.shape(params[name]) != np.shape(grads[name]):
            raise DimensionError(f"{name}: parameter shape {np.shape(params[name])} != gradient shape {np.shape(grads[name])}")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    updated = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        step = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        updated[name] = np.asarray(value, dtype=np.float64) - step
    return updated


# ============= Training =============

def train_voter(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[VoterNet, list[float]]:
    """
    Train one voter with mini-batch Adam.

    Args:
        X: (n, r) masked, transformed training features
        y: (n,) labels
        cfg: Learning rate, epochs, batch size, hidden width, class weights
        rng: Stream for initialisation and per-epoch shuffling

    Returns:
        (trained voter, mean per-sample loss of every epoch)
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise DataError("cannot train a voter on an empty set")

    net = init_voter(X.shape[1], cfg.hidden_units, rng)
    state = AdamState.for_config(cfg)
    history: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads, loss = batch_gradients(net, X[batch], y[batch], cfg.loss)
            net = VoterNet.from_params(adam_step(state, net.params(), grads))
            epoch_loss += loss
        history.append(epoch_loss / n)
    return net, history
