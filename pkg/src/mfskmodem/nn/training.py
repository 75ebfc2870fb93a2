"""Adam optimizer, training loop, prediction, and finite-difference checking."""

import time
from dataclasses import dataclass, field

import numpy as np

from .model import ModelConfig, ModelState, backward, build_model, forward, forward_train, loss_ce

# Default architecture for gradient checking: small enough that central
# differences over every layer type run in seconds, in float64.
GRAD_CHECK_CONFIG = ModelConfig(input_len=64, conv_filters=4, conv_kernel=8,
                                hidden_units=8, classes=4)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop hyper-parameters."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 32
    epochs: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainLog:
    """Per-epoch running-mean loss and accuracy plus wall-clock seconds."""

    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def __len__(self):
        return len(self.loss)


@dataclass
class AdamState:
    """First/second moment estimates per trainable tensor, plus the step count."""

    step: int
    m: dict
    v: dict


def adam_init(state: ModelState) -> AdamState:
    m = {n: np.zeros_like(state.tensors[n]) for n in state.trainable_names}
    v = {n: np.zeros_like(state.tensors[n]) for n in state.trainable_names}
    return AdamState(0, m, v)


def adam_step(state: ModelState, adam: AdamState, grads: dict, cfg: TrainConfig):
    """One bias-corrected Adam update, applied in place."""
    adam.step += 1
    t = adam.step
    correction1 = 1.0 - cfg.beta1**t
    correction2 = 1.0 - cfg.beta2**t
    for name in state.trainable_names:
        g = grads[name]
        m = adam.m[name]
        v = adam.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * np.square(g)
        update = (m / correction1) / (np.sqrt(v / correction2) + cfg.epsilon)
        state.tensors[name] -= np.asarray(cfg.learning_rate * update,
                                          dtype=state.dtype)


def train_step(state: ModelState, adam: AdamState, batch, labels, cfg: TrainConfig):
    """Forward, analytic backward, Adam update.  Returns (loss, batch accuracy)."""
    probs, cache = forward_train(state, batch)
    loss = loss_ce(probs, labels)
    if not np.isfinite(loss):
        raise RuntimeError(
            f"non-finite training loss {loss} at step {adam.step + 1}; "
            "the learning rate has likely diverged"
        )
    grads = backward(state, cache, labels)
    adam_step(state, adam, grads, cfg)
    accuracy = float(np.mean(np.argmax(probs, axis=1) == np.asarray(labels)))
    return loss, accuracy


def train(config: ModelConfig, cfg: TrainConfig, x: np.ndarray, y: np.ndarray):
    """Train a fresh model for cfg.epochs passes over (x, y).

    The sample order is reshuffled each epoch from the seeded stream, and
    per-epoch loss/accuracy are sample-weighted running means over the
    epoch's batches.  Deterministic for fixed seed and thread configuration.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training data must be a non-empty (samples, input_len) array")
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y disagree on sample count")
    if np.any((y < 0) | (y >= config.classes)):
        raise ValueError(f"labels must lie in [0, {config.classes})")

    state = build_model(config, cfg.seed)
    adam = adam_init(state)
    rng = np.random.default_rng(cfg.seed)
    log = TrainLog()
    count = x.shape[0]
    for _ in range(cfg.epochs):
        start = time.perf_counter()
        order = rng.permutation(count)
        loss_sum = 0.0
        correct_sum = 0.0
        for lo in range(0, count, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, acc = train_step(state, adam, x[idx], y[idx], cfg)
            loss_sum += loss * idx.size
            correct_sum += acc * idx.size
        log.loss.append(loss_sum / count)
        log.accuracy.append(correct_sum / count)
        log.seconds.append(time.perf_counter() - start)
    return state, log


def predict(state: ModelState, samples):
    """Decode one symbol window: (tone index, probability vector).

    Accepts a Waveform or a plain 1-D array of input_len samples; ties in
    the argmax break toward the lowest index.
    """
    values = getattr(samples, "samples", samples)
    values = np.asarray(values)
    if values.ndim != 1 or values.size != state.config.input_len:
        raise ValueError(
            f"expected {state.config.input_len} samples, got shape {values.shape}"
        )
    probs = forward(state, values[None, :])[0]
    return int(np.argmax(probs)), probs


def model_demodulator(state: ModelState):
    """Batch demodulation callable for the sweep/benchmark harness."""

    def demod(batch: np.ndarray) -> np.ndarray:
        return np.argmax(forward(state, batch), axis=1)

    return demod


def grad_check(config: ModelConfig = GRAD_CHECK_CONFIG, seed: int = 0,
               n_params_sampled: int = 6, batch_size: int = 4) -> float:
    """Max relative error between analytic and central-difference gradients.

    Builds the model in float64, draws a random batch, and probes
    ``n_params_sampled`` entries of every tensor with h = 1e-5 * max(1, |w|).
    The probe loss runs training-mode normalization but leaves the running
    statistics untouched, so finite differences see a pure function.
    Relative error uses a 1e-6 denominator floor to keep near-zero gradient
    entries from amplifying finite-difference rounding noise.
    """
    state = build_model(config, seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    batch = rng.standard_normal((batch_size, config.input_len))
    labels = rng.integers(0, config.classes, batch_size)

    probs, cache = forward_train(state, batch, update_running=False)
    grads = backward(state, cache, labels)

    def probe_loss():
        p, _ = forward_train(state, batch, update_running=False)
        return loss_ce(p, labels)

    worst = 0.0
    for name in state.trainable_names:
        tensor = state.tensors[name]
        flat = tensor.reshape(-1)
        n_probe = min(n_params_sampled, flat.size)
        for idx in rng.choice(flat.size, size=n_probe, replace=False):
            original = flat[idx]
            h = 1e-5 * max(1.0, abs(original))
            flat[idx] = original + h
            up = probe_loss()
            flat[idx] = original - h
            down = probe_loss()
            flat[idx] = original
            fd = (up - down) / (2.0 * h)
            analytic = grads[name].reshape(-1)[idx]
            err = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6)
            worst = max(worst, err)
    return worst
