"""The CNN demodulator's forward and backward passes, written on numpy.

Layer sequence (fixed):

    input (N) -> reshape (N, 1)
    -> batch-norm over the single channel
    -> 1-D convolution (F filters, kernel K, stride 1, same padding, linear)
    -> batch-norm over the F channels
    -> flatten (N*F)
    -> dense (H) with ReLU
    -> batch-norm over the H features
    -> dense (M) with softmax

Batch norm normalizes over the trailing (channel/feature) axis with
eps = 1e-3 and running-statistic momentum 0.99.  Training mode uses batch
statistics and refreshes the running ones; inference mode is a pure affine
map through the stored running statistics.  Cross-entropy clamps
probabilities at 1e-12 so the loss stays finite.

Parameters live in a flat name -> array dict (see PARAM_LAYOUT); training
runs in float32, gradient checking rebuilds the same graph in float64.
"""

import math
from dataclasses import dataclass, field

import numpy as np

BN_EPS = 1e-3
BN_MOMENTUM = 0.99
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyper-parameters."""

    input_len: int
    conv_filters: int
    conv_kernel: int
    hidden_units: int
    classes: int

    def __post_init__(self):
        for name in ("input_len", "conv_filters", "conv_kernel", "hidden_units", "classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.conv_kernel > self.input_len:
            raise ValueError("conv_kernel must not exceed input_len")

    @property
    def flat_features(self) -> int:
        return self.input_len * self.conv_filters


def param_layout(config: ModelConfig):
    """Canonical (name, shape, trainable) triples, in build/serialization order."""
    n, f, k, h, m = (config.input_len, config.conv_filters, config.conv_kernel,
                     config.hidden_units, config.classes)
    return [
        ("input_norm.gamma", (1,), True),
        ("input_norm.beta", (1,), True),
        ("input_norm.mean", (1,), False),
        ("input_norm.var", (1,), False),
        ("conv.kernel", (k, 1, f), True),
        ("conv.bias", (f,), True),
        ("conv_norm.gamma", (f,), True),
        ("conv_norm.beta", (f,), True),
        ("conv_norm.mean", (f,), False),
        ("conv_norm.var", (f,), False),
        ("hidden.weight", (n * f, h), True),
        ("hidden.bias", (h,), True),
        ("hidden_norm.gamma", (h,), True),
        ("hidden_norm.beta", (h,), True),
        ("hidden_norm.mean", (h,), False),
        ("hidden_norm.var", (h,), False),
        ("output.weight", (h, m), True),
        ("output.bias", (m,), True),
    ]


@dataclass
class ModelState:
    """Every trainable parameter and batch-norm running statistic."""

    config: ModelConfig
    dtype: np.dtype
    tensors: dict = field(default_factory=dict)

    @property
    def trainable_names(self):
        return [name for name, _, trainable in param_layout(self.config) if trainable]

    @property
    def statistic_names(self):
        return [name for name, _, trainable in param_layout(self.config) if not trainable]

    def copy(self) -> "ModelState":
        return ModelState(self.config, self.dtype,
                          {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype) -> "ModelState":
        dtype = np.dtype(dtype)
        return ModelState(self.config, dtype,
                          {k: v.astype(dtype) for k, v in self.tensors.items()})


def parameter_counts(state: ModelState):
    """(total, trainable, non_trainable) parameter counts."""
    trainable = sum(state.tensors[n].size for n in state.trainable_names)
    stats = sum(state.tensors[n].size for n in state.statistic_names)
    return trainable + stats, trainable, stats


def build_model(config: ModelConfig, seed: int, dtype=np.float32) -> ModelState:
    """Fresh model: Glorot-uniform weights, zero biases, identity batch norm.

    Deterministic for a given seed; tensors are drawn in layout order.
    """
    dtype = np.dtype(dtype)
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape, _ in param_layout(config):
        if name.endswith(".weight") or name == "conv.kernel":
            fan_in, fan_out = _fans(name, shape)
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            tensors[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
        elif name.endswith(".gamma") or name.endswith(".var"):
            tensors[name] = np.ones(shape, dtype=dtype)
        else:  # biases, beta, running means
            tensors[name] = np.zeros(shape, dtype=dtype)
    return ModelState(config, dtype, tensors)


def _fans(name, shape):
    if name == "conv.kernel":
        k, c_in, f = shape
        return k * c_in, k * f
    fan_in, fan_out = shape
    return fan_in, fan_out


# ---------------------------------------------------------------------------
# Layer primitives.  x is (batch, ..., features); batch norm reduces over all
# axes except the last.


def _bn_train(x, gamma, beta):
    axes = tuple(range(x.ndim - 1))
    mean = x.mean(axis=axes)
    var = x.var(axis=axes)
    inv_std = 1.0 / np.sqrt(var + np.asarray(BN_EPS, dtype=x.dtype))
    xhat = (x - mean) * inv_std
    return gamma * xhat + beta, (xhat, inv_std), mean, var


def _bn_infer(x, gamma, beta, mean, var):
    inv_std = 1.0 / np.sqrt(var + np.asarray(BN_EPS, dtype=x.dtype))
    return gamma * (x - mean) * inv_std + beta


def _bn_backward(dy, gamma, cache):
    xhat, inv_std = cache
    axes = tuple(range(dy.ndim - 1))
    count = dy.size // dy.shape[-1]
    dgamma = (dy * xhat).sum(axis=axes)
    dbeta = dy.sum(axis=axes)
    # Batch statistics depend on x, so the normalized-input gradient picks
    # up the mean and mean(dy * xhat) correction terms.
    dx = (gamma * inv_std / count) * (count * dy - dbeta - xhat * dgamma)
    return dx, dgamma, dbeta


def _conv_pad(config: ModelConfig):
    # "Same" padding for stride 1: output length equals input length.
    left = (config.conv_kernel - 1) // 2
    return left, config.conv_kernel - 1 - left


def _conv_forward(x, kernel, bias, config: ModelConfig):
    """x: (B, N, C) -> (B, N, F); kernel: (K, C, F)."""
    left, right = _conv_pad(config)
    xp = np.pad(x, ((0, 0), (left, right), (0, 0)))
    n = config.input_len
    y = np.broadcast_to(bias, (x.shape[0], n, bias.shape[0])).copy()
    for k in range(config.conv_kernel):
        y += xp[:, k : k + n, :] @ kernel[k]
    return y, xp


def _conv_backward(dy, xp, kernel, config: ModelConfig):
    left, _ = _conv_pad(config)
    n = config.input_len
    dkernel = np.empty_like(kernel)
    dxp = np.zeros_like(xp)
    for k in range(config.conv_kernel):
        x_slice = xp[:, k : k + n, :]
        dkernel[k] = np.tensordot(x_slice, dy, axes=((0, 1), (0, 1)))
        dxp[:, k : k + n, :] += dy @ kernel[k].T
    dbias = dy.sum(axis=(0, 1))
    dx = dxp[:, left : left + n, :]
    return dx, dkernel, dbias


def _softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _check_batch(config: ModelConfig, batch):
    batch = np.atleast_2d(np.asarray(batch))
    if batch.ndim != 2 or batch.shape[1] != config.input_len:
        raise ValueError(
            f"batch must be (B, {config.input_len}), got {batch.shape}"
        )
    return batch


def forward(state: ModelState, batch: np.ndarray) -> np.ndarray:
    """Inference-mode class probabilities, shape (B, classes).

    Pure: normalizes through the stored running statistics and never
    mutates the state.
    """
    cfg = state.config
    t = state.tensors
    x = _check_batch(cfg, batch).astype(state.dtype)[:, :, None]
    x = _bn_infer(x, t["input_norm.gamma"], t["input_norm.beta"],
                  t["input_norm.mean"], t["input_norm.var"])
    x, _ = _conv_forward(x, t["conv.kernel"], t["conv.bias"], cfg)
    x = _bn_infer(x, t["conv_norm.gamma"], t["conv_norm.beta"],
                  t["conv_norm.mean"], t["conv_norm.var"])
    x = x.reshape(x.shape[0], cfg.flat_features)
    x = x @ t["hidden.weight"] + t["hidden.bias"]
    x = np.maximum(x, 0)
    x = _bn_infer(x, t["hidden_norm.gamma"], t["hidden_norm.beta"],
                  t["hidden_norm.mean"], t["hidden_norm.var"])
    logits = x @ t["output.weight"] + t["output.bias"]
    return _softmax(logits)


def forward_train(state: ModelState, batch: np.ndarray, update_running: bool = True):
    """Training-mode forward: batch-statistic normalization, cached intermediates.

    Returns (probs, cache) for backward().  When ``update_running`` the
    batch-norm running statistics are refreshed in place with momentum
    BN_MOMENTUM (gradient checking turns this off to keep the probe loss a
    pure function of the parameters).
    """
    cfg = state.config
    t = state.tensors
    x0 = _check_batch(cfg, batch).astype(state.dtype)[:, :, None]
    cache = {"batch_size": x0.shape[0]}

    bn0, cache["bn0"], m0, v0 = _bn_train(x0, t["input_norm.gamma"], t["input_norm.beta"])
    conv, cache["conv_xp"] = _conv_forward(bn0, t["conv.kernel"], t["conv.bias"], cfg)
    bn1, cache["bn1"], m1, v1 = _bn_train(conv, t["conv_norm.gamma"], t["conv_norm.beta"])
    flat = bn1.reshape(bn1.shape[0], cfg.flat_features)
    cache["flat"] = flat
    pre_relu = flat @ t["hidden.weight"] + t["hidden.bias"]
    relu = np.maximum(pre_relu, 0)
    cache["relu_mask"] = pre_relu > 0
    bn2, cache["bn2"], m2, v2 = _bn_train(relu, t["hidden_norm.gamma"], t["hidden_norm.beta"])
    cache["bn2_out"] = bn2
    logits = bn2 @ t["output.weight"] + t["output.bias"]
    probs = _softmax(logits)
    cache["probs"] = probs

    if update_running:
        for prefix, mean, var in (("input_norm", m0, v0), ("conv_norm", m1, v1),
                                  ("hidden_norm", m2, v2)):
            t[prefix + ".mean"] *= BN_MOMENTUM
            t[prefix + ".mean"] += (1.0 - BN_MOMENTUM) * mean.astype(state.dtype)
            t[prefix + ".var"] *= BN_MOMENTUM
            t[prefix + ".var"] += (1.0 - BN_MOMENTUM) * var.astype(state.dtype)
    return probs, cache


def _as_onehot(labels, classes, dtype):
    labels = np.asarray(labels)
    if labels.ndim == 2:
        if labels.shape[1] != classes:
            raise ValueError(f"one-hot labels must have {classes} columns")
        return labels.astype(dtype)
    if np.any((labels < 0) | (labels >= classes)):
        raise ValueError(f"labels must lie in [0, {classes})")
    onehot = np.zeros((labels.size, classes), dtype=dtype)
    onehot[np.arange(labels.size), labels] = 1
    return onehot


def loss_ce(probs: np.ndarray, labels) -> float:
    """Mean categorical cross-entropy; probabilities clamped at PROB_FLOOR."""
    probs = np.atleast_2d(np.asarray(probs))
    onehot = _as_onehot(labels, probs.shape[1], probs.dtype)
    if onehot.shape[0] != probs.shape[0]:
        raise ValueError("probs and labels disagree on batch size")
    p_true = (probs * onehot).sum(axis=1)
    return float(-np.log(np.maximum(p_true, PROB_FLOOR)).mean())


def backward(state: ModelState, cache: dict, labels) -> dict:
    """Analytic gradients of loss_ce(forward_train(...)) for every trainable tensor.

    Softmax and cross-entropy are fused at the output: the logits gradient
    is (probs - onehot) / batch_size.
    """
    cfg = state.config
    t = state.tensors
    probs = cache["probs"]
    onehot = _as_onehot(labels, cfg.classes, probs.dtype)
    b = cache["batch_size"]
    grads = {}

    dlogits = (probs - onehot) / b
    grads["output.weight"] = cache["bn2_out"].T @ dlogits
    grads["output.bias"] = dlogits.sum(axis=0)
    dbn2 = dlogits @ t["output.weight"].T

    drelu, grads["hidden_norm.gamma"], grads["hidden_norm.beta"] = _bn_backward(
        dbn2, t["hidden_norm.gamma"], cache["bn2"])
    dpre = drelu * cache["relu_mask"]
    grads["hidden.weight"] = cache["flat"].T @ dpre
    grads["hidden.bias"] = dpre.sum(axis=0)
    dflat = dpre @ t["hidden.weight"].T

    dbn1 = dflat.reshape(b, cfg.input_len, cfg.conv_filters)
    dconv, grads["conv_norm.gamma"], grads["conv_norm.beta"] = _bn_backward(
        dbn1, t["conv_norm.gamma"], cache["bn1"])
    dbn0, grads["conv.kernel"], grads["conv.bias"] = _conv_backward(
        dconv, cache["conv_xp"], t["conv.kernel"], cfg)
    _, grads["input_norm.gamma"], grads["input_norm.beta"] = _bn_backward(
        dbn0, t["input_norm.gamma"], cache["bn0"])
    return grads
