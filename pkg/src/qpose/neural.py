"""Minimal dense-network layer in plain numpy.

Implements exactly what the pose models need and nothing more: Mish
activation, linear layers with explicit parameter dicts, a residual MLP
classifier, softmax cross-entropy with analytic gradients, and decoupled
AdamW with per-parameter freeze support. Gradients are hand-derived; the
test suite checks every one against central finite differences.

Parameters live in a flat ``dict[str, np.ndarray]`` keyed by layer name
(``in.w``, ``res0.b``, ...). Freezing operates on those names, which is how
fine-tuning keeps feature layers fixed while the middle trains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import N_CLASSES, N_FEATURES, FeatureNormalizer


def mish(x: np.ndarray) -> np.ndarray:
    """x * tanh(softplus(x)), computed via logaddexp so large |x| is exact."""
    return x * np.tanh(np.logaddexp(0.0, x))


def mish_grad(x: np.ndarray) -> np.ndarray:
    sp = np.logaddexp(0.0, x)
    t = np.tanh(sp)
    sig = np.exp(x - sp)  # sigmoid(x) without overflow, exp(x)/(1+exp(x))
    return t + x * sig * (1.0 - t * t)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and its gradient wrt logits.

    logits: (B, C); labels: (B,) int class ids. Uses the max-shift trick, so
    extreme logits stay finite.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels))
    batch, n_classes = logits.shape
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"labels must lie in 0..{n_classes - 1}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_z - shifted[np.arange(batch), labels]))
    grad = softmax(logits)
    grad[np.arange(batch), labels] -= 1.0
    return loss, grad / batch


def linear_init(rng: np.random.Generator, fan_in: int, fan_out: int):
    """Weights and bias ~ uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, (fan_in, fan_out)), rng.uniform(-bound, bound, fan_out)


def n_params(params: dict[str, np.ndarray]) -> int:
    return sum(v.size for v in params.values())


# ---------------------------------------------------------------------------
# Residual MLP classifier: 36 -> 100 (Mish) -> 3 residual blocks -> 8.
# Each block is h <- h + Mish(h @ w + b). 34,808 parameters at this shape.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DnnConfig:
    n_features: int = N_FEATURES
    n_classes: int = N_CLASSES
    hidden: int = 100
    n_blocks: int = 3

    def __post_init__(self) -> None:
        if min(self.n_features, self.n_classes, self.hidden) < 1 or self.n_blocks < 0:
            raise ValueError("dimensions must be positive, n_blocks nonnegative")

    def param_names(self) -> list[str]:
        names = ["in.w", "in.b"]
        for i in range(self.n_blocks):
            names += [f"res{i}.w", f"res{i}.b"]
        return names + ["out.w", "out.b"]


def dnn_init(config: DnnConfig, seed: int = 0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    params: dict[str, np.ndarray] = {}
    params["in.w"], params["in.b"] = linear_init(rng, config.n_features, config.hidden)
    for i in range(config.n_blocks):
        params[f"res{i}.w"], params[f"res{i}.b"] = linear_init(rng, config.hidden, config.hidden)
    params["out.w"], params["out.b"] = linear_init(rng, config.hidden, config.n_classes)
    return params


def dnn_forward(params: dict[str, np.ndarray], x: np.ndarray, config: DnnConfig):
    """Logits plus the cached pre-activations needed for backprop.

    ``x`` is already normalized; takes one sample or a (B, n_features) batch.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if not np.isfinite(x).all():
        raise ValueError("input features must be finite")
    cache = {"x": x}
    z0 = x @ params["in.w"] + params["in.b"]
    h = mish(z0)
    cache["z_in"] = z0
    for i in range(config.n_blocks):
        cache[f"h{i}"] = h
        z = h @ params[f"res{i}.w"] + params[f"res{i}.b"]
        cache[f"z{i}"] = z
        h = h + mish(z)
    cache["h_out"] = h
    logits = h @ params["out.w"] + params["out.b"]
    return logits, cache


def dnn_backward(params, cache, grad_logits, config: DnnConfig):
    grads = {
        "out.w": cache["h_out"].T @ grad_logits,
        "out.b": grad_logits.sum(axis=0),
    }
    gh = grad_logits @ params["out.w"].T
    for i in reversed(range(config.n_blocks)):
        gz = gh * mish_grad(cache[f"z{i}"])
        grads[f"res{i}.w"] = cache[f"h{i}"].T @ gz
        grads[f"res{i}.b"] = gz.sum(axis=0)
        gh = gh + gz @ params[f"res{i}.w"].T
    gz0 = gh * mish_grad(cache["z_in"])
    grads["in.w"] = cache["x"].T @ gz0
    grads["in.b"] = gz0.sum(axis=0)
    return grads


def dnn_loss_and_grad(params, x, labels, config: DnnConfig):
    logits, cache = dnn_forward(params, x, config)
    loss, grad_logits = softmax_cross_entropy(logits, labels)
    return loss, dnn_backward(params, cache, grad_logits, config)


def dnn_predict_proba(params, x, config: DnnConfig) -> np.ndarray:
    logits, _ = dnn_forward(params, x, config)
    return softmax(logits)


@dataclass(eq=False)
class DnnModel:
    """Residual MLP pose classifier with its frozen feature normalizer."""

    config: DnnConfig
    params: dict[str, np.ndarray]
    normalizer: "FeatureNormalizer"

    kind = "dnn"
    # fine-tuning trains the residual blocks only
    transfer_frozen = frozenset({"in.w", "in.b", "out.w", "out.b"})

    @classmethod
    def create(cls, normalizer, config: DnnConfig = DnnConfig(), seed: int = 0) -> "DnnModel":
        return cls(config=config, params=dnn_init(config, seed), normalizer=normalizer)

    def n_params(self) -> int:
        return n_params(self.params)

    def logits(self, x: np.ndarray) -> np.ndarray:
        out, _ = dnn_forward(self.params, self.normalizer.transform(x), self.config)
        return out

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def loss_and_grad(self, x: np.ndarray, labels: np.ndarray, needed=None):
        """Mean batch loss and gradients. ``needed`` (names or None for all)
        restricts which gradients are worth computing; extras are harmless."""
        loss, grads = dnn_loss_and_grad(
            self.params, self.normalizer.transform(x), labels, self.config
        )
        return loss, grads

    def copy(self) -> "DnnModel":
        return DnnModel(
            config=self.config,
            params={k: v.copy() for k, v in self.params.items()},
            normalizer=self.normalizer,
        )


# ---------------------------------------------------------------------------
# Decoupled AdamW: p <- p - lr*m_hat/(sqrt(v_hat)+eps) - lr*wd*p. Decay is
# applied to weights and biases uniformly; frozen parameters (by name) keep
# both their values and their moments untouched.
# ---------------------------------------------------------------------------


@dataclass
class AdamW:
    lr: float = 0.02
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    frozen: frozenset[str] = frozenset()
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr < 0 or self.weight_decay < 0:
            raise ValueError("lr and weight_decay must be nonnegative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise ValueError("betas in [0, 1), eps positive")
        self.frozen = frozenset(self.frozen)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """One in-place update. Frozen parameters are left untouched bit for
        bit; their optimizer moments are not advanced either."""
        self.step_count += 1
        t = self.step_count
        for name, p in params.items():
            if name in self.frozen:
                continue
            g = np.asarray(grads[name])
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for {name}")
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            p *= 1.0 - self.lr * self.weight_decay
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def reset_moments(self) -> None:
        self.m.clear()
        self.v.clear()
        self.step_count = 0
