"""Dressed variational quantum classifier.

Architecture: input linear layer (36 beam SNRs -> n encoding radians), one
RY(angle) per qubit, an L-layer simplified-two-design ansatz of staggered CZ
entanglers and trainable RY rotations, per-qubit Pauli-Z expectation
readout, and an output linear layer (n -> 8 class logits). The ansatz
carries exactly 2(n-1)L trainable angles.

Gradients of the quantum block use the parameter-shift rule: for any RY
angle phi, d<Z>/dphi = (<Z>(phi + pi/2) - <Z>(phi - pi/2)) / 2, which is
exact (not a finite-difference approximation). One gradient call therefore
costs exactly 2 * (2(n-1)L + n) circuit evaluations; a module-level counter
tracks this so tests can pin the cost down.

Implementation note: RY and CZ have real matrices and the start state
|0...0> is real, so every statevector this module touches is real. The
kernels run on float64 buffers, batching many parameter-shifted circuits
(and many samples) as rows of one array; results are identical to the
complex-valued reference simulator in `statevector`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FeatureNormalizer, N_CLASSES, N_FEATURES
from .neural import linear_init, n_params, softmax, softmax_cross_entropy
from .statevector import (
    GateKind,
    GateOp,
    cz,
    cz_rows,
    ry,
    ry_rows,
    z_expectations_rows,
    zero_states,
)

_eval_count = 0


def evaluation_count() -> int:
    """Total statevector circuit evaluations since the last reset."""
    return _eval_count


def reset_evaluation_count() -> None:
    global _eval_count
    _eval_count = 0


@dataclass(frozen=True)
class StdAnsatz:
    """Simplified-two-design circuit template.

    Per layer: block A applies CZ to pairs (0,1),(2,3),... with an RY on
    both pair members after each CZ; block B does the same on the staggered
    pairs (1,2),(3,4),.... Works for odd n too; either way each layer holds
    2(n-1) trainable angles.
    """

    n_qubits: int = 10
    n_layers: int = 1

    def __post_init__(self) -> None:
        if self.n_qubits < 2:
            raise ValueError("need at least 2 qubits")
        if self.n_layers < 1:
            raise ValueError("need at least 1 layer")

    @property
    def n_theta(self) -> int:
        return 2 * (self.n_qubits - 1) * self.n_layers

    def layout(self, slot_offset: int = 0) -> list[GateOp]:
        """Ansatz gates with RY slots numbered slot_offset, slot_offset+1, ..."""
        ops: list[GateOp] = []
        slot = slot_offset
        for _ in range(self.n_layers):
            for start in (0, 1):
                for a in range(start, self.n_qubits - 1, 2):
                    ops.append(cz(a, a + 1))
                    ops.append(ry(a, slot))
                    ops.append(ry(a + 1, slot + 1))
                    slot += 2
        return ops

    def dressed_ops(self) -> list[GateOp]:
        """Encoding RY on every qubit (slots 0..n-1) followed by the ansatz
        (slots n..n+2(n-1)L-1)."""
        encoding = [ry(q, q) for q in range(self.n_qubits)]
        return encoding + self.layout(slot_offset=self.n_qubits)

    @property
    def n_slots(self) -> int:
        return self.n_qubits + self.n_theta


# Rows per kernel launch. Small enough that a chunk's statevectors stay in
# cache across the gate sequence; large batches run noticeably faster in
# chunks than as one huge buffer.
_ROW_CHUNK = 32


def z_from_angles(ansatz: StdAnsatz, angles: np.ndarray) -> np.ndarray:
    """Per-qubit Z expectations of the dressed circuit.

    angles: (rows, n_qubits + n_theta) with encoding angles first, or a
    single flat vector. Each row is one independent circuit evaluation.
    """
    global _eval_count
    angles = np.atleast_2d(np.asarray(angles, dtype=np.float64))
    rows = angles.shape[0]
    if angles.shape[1] != ansatz.n_slots:
        raise ValueError(f"expected {ansatz.n_slots} angles per row, got {angles.shape[1]}")
    ops = ansatz.dressed_ops()
    out = np.empty((rows, ansatz.n_qubits))
    for lo in range(0, rows, _ROW_CHUNK):
        chunk = angles[lo : lo + _ROW_CHUNK]
        amps = zero_states(ansatz.n_qubits, batch=chunk.shape[0], dtype=np.float64)
        for op in ops:
            if op.kind is GateKind.RY:
                ry_rows(amps, op.target, chunk[:, op.angle_slot])
            else:
                cz_rows(amps, op.control, op.target)
        out[lo : lo + _ROW_CHUNK] = z_expectations_rows(amps)
    _eval_count += rows
    return out


@dataclass(eq=False)
class DressedQnnModel:
    """STD-ansatz circuit dressed with classical input/output linear layers.

    params keys: `in.w` (36, n), `in.b` (n,), `theta` (2(n-1)L,),
    `out.w` (n, 8), `out.b` (8,). For n=10, L=1 that is 18 quantum and
    458 classical trainable parameters.
    """

    ansatz: StdAnsatz
    params: dict[str, np.ndarray]
    normalizer: FeatureNormalizer

    kind = "qnn"
    # fine-tuning trains only the circuit angles
    transfer_frozen = frozenset({"in.w", "in.b", "out.w", "out.b"})

    @classmethod
    def create(
        cls,
        normalizer: FeatureNormalizer,
        ansatz: StdAnsatz = StdAnsatz(),
        seed: int = 0,
        n_features: int = N_FEATURES,
        n_classes: int = N_CLASSES,
    ) -> "DressedQnnModel":
        """theta ~ uniform(-pi, pi); linear layers ~ uniform(+-1/sqrt(fan_in))."""
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        params: dict[str, np.ndarray] = {}
        params["in.w"], params["in.b"] = linear_init(rng, n_features, ansatz.n_qubits)
        params["theta"] = rng.uniform(-np.pi, np.pi, ansatz.n_theta)
        params["out.w"], params["out.b"] = linear_init(rng, ansatz.n_qubits, n_classes)
        return cls(ansatz=ansatz, params=params, normalizer=normalizer)

    def n_quantum_params(self) -> int:
        return self.params["theta"].size

    def n_classical_params(self) -> int:
        return self.n_params() - self.n_quantum_params()

    def n_params(self) -> int:
        return n_params(self.params)

    def encoding_angles(self, x: np.ndarray) -> np.ndarray:
        """(B, n_qubits) RY encoding angles for raw feature rows."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if not np.isfinite(x).all():
            raise ValueError("input features must be finite")
        return self.normalizer.transform(x) @ self.params["in.w"] + self.params["in.b"]

    def _angle_rows(self, encoding: np.ndarray) -> np.ndarray:
        theta = np.broadcast_to(self.params["theta"], (encoding.shape[0], self.ansatz.n_theta))
        return np.concatenate([encoding, theta], axis=1)

    def z_values(self, x: np.ndarray) -> np.ndarray:
        return z_from_angles(self.ansatz, self._angle_rows(self.encoding_angles(x)))

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self.z_values(x) @ self.params["out.w"] + self.params["out.b"]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def loss_and_grad(self, x: np.ndarray, labels: np.ndarray, needed=None):
        return qnn_loss_and_grad_batch(self, x, labels, needed=needed)

    def copy(self) -> "DressedQnnModel":
        return DressedQnnModel(
            ansatz=self.ansatz,
            params={k: v.copy() for k, v in self.params.items()},
            normalizer=self.normalizer,
        )


def qnn_forward(model: DressedQnnModel, x: np.ndarray) -> np.ndarray:
    """Class logits for one 36-dim feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("qnn_forward takes a single feature vector")
    return model.logits(x)[0]


def _shifted_angle_rows(base: np.ndarray, slots) -> np.ndarray:
    """For each base row and each slot j, two rows with slot j shifted by
    +pi/2 and -pi/2. Output shape (B * 2K, n_slots), sample-major."""
    b, s = base.shape
    k = len(slots)
    rows = np.repeat(base, 2 * k, axis=0).reshape(b, 2 * k, s)
    for i, j in enumerate(slots):
        rows[:, 2 * i, j] += np.pi / 2
        rows[:, 2 * i + 1, j] -= np.pi / 2
    return rows.reshape(b * 2 * k, s)


def _shift_gradients(model: DressedQnnModel, base: np.ndarray, slots) -> np.ndarray:
    """d<Z_q>/d(angle_slot) by the parameter-shift rule.

    base: (B, n_slots) unshifted angle rows. Returns (B, K, n_qubits) for
    the K requested slots.
    """
    b = base.shape[0]
    k = len(slots)
    z = z_from_angles(model.ansatz, _shifted_angle_rows(base, slots))
    z = z.reshape(b, k, 2, model.ansatz.n_qubits)
    return (z[:, :, 0, :] - z[:, :, 1, :]) / 2.0


def param_shift_grad(model: DressedQnnModel, x: np.ndarray, upstream: np.ndarray):
    """Gradients of upstream . logits over theta and the encoding angles.

    upstream is the 8-dim cotangent on the logits; it is pulled back through
    the output layer and the parameter-shift derivatives. Costs exactly
    2 * (n_theta + n_qubits) circuit evaluations.

    Returns (theta_grad, encoding_grad).
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (model.params["out.b"].size,):
        raise ValueError(f"upstream must have shape {model.params['out.b'].shape}")
    base = model._angle_rows(model.encoding_angles(x))
    dz = _shift_gradients(model, base, range(model.ansatz.n_slots))[0]
    upstream_z = model.params["out.w"] @ upstream
    grad = dz @ upstream_z
    n = model.ansatz.n_qubits
    return grad[n:], grad[:n]


def qnn_loss_and_grad_batch(model: DressedQnnModel, x, labels, needed=None):
    """Mean softmax cross-entropy over a batch and its gradients.

    needed: iterable of parameter names to differentiate (None = all).
    Restricting to {"theta"} skips the encoding-angle shifts entirely,
    which is what makes fine-tuning cheap.
    """
    names = set(model.params) if needed is None else set(needed)
    n = model.ansatz.n_qubits
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels))

    encoding = model.encoding_angles(x)
    base = model._angle_rows(encoding)
    z = z_from_angles(model.ansatz, base)
    logits = z @ model.params["out.w"] + model.params["out.b"]
    loss, grad_logits = softmax_cross_entropy(logits, labels)

    grads: dict[str, np.ndarray] = {}
    if "out.w" in names:
        grads["out.w"] = z.T @ grad_logits
    if "out.b" in names:
        grads["out.b"] = grad_logits.sum(axis=0)

    upstream_z = grad_logits @ model.params["out.w"].T
    slots: list[int] = []
    want_encoding = "in.w" in names or "in.b" in names
    if want_encoding:
        slots.extend(range(n))
    want_theta = "theta" in names
    if want_theta:
        slots.extend(range(n, model.ansatz.n_slots))
    if slots:
        dz = _shift_gradients(model, base, slots)
        slot_grad = np.einsum("bkq,bq->bk", dz, upstream_z)
        k0 = 0
        if want_encoding:
            enc_grad = slot_grad[:, :n]
            grads["in.w"] = model.normalizer.transform(x).T @ enc_grad
            grads["in.b"] = enc_grad.sum(axis=0)
            k0 = n
        if want_theta:
            grads["theta"] = slot_grad[:, k0:].sum(axis=0)
    return loss, grads


def qnn_backward(model: DressedQnnModel, x: np.ndarray, label: int):
    """Loss and full parameter gradient for a single labeled sample."""
    label = int(label)
    if not 0 <= label < model.params["out.b"].size:
        raise ValueError(f"label {label} outside 0..{model.params['out.b'].size - 1}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("qnn_backward takes a single feature vector")
    return qnn_loss_and_grad_batch(model, x[None, :], np.array([label]))
