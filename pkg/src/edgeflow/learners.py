"""Desk-scale learners: an online soft-margin SVM for centralized data
acquisition, and flat-parameter differentiable classifiers (logistic
regression, one-hidden-layer MLP, linear hinge) for federated SGD.

Models are immutable values; every update returns a new model. Binary
labels are +-1 throughout; the MLP uses integer class ids.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import RngStream
from .errors import InvalidInput, ModelDegenerate


@dataclass(frozen=True)
class SvmModel:
    """Soft-margin linear SVM: decision value w . x + b, penalty C."""

    w: np.ndarray
    b: float
    C: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.b):
            raise InvalidInput("SVM parameters must be finite")
        if not self.C > 0:
            raise InvalidInput("C must be positive")
        object.__setattr__(self, "w", w)

    @property
    def feature_dim(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class Architecture:
    """Flat-parameter classifier description.

    kind one of 'logistic' (binary, +-1 labels), 'mlp' (tanh hidden layer,
    softmax output over ``classes``), 'linear_hinge' (binary, +-1 labels).
    """

    kind: str
    in_dim: int
    hidden: int = 0
    classes: int = 2

    def __post_init__(self):
        if self.kind not in ("logistic", "mlp", "linear_hinge"):
            raise InvalidInput(f"unknown architecture kind {self.kind!r}")
        if self.kind == "mlp" and self.hidden < 1:
            raise InvalidInput("mlp needs hidden >= 1")

    @property
    def parameter_count(self) -> int:
        if self.kind in ("logistic", "linear_hinge"):
            return self.in_dim + 1
        return (
            self.in_dim * self.hidden
            + self.hidden
            + self.hidden * self.classes
            + self.classes
        )


@dataclass(frozen=True)
class FedModel:
    """Classifier under federated training: flat parameters + architecture."""

    parameters: np.ndarray
    arch: Architecture

    def __post_init__(self):
        p = np.asarray(self.parameters, dtype=np.float64)
        if p.size != self.arch.parameter_count:
            raise InvalidInput(
                f"{self.arch.kind} expects {self.arch.parameter_count} parameters, "
                f"got {p.size}"
            )
        if not np.all(np.isfinite(p)):
            raise InvalidInput("parameters must be finite")
        object.__setattr__(self, "parameters", p)


def init_fed_model(arch: Architecture, rng: RngStream, scale: float = 0.1) -> FedModel:
    g = rng.generator()
    return FedModel(parameters=scale * g.standard_normal(arch.parameter_count), arch=arch)


def _mlp_unpack(arch: Architecture, p: np.ndarray):
    i, h, c = arch.in_dim, arch.hidden, arch.classes
    ofs = 0
    w1 = p[ofs : ofs + i * h].reshape(i, h)
    ofs += i * h
    b1 = p[ofs : ofs + h]
    ofs += h
    w2 = p[ofs : ofs + h * c].reshape(h, c)
    ofs += h * c
    b2 = p[ofs : ofs + c]
    return w1, b1, w2, b2


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_batch(arch: Architecture, X, y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y))
    if X.shape[0] == 0:
        raise InvalidInput("batch is empty")
    if X.shape[1] != arch.in_dim:
        raise InvalidInput(f"features have dim {X.shape[1]}, model expects {arch.in_dim}")
    if y.shape[0] != X.shape[0]:
        raise InvalidInput("feature/label counts differ")
    return X, y


def fed_loss(model: FedModel, X, y) -> float:
    """Mean loss of the batch (cross-entropy, or hinge for linear_hinge)."""
    arch = model.arch
    X, y = _check_batch(arch, X, y)
    p = model.parameters
    if arch.kind == "logistic":
        z = X @ p[:-1] + p[-1]
        yz = np.where(y > 0, 1.0, -1.0) * z
        return float(np.mean(np.logaddexp(0.0, -yz)))
    if arch.kind == "linear_hinge":
        z = X @ p[:-1] + p[-1]
        margins = np.where(y > 0, 1.0, -1.0) * z
        return float(np.mean(np.maximum(0.0, 1.0 - margins)))
    w1, b1, w2, b2 = _mlp_unpack(arch, p)
    hidden = np.tanh(X @ w1 + b1)
    logits = hidden @ w2 + b2
    logits = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.sum(np.exp(logits), axis=1))
    picked = logits[np.arange(X.shape[0]), y.astype(int)]
    return float(np.mean(logz - picked))


def fed_local_gradient(model: FedModel, X, y) -> np.ndarray:
    """Gradient of the mean batch loss with respect to the flat parameters."""
    arch = model.arch
    X, y = _check_batch(arch, X, y)
    n = X.shape[0]
    p = model.parameters
    if arch.kind == "logistic":
        z = X @ p[:-1] + p[-1]
        y01 = (np.asarray(y) > 0).astype(np.float64)
        resid = _sigmoid(z) - y01  # d loss / d z
        return np.concatenate([X.T @ resid / n, [np.mean(resid)]])
    if arch.kind == "linear_hinge":
        z = X @ p[:-1] + p[-1]
        ypm = np.where(np.asarray(y) > 0, 1.0, -1.0)
        active = (ypm * z < 1.0).astype(np.float64)
        coeff = -active * ypm / n
        return np.concatenate([X.T @ coeff, [np.sum(coeff)]])
    w1, b1, w2, b2 = _mlp_unpack(arch, p)
    hidden = np.tanh(X @ w1 + b1)
    logits = hidden @ w2 + b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    probs = expz / expz.sum(axis=1, keepdims=True)
    delta = probs.copy()
    delta[np.arange(n), y.astype(int)] -= 1.0
    delta /= n
    g_w2 = hidden.T @ delta
    g_b2 = delta.sum(axis=0)
    back = (delta @ w2.T) * (1.0 - hidden**2)
    g_w1 = X.T @ back
    g_b1 = back.sum(axis=0)
    return np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])


def fed_apply(model: FedModel, aggregate: np.ndarray, lr: float) -> FedModel:
    """One SGD step: parameters minus lr times the aggregated gradient."""
    aggregate = np.asarray(aggregate, dtype=np.float64)
    if aggregate.shape != model.parameters.shape:
        raise InvalidInput(
            f"aggregate has shape {aggregate.shape}, parameters "
            f"{model.parameters.shape}"
        )
    if not lr > 0:
        raise InvalidInput("learning rate must be positive")
    return replace(model, parameters=model.parameters - lr * aggregate)


def svm_decision(model: SvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return X @ model.w + model.b


def boundary_distance(model: SvmModel, x) -> float:
    """|w . x + b| / ||w||: Euclidean distance to the decision boundary."""
    norm = float(np.linalg.norm(model.w))
    if norm == 0:
        raise ModelDegenerate("zero weight vector has no decision boundary")
    return float(abs(np.dot(model.w, np.asarray(x, dtype=np.float64)) + model.b)) / norm


def _svm_objective(w, b, X, ypm, C) -> float:
    margins = ypm * (X @ w + b)
    return float(np.dot(w, w) / (2.0 * C) + np.mean(np.maximum(0.0, 1.0 - margins)))


def svm_init(
    X,
    y,
    C: float = 10.0,
    step0: float = 0.1,
    tau: float = 50.0,
    max_epochs: int = 500,
    tol: float = 1e-8,
) -> SvmModel:
    """Train an SVM to convergence on seed data by full-batch subgradient
    descent on the soft-margin objective ||w||^2 / (2C) + mean hinge loss.

    Deterministic for a fixed data ordering. Requires both classes present.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    ypm = np.where(np.asarray(y) > 0, 1.0, -1.0)
    if X.shape[0] != ypm.shape[0]:
        raise InvalidInput("feature/label counts differ")
    if np.all(ypm > 0) or np.all(ypm < 0):
        raise InvalidInput("seed data must contain both classes")
    w = np.zeros(X.shape[1])
    b = 0.0
    prev = _svm_objective(w, b, X, ypm, C)
    for epoch in range(max_epochs):
        margins = ypm * (X @ w + b)
        active = (margins < 1.0).astype(np.float64)
        gw = w / C - (X.T @ (active * ypm)) / X.shape[0]
        gb = -np.mean(active * ypm)
        step = step0 / (1.0 + epoch / tau)
        w = w - step * gw
        b = b - step * gb
        obj = _svm_objective(w, b, X, ypm, C)
        if abs(prev - obj) < tol:
            break
        prev = obj
    return SvmModel(w=w, b=b, C=C)


def svm_update(model: SvmModel, x, label: float, step: float) -> SvmModel:
    """One single-sample subgradient step of the soft-margin objective.

    A margin violation moves (w, b) toward classifying the sample; otherwise
    only the regularization pull w/C applies and b is untouched.
    """
    if not step >= 0:
        raise InvalidInput("step must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    ypm = 1.0 if label > 0 else -1.0
    margin = ypm * (float(np.dot(model.w, x)) + model.b)
    if margin < 1.0:
        w = model.w - step * (model.w / model.C - ypm * x)
        b = model.b + step * ypm
    else:
        w = model.w - step * (model.w / model.C)
        b = model.b
    return SvmModel(w=w, b=b, C=model.C)


def noisy_receive(x, snr_linear: float, rng: RngStream) -> np.ndarray:
    """Analog reception of a feature vector: AWGN with variance 1/SNR per
    coordinate (features are assumed standardized)."""
    if not snr_linear > 0:
        raise InvalidInput("snr_linear must be positive")
    x = np.asarray(x, dtype=np.float64)
    g = rng.generator()
    return x + g.standard_normal(x.shape) / np.sqrt(snr_linear)


def evaluate(model, X, y) -> float:
    """Fraction of correct predictions on a test set."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y))
    if X.shape[0] == 0:
        raise InvalidInput("test set is empty")
    if isinstance(model, SvmModel):
        pred = np.where(svm_decision(model, X) >= 0, 1.0, -1.0)
        return float(np.mean(pred == np.where(y > 0, 1.0, -1.0)))
    arch = model.arch
    p = model.parameters
    if arch.kind in ("logistic", "linear_hinge"):
        z = X @ p[:-1] + p[-1]
        pred = np.where(z >= 0, 1.0, -1.0)
        return float(np.mean(pred == np.where(y > 0, 1.0, -1.0)))
    w1, b1, w2, b2 = _mlp_unpack(arch, p)
    logits = np.tanh(X @ w1 + b1) @ w2 + b2
    return float(np.mean(np.argmax(logits, axis=1) == y.astype(int)))
