"""Multi-task autoencoder with hand-written backpropagation.

Encoder ``512 -> 256 -> 128`` (ReLU, linear output), decoder
``128 -> 256 -> 512`` (ReLU, linear output) and a single affine classifier
``128 -> 4``. The joint objective is::

    L = L_rec + alpha * L_cls + beta * L_con

with mean squared reconstruction error, softmax cross entropy, and a margin
contrastive loss over all unordered pairs of L2-normalised embeddings.
Everything runs in float64 on numpy.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
PARAM_NAMES = ("enc1.W", "enc1.b", "enc2.W", "enc2.b", "dec1.W", "dec1.b", "dec2.W", "dec2.b", "cls.W", "cls.b")


class NonFiniteError(FloatingPointError):
    pass


class TrainingDiverged(RuntimeError):
    """Raised when a loss turns non-finite; ``model`` holds the last good epoch."""

    def __init__(self, message: str, model: "AutoencoderModel", epoch: int):
        super().__init__(message)
        self.model = model
        self.epoch = epoch


def _check(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
        raise NonFiniteError(f"{bad} non-finite value(s) in {name} (shape {np.shape(arr)})")
    return arr


@dataclass(frozen=True)
class Architecture:
    input_dim: int = 512
    hidden_dim: int = 256
    embed_dim: int = 128
    n_classes: int = 4

    def shapes(self) -> dict[str, tuple[int, ...]]:
        i, h, e, c = self.input_dim, self.hidden_dim, self.embed_dim, self.n_classes
        return {
            "enc1.W": (i, h), "enc1.b": (h,),
            "enc2.W": (h, e), "enc2.b": (e,),
            "dec1.W": (e, h), "dec1.b": (h,),
            "dec2.W": (h, i), "dec2.b": (i,),
            "cls.W": (e, c), "cls.b": (c,),
        }


class AutoencoderModel:
    """Parameters of encoder, decoder and classifier.

    Weight matrices are stored ``(fan_in, fan_out)`` so a batch ``X`` of row
    vectors maps as ``X @ W + b``.
    """

    def __init__(self, params: dict[str, np.ndarray], arch: Architecture = Architecture(), seed: int | None = None):
        shapes = arch.shapes()
        if set(params) != set(shapes):
            raise ValueError(f"expected parameters {sorted(shapes)}")
        for name, shape in shapes.items():
            if params[name].shape != shape:
                raise ValueError(f"{name} has shape {params[name].shape}, expected {shape}")
        self.params = {name: np.asarray(params[name], dtype=np.float64) for name in PARAM_NAMES}
        self.arch = arch
        self.seed = seed

    @classmethod
    def initialize(cls, seed: int = 0, arch: Architecture = Architecture()) -> "AutoencoderModel":
        """Uniform fan-in scaled init, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``."""
        rng = np.random.default_rng(seed)
        shapes = arch.shapes()
        params = {}
        for name in PARAM_NAMES:
            layer = name.split(".")[0]
            fan_in = shapes[layer + ".W"][0]
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, size=shapes[name])
        return cls(params, arch, seed)

    @classmethod
    def zeros(cls, arch: Architecture = Architecture()) -> "AutoencoderModel":
        return cls({n: np.zeros(s) for n, s in arch.shapes().items()}, arch)

    def copy(self) -> "AutoencoderModel":
        return AutoencoderModel({k: v.copy() for k, v in self.params.items()}, self.arch, self.seed)

    def n_parameters(self) -> int:
        return sum(v.size for v in self.params.values())

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Embedding of one feature vector or of each row of a batch."""
        x = np.asarray(x, dtype=np.float64)
        _check("encoder input", x)
        p = self.params
        h = np.maximum(x @ p["enc1.W"] + p["enc1.b"], 0.0)
        return _check("embedding", h @ p["enc2.W"] + p["enc2.b"])

    def decode(self, z: np.ndarray) -> np.ndarray:
        p = self.params
        h = np.maximum(np.asarray(z) @ p["dec1.W"] + p["dec1.b"], 0.0)
        return _check("reconstruction", h @ p["dec2.W"] + p["dec2.b"])

    def classify(self, z: np.ndarray) -> np.ndarray:
        return _check("logits", np.asarray(z) @ self.params["cls.W"] + self.params["cls.b"])

    def save(self, path: str | Path, config: "TrainConfig | None" = None) -> None:
        meta = {
            "version": FORMAT_VERSION,
            "arch": asdict(self.arch),
            "shapes": {k: list(v.shape) for k, v in self.params.items()},
            "seed": self.seed,
            "config": asdict(config) if config is not None else None,
        }
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta)), **self.params)

    @classmethod
    def load(cls, path: str | Path) -> "AutoencoderModel":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("version") != FORMAT_VERSION:
                raise ValueError(f"unsupported model file version {meta.get('version')!r}")
            params = {name: data[name].copy() for name in PARAM_NAMES}
        return cls(params, Architecture(**meta["arch"]), meta.get("seed"))


def encode(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    return model.encode(x)


# ------------------------------------------------------------------ losses


def reconstruction_loss(X: np.ndarray, X_hat: np.ndarray) -> float:
    X, X_hat = np.asarray(X, dtype=np.float64), np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape or X.ndim != 2:
        raise ValueError(f"shape mismatch: {X.shape} vs {X_hat.shape}")
    return float(np.sum((X - X_hat) ** 2) / X.shape[0])


def softmax(C: np.ndarray) -> np.ndarray:
    shifted = C - C.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(C: np.ndarray) -> np.ndarray:
    shifted = C - C.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def classification_loss(C: np.ndarray, Y: np.ndarray) -> float:
    C, Y = np.asarray(C, dtype=np.float64), np.asarray(Y, dtype=np.float64)
    if C.shape != Y.shape or C.ndim != 2:
        raise ValueError(f"shape mismatch: {C.shape} vs {Y.shape}")
    return float(-np.sum(Y * _log_softmax(C)) / C.shape[0])


def _normalize_rows(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(Z, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"zero-norm embedding in rows {np.flatnonzero(norms == 0.0).tolist()}")
    return Z / norms[:, None], norms


def _same_label(Y: np.ndarray) -> np.ndarray:
    return np.all(Y[:, None, :] == Y[None, :, :], axis=2)


def contrastive_loss(Z: np.ndarray, Y: np.ndarray, margin: float = 1.0) -> float:
    return _contrastive(np.asarray(Z, dtype=np.float64), np.asarray(Y), margin)[0]


def _contrastive(Z: np.ndarray, Y: np.ndarray, m: float, grad: bool = False):
    B = Z.shape[0]
    if B < 2:
        raise ValueError("contrastive loss needs at least two samples")
    if m <= 0:
        raise ValueError("margin must be positive")
    U, norms = _normalize_rows(Z)
    diff = U[:, None, :] - U[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=2))
    same = _same_label(Y)
    upper = np.triu(np.ones((B, B), dtype=bool), k=1)
    n_pairs = B * (B - 1) / 2
    hinge = np.maximum(m - dist, 0.0)
    per_pair = np.where(same, dist**2, hinge**2)
    loss = float(np.sum(per_pair[upper]) / n_pairs)
    if not grad:
        return loss, None
    # d(per_pair)/d(diff) for each ordered pair p<q; diff = U_p - U_q
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(same, 2.0, np.where(dist > 0, -2.0 * hinge / dist, 0.0))
    coef = np.where(upper, coef, 0.0) / n_pairs
    g = coef[:, :, None] * diff
    dU = g.sum(axis=1) - g.sum(axis=0)
    dZ = (dU - U * np.sum(U * dU, axis=1, keepdims=True)) / norms[:, None]
    return loss, dZ


@dataclass(frozen=True)
class LossBreakdown:
    L1: float
    L2: float
    L3: float
    L: float
    alpha: float
    beta: float

    def as_row(self) -> dict:
        return {"L1": self.L1, "L2": self.L2, "L3": self.L3, "L": self.L}


@dataclass
class _Cache:
    X: np.ndarray
    Y: np.ndarray
    a1: np.ndarray
    h1: np.ndarray
    Z: np.ndarray
    a3: np.ndarray
    h3: np.ndarray
    X_hat: np.ndarray
    C: np.ndarray
    alpha: float
    beta: float
    margin: float


def joint_loss(model: AutoencoderModel, X: np.ndarray, Y: np.ndarray, alpha: float = 0.01,
               beta: float = 0.01, margin: float = 1.0) -> tuple[LossBreakdown, _Cache]:
    """One shared forward pass; returns the loss terms and the backprop cache."""
    X = _check("batch X", np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError(f"bad batch shapes X{X.shape} Y{Y.shape}")
    p = model.params
    a1 = X @ p["enc1.W"] + p["enc1.b"]
    h1 = np.maximum(a1, 0.0)
    Z = _check("embedding", h1 @ p["enc2.W"] + p["enc2.b"])
    a3 = Z @ p["dec1.W"] + p["dec1.b"]
    h3 = np.maximum(a3, 0.0)
    X_hat = _check("reconstruction", h3 @ p["dec2.W"] + p["dec2.b"])
    C = _check("logits", Z @ p["cls.W"] + p["cls.b"])
    L1 = reconstruction_loss(X, X_hat)
    L2 = classification_loss(C, Y)
    L3 = contrastive_loss(Z, Y, margin)
    total = L1 + alpha * L2 + beta * L3
    if not np.isfinite(total):
        raise NonFiniteError(f"non-finite loss L1={L1} L2={L2} L3={L3}")
    cache = _Cache(X, Y, a1, h1, Z, a3, h3, X_hat, C, alpha, beta, margin)
    return LossBreakdown(L1, L2, L3, total, alpha, beta), cache


def backward(model: AutoencoderModel, cache: _Cache) -> dict[str, np.ndarray]:
    """Exact gradients of the joint loss for the batch held in ``cache``."""
    p = model.params
    c = cache
    B = c.X.shape[0]
    grads: dict[str, np.ndarray] = {}

    d_xhat = -2.0 * (c.X - c.X_hat) / B
    grads["dec2.W"] = c.h3.T @ d_xhat
    grads["dec2.b"] = d_xhat.sum(axis=0)
    d_a3 = (d_xhat @ p["dec2.W"].T) * (c.a3 > 0)
    grads["dec1.W"] = c.Z.T @ d_a3
    grads["dec1.b"] = d_a3.sum(axis=0)
    dZ = d_a3 @ p["dec1.W"].T

    P = softmax(c.C)
    dC = c.alpha * (P * c.Y.sum(axis=1, keepdims=True) - c.Y) / B
    grads["cls.W"] = c.Z.T @ dC
    grads["cls.b"] = dC.sum(axis=0)
    dZ = dZ + dC @ p["cls.W"].T

    if c.beta != 0.0:
        _, dZ3 = _contrastive(c.Z, c.Y, c.margin, grad=True)
        dZ = dZ + c.beta * dZ3

    grads["enc2.W"] = c.h1.T @ dZ
    grads["enc2.b"] = dZ.sum(axis=0)
    d_a1 = (dZ @ p["enc2.W"].T) * (c.a1 > 0)
    grads["enc1.W"] = c.X.T @ d_a1
    grads["enc1.b"] = d_a1.sum(axis=0)
    for name, g in grads.items():
        _check(f"gradient {name}", g)
    return {name: grads[name] for name in PARAM_NAMES}


# ----------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    # optimiser, schedule and margin are our defaults; alpha and beta are the method's weights
    epochs: int = 200
    batch_size: int = 16
    lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    margin: float = 1.0
    alpha: float = 0.01
    beta: float = 0.01
    seed: int = 0
    hidden_dim: int = 256
    embed_dim: int = 128


@dataclass
class EpochRecord:
    epoch: int
    loss: LossBreakdown
    accuracy: float


@dataclass
class TrainingLog:
    records: list[EpochRecord] = field(default_factory=list)
    excluded: int = 0

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "L1", "L2", "L3", "L"])
            for r in self.records:
                writer.writerow([r.epoch, repr(r.loss.L1), repr(r.loss.L2), repr(r.loss.L3), repr(r.loss.L)])


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k in params:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _batches(n: int, size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    chunks = [order[i:i + size] for i in range(0, n, size)]
    if len(chunks) > 1 and len(chunks[-1]) < 2:
        # the pair loss needs two samples; fold a singleton into the previous batch
        last = chunks.pop()
        chunks[-1] = np.concatenate([chunks[-1], last])
    return chunks


def evaluate(model: AutoencoderModel, X: np.ndarray, Y: np.ndarray, config: TrainConfig = TrainConfig()):
    loss, cache = joint_loss(model, X, Y, config.alpha, config.beta, config.margin)
    acc = float(np.mean(np.argmax(cache.C, axis=1) == np.argmax(Y, axis=1)))
    return loss, acc


def train(X: np.ndarray, Y: np.ndarray, config: TrainConfig = TrainConfig(),
          model: AutoencoderModel | None = None) -> tuple[AutoencoderModel, TrainingLog]:
    """Mini-batch Adam on the joint loss.

    Rows of ``X`` that are all zero (documents without any vocabulary term)
    are dropped with a warning. Epoch 0 in the log is the loss before any
    update; each later record is the full-training-set loss after that epoch.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    keep = np.linalg.norm(X, axis=1) > 0
    excluded = int(np.sum(~keep))
    if excluded:
        warnings.warn(f"excluding {excluded} all-zero feature vector(s) from training")
        X, Y = X[keep], Y[keep]
    if X.shape[0] < 2:
        raise ValueError("training needs at least two usable samples")
    missing = np.flatnonzero(Y.sum(axis=0) == 0)
    if missing.size:
        warnings.warn(f"training data has no samples of label position(s) {(missing + 1).tolist()}")

    if model is None:
        arch = Architecture(X.shape[1], config.hidden_dim, config.embed_dim, Y.shape[1])
        model = AutoencoderModel.initialize(config.seed, arch)
    else:
        model = model.copy()
    rng = np.random.default_rng(config.seed + 1)
    opt = Adam(model.params, config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps)
    history = TrainingLog(excluded=excluded)
    loss, acc = evaluate(model, X, Y, config)
    history.records.append(EpochRecord(0, loss, acc))
    last_good = model.copy()

    for epoch in range(1, config.epochs + 1):
        try:
            for idx in _batches(X.shape[0], config.batch_size, rng):
                _, cache = joint_loss(model, X[idx], Y[idx], config.alpha, config.beta, config.margin)
                opt.step(model.params, backward(model, cache))
            loss, acc = evaluate(model, X, Y, config)
        except (NonFiniteError, ValueError) as exc:
            raise TrainingDiverged(f"training diverged in epoch {epoch}: {exc}", last_good, epoch - 1) from exc
        history.records.append(EpochRecord(epoch, loss, acc))
        log.debug("epoch %d L=%.6f acc=%.3f", epoch, loss.L, acc)
        last_good = model.copy()
    return model, history
