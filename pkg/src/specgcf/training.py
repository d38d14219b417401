"""BPR training of the ego embeddings with Adam and early stopping."""
from __future__ import annotations

import logging
import math
import struct
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import propagation
from .dataset import InteractionDataset, TrainBatch, sample_batch
from .evaluation import evaluate
from .graph import NormalizedAdjacency
from .polybasis import FilterParams
from .seeding import rng_stream

logger = logging.getLogger(__name__)

STOP_K = 20


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    l2_lambda: float = 1e-6
    batch_size: int = 4096
    max_epochs: int = 300
    patience: int = 5
    embedding_dim: int = 64
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1 or self.embedding_dim < 1:
            raise ValueError("batch_size and embedding_dim must be positive")


@dataclass
class TrainState:
    E0: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    epoch: int = 0
    best_metric: float = -math.inf
    best_epoch: int = -1

    @classmethod
    def fresh(cls, E0):
        return cls(E0=E0, m=np.zeros_like(E0), v=np.zeros_like(E0))


@dataclass
class FitResult:
    E0: np.ndarray
    history: list = field(default_factory=list)
    best_epoch: int = -1


class NonFiniteGradient(FloatingPointError):
    pass


def xavier_uniform(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """U(-sqrt(6 / 2d), +sqrt(6 / 2d)), i.e. Xavier with fan_in = fan_out = d."""
    bound = math.sqrt(6.0 / (2 * d))
    return rng.uniform(-bound, bound, size=(n, d))


def _score_diff(final, batch: TrainBatch, num_users):
    eu = final[batch.users]
    ei = final[num_users + batch.pos_items]
    ej = final[num_users + batch.neg_items]
    return eu, ei, ej, np.einsum("bd,bd->b", eu, ei - ej)


def bpr_loss(final: np.ndarray, batch: TrainBatch, E0: np.ndarray, l2_lambda: float, num_users: int) -> float:
    """mean softplus(-(y_ui - y_uj)) + lambda * ||E0||_F^2."""
    if batch.batch_size == 0:
        return float(l2_lambda * np.sum(E0 * E0))
    *_, x = _score_diff(final, batch, num_users)
    return float(np.mean(np.logaddexp(0.0, -x)) + l2_lambda * np.sum(E0 * E0))


def bpr_backward(batch: TrainBatch, final: np.ndarray, l2_lambda: float, E0: np.ndarray, num_users: int):
    """Return ``(grad wrt final, grad of the L2 term wrt E0)``."""
    grad = np.zeros_like(final)
    if batch.batch_size:
        eu, ei, ej, x = _score_diff(final, batch, num_users)
        # d/dx softplus(-x) = -sigmoid(-x)
        s = (0.5 * (1.0 + np.tanh(-0.5 * x)) / batch.batch_size)[:, None]
        np.add.at(grad, batch.users, -s * (ei - ej))
        np.add.at(grad, num_users + batch.pos_items, -s * eu)
        np.add.at(grad, num_users + batch.neg_items, s * eu)
    return grad, 2.0 * l2_lambda * E0


def loss_and_grad(adj: NormalizedAdjacency, E0: np.ndarray, fp: FilterParams, batch: TrainBatch,
                  l2_lambda: float, backend=None):
    """Full forward/backward for one batch; returns ``(loss, grad wrt E0)``."""
    stack = propagation.forward(adj, E0, fp, backend)
    loss = bpr_loss(stack.final, batch, E0, l2_lambda, adj.num_users)
    g_final, g_l2 = bpr_backward(batch, stack.final, l2_lambda, E0, adj.num_users)
    return loss, propagation.backward(adj, fp, g_final, stack, backend) + g_l2


def adam_step(state: TrainState, grad: np.ndarray, cfg: TrainConfig) -> TrainState:
    """Bias-corrected Adam update of ``state.E0`` in place."""
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient(f"non-finite gradient at step {state.step + 1}")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    state.step += 1
    state.m *= b1
    state.m += (1 - b1) * grad
    state.v *= b2
    state.v += (1 - b2) * grad * grad
    m_hat = state.m / (1 - b1 ** state.step)
    v_hat = state.v / (1 - b2 ** state.step)
    state.E0 -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return state


def validation_recall(adj, fp, train, valid, E0, k=STOP_K, backend=None) -> dict:
    final = propagation.forward(adj, E0, fp, backend).final
    report = evaluate(final, adj.num_users, valid, mask_splits=[train], ks=(k,))
    if not report.num_evaluated_users:
        return {}
    return {f"valid_recall@{k}": report.recall(k), f"valid_ndcg@{k}": report.ndcg(k)}


def fit(train: InteractionDataset, valid: InteractionDataset | None, adj: NormalizedAdjacency,
        fp: FilterParams, cfg: TrainConfig, eval_fn: Callable | None = None,
        on_epoch: Callable | None = None, backend=None) -> FitResult:
    """Train E0 and return the parameters of the best validation epoch.

    ``eval_fn(state)`` may replace the default validation Recall@20; it must
    return a dict holding ``valid_recall@20``. Without a validation split
    early stopping is off and the last epoch's parameters are returned.
    """
    init_rng = rng_stream(cfg.seed, "init")
    batch_rng = rng_stream(cfg.seed, "batch")
    state = TrainState.fresh(xavier_uniform(adj.n, cfg.embedding_dim, init_rng))
    result = FitResult(E0=state.E0.copy())
    if cfg.max_epochs == 0:
        return result

    stopping = True
    if eval_fn is None:
        if valid is None or len(valid) == 0:
            warnings.warn("validation split is empty; early stopping disabled")
            stopping = False
            eval_fn = lambda st: {}  # noqa: E731
        else:
            eval_fn = lambda st: validation_recall(adj, fp, train, valid, st.E0, backend=backend)  # noqa: E731

    metric_key = f"valid_recall@{STOP_K}"
    n_batches = math.ceil(len(train) / cfg.batch_size)
    best_E0 = state.E0.copy()
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        t0 = time.perf_counter()
        losses, skipped, aborted = [], 0, False
        for _ in range(n_batches):
            batch = sample_batch(train, cfg.batch_size, batch_rng)
            skipped += batch.skipped
            loss, grad = loss_and_grad(adj, state.E0, fp, batch, cfg.l2_lambda, backend)
            try:
                adam_step(state, grad, cfg)
            except NonFiniteGradient as exc:
                logger.warning("epoch %d aborted: %s", epoch, exc)
                aborted = True
                break
            losses.append(loss)
        state.epoch = epoch
        record = {"epoch": epoch, "loss": float(np.mean(losses)) if losses else float("nan")}
        if skipped:
            record["skipped_triples"] = skipped
        if aborted:
            record["aborted"] = True
        record.update(eval_fn(state))
        result.history.append(record)
        logger.info("epoch %d  loss %.5f  %s  (%.2fs)", epoch, record["loss"],
                    record.get(metric_key, "-"), time.perf_counter() - t0)
        if on_epoch is not None:
            on_epoch(record)

        if not stopping:
            best_E0 = state.E0.copy()
            state.best_epoch = epoch
            continue
        metric = record.get(metric_key, -math.inf)
        if metric > state.best_metric:
            state.best_metric, state.best_epoch = metric, epoch
            best_E0 = state.E0.copy()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("early stop at epoch %d (best %d)", epoch, state.best_epoch)
                break
    result.E0 = best_E0
    result.best_epoch = state.best_epoch
    return result


# checkpoint: header then row-major little-endian float32 E0
_CKPT_MAGIC = b"SGCF"
_CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sIqqqqddd")


def save_checkpoint(path, E0: np.ndarray, num_users: int, fp: FilterParams) -> None:
    n, d = E0.shape
    with Path(path).open("wb") as fh:
        fh.write(_CKPT_HEADER.pack(_CKPT_MAGIC, _CKPT_VERSION, n, d, num_users, fp.order, fp.a, fp.b, fp.alpha))
        fh.write(np.ascontiguousarray(E0, dtype="<f4").tobytes())


def load_checkpoint(path):
    """Return ``(E0 as float64, header dict)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _CKPT_HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint")
    magic, version, n, d, num_users, order, a, b, alpha = _CKPT_HEADER.unpack_from(raw)
    if magic != _CKPT_MAGIC or version != _CKPT_VERSION:
        raise ValueError(f"{path}: not a specgcf checkpoint")
    body = np.frombuffer(raw, dtype="<f4", offset=_CKPT_HEADER.size)
    if body.size != n * d:
        raise ValueError(f"{path}: expected {n * d} floats, found {body.size}")
    header = dict(n=n, d=d, num_users=num_users, order=order, a=a, b=b, alpha=alpha)
    return body.reshape(n, d).astype(np.float64), header

