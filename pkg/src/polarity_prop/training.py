"""Composite-loss training of the polarity function.

Four mean-squared-error losses share one model: AL pairs pull both events
toward their propagated reference scores, CA pairs pull a pair's two scores
together, CO pairs push them to opposite values, and supervised events pull
toward their gold scores.  CA and CO additionally carry an anti-shrinkage
term mu * (1 - p^2) per event so the trivial all-zero solution is penalized.
Gradients are hand-derived and verified against finite differences in the
test suite.  The optimizer is classical Momentum SGD.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Sequence

import numpy as np

from .dataset import DatasetBundle, LabeledEvent
from .errors import PolarityPropError
from .events import Event, EventPair
from .model import MEAN, RECURRENT, PolarityModel

log = logging.getLogger(__name__)

ALBatch = Sequence[tuple[EventPair, int, int]]
PairBatch = Sequence[EventPair]
SupBatch = Sequence[LabeledEvent]


class EmptyBatchError(PolarityPropError):
    """A loss was evaluated on an empty batch."""


class NoActiveDataError(PolarityPropError):
    """No active loss received a non-empty batch."""


class MissingDatasetError(PolarityPropError):
    """The objective needs a bundle part that is empty."""


class ShapeMismatchError(PolarityPropError):
    """Parameter, gradient, and velocity shapes disagree."""


class TrainingDivergedError(PolarityPropError):
    """Parameters left the finite range during training."""


class Objective(Enum):
    AL = "al"
    AL_CA_CO = "al+ca+co"
    ACP = "acp"
    ACP_AL_CA_CO = "acp+al+ca+co"

    @property
    def active_losses(self) -> frozenset[str]:
        return _ACTIVE[self]


_ACTIVE = {
    Objective.AL: frozenset({"al"}),
    Objective.AL_CA_CO: frozenset({"al", "ca", "co"}),
    Objective.ACP: frozenset({"acp"}),
    Objective.ACP_AL_CA_CO: frozenset({"al", "ca", "co", "acp"}),
}


@dataclass
class TrainConfig:
    lambda_al: float = 1.0
    lambda_ca: float = 0.35
    lambda_co: float = 1.0
    mu: float = 0.5
    learning_rate: float = 0.05
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 50
    rng_seed: int = 0
    objective: Objective = Objective.AL_CA_CO

    def __post_init__(self) -> None:
        if isinstance(self.objective, str):
            self.objective = Objective(self.objective)
        for name in ("lambda_al", "lambda_ca", "lambda_co", "mu"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class LossReport:
    l_al: float = 0.0
    l_ca: float = 0.0
    l_co: float = 0.0
    l_acp: float = 0.0
    total: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {"l_al": self.l_al, "l_ca": self.l_ca, "l_co": self.l_co,
                "l_acp": self.l_acp, "total": self.total}


# ---------------------------------------------------------------------------
# Score-level loss terms (pure functions of predicted scores)
# ---------------------------------------------------------------------------

def loss_al_from_scores(p_former, p_latter, r_former, r_latter, lambda_al: float) -> float:
    """Mean squared error to the propagated references, former term weighted."""
    p_former, p_latter = np.asarray(p_former, float), np.asarray(p_latter, float)
    r_former, r_latter = np.asarray(r_former, float), np.asarray(r_latter, float)
    return float(np.mean((r_latter - p_latter) ** 2)
                 + lambda_al * np.mean((r_former - p_former) ** 2))


def loss_ca_from_scores(p1, p2, lambda_ca: float, mu: float) -> float:
    """Same-polarity pull plus the anti-shrinkage term on both events."""
    p1, p2 = np.asarray(p1, float), np.asarray(p2, float)
    return float(lambda_ca * np.mean((p1 - p2) ** 2)
                 + mu * np.mean((1 - p1 ** 2) + (1 - p2 ** 2)))


def loss_co_from_scores(p1, p2, lambda_co: float, mu: float) -> float:
    """Opposite-polarity push plus the anti-shrinkage term on both events."""
    p1, p2 = np.asarray(p1, float), np.asarray(p2, float)
    return float(lambda_co * np.mean((p1 + p2) ** 2)
                 + mu * np.mean((1 - p1 ** 2) + (1 - p2 ** 2)))


def loss_acp_from_scores(p, r) -> float:
    p, r = np.asarray(p, float), np.asarray(r, float)
    return float(np.mean((r - p) ** 2))


# ---------------------------------------------------------------------------
# Batched forward / backward
# ---------------------------------------------------------------------------

@dataclass
class _ForwardCache:
    ids: np.ndarray        # (N, T) int
    mask: np.ndarray       # (N, T) float, 1.0 on real tokens
    lengths: np.ndarray    # (N,)
    enc: np.ndarray        # (N, D')
    p: np.ndarray          # (N,)
    hs: list | None = None  # recurrent: hidden states h_0..h_T, each (N, H)
    emb: np.ndarray | None = None  # recurrent: (N, T, D) gathered embeddings


def _pad_ids(model: PolarityModel, events: Sequence[Event]) -> tuple[np.ndarray, np.ndarray]:
    ids_lists = [model.vocab.ids(ev.tokens) or [0] for ev in events]
    max_len = max(len(ids) for ids in ids_lists)
    ids = np.zeros((len(events), max_len), dtype=np.int64)
    mask = np.zeros((len(events), max_len))
    for i, row in enumerate(ids_lists):
        ids[i, :len(row)] = row
        mask[i, :len(row)] = 1.0
    return ids, mask


def forward_events(model: PolarityModel, events: Sequence[Event]) -> _ForwardCache:
    """Batched prediction; keeps the activations needed by the backward pass."""
    ids, mask = _pad_ids(model, events)
    lengths = mask.sum(axis=1)
    if model.encoder_kind == MEAN:
        emb = model.embeddings[ids]                       # (N, T, D)
        enc = (emb * mask[:, :, None]).sum(axis=1) / lengths[:, None]
        hs = None
        emb_cache = None
    else:
        emb = model.embeddings[ids]
        n, t, _ = emb.shape
        h = np.zeros((n, model.encoded_dim))
        hs = [h]
        for step in range(t):
            h_new = np.tanh(hs[-1] @ model.w_h.T + emb[:, step, :] @ model.w_x.T)
            m = mask[:, step:step + 1]
            hs.append(m * h_new + (1.0 - m) * hs[-1])
        enc = hs[-1]
        emb_cache = emb
    p = np.tanh(enc @ model.linear_w + model.linear_b[0])
    return _ForwardCache(ids=ids, mask=mask, lengths=lengths, enc=enc, p=p,
                         hs=hs, emb=emb_cache)


def zero_gradients(model: PolarityModel) -> dict[str, np.ndarray]:
    """A gradient structure mirroring every model parameter."""
    return {name: np.zeros_like(arr) for name, arr in model.params().items()}


def backward_events(
    model: PolarityModel,
    cache: _ForwardCache,
    dp: np.ndarray,
    grads: dict[str, np.ndarray],
) -> None:
    """Accumulate d(loss)/d(params) given d(loss)/d(score) for each event."""
    ds = dp * (1.0 - cache.p ** 2)                        # through the output tanh
    grads["linear_b"][0] += ds.sum()
    grads["linear_w"] += cache.enc.T @ ds
    denc = np.outer(ds, model.linear_w)                   # (N, D')
    if model.encoder_kind == MEAN:
        contrib = denc / cache.lengths[:, None]           # (N, D)
        token_mask = cache.mask.astype(bool)
        flat_ids = cache.ids[token_mask]
        flat_rows = np.repeat(contrib, cache.lengths.astype(int), axis=0)
        np.add.at(grads["embeddings"], flat_ids, flat_rows)
        return
    dh = denc
    for step in reversed(range(cache.ids.shape[1])):
        m = cache.mask[:, step:step + 1]
        h_t = cache.hs[step + 1]
        da = dh * m * (1.0 - h_t ** 2)                    # masked rows pass through
        grads["w_h"] += da.T @ cache.hs[step]
        grads["w_x"] += da.T @ cache.emb[:, step, :]
        d_emb = da @ model.w_x                            # (N, D)
        active = m[:, 0].astype(bool)
        np.add.at(grads["embeddings"], cache.ids[active, step], d_emb[active])
        dh = da @ model.w_h + dh * (1.0 - m)


# ---------------------------------------------------------------------------
# Model-level losses
# ---------------------------------------------------------------------------

def _require(batch, name: str) -> None:
    if not batch:
        raise EmptyBatchError(f"{name} batch is empty")


def _pair_scores(model: PolarityModel, pairs: Sequence[EventPair]):
    cache = forward_events(
        model, [p.former for p in pairs] + [p.latter for p in pairs]
    )
    n = len(pairs)
    return cache, cache.p[:n], cache.p[n:]


def loss_al(model: PolarityModel, al_batch: ALBatch, lambda_al: float) -> float:
    _require(al_batch, "AL")
    cache, p_former, p_latter = _pair_scores(model, [pair for pair, _, _ in al_batch])
    r_former = np.array([rf for _, rf, _ in al_batch], float)
    r_latter = np.array([rl for _, _, rl in al_batch], float)
    return loss_al_from_scores(p_former, p_latter, r_former, r_latter, lambda_al)


def loss_ca(model: PolarityModel, ca_batch: PairBatch, lambda_ca: float, mu: float) -> float:
    _require(ca_batch, "CA")
    _, p1, p2 = _pair_scores(model, ca_batch)
    return loss_ca_from_scores(p1, p2, lambda_ca, mu)


def loss_co(model: PolarityModel, co_batch: PairBatch, lambda_co: float, mu: float) -> float:
    _require(co_batch, "CO")
    _, p1, p2 = _pair_scores(model, co_batch)
    return loss_co_from_scores(p1, p2, lambda_co, mu)


def loss_acp(model: PolarityModel, sup_batch: SupBatch) -> float:
    _require(sup_batch, "supervised")
    cache = forward_events(model, [ev.event for ev in sup_batch])
    r = np.array([ev.score for ev in sup_batch], float)
    return loss_acp_from_scores(cache.p, r)


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------

@dataclass
class BatchSet:
    """One batch per loss; leave a field None when that loss is inactive."""

    al: ALBatch | None = None
    ca: PairBatch | None = None
    co: PairBatch | None = None
    acp: SupBatch | None = None


def compute_gradients(
    model: PolarityModel,
    batches: BatchSet,
    config: TrainConfig,
) -> tuple[dict[str, np.ndarray], LossReport]:
    """Analytic gradient of the summed active losses, plus their values.

    Each loss contributes d(loss)/d(score) per event; those flow through one
    shared backward pass per batch.  Only losses active under the configured
    objective and supplied with a non-empty batch participate.
    """
    grads = zero_gradients(model)
    report = LossReport()
    active = config.objective.active_losses
    touched = False

    if "al" in active and batches.al:
        batch = batches.al
        n = len(batch)
        cache, p_f, p_l = _pair_scores(model, [pair for pair, _, _ in batch])
        r_f = np.array([rf for _, rf, _ in batch], float)
        r_l = np.array([rl for _, _, rl in batch], float)
        report.l_al = loss_al_from_scores(p_f, p_l, r_f, r_l, config.lambda_al)
        dp = np.concatenate([
            -2.0 * config.lambda_al * (r_f - p_f) / n,
            -2.0 * (r_l - p_l) / n,
        ])
        backward_events(model, cache, dp, grads)
        touched = True

    if "ca" in active and batches.ca:
        n = len(batches.ca)
        cache, p1, p2 = _pair_scores(model, batches.ca)
        report.l_ca = loss_ca_from_scores(p1, p2, config.lambda_ca, config.mu)
        diff = p1 - p2
        dp = np.concatenate([
            (2.0 * config.lambda_ca * diff - 2.0 * config.mu * p1) / n,
            (-2.0 * config.lambda_ca * diff - 2.0 * config.mu * p2) / n,
        ])
        backward_events(model, cache, dp, grads)
        touched = True

    if "co" in active and batches.co:
        n = len(batches.co)
        cache, p1, p2 = _pair_scores(model, batches.co)
        report.l_co = loss_co_from_scores(p1, p2, config.lambda_co, config.mu)
        both = p1 + p2
        dp = np.concatenate([
            (2.0 * config.lambda_co * both - 2.0 * config.mu * p1) / n,
            (2.0 * config.lambda_co * both - 2.0 * config.mu * p2) / n,
        ])
        backward_events(model, cache, dp, grads)
        touched = True

    if "acp" in active and batches.acp:
        batch = batches.acp
        n = len(batch)
        cache = forward_events(model, [ev.event for ev in batch])
        r = np.array([ev.score for ev in batch], float)
        report.l_acp = loss_acp_from_scores(cache.p, r)
        dp = -2.0 * (r - cache.p) / n
        backward_events(model, cache, dp, grads)
        touched = True

    if not touched:
        raise NoActiveDataError(
            f"objective {config.objective.value!r} received no non-empty batch"
        )
    report.total = report.l_al + report.l_ca + report.l_co + report.l_acp
    return grads, report


def momentum_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    velocity: dict[str, np.ndarray],
    learning_rate: float,
    momentum: float,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """velocity <- momentum*velocity - lr*grads; params <- params + velocity."""
    if set(params) != set(grads) or set(params) != set(velocity):
        raise ShapeMismatchError(
            f"parameter keys {sorted(params)} do not match gradients "
            f"{sorted(grads)} / velocity {sorted(velocity)}"
        )
    for name, arr in params.items():
        if grads[name].shape != arr.shape or velocity[name].shape != arr.shape:
            raise ShapeMismatchError(f"shape mismatch on {name!r}")
        velocity[name] *= momentum
        velocity[name] -= learning_rate * grads[name]
        arr += velocity[name]
    return params, velocity


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

class _BatchCycler:
    """Deterministic batches that recycle forever, reshuffling each pass."""

    def __init__(self, items: Sequence, batch_size: int, rng: np.random.Generator) -> None:
        self.items = list(items)
        self.batch_size = batch_size
        self.rng = rng
        self._order: list[int] = []
        self._pos = 0

    @property
    def batches_per_pass(self) -> int:
        return max(1, -(-len(self.items) // self.batch_size))

    def next_batch(self) -> list:
        if self._pos >= len(self._order):
            self._order = list(self.rng.permutation(len(self.items)))
            self._pos = 0
        chunk = self._order[self._pos:self._pos + self.batch_size]
        self._pos += len(chunk)
        return [self.items[i] for i in chunk]


def _dev_accuracy(model: PolarityModel, dev: Sequence[LabeledEvent]) -> float:
    cache = forward_events(model, [ev.event for ev in dev])
    predicted = np.where(cache.p > 0.0, 1, -1)
    refs = np.array([ev.score for ev in dev])
    return float((predicted == refs).mean())


def train(
    model: PolarityModel,
    bundle: DatasetBundle,
    dev: Sequence[LabeledEvent],
    config: TrainConfig,
) -> tuple[PolarityModel, list[dict]]:
    """Momentum-SGD training with per-epoch dev snapshots.

    One optimizer step consumes one batch from every dataset active under
    the objective and applies the summed gradient; datasets recycle
    independently with a seeded reshuffle per pass.  An epoch is as many
    steps as the largest active dataset needs for a full pass.  Returns the
    snapshot with the highest dev accuracy (earliest epoch on ties) and a
    per-epoch log of loss components and dev accuracy.
    """
    if not dev:
        raise MissingDatasetError("dev set is empty")
    active = config.objective.active_losses
    datasets = {"al": bundle.al, "ca": bundle.ca, "co": bundle.co,
                "acp": bundle.supervised}
    for name in sorted(active):
        if not datasets[name]:
            raise MissingDatasetError(
                f"objective {config.objective.value!r} needs a non-empty {name!r} dataset"
            )

    rng = np.random.default_rng(config.rng_seed)
    cyclers = {
        name: _BatchCycler(datasets[name], config.batch_size,
                           np.random.default_rng(rng.integers(2 ** 63)))
        for name in sorted(active)
    }
    steps_per_epoch = max(c.batches_per_pass for c in cyclers.values())

    velocity = {name: np.zeros_like(arr) for name, arr in model.params().items()}
    best_params: dict[str, np.ndarray] | None = None
    best_accuracy = -1.0
    best_epoch = -1
    history: list[dict] = []

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        sums = LossReport()
        for _ in range(steps_per_epoch):
            batches = BatchSet(**{name: cyclers[name].next_batch() for name in cyclers})
            grads, report = compute_gradients(model, batches, config)
            momentum_step(model.params(), grads, velocity,
                          config.learning_rate, config.momentum)
            sums.l_al += report.l_al
            sums.l_ca += report.l_ca
            sums.l_co += report.l_co
            sums.l_acp += report.l_acp
            sums.total += report.total
        if not model.all_finite():
            raise TrainingDivergedError(
                f"non-finite parameters after epoch {epoch}; "
                f"lower the learning rate (currently {config.learning_rate})"
            )
        accuracy = _dev_accuracy(model, dev)
        record = {
            "epoch": epoch,
            **{k: v / steps_per_epoch for k, v in sums.as_dict().items()},
            "dev_accuracy": accuracy,
            "wall_ms": (time.perf_counter() - t0) * 1000.0,
        }
        history.append(record)
        log.info("epoch %d: total=%.6f dev_accuracy=%.4f", epoch,
                 record["total"], accuracy)
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params().items()}

    best_model = model.copy()
    for name, arr in best_model.params().items():
        arr[...] = best_params[name]
    log.info("best snapshot: epoch %d, dev_accuracy=%.4f", best_epoch, best_accuracy)
    return best_model, history
