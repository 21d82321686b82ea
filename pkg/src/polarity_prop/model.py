"""Polarity function: tanh(Linear(Encoder(event))) over a learned vocabulary.

Two encoders share the interface: the default averages the event tokens'
embedding rows, which keeps every gradient hand-derivable; the recurrent
encoder is a single forward tanh recurrence whose final hidden state is the
event representation, so token order can matter (negation needs this).
"""

from __future__ import annotations

import struct
import zlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import PolarityPropError
from .events import Event

UNK_TOKEN = "<unk>"
UNK_ID = 0

MEAN = "mean"
RECURRENT = "recurrent"

_MAGIC = b"POLPROP\n"
_FORMAT_VERSION = 1
_ENCODER_CODES = {MEAN: 0, RECURRENT: 1}
_ENCODER_NAMES = {v: k for k, v in _ENCODER_CODES.items()}


class CheckpointVersionError(PolarityPropError):
    """Not a checkpoint file, or an unsupported format version."""


class CheckpointChecksumError(PolarityPropError):
    """Checkpoint payload does not match its trailing checksum."""


class EmbeddingFormatError(PolarityPropError):
    """A pretrained-embedding text line does not parse."""


@dataclass(frozen=True)
class Vocabulary:
    """Dense token ids with id 0 reserved for unknowns."""

    token_to_id: dict[str, int]
    min_frequency: int = 1

    def __post_init__(self) -> None:
        ids = sorted(self.token_to_id.values())
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("token ids must be dense 1..V-1 (0 is reserved for UNK)")

    def __len__(self) -> int:
        return len(self.token_to_id) + 1

    def id_for(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.id_for(t) for t in tokens]

    def tokens_by_id(self) -> list[str]:
        out = [UNK_TOKEN] * len(self)
        for tok, i in self.token_to_id.items():
            out[i] = tok
        return out


def build_vocabulary(
    events: Iterable[Event],
    min_frequency: int = 1,
    max_size: int | None = None,
) -> Vocabulary:
    """Count tokens over events and keep the most frequent ones.

    Tokens below ``min_frequency`` are dropped, the rest are ranked by
    descending count with lexicographic tie-breaking and truncated at
    ``max_size``; everything else maps to the UNK id.
    """
    counts: Counter[str] = Counter()
    for ev in events:
        counts.update(t for t in ev.tokens if t != UNK_TOKEN)
    ranked = sorted(
        (t for t, c in counts.items() if c >= min_frequency),
        key=lambda t: (-counts[t], t),
    )
    if max_size is not None:
        ranked = ranked[:max_size]
    return Vocabulary({t: i + 1 for i, t in enumerate(ranked)}, min_frequency)


@dataclass
class PolarityModel:
    vocab: Vocabulary
    embeddings: np.ndarray          # (V, D)
    encoder_kind: str               # MEAN or RECURRENT
    linear_w: np.ndarray            # (D',)
    linear_b: np.ndarray            # (1,)
    w_h: np.ndarray | None = None   # (H, H), recurrent only
    w_x: np.ndarray | None = None   # (H, D), recurrent only

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def encoded_dim(self) -> int:
        return self.linear_w.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        """Live views of every parameter array, keyed by name."""
        out = {"embeddings": self.embeddings,
               "linear_w": self.linear_w, "linear_b": self.linear_b}
        if self.encoder_kind == RECURRENT:
            out["w_h"] = self.w_h
            out["w_x"] = self.w_x
        return out

    def copy(self) -> "PolarityModel":
        return PolarityModel(
            vocab=self.vocab,
            embeddings=self.embeddings.copy(),
            encoder_kind=self.encoder_kind,
            linear_w=self.linear_w.copy(),
            linear_b=self.linear_b.copy(),
            w_h=None if self.w_h is None else self.w_h.copy(),
            w_x=None if self.w_x is None else self.w_x.copy(),
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.params().values())


def init_model(
    vocab: Vocabulary,
    dim: int = 64,
    encoder_kind: str = MEAN,
    rng_seed: int = 0,
    init_scale: float = 0.1,
) -> PolarityModel:
    """Uniform [-init_scale, init_scale] weights, zero bias, seeded."""
    if encoder_kind not in (MEAN, RECURRENT):
        raise ValueError(f"unknown encoder kind {encoder_kind!r}")
    rng = np.random.default_rng(rng_seed)
    uniform = lambda *shape: rng.uniform(-init_scale, init_scale, size=shape)
    w_h = w_x = None
    if encoder_kind == RECURRENT:
        w_h = uniform(dim, dim)
        w_x = uniform(dim, dim)
    return PolarityModel(
        vocab=vocab,
        embeddings=uniform(len(vocab), dim),
        encoder_kind=encoder_kind,
        linear_w=uniform(dim),
        linear_b=np.zeros(1),
        w_h=w_h,
        w_x=w_x,
    )


def encode(model: PolarityModel, event: Event) -> np.ndarray:
    """Vector representation of one event.

    Mean encoder: arithmetic mean of the tokens' embedding rows (UNK row for
    out-of-vocabulary tokens).  Recurrent encoder: final hidden state of
    h_t = tanh(W_h h_{t-1} + W_x e_t) run forward once.  An empty token list
    degenerates to the UNK row.
    """
    ids = model.vocab.ids(event.tokens) or [UNK_ID]
    rows = model.embeddings[ids]
    if model.encoder_kind == MEAN:
        return rows.mean(axis=0)
    h = np.zeros(model.encoded_dim)
    for row in rows:
        h = np.tanh(model.w_h @ h + model.w_x @ row)
    return h


def polarity(model: PolarityModel, event: Event) -> float:
    """Polarity score in (-1, 1)."""
    return float(np.tanh(model.linear_w @ encode(model, event) + model.linear_b[0]))


def _pack_array(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def save_checkpoint(model: PolarityModel, path: str | Path) -> None:
    """Versioned binary container; round-trips every parameter bit-exactly.

    Layout: magic, format version, vocabulary block (min_frequency plus
    tokens in id order), dimension header (encoder code, V, D, D'),
    little-endian float64 parameter blocks, trailing CRC32.
    """
    chunks = [_MAGIC, struct.pack("<I", _FORMAT_VERSION)]
    tokens = model.vocab.tokens_by_id()[1:]  # UNK is implicit at id 0
    chunks.append(struct.pack("<II", model.vocab.min_frequency, len(tokens)))
    for tok in tokens:
        raw = tok.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)) + raw)
    chunks.append(struct.pack(
        "<BIII",
        _ENCODER_CODES[model.encoder_kind],
        len(model.vocab), model.dim, model.encoded_dim,
    ))
    chunks.append(_pack_array(model.embeddings))
    if model.encoder_kind == RECURRENT:
        chunks.append(_pack_array(model.w_h))
        chunks.append(_pack_array(model.w_x))
    chunks.append(_pack_array(model.linear_w))
    chunks.append(_pack_array(model.linear_b))
    payload = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


class _Reader:
    def __init__(self, data: bytes, path: Path) -> None:
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointVersionError(f"{self.path}: truncated checkpoint")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, *shape: int) -> np.ndarray:
        n = int(np.prod(shape))
        return np.frombuffer(self.take(n * 8), dtype="<f8").reshape(shape).copy()


def load_checkpoint(path: str | Path) -> PolarityModel:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(_MAGIC) + 8 or data[:len(_MAGIC)] != _MAGIC:
        raise CheckpointVersionError(f"{path}: not a polarity checkpoint")
    payload, (stored_crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != stored_crc:
        raise CheckpointChecksumError(f"{path}: checksum mismatch")
    r = _Reader(payload, path)
    r.take(len(_MAGIC))
    (version,) = r.unpack("<I")
    if version != _FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {version}, expected {_FORMAT_VERSION}"
        )
    min_frequency, n_tokens = r.unpack("<II")
    token_to_id = {}
    for i in range(n_tokens):
        (tok_len,) = r.unpack("<I")
        token_to_id[r.take(tok_len).decode("utf-8")] = i + 1
    encoder_code, v, d, d_enc = r.unpack("<BIII")
    if encoder_code not in _ENCODER_NAMES:
        raise CheckpointVersionError(f"{path}: unknown encoder code {encoder_code}")
    if v != n_tokens + 1:
        raise CheckpointVersionError(f"{path}: vocabulary size mismatch")
    encoder_kind = _ENCODER_NAMES[encoder_code]
    embeddings = r.array(v, d)
    w_h = w_x = None
    if encoder_kind == RECURRENT:
        w_h = r.array(d_enc, d_enc)
        w_x = r.array(d_enc, d)
    linear_w = r.array(d_enc)
    linear_b = r.array(1)
    return PolarityModel(
        vocab=Vocabulary(token_to_id, min_frequency),
        embeddings=embeddings,
        encoder_kind=encoder_kind,
        linear_w=linear_w,
        linear_b=linear_b,
        w_h=w_h,
        w_x=w_x,
    )


def export_text(model: PolarityModel, path: str | Path) -> None:
    """Debug dump: one ``name[index] value`` parameter per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# encoder={model.encoder_kind} V={len(model.vocab)} "
                 f"D={model.dim} D_enc={model.encoded_dim}\n")
        for name, arr in model.params().items():
            flat = arr.reshape(-1)
            for i, val in enumerate(flat):
                fh.write(f"{name}[{i}] {val!r}\n")


def load_text_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Parse ``token v1 v2 ... vD`` lines into an embedding table."""
    table: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            token, values = parts[0], parts[1:]
            if not values:
                raise EmbeddingFormatError(f"{path}:{lineno}: no values for {token!r}")
            try:
                vec = np.array([float(v) for v in values])
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric value") from exc
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, got {len(vec)}"
                )
            table[token] = vec
    return table


def apply_pretrained_embeddings(
    model: PolarityModel, table: dict[str, np.ndarray]
) -> int:
    """Overwrite embedding rows for vocabulary tokens found in the table."""
    n = 0
    for token, vec in table.items():
        idx = model.vocab.token_to_id.get(token)
        if idx is None:
            continue
        if len(vec) != model.dim:
            raise EmbeddingFormatError(
                f"embedding for {token!r} has dim {len(vec)}, model dim is {model.dim}"
            )
        model.embeddings[idx] = vec
        n += 1
    return n
