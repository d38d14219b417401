"""Interaction logs: loading, splitting, and BPR batch sampling."""
from __future__ import annotations

import json
import logging
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .seeding import rng_stream

logger = logging.getLogger(__name__)

SPLIT_ROLES = ("train", "valid", "test")


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionDataset:
    """Implicit-feedback (user, item) pairs over a dense id space.

    ``user_ids[u]`` / ``item_ids[i]`` give the raw id behind each dense index
    when the data came from a file.
    """

    num_users: int
    num_items: int
    users: np.ndarray
    items: np.ndarray
    role: str | None = None
    user_ids: np.ndarray | None = field(default=None, repr=False)
    item_ids: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        users = np.ascontiguousarray(self.users, dtype=np.int64)
        items = np.ascontiguousarray(self.items, dtype=np.int64)
        if users.shape != items.shape or users.ndim != 1:
            raise ValueError("users and items must be 1-D arrays of equal length")
        if len(users):
            if users.min() < 0 or users.max() >= self.num_users:
                raise ValueError("user index out of range")
            if items.min() < 0 or items.max() >= self.num_items:
                raise ValueError("item index out of range")
        if self.role is not None and self.role not in SPLIT_ROLES:
            raise ValueError(f"unknown split role {self.role!r}")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "items", items)
        if len(np.unique(self.pair_keys)) != len(users):
            raise ValueError("duplicate (user, item) pairs")

    def __len__(self):
        return len(self.users)

    @property
    def pair_keys(self) -> np.ndarray:
        return self.users * self.num_items + self.items

    @cached_property
    def sorted_keys(self) -> np.ndarray:
        return np.sort(self.pair_keys)

    @cached_property
    def _neighbor_index(self):
        order = np.lexsort((self.items, self.users))
        indptr = np.zeros(self.num_users + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.users, minlength=self.num_users), out=indptr[1:])
        return indptr, self.items[order]

    def neighbors(self, u: int) -> np.ndarray:
        """Sorted item indices of user ``u``."""
        indptr, items = self._neighbor_index
        return items[indptr[u]:indptr[u + 1]]

    def user_degrees(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.num_users)

    def item_degrees(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.num_items)

    def contains(self, users, items) -> np.ndarray:
        """Vectorised membership test for (user, item) pairs."""
        keys = np.asarray(users, dtype=np.int64) * self.num_items + np.asarray(items, dtype=np.int64)
        sk = self.sorted_keys
        if len(sk) == 0:
            return np.zeros(keys.shape, dtype=bool)
        pos = np.minimum(np.searchsorted(sk, keys), len(sk) - 1)
        return sk[pos] == keys

    def subset(self, mask_or_index, role=None) -> InteractionDataset:
        return replace(self, users=self.users[mask_or_index], items=self.items[mask_or_index], role=role)

    def encode_user(self, raw) -> int:
        return int(_lookup(self.user_ids, raw))

    def encode_item(self, raw) -> int:
        return int(_lookup(self.item_ids, raw))

    def decode_user(self, u: int):
        return self.user_ids[u] if self.user_ids is not None else u

    def decode_item(self, i: int):
        return self.item_ids[i] if self.item_ids is not None else i


def _lookup(vocab, raw):
    if vocab is None:
        return raw
    pos = np.searchsorted(vocab, raw)
    if pos >= len(vocab) or vocab[pos] != raw:
        raise KeyError(raw)
    return pos


@dataclass(frozen=True)
class TrainBatch:
    users: np.ndarray
    pos_items: np.ndarray
    neg_items: np.ndarray
    skipped: int = 0

    @property
    def batch_size(self) -> int:
        return len(self.users)

    @property
    def triples(self) -> np.ndarray:
        return np.stack([self.users, self.pos_items, self.neg_items], axis=1)


_HEADER_NAME = re.compile(r"^(user|uid)(_?id)?$", re.IGNORECASE)


def _is_header(tokens):
    return any(":" in t for t in tokens) or bool(_HEADER_NAME.match(tokens[0]))


def _vocab(tokens):
    uniq = np.unique(np.asarray(tokens, dtype=object).astype(str))
    try:
        as_int = np.array([int(t) for t in uniq], dtype=np.int64)
    except ValueError:
        return uniq
    return np.unique(as_int)


FORMATS = ("pair-tsv", "adjacency")


def _read_raw(path: Path, format: str, raw_users: list, raw_items: list) -> None:
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if format == "adjacency":
                # ``user item item ...``; a user with no items contributes nothing
                raw_users.extend(tokens[:1] * (len(tokens) - 1))
                raw_items.extend(tokens[1:])
                continue
            if lineno == 1 and _is_header(tokens):
                continue
            if len(tokens) != 2:
                raise DatasetFormatError(f"{path}:{lineno}: expected 2 tokens, got {len(tokens)}")
            raw_users.append(tokens[0])
            raw_items.append(tokens[1])


def load_interactions(path, format: str = "pair-tsv") -> InteractionDataset:
    """Read a whitespace/TAB separated ``user item`` file.

    Raw ids (integers or strings) are re-indexed densely in sorted order and
    duplicate pairs are collapsed. A first line whose tokens contain ``:`` or
    whose first token is a column name (``user``, ``user_id``, ``uid``) is
    treated as a header. ``format="adjacency"`` reads ``user item item ...``
    lines instead. ``path`` may be a list of files sharing one id space.
    """
    if format not in FORMATS:
        raise ValueError(f"unsupported format {format!r}; choose from {FORMATS}")
    paths = [Path(p) for p in path] if isinstance(path, (list, tuple)) else [Path(path)]
    path = paths[0] if len(paths) == 1 else ", ".join(map(str, paths))
    raw_users, raw_items = [], []
    for p in paths:
        _read_raw(p, format, raw_users, raw_items)
    if not raw_users:
        raise DatasetFormatError(f"{path}: no interactions")

    user_vocab = _vocab(raw_users)
    item_vocab = _vocab(raw_items)
    cast = (lambda v, toks: np.array(toks, dtype=np.int64) if v.dtype.kind == "i" else np.array(toks))
    users = np.searchsorted(user_vocab, cast(user_vocab, raw_users))
    items = np.searchsorted(item_vocab, cast(item_vocab, raw_items))

    keys = users * len(item_vocab) + items
    _, first = np.unique(keys, return_index=True)
    first.sort()
    if len(first) < len(keys):
        logger.info("%s: collapsed %d duplicate pairs", path, len(keys) - len(first))
    ds = InteractionDataset(
        num_users=len(user_vocab),
        num_items=len(item_vocab),
        users=users[first],
        items=items[first],
        user_ids=user_vocab,
        item_ids=item_vocab,
    )
    logger.info("%s: %d users, %d items, %d interactions", path, ds.num_users, ds.num_items, len(ds))
    return ds


def split_dataset(ds: InteractionDataset, train_frac: float = 0.8, valid_frac: float = 0.1, seed: int = 0):
    """Per-user train sampling, then a global valid/test cut of the remainder.

    Each user with at least two interactions contributes
    ``ceil(train_frac * n_u)`` random interactions to train. The leftovers are
    pooled, shuffled, and the first ``round(valid_frac * len(ds))`` go to
    valid; the rest form test.
    """
    if not (0.0 < train_frac and 0.0 <= valid_frac and train_frac + valid_frac < 1.0):
        raise ValueError(f"need 0 < train_frac and train_frac + valid_frac < 1, got {train_frac}, {valid_frac}")
    rng = rng_stream(seed, "split")
    order = np.lexsort((ds.items, ds.users))
    counts = np.bincount(ds.users, minlength=ds.num_users)
    starts = np.concatenate([[0], np.cumsum(counts)])

    train_idx, rest_idx, small = [], [], []
    for u in range(ds.num_users):
        rows = order[starts[u]:starts[u + 1]]
        n = len(rows)
        if n == 0:
            continue
        if n < 2:
            small.append(u)
            train_idx.append(rows)
            continue
        rows = rows[rng.permutation(n)]
        n_train = min(n, math.ceil(train_frac * n - 1e-9))
        train_idx.append(rows[:n_train])
        rest_idx.append(rows[n_train:])
    if small:
        warnings.warn(f"{len(small)} users have fewer than 2 interactions; all assigned to train")

    train_idx = np.sort(np.concatenate(train_idx)) if train_idx else np.empty(0, np.int64)
    rest = np.concatenate(rest_idx) if rest_idx else np.empty(0, np.int64)
    rest = rest[rng.permutation(len(rest))]
    n_valid = min(len(rest), int(round(valid_frac * len(ds))))
    valid_idx = np.sort(rest[:n_valid])
    test_idx = np.sort(rest[n_valid:])
    return (
        ds.subset(train_idx, role="train"),
        ds.subset(valid_idx, role="valid"),
        ds.subset(test_idx, role="test"),
    )


def sample_batch(train: InteractionDataset, batch_size: int, rng: np.random.Generator,
                 max_attempts: int = 100) -> TrainBatch:
    """Draw positives uniformly over train pairs and one uniform negative each.

    Negatives are redrawn until they fall outside the user's train items.
    Triples still colliding after ``max_attempts`` rounds (users who have
    interacted with every item) are dropped and counted in ``skipped``.
    """
    if len(train) == 0:
        raise ValueError("cannot sample from an empty train split")
    idx = rng.integers(0, len(train), size=batch_size)
    users = train.users[idx]
    pos = train.items[idx]
    neg = rng.integers(0, train.num_items, size=batch_size)
    bad = np.flatnonzero(train.contains(users, neg))
    for _ in range(max_attempts):
        if len(bad) == 0:
            break
        neg[bad] = rng.integers(0, train.num_items, size=len(bad))
        bad = bad[train.contains(users[bad], neg[bad])]
    skipped = len(bad)
    if skipped:
        warnings.warn(f"dropped {skipped} triples whose users have no negative items")
        keep = np.ones(batch_size, dtype=bool)
        keep[bad] = False
        users, pos, neg = users[keep], pos[keep], neg[keep]
    return TrainBatch(users=users, pos_items=pos, neg_items=neg, skipped=skipped)


def write_pairs(ds: InteractionDataset, path) -> None:
    with Path(path).open("w") as fh:
        fh.write("user\titem\n")
        for u, i in zip(ds.users.tolist(), ds.items.tolist()):
            fh.write(f"{u}\t{i}\n")


def save_split_dir(out_dir, train, valid, test) -> None:
    """Write ``train.tsv``, ``valid.tsv``, ``test.tsv`` (dense indices) plus id maps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for part in (train, valid, test):
        write_pairs(part, out / f"{part.role}.tsv")
    meta = {"num_users": train.num_users, "num_items": train.num_items,
            "counts": {p.role: len(p) for p in (train, valid, test)}}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    for name, vocab in (("users", train.user_ids), ("items", train.item_ids)):
        if vocab is not None:
            with (out / f"{name}.tsv").open("w") as fh:
                fh.write("index\traw_id\n")
                for k, raw in enumerate(vocab.tolist()):
                    fh.write(f"{k}\t{raw}\n")


def _read_index_pairs(path):
    users, items = [], []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or (lineno == 1 and _is_header(tokens)):
                continue
            if len(tokens) != 2:
                raise DatasetFormatError(f"{path}:{lineno}: expected 2 tokens, got {len(tokens)}")
            try:
                users.append(int(tokens[0]))
                items.append(int(tokens[1]))
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}: expected integer indices") from None
    return np.array(users, dtype=np.int64), np.array(items, dtype=np.int64)


def load_split_dir(data_dir):
    """Inverse of :func:`save_split_dir`; returns ``(train, valid, test)``."""
    data_dir = Path(data_dir)
    meta_path = data_dir / "meta.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{meta_path} not found (expected output of `specgcf split`)")
    meta = json.loads(meta_path.read_text())
    parts = []
    for role in SPLIT_ROLES:
        users, items = _read_index_pairs(data_dir / f"{role}.tsv")
        parts.append(InteractionDataset(meta["num_users"], meta["num_items"], users, items, role=role))
    return tuple(parts)
