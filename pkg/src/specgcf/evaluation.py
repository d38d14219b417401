"""Full-ranking top-K evaluation (Recall@K, NDCG@K) and a popularity baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_KS = (10, 20, 50)


@dataclass
class MetricsReport:
    ks: tuple
    num_evaluated_users: int
    metrics: dict = field(default_factory=dict)

    def recall(self, k):
        return self.metrics[k]["recall"]

    def ndcg(self, k):
        return self.metrics[k]["ndcg"]

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "num_evaluated_users": self.num_evaluated_users,
            "metrics": {f"@{k}": v for k, v in self.metrics.items()},
        }


def user_item_blocks(final: np.ndarray, num_users: int):
    return final[:num_users], final[num_users:]


def score_all_items(final: np.ndarray, num_users: int, u: int, masked_items=None) -> np.ndarray:
    """Inner-product scores of user ``u`` against every item; masked items get -inf."""
    users, items = user_item_blocks(final, num_users)
    scores = items @ users[u]
    if masked_items is not None and len(masked_items):
        scores[np.asarray(masked_items)] = -np.inf
    return scores


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best finite scores, descending, ties by ascending index."""
    n = scores.shape[0]
    k = min(k, n)
    if k <= 0:
        return np.empty(0, dtype=np.int64)
    thresh = np.partition(scores, n - k)[n - k]
    cand = np.flatnonzero(scores >= thresh)
    cand = cand[np.lexsort((cand, -scores[cand]))][:k]
    return cand[np.isfinite(scores[cand])]


def recall_at_k(ranked, truth, k: int) -> float:
    truth = set(int(t) for t in truth)
    if not truth:
        raise ValueError("empty ground truth")
    hits = sum(1 for i in list(ranked)[:k] if int(i) in truth)
    return hits / len(truth)


def ndcg_at_k(ranked, truth, k: int) -> float:
    truth = set(int(t) for t in truth)
    if not truth:
        raise ValueError("empty ground truth")
    dcg = sum(1.0 / math.log2(p + 2) for p, i in enumerate(list(ranked)[:k]) if int(i) in truth)
    idcg = sum(1.0 / math.log2(p + 2) for p in range(min(k, len(truth))))
    return dcg / idcg


def _grouped(split):
    """Map user -> sorted item array for a split (or list of splits)."""
    if split is None:
        return {}
    splits = split if isinstance(split, (list, tuple)) else [split]
    users = np.concatenate([s.users for s in splits]) if splits else np.empty(0, np.int64)
    items = np.concatenate([s.items for s in splits]) if splits else np.empty(0, np.int64)
    order = np.lexsort((items, users))
    users, items = users[order], items[order]
    uniq, starts = np.unique(users, return_index=True)
    bounds = np.append(starts, len(users))
    return {int(u): items[bounds[j]:bounds[j + 1]] for j, u in enumerate(uniq)}


def _evaluate_scores(score_block, eval_split, mask_splits, ks, block_size=1024) -> MetricsReport:
    ks = tuple(sorted(int(k) for k in ks))
    truth_by_user = _grouped(eval_split)
    mask_by_user = _grouped(list(mask_splits) if mask_splits else [])
    users = np.array(sorted(truth_by_user), dtype=np.int64)
    sums = {k: [0.0, 0.0] for k in ks}
    evaluated = 0
    kmax = ks[-1] if ks else 0
    for start in range(0, len(users), block_size):
        batch = users[start:start + block_size]
        scores = score_block(batch)
        for row, u in enumerate(batch.tolist()):
            s = scores[row]
            masked = mask_by_user.get(u)
            if masked is not None:
                s[masked] = -np.inf
            truth = truth_by_user[u]
            if masked is not None:
                truth = np.setdiff1d(truth, masked)
            if len(truth) == 0:
                continue
            ranked = top_k(s, kmax)
            evaluated += 1
            for k in ks:
                sums[k][0] += recall_at_k(ranked, truth, k)
                sums[k][1] += ndcg_at_k(ranked, truth, k)
    report = MetricsReport(ks=ks, num_evaluated_users=evaluated)
    if evaluated:
        report.metrics = {k: {"recall": r / evaluated, "ndcg": n / evaluated} for k, (r, n) in sums.items()}
    return report


def evaluate(final: np.ndarray, num_users: int, eval_split, mask_splits=(), ks=DEFAULT_KS,
             block_size=1024) -> MetricsReport:
    """Average Recall@K / NDCG@K over users that have items in ``eval_split``.

    Items of ``mask_splits`` are excluded from each user's ranking. Use
    ``mask_splits=[train]`` for validation and ``[train, valid]`` for test.
    """
    user_emb, item_emb = user_item_blocks(final, num_users)

    def score_block(users):
        return user_emb[users] @ item_emb.T

    return _evaluate_scores(score_block, eval_split, mask_splits, ks, block_size)


def popularity_baseline(train) -> np.ndarray:
    """Items by descending train count, ties by ascending index."""
    counts = train.item_degrees()
    return np.lexsort((np.arange(len(counts)), -counts))


def evaluate_popularity(train, eval_split, mask_splits=(), ks=DEFAULT_KS) -> MetricsReport:
    counts = train.item_degrees().astype(np.float64)

    def score_block(users):
        return np.broadcast_to(counts, (len(users), len(counts))).copy()

    return _evaluate_scores(score_block, eval_split, mask_splits, ks)
