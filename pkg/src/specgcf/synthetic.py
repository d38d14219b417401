"""Seeded synthetic interaction generators used by tests and the bundled toy data."""
from importlib import resources

import numpy as np

from .dataset import InteractionDataset, load_interactions

# parameters of the bundled ``data/toy.inter.tsv``
TOY_PARAMS = dict(num_users=40, num_items=40, blocks=2, p_in=0.5, p_out=0.03, seed=2024)


def two_community(num_users=40, num_items=40, blocks=2, p_in=0.5, p_out=0.03, seed=0):
    """Block-structured bipartite interactions.

    Users and items are cut into ``blocks`` contiguous groups. A pair inside
    the same group interacts with probability ``p_in``, otherwise ``p_out``.
    Every user is guaranteed at least two interactions.
    """
    rng = np.random.default_rng(seed)
    ublock = np.arange(num_users) * blocks // num_users
    iblock = np.arange(num_items) * blocks // num_items
    same = ublock[:, None] == iblock[None, :]
    prob = np.where(same, p_in, p_out)
    hits = rng.random((num_users, num_items)) < prob
    for u in np.flatnonzero(hits.sum(axis=1) < 2):
        own = np.flatnonzero(same[u])
        hits[u, rng.choice(own, size=min(2, len(own)), replace=False)] = True
    users, items = np.nonzero(hits)
    return InteractionDataset(num_users, num_items, users, items)


def toy_dataset_path():
    return resources.files("specgcf") / "data" / "toy.inter.tsv"


def load_toy():
    """The bundled 40 x 40 two-block dataset."""
    with resources.as_file(toy_dataset_path()) as path:
        return load_interactions(path)
