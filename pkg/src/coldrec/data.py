"""Rating-dataset ingestion, normalization, base/eval splitting, and
the user↔item role swap for the new-item problem.

A dataset is a flat bag of (user, item, rating) triples with dense user ids:
loaders drop users that contribute no ratings and re-index the survivors,
while the item axis keeps its catalog width (unrated items stay as empty
columns — a recommender knows its catalog, not which items got ratings).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ProblemKind",
    "RatingDataset",
    "CorpusSplit",
    "load_movielens",
    "load_csv_triples",
    "save_csv_triples",
    "normalize",
    "split_base_eval",
    "orient",
    "subsample",
    "filter_min_ratings",
    "dataset_from_dense",
]

logger = logging.getLogger(__name__)


class ProblemKind(enum.Enum):
    """Which cold-start direction an experiment runs in."""

    NEW_USER = "new-user"
    NEW_ITEM = "new-item"


@dataclass(frozen=True, eq=False)
class RatingDataset:
    """Sparse ratings as parallel arrays, plus the grid dimensions.

    Invariants: users/items/ratings have equal length, ids lie inside
    [0, n_users) × [0, n_items), (user, item) pairs are unique, and every
    user id in range occurs at least once (loader-enforced; `orient` is the
    one exception, see its docstring).
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    n_users: int
    n_items: int
    scale_max: float

    def __post_init__(self):
        if not (len(self.users) == len(self.items) == len(self.ratings)):
            raise ValueError("users/items/ratings arrays must have equal length")
        if self.scale_max <= 0:
            raise ValueError(f"scale_max must be positive, got {self.scale_max}")

    @property
    def n_ratings(self) -> int:
        return len(self.ratings)

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense (matrix, observed-mask) pair, missing entries zero."""
        dense = np.zeros((self.n_users, self.n_items))
        mask = np.zeros((self.n_users, self.n_items), dtype=bool)
        dense[self.users, self.items] = self.ratings
        mask[self.users, self.items] = True
        return dense, mask

    def sorted_triples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Triples in canonical (user, item) order."""
        order = np.lexsort((self.items, self.users))
        return self.users[order], self.items[order], self.ratings[order]

    def same_as(self, other: "RatingDataset") -> bool:
        """Equality as a set of triples plus dimensions and scale."""
        if (self.n_users, self.n_items, self.n_ratings, self.scale_max) != (
            other.n_users,
            other.n_items,
            other.n_ratings,
            other.scale_max,
        ):
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.sorted_triples(), other.sorted_triples()))


@dataclass(frozen=True)
class CorpusSplit:
    """Row-disjoint base/evaluation partition of a dataset.

    `base` holds the sampled context rows (still sparse, pre-imputation),
    `evaluation` the complement used for replay; both keep the full item
    axis.  `base_user_ids` records which original rows were sampled.
    """

    base: RatingDataset
    evaluation: RatingDataset
    base_user_ids: np.ndarray


def _build_dataset(
    raw_users: list[int],
    raw_items: list[int],
    ratings: list[float],
    n_items: int,
    scale_max: float,
    source: str,
) -> RatingDataset:
    """Deduplicate (keep last), compact users, and sort canonically."""
    if not ratings:
        raise ValueError(f"{source}: no ratings")
    last = {}
    for u, i, r in zip(raw_users, raw_items, ratings):
        last[(u, i)] = r
    dupes = len(ratings) - len(last)
    if dupes:
        logger.warning("%s: %d duplicate (user, item) pairs, kept the last occurrence", source, dupes)
    pairs = np.array(sorted(last), dtype=np.int64)
    vals = np.array([last[(u, i)] for u, i in pairs], dtype=np.float64)
    uniq_users, dense_users = np.unique(pairs[:, 0], return_inverse=True)
    return RatingDataset(
        users=dense_users.astype(np.int64),
        items=pairs[:, 1],
        ratings=vals,
        n_users=len(uniq_users),
        n_items=n_items,
        scale_max=scale_max,
    )


def load_movielens(path, scale_max: float = 5.0) -> RatingDataset:
    """Load a MovieLens ``UserID::MovieID::Rating::Timestamp`` file.

    Ids are 1-based in this format; items are shifted to 0-based and keep
    the catalog width (n_items = largest id), users are re-indexed densely.
    Timestamps are discarded.  Duplicate (user, item) pairs keep the last
    occurrence and are counted in a warning.
    """
    users, items, ratings = [], [], []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("::")
            if len(parts) != 4:
                raise ValueError(f"{path}, line {lineno}: expected UserID::MovieID::Rating::Timestamp")
            try:
                u, i, r = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ValueError(f"{path}, line {lineno}: {exc}") from None
            if u < 1 or i < 1:
                raise ValueError(f"{path}, line {lineno}: MovieLens ids are 1-based, got user={u} item={i}")
            if not 0.0 <= r <= scale_max:
                raise ValueError(f"{path}, line {lineno}: rating {r} outside [0, {scale_max}]")
            users.append(u)
            items.append(i - 1)
            ratings.append(r)
    n_items = max(items) + 1 if items else 0
    return _build_dataset(users, items, ratings, n_items, scale_max, str(path))


def load_csv_triples(path, scale_max: float) -> RatingDataset:
    """Load a ``user,item,rating`` file with 0-based ids.

    A header line is tolerated (detected by a non-numeric first field).
    Ratings outside [0, scale_max] are rejected with the offending line
    number.  Users are re-indexed densely; the item axis spans [0, max id].
    """
    users, items, ratings = [], [], []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}, line {lineno}: expected user,item,rating")
            if lineno == 1:
                try:
                    int(parts[0])
                except ValueError:
                    continue  # header row
            try:
                u, i, r = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ValueError(f"{path}, line {lineno}: {exc}") from None
            if u < 0 or i < 0:
                raise ValueError(f"{path}, line {lineno}: ids must be nonnegative, got user={u} item={i}")
            if not 0.0 <= r <= scale_max:
                raise ValueError(f"{path}, line {lineno}: rating {r} outside [0, {scale_max}]")
            users.append(u)
            items.append(i)
            ratings.append(r)
    n_items = max(items) + 1 if items else 0
    return _build_dataset(users, items, ratings, n_items, scale_max, str(path))


def save_csv_triples(ds: RatingDataset, path) -> None:
    """Write the canonical save format: ``user,item,rating``, 0-based ids,
    one triple per line in (user, item) order."""
    users, items, ratings = ds.sorted_triples()
    with open(path, "w", encoding="utf-8") as fh:
        for u, i, r in zip(users, items, ratings):
            fh.write(f"{u},{i},{float(r)!r}\n")


def normalize(ds: RatingDataset) -> RatingDataset:
    """Divide every rating by the scale ceiling, mapping onto [0, 1]."""
    return replace(ds, ratings=ds.ratings / ds.scale_max, scale_max=1.0)


def _restrict_users(ds: RatingDataset, user_ids: np.ndarray) -> RatingDataset:
    """Dataset over the given (sorted) original user ids, re-indexed densely."""
    keep = np.isin(ds.users, user_ids)
    return replace(
        ds,
        users=np.searchsorted(user_ids, ds.users[keep]).astype(np.int64),
        items=ds.items[keep],
        ratings=ds.ratings[keep],
        n_users=len(user_ids),
    )


def split_base_eval(ds: RatingDataset, k: int, seed=None) -> CorpusSplit:
    """Sample k user rows uniformly without replacement as the base matrix;
    the complement becomes the evaluation set.

    Deterministic for a fixed seed.  Both halves keep the full item axis so
    they index the same arms.
    """
    if not 1 <= k < ds.n_users:
        raise ValueError(f"base size k must be in [1, n_users), got k={k} with {ds.n_users} users")
    rng = np.random.default_rng(seed)
    base_ids = np.sort(rng.choice(ds.n_users, size=k, replace=False))
    eval_ids = np.setdiff1d(np.arange(ds.n_users), base_ids, assume_unique=True)
    return CorpusSplit(
        base=_restrict_users(ds, base_ids),
        evaluation=_restrict_users(ds, eval_ids),
        base_user_ids=base_ids,
    )


def orient(ds: RatingDataset, kind: ProblemKind) -> RatingDataset:
    """Identity for the new-user problem; swap user/item roles for new-item.

    The swap is a pure transpose (applying it twice returns the original
    dataset exactly), so a transposed dataset may contain "users" without
    ratings — the original unrated catalog items.  Run
    :func:`filter_min_ratings` afterwards if those rows should be dropped.
    """
    if kind is ProblemKind.NEW_USER:
        return ds
    return replace(ds, users=ds.items, items=ds.users, n_users=ds.n_items, n_items=ds.n_users)


def subsample(ds: RatingDataset, max_users=None, max_items=None, seed=None) -> RatingDataset:
    """Uniform id subsample, used to cut public corpora down to desk scale.

    Sampled items keep their slot even if no rating survives (the catalog
    shrinks to exactly max_items); sampled users that end up rating-less are
    dropped, matching the loader's elimination rule.
    """
    rng = np.random.default_rng(seed)
    users, items, ratings = ds.users, ds.items, ds.ratings
    n_items = ds.n_items
    if max_items is not None and max_items < ds.n_items:
        item_ids = np.sort(rng.choice(ds.n_items, size=max_items, replace=False))
        keep = np.isin(items, item_ids)
        users, ratings = users[keep], ratings[keep]
        items = np.searchsorted(item_ids, items[keep]).astype(np.int64)
        n_items = max_items
    if max_users is not None and max_users < ds.n_users:
        user_ids = rng.choice(ds.n_users, size=max_users, replace=False)
        keep = np.isin(users, np.sort(user_ids))
        users, items, ratings = users[keep], items[keep], ratings[keep]
    if len(ratings) == 0:
        raise ValueError("subsample removed every rating")
    uniq, dense = np.unique(users, return_inverse=True)
    return replace(
        ds,
        users=dense.astype(np.int64),
        items=items,
        ratings=ratings,
        n_users=len(uniq),
        n_items=n_items,
    )


def filter_min_ratings(ds: RatingDataset, min_ratings: int = 1) -> RatingDataset:
    """Drop users with fewer than min_ratings ratings and compact ids."""
    counts = np.bincount(ds.users, minlength=ds.n_users)
    keep_ids = np.flatnonzero(counts >= min_ratings)
    if len(keep_ids) == ds.n_users:
        return ds
    if len(keep_ids) == 0:
        raise ValueError(f"no user has {min_ratings} or more ratings")
    return _restrict_users(ds, keep_ids)


def dataset_from_dense(matrix, mask=None, scale_max: float = 1.0) -> RatingDataset:
    """Build a dataset from a dense rating grid.

    With no mask every cell is an observed rating; rows must be fully
    missing-free users in that case.  Inverse of :meth:`RatingDataset.to_dense`.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if mask is None:
        mask = np.ones(matrix.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    users, items = np.nonzero(mask)
    if len(users) == 0:
        raise ValueError("no observed entries")
    if not mask.any(axis=1).all():
        raise ValueError("every user row needs at least one observed rating")
    return RatingDataset(
        users=users.astype(np.int64),
        items=items.astype(np.int64),
        ratings=matrix[mask].astype(np.float64),
        n_users=matrix.shape[0],
        n_items=matrix.shape[1],
        scale_max=scale_max,
    )
