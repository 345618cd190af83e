"""The four ways of densifying a sparse base matrix, side by side.

A small base split with one never-rated item shows how each strategy treats
observed entries, missing entries, and empty columns differently.
"""

import numpy as np

from coldrec import fill
from coldrec.data import dataset_from_dense
from coldrec.impute import AlsWr, ImputedSvd, ItemAverage, Zero

rng = np.random.default_rng(3)

# A low-rank "true" base with 55% of entries hidden; column 4 never rated.
true_base = np.clip(np.outer(rng.uniform(0.4, 1, 8), rng.uniform(0.3, 1, 6)), 0, 1)
mask = rng.random((8, 6)) < 0.45
mask[np.arange(8), rng.integers(4, size=8)] = True
mask[:, 4] = False
base = dataset_from_dense(true_base, mask)


def show(label, X):
    print(f"\n{label}")
    for i, row in enumerate(X):
        cells = " ".join(f"{v:.2f}" + ("*" if mask[i, j] else " ") for j, v in enumerate(row))
        print("  " + cells)


print("(* marks an observed rating; everything else was filled in)")
show("zero fill — missing means 'probably not liked'", fill(base, Zero()).X)
show("item average — missing means 'typical for this item'", fill(base, ItemAverage()).X)
show("truncated SVD of the mean-filled matrix (rank 2)", fill(base, ImputedSvd(rank=2)).X)
show("masked ALS-WR reconstruction (rank 2)", fill(base, AlsWr(rank=2, lam=0.05, iters=15), seed=0).X)

print("\nReconstruction error against the hidden truth (missing cells only):")
for label, method in [
    ("zero", Zero()),
    ("average", ItemAverage()),
    ("svd", ImputedSvd(rank=2)),
    ("alswr", AlsWr(rank=2, lam=0.05, iters=15)),
]:
    X = fill(base, method, seed=0).X
    err = np.sqrt(np.mean((X[~mask] - true_base[~mask]) ** 2))
    print(f"  {label:<8} rmse {err:.4f}")
