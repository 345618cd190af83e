"""Why freezing the per-arm design matrix is cheap and safe.

Walks through the two linear-algebra facts the fast contextual policy rests
on: the inverse of I + xxᵀ has a closed form (no factorization at all), and
growing the design matrix only ever shrinks the confidence width, so a
width computed from the frozen matrix is a valid upper bound forever.
"""

import numpy as np

from coldrec import fixed_quadratic_form, psd_order_holds, rank_one_identity_inverse
from coldrec.impute import BaseMatrix
from coldrec.policies import ALinUcbPolicy, LinUcbPolicy

rng = np.random.default_rng(0)

# --- 1. the closed-form inverse -------------------------------------------
x = rng.uniform(size=6)
A = np.eye(6) + np.outer(x, x)
A_inv = rank_one_identity_inverse(x)
print("closed-form inverse residual:", np.abs(A @ A_inv - np.eye(6)).max())

# The quadratic form xᵀA⁻¹x collapses to a scalar function of ‖x‖².
s = x @ x
print("quadratic form:", fixed_quadratic_form(x), "== ‖x‖²/(1+‖x‖²) =", s / (1 + s))

# --- 2. more data never widens the interval -------------------------------
# After t observations of the same context, the design matrix is t·xxᵀ + I.
# Its inverse is dominated (in the PSD order) by the frozen single-shot one.
for t in (2, 10, 1000):
    grown_inv = np.linalg.inv(t * np.outer(x, x) + np.eye(6))
    print(f"t={t:>4}: frozen width still an upper bound ->",
          psd_order_holds(grown_inv, A_inv, 1e-12))

# --- 3. what the two policies actually compute ----------------------------
X = BaseMatrix(rng.uniform(size=(6, 4)))
frozen = ALinUcbPolicy(X, alpha=1.0)
growing = LinUcbPolicy(X, alpha=1.0)

print("\narm 0 widths as rewards arrive (frozen vs growing):")
print(f"  start: {frozen.widths[0]:.4f} vs {growing.width(0):.4f}")
for step in range(1, 6):
    frozen.update(0, 0.7)
    growing.update(0, 0.7)
    print(f"  after {step} update(s): {frozen.widths[0]:.4f} vs {growing.width(0):.4f}")

print("\nThe frozen policy never touches a matrix after construction; the")
print("growing baseline re-inverts a dense k×k design on every re-score.")
