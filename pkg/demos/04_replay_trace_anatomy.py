"""Every column of a replay trace, explained on a dataset small enough to
follow by hand.

Three evaluation users, four arms, a few held-out ratings: the printout
shows how the best-known surrogate shrinks as good arms get consumed, and
how recommending an unrated arm reveals the zero fill.
"""

import numpy as np

from coldrec import run_replay, write_trace_csv
from coldrec.data import dataset_from_dense
from coldrec.policies import RandomPolicy

ratings = np.array(
    [
        [0.9, 0.0, 0.3, 0.0],
        [0.0, 0.6, 0.0, 0.2],
        [0.5, 0.5, 0.0, 0.0],
    ]
)
known = ratings > 0
evaluation = dataset_from_dense(ratings, known)

print("held-out ratings (. = unknown, revealed as 0):")
for row, flags in zip(ratings, known):
    print("  " + " ".join(f"{v:.1f}" if f else " . " for v, f in zip(row, flags)))

trace = run_replay(RandomPolicy(4, seed=5), evaluation, T=12, seed=2)

print(f"\n{'t':>2} {'user':>4} {'arm':>3} {'revealed':>8} {'best':>5} {'increment':>9} {'cumulative':>10}")
for i in range(trace.steps):
    print(
        f"{trace.t[i]:>2} {trace.user[i]:>4} {trace.arm[i]:>3} "
        f"{trace.revealed[i]:>8.2f} {trace.best[i]:>5.2f} "
        f"{trace.increment[i]:>9.2f} {trace.cumulative[i]:>10.2f}"
    )
if trace.exhausted:
    print(f"stopped early: every (user, arm) pair was revealed after {trace.steps} steps")

write_trace_csv(trace, "replay_trace.csv")
print("\nsame rows written to replay_trace.csv "
      "(header: t,user,arm,revealed,best,increment,cumulative)")
