"""The chain conditioned to survive forever: a periodic kernel family.

Conditioning on surviving to a distant horizon and sending the horizon
to infinity yields a genuine Markov chain with no absorption left in it:
the original kernel reweighted by the right Perron vector of the lifted
chain.  With a period-2 boundary the kernel alternates between two
slices.  The finite-horizon conditioned laws converge to its cylinder
probabilities, and simulated trajectories never touch a killing set.
"""

import numpy as np

from qergodic import (
    build_qprocess,
    finite_horizon_qlaw,
    moving_walk,
    qprocess_closed_form,
    simulate_qprocess,
)

problem = moving_walk(0.3, 3, initial="3")
kernel = build_qprocess(problem, "3")
print("Conditioned-forever kernel of the N=3 moving walk (p=0.3)\n")
print(f"decay rate of the underlying class: rho = {kernel.rho:.10f}")
print(f"row-sum deviation before renormalization: {kernel.row_sum_deviation:.2e}\n")

for sl in kernel.slices:
    print(f"slice arriving at phase {sl.phase}: rows {sl.row_states} -> "
          f"cols {sl.col_states}")
    for i, row in enumerate(sl.matrix):
        entries = ", ".join(f"{v:.6f}" for v in row)
        print(f"   from {sl.row_states[i]}: [{entries}]")
print()

closed = qprocess_closed_form(0.3, 3, "odd")
dev = max(
    float(np.max(np.abs(a.matrix - b.matrix)))
    for a, b in zip(kernel.slices, closed.slices)
)
print(f"entrywise match with the closed-form kernel: {dev:.2e}")
print("note the kernel has no p left in it: conditioning to survive")
print("forever cancels the step bias against the Perron tilt.\n")

print("finite-horizon conditioned cylinder laws approach the kernel's:")
cylinder = ["2", "3"]
limit = kernel.cylinder_probability("3", cylinder)
for m in (4, 10, 20, 50, 200):
    finite = finite_horizon_qlaw(problem, "3", cylinder, m)
    print(f"  horizon m={m:4d}: P(X_1=2, X_2=3 | alive at m) = {finite:.12f}"
          f"   |difference from limit| = {abs(finite - limit):.2e}")
print(f"  kernel cylinder probability: {limit:.12f}\n")

paths = simulate_qprocess(kernel, "3", steps=2000, seed=12, paths=200)
touched = sum(
    1
    for path in paths
    for t, label in enumerate(path)
    if label in problem.boundary.killing_set(t)
)
print(f"simulated {len(paths)} trajectories x 2000 steps: "
      f"{touched} visits to a killing set (expected 0)")
