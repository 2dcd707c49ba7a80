"""Shared test chains and independent brute-force oracles.

The oracles here deliberately avoid the library's computational paths:
conditional laws and cylinder probabilities come from pruned enumeration
of full trajectories, survival probabilities from lifted matrix powers
done inline.  Tests compare library output against these.
"""

from __future__ import annotations

import numpy as np

from qergodic import (
    AbsorbedChainProblem,
    Distribution,
    MovingBoundary,
    StateSpace,
    TransitionKernel,
    fixed_walk,
    lift_chain,
    moving_walk,
    validate_problem,
)


def k2_walk(p=0.5, start="1"):
    return fixed_walk(p, 2, initial=start)


def k5_walk(p=0.5, start="1"):
    return fixed_walk(p, 5, initial=start)


def n3_walk(p=0.5, start="3"):
    return moving_walk(p, 3, initial=start)


def swap_with_killing():
    """Two states exchanging deterministically up to a 10% leak to a trap."""
    labels = ("a", "b", "trap")
    P = np.array(
        [
            [0.0, 0.9, 0.1],
            [0.9, 0.0, 0.1],
            [0.0, 0.0, 1.0],
        ]
    )
    return AbsorbedChainProblem(
        StateSpace(labels),
        TransitionKernel(P),
        MovingBoundary(1, (frozenset({"trap"}),)),
        Distribution.uniform(["a", "b"]),
    )


def three_cycle():
    """Deterministic 3-cycle with uneven per-step survival (0.9, 0.8, 0.7).

    Survival probabilities have a single path, so the decay prefactor can
    be checked exactly; the uneven leak makes the cyclic-class masses of
    the left Perron vector unequal, which pins down phase conventions.
    """
    labels = ("a", "b", "c", "trap")
    P = np.array(
        [
            [0.0, 0.9, 0.0, 0.1],
            [0.0, 0.0, 0.8, 0.2],
            [0.7, 0.0, 0.0, 0.3],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    return AbsorbedChainProblem(
        StateSpace(labels),
        TransitionKernel(P),
        MovingBoundary(1, (frozenset({"trap"}),)),
        Distribution.point_mass("a"),
    )


def symmetric_slow_chain(eps=0.002):
    """Uniformly mixing 3-state core with rare leaks, 2-periodic boundary.

    The core states are exchangeable and, conditioned on survival, the
    walk sits in the core at every time before the horizon, so the
    conditioned time average of any core indicator equals 1/3 exactly at
    every horizon.  Absorption is slow (rate 2*eps per step), which makes
    large surviving samples affordable.
    """
    labels = ("a", "b", "c", "d", "e")
    P = np.zeros((5, 5))
    for i in range(3):
        P[i, :3] = (1.0 - 2.0 * eps) / 3.0
        P[i, 3] = eps
        P[i, 4] = eps
    P[3, 3] = 1.0
    P[4, 4] = 1.0
    return AbsorbedChainProblem(
        StateSpace(labels),
        TransitionKernel(P),
        MovingBoundary(2, (frozenset({"d"}), frozenset({"e"}))),
        Distribution.uniform(["a", "b", "c"]),
    )


def two_copies_tied():
    """Two disconnected copies of the same two-state loop: a perfect tie."""
    labels = ("a1", "b1", "a2", "b2", "trap")
    P = np.zeros((5, 5))
    for a, b in ((0, 1), (2, 3)):
        P[a, b] = 0.5
        P[a, 4] = 0.5
        P[b, a] = 0.5
        P[b, 4] = 0.5
    P[4, 4] = 1.0
    return AbsorbedChainProblem(
        StateSpace(labels),
        TransitionKernel(P),
        MovingBoundary(1, (frozenset({"trap"}),)),
        Distribution({"a1": 0.5, "a2": 0.5}),
    )


def random_problem(rng, n_states=None, gamma=None) -> AbsorbedChainProblem:
    """A random valid problem with surviving mass for at least 2 periods."""
    while True:
        k = int(n_states or rng.integers(2, 6))
        g = int(gamma or rng.integers(2, 4))
        labels = tuple(f"s{i}" for i in range(k))
        P = rng.dirichlet(np.full(k, float(rng.uniform(0.3, 2.0))), size=k)
        sets = []
        for _ in range(g):
            kill = [x for x in labels if rng.random() < 0.35]
            if len(kill) >= k:
                kill = kill[: k - 1]
            sets.append(frozenset(kill))
        if all(not s for s in sets):
            continue
        space = StateSpace(labels)
        boundary = MovingBoundary(g, tuple(sets))
        survivors0 = boundary.survival_set(0, space)
        problem = AbsorbedChainProblem(
            space,
            TransitionKernel(P),
            boundary,
            Distribution.uniform(survivors0),
        )
        if validate_problem(problem):
            continue
        lifted = lift_chain(problem, validate=False)
        u = np.ones(len(lifted.survivors))
        for _ in range(2 * g + 2):
            u = lifted.survivor_matrix @ u
        if float(lifted.normalized_initial() @ u) <= 1e-9:
            continue
        return problem


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def survival_paths(problem: AbsorbedChainProblem, n: int):
    """Yield every surviving trajectory (index tuple, probability).

    Pruned depth-first enumeration over the kernel support; independent
    of the lifted-matrix machinery.
    """
    space = problem.space
    P = problem.kernel.normalized()
    gamma = problem.gamma
    killed = [
        frozenset(space.index(x) for x in problem.boundary.killing_set(k))
        for k in range(gamma)
    ]
    init = problem.initial.to_array(space)

    def rec(path, pr, t):
        if t == n:
            yield tuple(path), pr
            return
        x = path[-1]
        for y in range(space.size):
            q = P[x, y]
            if q > 0.0 and y not in killed[(t + 1) % gamma]:
                path.append(y)
                yield from rec(path, pr * q, t + 1)
                path.pop()

    for x0 in range(space.size):
        if init[x0] > 0.0 and x0 not in killed[0]:
            yield from rec([x0], init[x0], 0)


def conditional_law_brute(problem: AbsorbedChainProblem, n: int) -> dict[str, float]:
    """Conditioned law at time n from full path enumeration."""
    mass: dict[int, float] = {}
    total = 0.0
    for path, pr in survival_paths(problem, n):
        mass[path[-1]] = mass.get(path[-1], 0.0) + pr
        total += pr
    return {problem.space.labels[i]: m / total for i, m in mass.items()}


def survival_probability_exact(problem: AbsorbedChainProblem, n: int) -> float:
    """P(alive at n) from lifted matrix powers, inline."""
    lifted = lift_chain(problem, validate=False)
    u = np.ones(len(lifted.survivors))
    for _ in range(n):
        u = lifted.survivor_matrix @ u
    return float(lifted.normalized_initial() @ u)


def survival_probability_from_state(
    problem: AbsorbedChainProblem, label: str, phase: int, n: int
) -> float:
    lifted = lift_chain(problem, validate=False)
    u = np.ones(len(lifted.survivors))
    for _ in range(n):
        u = lifted.survivor_matrix @ u
    return float(u[lifted.survivor_index[(label, phase)]])
