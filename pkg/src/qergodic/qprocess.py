"""The chain conditioned to survive forever.

Conditioning on surviving up to a horizon and letting the horizon grow
produces a time-inhomogeneous Markov chain on the dominant class: each
transition reweights the original kernel by the ratio of right Perron
values at the target and source lifted states, divided by the decay rate.
With a period-``gamma`` boundary the kernel family is ``gamma``-periodic,
so one slice per phase describes it completely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import AbsorbedChainProblem, lift_chain
from .errors import NullEventError, ValidationError
from .spectral import IrreducibleClass, decompose_classes

__all__ = [
    "PhaseSlice",
    "QProcessKernel",
    "build_qprocess",
    "build_qprocess_dominant",
    "finite_horizon_qlaw",
]


@dataclass(frozen=True, eq=False)
class PhaseSlice:
    """Transition matrix of the conditioned chain arriving at one phase.

    Rows are the class states alive at the previous phase, columns those
    alive at ``phase``; each row sums to 1.
    """

    phase: int
    row_states: tuple[str, ...]
    col_states: tuple[str, ...]
    matrix: np.ndarray

    def row_index(self, label: str) -> int | None:
        try:
            return self.row_states.index(label)
        except ValueError:
            return None

    def col_index(self, label: str) -> int | None:
        try:
            return self.col_states.index(label)
        except ValueError:
            return None


@dataclass(frozen=True, eq=False)
class QProcessKernel:
    """Periodic family of row-stochastic kernels of the conditioned chain.

    ``slices[n % gamma]`` governs the step arriving at time n.
    ``row_sum_deviation`` records the largest deviation from 1 observed
    before the exact renormalization of each slice.
    """

    gamma: int
    rho: float
    class_states: tuple[tuple[str, int], ...]
    slices: tuple[PhaseSlice, ...]
    row_sum_deviation: float

    def slice_for(self, n: int) -> PhaseSlice:
        return self.slices[n % self.gamma]

    def cylinder_probability(self, x: str, cylinder) -> float:
        """Probability that the conditioned chain follows the given states.

        ``cylinder[k-1]`` is the required state at time k; the product of
        kernel entries along the way, zero as soon as a transition leaves
        the class.
        """
        prob = 1.0
        current = x
        for step, target in enumerate(cylinder, start=1):
            sl = self.slice_for(step)
            i = sl.row_index(current)
            j = sl.col_index(target)
            if i is None or j is None:
                return 0.0
            prob *= float(sl.matrix[i, j])
            if prob == 0.0:
                return 0.0
            current = target
        return prob

    def homogeneous_kernel(self, base_phase: int = 0) -> tuple[tuple[str, ...], np.ndarray]:
        """One-period product of the slices: a stationary gamma-step kernel."""
        first = self.slice_for(base_phase + 1)
        states = first.row_states
        acc = np.eye(len(states))
        for step in range(1, self.gamma + 1):
            acc = acc @ self.slice_for(base_phase + step).matrix
        return states, acc


def _class_of_lifted_state(decomposition, lifted, key) -> IrreducibleClass:
    try:
        pos = lifted.survivor_index[key]
    except KeyError:
        raise ValidationError(
            f"state {key[0]!r} is absorbed at phase {key[1]}; the conditioned "
            "chain is undefined from it"
        ) from None
    return decomposition.classes[int(decomposition.class_of[pos])]


def _kernel_for_class(problem, lifted, cls) -> QProcessKernel:
    if cls.rho <= 0.0:
        raise NullEventError(
            "the class has decay rate 0: survival beyond finitely many steps "
            "is impossible, so there is no conditioned chain"
        )
    gamma = lifted.gamma
    space = problem.space
    P = problem.kernel.normalized()

    states = tuple(lifted.survivors[s] for s in cls.states)
    xi_by_state = {
        lifted.survivors[s]: cls.xi[i] for i, s in enumerate(cls.states)
    }
    by_phase: dict[int, list[str]] = {k: [] for k in range(gamma)}
    for x, k in states:
        by_phase[k].append(x)
    for k in range(gamma):
        by_phase[k].sort(key=space.index)

    deviation = 0.0
    slices = []
    for phase in range(gamma):
        prev = (phase - 1) % gamma
        rows = tuple(by_phase[prev])
        cols = tuple(by_phase[phase])
        matrix = np.zeros((len(rows), len(cols)))
        for i, y in enumerate(rows):
            xi_y = xi_by_state[(y, prev)]
            for j, z in enumerate(cols):
                matrix[i, j] = (
                    xi_by_state[(z, phase)]
                    * P[space.index(y), space.index(z)]
                    / (cls.rho * xi_y)
                )
        sums = matrix.sum(axis=1)
        deviation = max(deviation, float(np.max(np.abs(sums - 1.0))))
        matrix = np.clip(matrix, 0.0, None)
        matrix /= matrix.sum(axis=1)[:, None]
        slices.append(PhaseSlice(phase, rows, cols, matrix))

    return QProcessKernel(
        gamma=gamma,
        rho=float(cls.rho),
        class_states=states,
        slices=tuple(slices),
        row_sum_deviation=deviation,
    )


def build_qprocess(problem: AbsorbedChainProblem, x: str) -> QProcessKernel:
    """Kernel of the chain started at ``x`` and conditioned to live forever.

    ``x`` must survive phase 0; the kernel lives on the communicating
    class of ``(x, 0)`` in the lifted chain and every row sums to 1 by
    the Perron identity of the class (deviations beyond round-off are
    reported on the result before exact renormalization).
    """
    lifted = lift_chain(problem)
    decomposition = decompose_classes(lifted.survivor_matrix)
    cls = _class_of_lifted_state(decomposition, lifted, (x, 0))
    return _kernel_for_class(problem, lifted, cls)


def build_qprocess_dominant(problem: AbsorbedChainProblem) -> QProcessKernel:
    """Kernel on the dominant class selected by the problem's initial law."""
    from .qed import select_dominant

    lifted = lift_chain(problem)
    decomposition = decompose_classes(lifted.survivor_matrix)
    selection = select_dominant(decomposition, lifted.initial_vector)
    cls = selection.selected(decomposition)
    return _kernel_for_class(problem, lifted, cls)


def finite_horizon_qlaw(
    problem: AbsorbedChainProblem, x: str, cylinder, m: int
) -> float:
    """Exact probability of a state cylinder conditioned on a far horizon.

    Computes ``P_x(X_1 = c_1, ..., X_n = c_n | alive at m)`` through
    lifted matrix powers; as the horizon m grows this converges to the
    conditioned-forever cylinder probability.
    """
    cylinder = list(cylinder)
    n = len(cylinder)
    if m < n:
        raise ValueError("horizon must be at least the cylinder length")
    space = problem.space
    for label in cylinder:
        space.index(label)
    lifted = lift_chain(problem)
    gamma = lifted.gamma
    if (x, 0) not in lifted.survivor_index:
        raise ValidationError(f"state {x!r} is absorbed at phase 0")

    P = problem.kernel.normalized()
    prefix = 1.0
    current = x
    alive = True
    for step, target in enumerate(cylinder, start=1):
        if (target, step % gamma) not in lifted.survivor_index:
            alive = False
            break
        prefix *= float(P[space.index(current), space.index(target)])
        current = target
    if not alive or prefix == 0.0:
        return 0.0

    # Survival tail vectors with a shared scale ledger so the ratio of the
    # entries at horizons m-n and m is exact.
    Q = lifted.survivor_matrix
    u = np.ones(Q.shape[0])
    log_scale = 0.0
    tail_value = None
    tail_log = 0.0
    for j in range(1, m + 1):
        u = Q @ u
        peak = float(u.max())
        if peak <= 0.0:
            raise NullEventError(f"no state survives {j} steps")
        u /= peak
        log_scale += np.log(peak)
        if j == m - n:
            tail_value = float(u[lifted.survivor_index[(current, n % gamma)]])
            tail_log = log_scale
    if m - n == 0:
        tail_value = 1.0
        tail_log = 0.0
    denom = float(u[lifted.survivor_index[(x, 0)]])
    if denom <= 0.0 or tail_value is None:
        raise NullEventError(
            f"survival to horizon {m} from {x!r} has probability 0"
        )
    return prefix * tail_value / denom * float(np.exp(tail_log - log_scale))
