"""Absorbed Markov chains with periodically moving killing boundaries.

The data model is deliberately small: a finite state space with string
labels, a row-stochastic transition kernel, a periodic family of killing
sets (one per phase) and an initial law supported on the phase-0
survivors.  Killing is by position in time: the walk dies the first time
it sits inside the killing set of the current phase.

Attaching the phase (time modulo the period ``gamma``) to every state
produces the *lifted* chain, whose killing set no longer moves.  All
spectral analysis downstream runs on the lifted survivor matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError

__all__ = [
    "ROW_SUM_TOL",
    "ABSORPTION_RADIUS_TOL",
    "StateSpace",
    "TransitionKernel",
    "MovingBoundary",
    "Distribution",
    "AbsorbedChainProblem",
    "LiftedChain",
    "validate_problem",
    "lift_chain",
    "survivor_restriction",
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
    "loads_problem",
    "save_problem",
]

# Rows are renormalized when within this absolute deficit, rejected beyond it.
ROW_SUM_TOL = 1e-12
# Almost-sure absorption requires the lifted survivor spectral radius below 1.
ABSORPTION_RADIUS_TOL = 1e-10


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Ordered finite set of distinct state labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) == 0:
            raise ValidationError("state space must contain at least one state")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("state labels must be distinct")

    @cached_property
    def _index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.labels)}

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValidationError(f"unknown state label {label!r}") from None

    def __contains__(self, label) -> bool:
        return label in self._index


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Row-stochastic transition matrix, rows indexed by source state."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"kernel must be a square matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", _frozen_array(m))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def normalized(self) -> np.ndarray:
        """Rows renormalized exactly, provided each deficit is within tolerance.

        Rows further than ``ROW_SUM_TOL`` from 1 are a data error; callers
        should have rejected the kernel through :func:`validate_problem`
        before doing arithmetic with it.
        """
        sums = self.row_sums()
        if (
            not np.all(np.isfinite(self.matrix))
            or np.any(np.abs(sums - 1.0) > ROW_SUM_TOL)
            or np.any(self.matrix < 0.0)
        ):
            raise ValidationError("kernel is not row-stochastic within tolerance")
        return self.matrix / sums[:, None]


@dataclass(frozen=True)
class MovingBoundary:
    """Periodic family of killing sets ``A_0 .. A_{gamma-1}``.

    Phase arithmetic is modulo ``gamma``; the killing set active at time n
    is ``killing_sets[n % gamma]``.
    """

    gamma: int
    killing_sets: tuple[frozenset[str], ...]

    def __post_init__(self):
        sets = tuple(frozenset(s) for s in self.killing_sets)
        object.__setattr__(self, "killing_sets", sets)
        if self.gamma < 1:
            raise ValidationError("period gamma must be a positive integer")
        if len(sets) != self.gamma:
            raise ValidationError(
                f"expected {self.gamma} killing sets, got {len(sets)}"
            )

    def killing_set(self, phase: int) -> frozenset[str]:
        return self.killing_sets[phase % self.gamma]

    def survival_set(self, phase: int, space: StateSpace) -> tuple[str, ...]:
        killed = self.killing_set(phase)
        return tuple(x for x in space.labels if x not in killed)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability weights over a labelled state set."""

    weights: dict[str, float]

    def __post_init__(self):
        object.__setattr__(
            self, "weights", {k: float(v) for k, v in dict(self.weights).items()}
        )

    @classmethod
    def point_mass(cls, label: str) -> "Distribution":
        return cls({label: 1.0})

    @classmethod
    def uniform(cls, labels: Iterable[str]) -> "Distribution":
        labels = list(labels)
        return cls({x: 1.0 / len(labels) for x in labels})

    @classmethod
    def from_array(cls, space: StateSpace, vec: np.ndarray) -> "Distribution":
        vec = np.asarray(vec, dtype=float)
        return cls({x: float(v) for x, v in zip(space.labels, vec) if v != 0.0})

    def to_array(self, space: StateSpace) -> np.ndarray:
        vec = np.zeros(space.size)
        for label, w in self.weights.items():
            vec[space.index(label)] = w
        return vec

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def support(self) -> frozenset[str]:
        return frozenset(x for x, w in self.weights.items() if w > 0.0)

    def normalized(self) -> "Distribution":
        t = self.total()
        if t <= 0.0:
            raise ValidationError("cannot normalize a distribution with no mass")
        return Distribution({x: w / t for x, w in self.weights.items()})

    def restricted(self, labels: Iterable[str]) -> "Distribution":
        keep = set(labels)
        return Distribution({x: w for x, w in self.weights.items() if x in keep})

    def tv_distance(self, other: "Distribution") -> float:
        keys = set(self.weights) | set(other.weights)
        return 0.5 * sum(
            abs(self.weights.get(k, 0.0) - other.weights.get(k, 0.0)) for k in keys
        )


@dataclass(frozen=True, eq=False)
class AbsorbedChainProblem:
    """A chain, its moving boundary and the initial law.

    Valid problems additionally satisfy: the initial law is supported on
    the phase-0 survival set, and absorption is almost sure from every
    survivor (the lifted survivor matrix has spectral radius below 1).
    Run :func:`validate_problem` to obtain a report of violations.
    """

    space: StateSpace
    kernel: TransitionKernel
    boundary: MovingBoundary
    initial: Distribution

    def __post_init__(self):
        if self.kernel.size != self.space.size:
            raise ValidationError(
                f"kernel size {self.kernel.size} does not match state space "
                f"size {self.space.size}"
            )

    @property
    def gamma(self) -> int:
        return self.boundary.gamma

    def survivors(self, phase: int) -> tuple[str, ...]:
        return self.boundary.survival_set(phase, self.space)


@dataclass(frozen=True, eq=False)
class LiftedChain:
    """The chain on (state, phase) pairs with a static killing set.

    ``states`` lists the full lifted space in phase-major order;
    ``survivors`` is its restriction to states outside the lifted killing
    set, in the same order.  ``survivor_matrix`` is the substochastic
    one-step matrix on survivors; ``initial_vector`` carries the problem's
    initial mass placed at phase 0 (unnormalized).
    """

    problem: AbsorbedChainProblem
    gamma: int
    states: tuple[tuple[str, int], ...]
    boundary_states: frozenset[tuple[str, int]]
    survivors: tuple[tuple[str, int], ...]
    matrix: np.ndarray
    survivor_matrix: np.ndarray
    initial_vector: np.ndarray

    @cached_property
    def survivor_index(self) -> dict[tuple[str, int], int]:
        return {s: i for i, s in enumerate(self.survivors)}

    def survivor_positions(self, phase: int) -> list[int]:
        return [i for i, (_, k) in enumerate(self.survivors) if k == phase % self.gamma]

    def normalized_initial(self) -> np.ndarray:
        total = self.initial_vector.sum()
        if total <= 0.0:
            raise ValidationError("initial law places no mass on phase-0 survivors")
        return self.initial_vector / total


def validate_problem(problem: AbsorbedChainProblem) -> list[str]:
    """Check every invariant of a problem and report the violations.

    Returns an empty list exactly when the problem is valid.  The checks
    that need arithmetic on the kernel (almost-sure absorption) run only
    when the structural checks pass.
    """
    violations: list[str] = []
    space = problem.space
    matrix = problem.kernel.matrix

    if not np.all(np.isfinite(matrix)):
        violations.append("kernel contains non-finite entries")
    if np.any(matrix < 0.0) or np.any(matrix > 1.0 + ROW_SUM_TOL):
        bad = np.argwhere((matrix < 0.0) | (matrix > 1.0 + ROW_SUM_TOL))
        i, j = bad[0]
        violations.append(
            f"kernel entry out of [0, 1] at ({space.labels[i]!r}, "
            f"{space.labels[j]!r}): {matrix[i, j]!r}"
        )
    sums = problem.kernel.row_sums()
    for i, s in enumerate(sums):
        if abs(s - 1.0) > ROW_SUM_TOL:
            violations.append(
                f"kernel row not stochastic: row {i} ({space.labels[i]!r}) "
                f"sums to {s!r}"
            )

    for k, killed in enumerate(problem.boundary.killing_sets):
        unknown = sorted(x for x in killed if x not in space)
        if unknown:
            violations.append(
                f"killing set at phase {k} contains unknown states {unknown}"
            )
        elif len(killed) >= space.size:
            violations.append(f"empty survival set at phase {k}")

    weights = problem.initial.weights
    unknown = sorted(x for x in weights if x not in space)
    if unknown:
        violations.append(f"initial distribution names unknown states {unknown}")
    if not all(np.isfinite(w) for w in weights.values()):
        violations.append("initial distribution has non-finite weights")
    negative = sorted(x for x, w in weights.items() if w < 0.0)
    if negative:
        violations.append(f"initial distribution has negative weights at {negative}")
    total = problem.initial.total()
    if abs(total - 1.0) > ROW_SUM_TOL:
        violations.append(f"initial distribution does not sum to 1 (sum = {total!r})")
    if not unknown:
        killed0 = problem.boundary.killing_set(0)
        on_boundary = sorted(
            x for x, w in weights.items() if w > 0.0 and x in killed0
        )
        if on_boundary:
            violations.append(
                "initial distribution not supported on the phase-0 survival "
                f"set (mass on {on_boundary})"
            )

    if not violations:
        from .spectral import spectral_radius

        lifted = lift_chain(problem, validate=False)
        if lifted.survivor_matrix.size:
            radius = spectral_radius(lifted.survivor_matrix)
            if radius >= 1.0 - ABSORPTION_RADIUS_TOL:
                violations.append(
                    "absorption is not almost sure: lifted survivor matrix has "
                    f"spectral radius {radius!r}"
                )
    return violations


def lift_chain(problem: AbsorbedChainProblem, validate: bool = True) -> LiftedChain:
    """Build the lifted chain on (state, phase) pairs.

    The lifted kernel moves ``(x, k)`` to ``(y, k+1 mod gamma)`` with the
    original probability ``P(x, y)``; the lifted killing set collects all
    ``(x, k)`` with ``x`` killed at phase ``k`` and no longer moves.
    """
    if validate:
        violations = validate_problem(problem)
        if violations:
            raise ValidationError(
                "invalid problem: " + "; ".join(violations), violations
            )

    space = problem.space
    gamma = problem.gamma
    labels = space.labels
    size = space.size
    P = problem.kernel.normalized()

    states = tuple((x, k) for k in range(gamma) for x in labels)
    boundary_states = frozenset(
        (x, k) for k in range(gamma) for x in problem.boundary.killing_sets[k]
        if x in space
    )
    survivors = tuple(s for s in states if s not in boundary_states)

    full = np.zeros((size * gamma, size * gamma))
    for k in range(gamma):
        nxt = (k + 1) % gamma
        full[k * size:(k + 1) * size, nxt * size:(nxt + 1) * size] = P

    n_surv = len(survivors)
    Q = np.zeros((n_surv, n_surv))
    by_phase: dict[int, list[int]] = {}
    for i, (_, k) in enumerate(survivors):
        by_phase.setdefault(k, []).append(i)
    for k in range(gamma):
        rows = by_phase.get(k, [])
        cols = by_phase.get((k + 1) % gamma, [])
        if rows and cols:
            src = [space.index(survivors[i][0]) for i in rows]
            dst = [space.index(survivors[j][0]) for j in cols]
            Q[np.ix_(rows, cols)] = P[np.ix_(src, dst)]

    initial = np.array(
        [problem.initial.weights.get(x, 0.0) if k == 0 else 0.0 for x, k in survivors]
    )
    return LiftedChain(
        problem=problem,
        gamma=gamma,
        states=states,
        boundary_states=boundary_states,
        survivors=survivors,
        matrix=_frozen_array(full),
        survivor_matrix=_frozen_array(Q),
        initial_vector=_frozen_array(initial),
    )


def survivor_restriction(
    space: StateSpace,
    kernel: TransitionKernel | np.ndarray,
    killing_set: Iterable[str],
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Restrict a kernel to the complement of a killing set.

    Returns the substochastic matrix on survivors together with the
    surviving labels (in state-space order).  Row deficits are the
    one-step killing probabilities.
    """
    killed = frozenset(killing_set)
    unknown = sorted(x for x in killed if x not in space)
    if unknown:
        raise ValidationError(f"killing set contains unknown states {unknown}")
    survivors = tuple(x for x in space.labels if x not in killed)
    if not survivors:
        raise ValidationError("empty survivor set")
    if isinstance(kernel, TransitionKernel):
        P = kernel.normalized()
    else:
        P = np.asarray(kernel, dtype=float)
    idx = [space.index(x) for x in survivors]
    return P[np.ix_(idx, idx)].copy(), survivors


# ---------------------------------------------------------------------------
# Problem-spec files
#
# JSON layout:
#   {"states": [...], "kernel": [[...]], "gamma": g,
#    "killing_sets": [[...], ...], "initial": {label: weight}}
# ---------------------------------------------------------------------------


def _expect(condition: bool, message: str):
    if not condition:
        raise ValidationError(message)


def problem_from_dict(data: Mapping) -> AbsorbedChainProblem:
    """Build a problem from a parsed problem-spec mapping.

    Rejects malformed input with a diagnostic naming the offending field.
    """
    _expect(isinstance(data, Mapping), "problem spec must be a JSON object")
    for key in ("states", "kernel", "gamma", "killing_sets", "initial"):
        _expect(key in data, f"missing field '{key}'")

    states = data["states"]
    _expect(
        isinstance(states, list) and states,
        "field 'states': expected a nonempty list of labels",
    )
    for i, s in enumerate(states):
        _expect(isinstance(s, str), f"field 'states[{i}]': labels must be strings")
    space = StateSpace(tuple(states))

    kernel_rows = data["kernel"]
    _expect(
        isinstance(kernel_rows, list) and len(kernel_rows) == space.size,
        f"field 'kernel': expected {space.size} rows",
    )
    for i, row in enumerate(kernel_rows):
        _expect(
            isinstance(row, list) and len(row) == space.size,
            f"field 'kernel[{i}]': expected {space.size} entries",
        )
        for j, v in enumerate(row):
            _expect(
                isinstance(v, (int, float)) and not isinstance(v, bool),
                f"field 'kernel[{i}][{j}]': expected a number",
            )
    kernel = TransitionKernel(np.array(kernel_rows, dtype=float))

    gamma = data["gamma"]
    _expect(
        isinstance(gamma, int) and not isinstance(gamma, bool) and gamma >= 1,
        "field 'gamma': expected a positive integer",
    )
    killing = data["killing_sets"]
    _expect(
        isinstance(killing, list) and len(killing) == gamma,
        f"field 'killing_sets': expected {gamma} sets",
    )
    sets = []
    for k, entry in enumerate(killing):
        _expect(
            isinstance(entry, list),
            f"field 'killing_sets[{k}]': expected a list of labels",
        )
        for j, s in enumerate(entry):
            _expect(
                isinstance(s, str),
                f"field 'killing_sets[{k}][{j}]': labels must be strings",
            )
            _expect(
                s in space,
                f"field 'killing_sets[{k}][{j}]': unknown state {s!r}",
            )
        sets.append(frozenset(entry))
    boundary = MovingBoundary(gamma, tuple(sets))

    initial = data["initial"]
    _expect(isinstance(initial, Mapping), "field 'initial': expected an object")
    for key, v in initial.items():
        _expect(isinstance(key, str), "field 'initial': keys must be state labels")
        _expect(key in space, f"field 'initial': unknown state {key!r}")
        _expect(
            isinstance(v, (int, float)) and not isinstance(v, bool),
            f"field 'initial[{key!r}]': expected a number",
        )
    return AbsorbedChainProblem(space, kernel, boundary, Distribution(dict(initial)))


def problem_to_dict(problem: AbsorbedChainProblem) -> dict:
    return {
        "states": list(problem.space.labels),
        "kernel": problem.kernel.matrix.tolist(),
        "gamma": problem.gamma,
        "killing_sets": [
            sorted(s, key=problem.space.index) for s in problem.boundary.killing_sets
        ],
        "initial": {k: v for k, v in problem.initial.weights.items() if v != 0.0},
    }


def loads_problem(text: str) -> AbsorbedChainProblem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return problem_from_dict(data)


def load_problem(path) -> AbsorbedChainProblem:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return loads_problem(text)


def save_problem(problem: AbsorbedChainProblem, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2)
        fh.write("\n")
