"""Conditional evolution of laws given survival, and exact oracles.

The one-step map pushes a law through the kernel and conditions on
landing outside the killing set of the target phase.  Composing it
reproduces the law of the chain at time n conditioned to be alive, which
is cross-checked against lifted matrix powers.  The module also builds
the homogeneous chain observed every ``gamma`` steps, detects the limit
cycle of conditioned laws (certifying when no single limit exists), and
provides an exact, eigenvalue-free recursion for conditioned time-average
expectations used as ground truth throughout the test suite.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb

import numpy as np

from .chain import (
    AbsorbedChainProblem,
    Distribution,
    lift_chain,
    survivor_restriction,
)
from .errors import ConvergenceError, NullEventError, ValidationError

__all__ = [
    "ConditionalMap",
    "CollapsedChain",
    "QldCycle",
    "FixedPointSearch",
    "conditional_step",
    "conditional_law",
    "conditional_law_sequence",
    "collapsed_chain",
    "qld_cycle",
    "exact_mean_ratio",
    "mean_ratio_curve",
    "qsd_fixed_point_search",
    "state_function",
    "write_mean_ratio_csv",
    "write_conditional_laws_csv",
]

# Below this ceiling the survival vectors are jointly rescaled; the
# conditioned ratios are scale-invariant so the answers do not change.
_RESCALE_FLOOR = 1e-100


def state_function(problem: AbsorbedChainProblem, f) -> np.ndarray:
    """Coerce a state functional to a vector over the state space.

    Accepts a mapping label -> value (missing labels read 0), a callable
    on labels, or an array in state-space order.
    """
    labels = problem.space.labels
    if callable(f):
        return np.array([float(f(x)) for x in labels])
    if isinstance(f, dict):
        unknown = sorted(k for k in f if k not in problem.space)
        if unknown:
            raise ValidationError(f"state function names unknown states {unknown}")
        return np.array([float(f.get(x, 0.0)) for x in labels])
    arr = np.asarray(f, dtype=float)
    if arr.shape != (len(labels),):
        raise ValidationError(
            f"state function must have one value per state ({len(labels)}), "
            f"got shape {arr.shape}"
        )
    return arr


def _killed_indices(problem: AbsorbedChainProblem, phase: int) -> list[int]:
    return [
        problem.space.index(x)
        for x in problem.boundary.killing_set(phase)
        if x in problem.space
    ]


def _step_vector(problem, P, vec, phase) -> np.ndarray:
    out = vec @ P
    out[_killed_indices(problem, phase)] = 0.0
    total = out.sum()
    if total <= 0.0:
        raise NullEventError(
            f"conditioning on a null event: no mass survives the step into "
            f"phase {phase % problem.gamma}"
        )
    return out / total


def _initial_vector(problem, mu: Distribution | None) -> np.ndarray:
    initial = problem.initial if mu is None else mu
    vec = initial.to_array(problem.space)
    if np.any(vec < 0.0):
        raise ValidationError("law has negative weights")
    vec[_killed_indices(problem, 0)] = 0.0
    total = vec.sum()
    if total <= 0.0:
        raise NullEventError("law places no mass on the phase-0 survival set")
    return vec / total


@dataclass(frozen=True, eq=False)
class ConditionalMap:
    """One conditioned step: push through the kernel, keep phase survivors.

    The map is scale-invariant in its input, and the output is a
    probability law supported on the survival set of ``phase``.
    """

    problem: AbsorbedChainProblem
    phase: int

    @property
    def killing_set(self) -> frozenset[str]:
        return self.problem.boundary.killing_set(self.phase)

    def __call__(self, mu: Distribution) -> Distribution:
        vec = mu.to_array(self.problem.space)
        if np.any(vec < 0.0):
            raise ValidationError("law has negative weights")
        if vec.sum() <= 0.0:
            raise NullEventError("cannot condition a law with no mass")
        P = self.problem.kernel.normalized()
        return Distribution.from_array(
            self.problem.space, _step_vector(self.problem, P, vec, self.phase)
        )


def conditional_step(
    problem: AbsorbedChainProblem, mu: Distribution, phase: int
) -> Distribution:
    """One step of the chain conditioned on surviving into ``phase``."""
    return ConditionalMap(problem, phase)(mu)


def conditional_law(
    problem: AbsorbedChainProblem, n: int, mu: Distribution | None = None
) -> Distribution:
    """Law of the chain at time ``n`` conditioned on survival up to ``n``."""
    return conditional_law_sequence(problem, n, mu)[-1]


def conditional_law_sequence(
    problem: AbsorbedChainProblem, n_max: int, mu: Distribution | None = None
) -> list[Distribution]:
    """Conditioned laws at times ``0 .. n_max``.

    Time 0 is the initial law restricted to the phase-0 survival set and
    renormalized; each later time applies one conditioned step at the
    phase of the landing time.
    """
    if n_max < 0:
        raise ValueError("horizon must be nonnegative")
    P = problem.kernel.normalized()
    vec = _initial_vector(problem, mu)
    laws = [Distribution.from_array(problem.space, vec)]
    for n in range(1, n_max + 1):
        vec = _step_vector(problem, P, vec, n % problem.gamma)
        laws.append(Distribution.from_array(problem.space, vec))
    return laws


@dataclass(frozen=True, eq=False)
class CollapsedChain:
    """The chain observed every ``gamma`` steps from a base phase.

    ``matrix[i, j]`` is the probability of moving from survivor i to
    survivor j over one period while staying alive throughout; the
    missing row mass ``cemetery`` is absorbed.  Conditioned cylinder laws
    of this homogeneous chain coincide with those of the original chain
    along times ``base_phase + k*gamma``.
    """

    base_phase: int
    survivors: tuple[str, ...]
    matrix: np.ndarray
    cemetery: np.ndarray


def collapsed_chain(
    problem: AbsorbedChainProblem, base_phase: int = 0
) -> CollapsedChain:
    """Kernel of the gamma-step chain: one period of masked transitions."""
    space = problem.space
    gamma = problem.gamma
    P = problem.kernel.normalized()
    acc = np.eye(space.size)
    for step in range(1, gamma + 1):
        phase = (base_phase + step) % gamma
        masked = P.copy()
        masked[:, _killed_indices(problem, phase)] = 0.0
        acc = acc @ masked
    survivors = problem.boundary.survival_set(base_phase, space)
    idx = [space.index(x) for x in survivors]
    kernel = acc[np.ix_(idx, idx)].copy()
    return CollapsedChain(
        base_phase=base_phase % gamma,
        survivors=survivors,
        matrix=kernel,
        cemetery=1.0 - kernel.sum(axis=1),
    )


@dataclass(frozen=True, eq=False)
class QldCycle:
    """Limit cycle of the conditioned laws, with convergence diagnostics.

    ``distributions[i]`` is the limit of the conditioned laws along times
    congruent to ``offsets[i]`` modulo the cycle length; the last element
    sits at a multiple of the period.  A single limiting law exists only
    when all cycle elements coincide, which ``qld_exists`` reports.
    """

    distributions: tuple[Distribution, ...]
    offsets: tuple[int, ...]
    period: int
    iterations: int
    consecutive_tv: tuple[float, ...]
    max_pairwise_tv: float
    qld_exists: bool

    @property
    def verdict(self) -> str:
        if self.qld_exists:
            return "conditioned laws converge to a single limit"
        return "no quasi-limiting distribution: conditioned laws cycle"


def qld_cycle(
    problem: AbsorbedChainProblem,
    mu: Distribution | None = None,
    tol: float = 1e-12,
    max_iter: int = 10**5,
    existence_tol: float = 1e-9,
) -> QldCycle:
    """Iterate the conditioned evolution until it settles on a cycle.

    The conditioned laws are asymptotically periodic; the cycle length is
    a multiple of ``gamma`` (it also has to absorb the period of the
    dominant class).  Detection requires a full cycle of consecutive
    iterates to repeat within ``tol`` in total variation, anchored at a
    multiple of the cycle length, and then confirms one more period.
    """
    gamma = problem.gamma
    lifted = lift_chain(problem, validate=False)
    r_cap = max(1, len(lifted.survivors) // gamma) + 1
    window = 2 * (r_cap + 1) * gamma + 1

    P = problem.kernel.normalized()
    vec = _initial_vector(problem, mu)
    history: list[np.ndarray] = [vec]

    def tv(a: np.ndarray, b: np.ndarray) -> float:
        return 0.5 * float(np.abs(a - b).sum())

    def block_matches(n_local: int, length: int) -> bool:
        # history index of absolute time t is t - (n_local - len + 1)
        def at(t: int) -> np.ndarray:
            return history[t - (n_local - len(history) + 1)]

        lo = n_local - 2 * length + 1
        if lo < n_local - len(history) + 1:
            return False
        return all(
            tv(at(n_local - k), at(n_local - length - k)) <= tol
            for k in range(length)
        )

    detected: tuple[int, int] | None = None
    n = 0
    last_diff = np.inf
    while n < max_iter:
        n += 1
        vec = _step_vector(problem, P, vec, n % gamma)
        history.append(vec)
        if len(history) > window:
            history.pop(0)
        if n % gamma == 0:
            last_diff = min(
                last_diff,
                tv(history[-1], history[-1 - gamma]) if len(history) > gamma else np.inf,
            )
        if detected is None and n % gamma == 0:
            for r in range(1, r_cap + 1):
                length = r * gamma
                if n % length == 0 and block_matches(n, length):
                    detected = (n, length)
                    break
        elif detected is not None:
            n_det, length = detected
            if n == n_det + length:
                # confirmation pass over one more period
                if block_matches(n, length):
                    offset = n - (n - len(history) + 1)
                    cycle = [
                        Distribution.from_array(
                            problem.space, history[offset - length + 1 + k]
                        )
                        for k in range(length)
                    ]
                    laws = tuple(cycle)
                    consecutive = tuple(
                        laws[i].tv_distance(laws[(i + 1) % length])
                        for i in range(length)
                    )
                    pairwise = max(
                        (
                            laws[i].tv_distance(laws[j])
                            for i in range(length)
                            for j in range(i + 1, length)
                        ),
                        default=0.0,
                    )
                    return QldCycle(
                        distributions=laws,
                        offsets=tuple(
                            ((n - length + 1 + k) % length) for k in range(length)
                        ),
                        period=length,
                        iterations=n,
                        consecutive_tv=consecutive,
                        max_pairwise_tv=pairwise,
                        qld_exists=pairwise <= existence_tol,
                    )
                detected = None
    raise ConvergenceError(
        f"conditioned evolution did not settle on a cycle within {max_iter} "
        "iterations",
        residual=last_diff,
    )


def _lifted_setup(problem, f):
    lifted = lift_chain(problem)
    base = state_function(problem, f)
    fvec = np.array([base[problem.space.index(x)] for x, _ in lifted.survivors])
    return lifted, fvec


def exact_mean_ratio(problem: AbsorbedChainProblem, f, n: int) -> float:
    """Conditioned time-average of ``f`` over ``n`` steps, computed exactly.

    Evaluates ``E[(1/n) sum_{k<n} f(X_k) | alive at n]`` through a linear
    recursion on the lifted survivor matrix: with ``u_j`` the survival
    probabilities over ``j`` steps and ``s_j`` the f-weighted survival
    sums, ``u_j = Q u_{j-1}`` and ``s_j = f * u_j + Q s_{j-1}``.  Exact up
    to float round-off, cost ``O(n * survivors^2)``.
    """
    return float(mean_ratio_curve(problem, f, [n])[0])


def mean_ratio_curve(problem: AbsorbedChainProblem, f, ns) -> np.ndarray:
    """Exact conditioned time-averages at several horizons in one sweep."""
    ns = [int(n) for n in ns]
    if any(n < 1 for n in ns):
        raise ValueError("horizons must be positive")
    lifted, fvec = _lifted_setup(problem, f)
    Q = lifted.survivor_matrix
    mu0 = lifted.normalized_initial()
    wanted = {n: i for i, n in enumerate(ns)}
    out = np.full(len(ns), np.nan)

    u = np.ones(len(lifted.survivors))
    s = np.zeros_like(u)
    for step in range(1, max(ns) + 1):
        u = Q @ u
        s = fvec * u + Q @ s
        peak = u.max()
        if peak <= 0.0:
            raise NullEventError(
                f"no state survives {step} steps; the conditioning is null"
            )
        if peak < _RESCALE_FLOOR:
            u = u / peak
            s = s / peak
        if step in wanted:
            denom = float(mu0 @ u)
            if denom <= 0.0:
                raise NullEventError(
                    f"conditioning on a null event: survival probability at "
                    f"horizon {step} vanishes from the initial law"
                )
            out[wanted[step]] = float(mu0 @ s) / (step * denom)
    return out


# ---------------------------------------------------------------------------
# Nonexistence certificate for a law invariant under every phase map
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FixedPointSearch:
    """Search for a law fixed by the conditioned step of every phase.

    ``grid_min_gap`` is the smallest, over a simplex grid on the common
    survival support, of the worst total-variation displacement under the
    phase maps; ``eigen_candidates`` are the per-phase invariant laws
    read off the phase survivor matrices, with their worst displacement
    under the other phases in ``eigen_gaps``.
    """

    common_support: tuple[str, ...]
    grid_step: float
    grid_points: int
    grid_min_gap: float
    grid_argmin: Distribution | None
    eigen_candidates: tuple[tuple[int, float, Distribution], ...]
    eigen_gaps: tuple[float, ...]
    has_common_fixed_point: bool


def _simplex_grid(d: int, steps: int) -> np.ndarray:
    """All nonnegative integer vectors of length d summing to steps."""
    if d == 1:
        return np.array([[steps]])
    rows = []
    for first in range(steps + 1):
        rest = _simplex_grid(d - 1, steps - first)
        block = np.empty((rest.shape[0], d), dtype=int)
        block[:, 0] = first
        block[:, 1:] = rest
        rows.append(block)
    return np.vstack(rows)


def qsd_fixed_point_search(
    problem: AbsorbedChainProblem,
    grid_step: float = 1e-3,
    budget: int = 2_500_000,
    fixed_tol: float = 1e-9,
) -> FixedPointSearch:
    """Certify that no law is invariant under every phase's conditioning.

    A common fixed point would have to live on the intersection of all
    survival sets, so the grid scans that simplex; the eigen candidates
    cover the exact invariant laws of each phase (nonnegative left
    eigenvectors of the phase survivor matrix).  A positive
    ``grid_min_gap`` together with positive ``eigen_gaps`` certifies
    nonexistence at the grid resolution.
    """
    space = problem.space
    gamma = problem.gamma
    P = problem.kernel.normalized()

    common = tuple(
        x
        for x in space.labels
        if all(x not in problem.boundary.killing_set(m) for m in range(gamma))
    )
    maps_killed = [_killed_indices(problem, m) for m in range(gamma)]

    grid_min_gap = np.inf
    grid_argmin = None
    points = 0
    if common:
        d = len(common)
        steps = max(1, round(1.0 / grid_step))
        while comb(steps + d - 1, d - 1) > budget:
            steps //= 2
        grid_step = 1.0 / steps
        counts = _simplex_grid(d, steps)
        points = counts.shape[0]
        sup_idx = [space.index(x) for x in common]
        chunk = 200_000
        for lo in range(0, points, chunk):
            block = counts[lo:lo + chunk].astype(float) / steps
            embedded = np.zeros((block.shape[0], space.size))
            embedded[:, sup_idx] = block
            gap = np.zeros(block.shape[0])
            for m in range(gamma):
                out = embedded @ P
                out[:, maps_killed[m]] = 0.0
                totals = out.sum(axis=1)
                ok = totals > 0.0
                tvs = np.ones(block.shape[0])
                if ok.any():
                    tvs[ok] = 0.5 * np.abs(
                        out[ok] / totals[ok, None] - embedded[ok]
                    ).sum(axis=1)
                gap = np.maximum(gap, tvs)
            best = int(np.argmin(gap))
            if gap[best] < grid_min_gap:
                grid_min_gap = float(gap[best])
                grid_argmin = Distribution(
                    {x: float(v) for x, v in zip(common, block[best]) if v > 0.0}
                )

    candidates: list[tuple[int, float, Distribution]] = []
    for m in range(gamma):
        Qm, surv = survivor_restriction(space, P, problem.boundary.killing_set(m))
        eigvals, eigvecs = np.linalg.eig(Qm.T)
        for i, lam in enumerate(eigvals):
            if abs(lam.imag) > 1e-9 or lam.real <= 1e-9:
                continue
            v = eigvecs[:, i]
            pivot = v[int(np.argmax(np.abs(v)))]
            v = v / pivot
            if np.max(np.abs(v.imag)) > 1e-9:
                continue
            v = v.real
            if np.min(v) < -1e-9:
                continue
            v = np.clip(v, 0.0, None)
            total = v.sum()
            if total <= 0.0:
                continue
            dist = Distribution({x: float(w / total) for x, w in zip(surv, v)})
            if all(dist.tv_distance(c[2]) > 1e-9 for c in candidates):
                candidates.append((m, float(lam.real), dist))

    eigen_gaps = []
    found_common = False
    for _, _, dist in candidates:
        worst = 0.0
        for m in range(gamma):
            try:
                moved = conditional_step(problem, dist, m)
                worst = max(worst, moved.tv_distance(dist))
            except NullEventError:
                worst = max(worst, 1.0)
        eigen_gaps.append(worst)
        if worst <= fixed_tol:
            found_common = True
    if np.isfinite(grid_min_gap) and grid_min_gap <= fixed_tol:
        found_common = True

    return FixedPointSearch(
        common_support=common,
        grid_step=grid_step,
        grid_points=points,
        grid_min_gap=float(grid_min_gap),
        grid_argmin=grid_argmin,
        eigen_candidates=tuple(candidates),
        eigen_gaps=tuple(eigen_gaps),
        has_common_fixed_point=found_common,
    )


# ---------------------------------------------------------------------------
# CSV emitters for convergence plots
# ---------------------------------------------------------------------------


def write_mean_ratio_csv(problem: AbsorbedChainProblem, f, n_max: int, path):
    """Exact conditioned time-averages for horizons 1..n_max, one row each."""
    values = mean_ratio_curve(problem, f, range(1, n_max + 1))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mean_ratio"])
        for n, v in enumerate(values, start=1):
            writer.writerow([n, repr(float(v))])


def write_conditional_laws_csv(problem: AbsorbedChainProblem, n_max: int, path):
    """Conditioned laws for times 0..n_max, one column per state."""
    laws = conditional_law_sequence(problem, n_max)
    labels = problem.space.labels
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", *labels])
        for n, law in enumerate(laws):
            writer.writerow(
                [n, *(repr(law.weights.get(x, 0.0)) for x in labels)]
            )
