"""Seeded Monte Carlo for absorbed trajectories.

Every random number is a pure function of (seed, trajectory index, step),
computed with a counter-based 64-bit mixer.  Trajectories therefore do
not share state: shards only partition the index range, so any shard
layout reproduces the same paths bit for bit, and headline statistics are
reduced once over per-trajectory arrays to keep them layout-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import AbsorbedChainProblem, Distribution
from .conditioning import state_function
from .errors import NoSurvivorsError, ValidationError
from .qprocess import QProcessKernel

__all__ = [
    "SimConfig",
    "SimBatch",
    "EstimateWithCI",
    "ConditionalEstimates",
    "simulate_paths",
    "estimate_conditionals",
    "survival_curve",
    "simulate_qprocess",
]

LOW_SAMPLE_THRESHOLD = 100

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_CHUNK = 1 << 15


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _uniforms(seed: int, traj: np.ndarray, step: int) -> np.ndarray:
    """Uniform [0, 1) draws keyed by (seed, trajectory, step)."""
    with np.errstate(over="ignore"):
        h = _mix64(traj.astype(np.uint64) + _GOLDEN)
        h = _mix64(h ^ _mix64(np.uint64(step & 0xFFFFFFFFFFFFFFFF) + _GOLDEN))
        h = _mix64(h ^ np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def _sample_rows(cumulative: np.ndarray, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Draw one transition per trajectory from row-wise cumulative sums."""
    out = np.empty(states.shape[0], dtype=np.int64)
    for lo in range(0, states.shape[0], _CHUNK):
        hi = lo + _CHUNK
        rows = cumulative[states[lo:hi]]
        out[lo:hi] = np.argmax(rows > u[lo:hi, None], axis=1)
    return out


@dataclass(frozen=True)
class SimConfig:
    """Reproducibility contract: same (seed, trajectories, horizon) means
    identical output for every shard count."""

    seed: int
    trajectories: int
    horizon: int
    shards: int = 1

    def __post_init__(self):
        if self.trajectories < 1 or self.horizon < 0 or self.shards < 1:
            raise ValidationError(
                "trajectories and shards must be positive, horizon nonnegative"
            )

    def shard_ranges(self) -> list[tuple[int, int]]:
        per = -(-self.trajectories // self.shards)
        return [
            (lo, min(lo + per, self.trajectories))
            for lo in range(0, self.trajectories, per)
        ]


@dataclass(frozen=True, eq=False)
class SimBatch:
    """Simulated trajectories: state indices per step, -1 once absorbed.

    ``tau[i]`` is the absorption time of trajectory i, or -1 when it is
    still alive at the horizon.
    """

    labels: tuple[str, ...]
    paths: np.ndarray
    tau: np.ndarray

    @property
    def survivors(self) -> np.ndarray:
        return self.tau < 0


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with its standard error over surviving trajectories."""

    value: float
    standard_error: float
    survivors: int

    @property
    def low_sample(self) -> bool:
        return self.survivors < LOW_SAMPLE_THRESHOLD


@dataclass(frozen=True, eq=False)
class ConditionalEstimates:
    """Survivor statistics at the horizon, plus per-step counts.

    ``law`` is the empirical distribution of the state at the horizon
    among survivors; ``mean_ratio`` estimates the conditioned time
    average of f.  ``survivor_counts[n]`` and ``law_counts[n]`` hold the
    per-step survivor tallies (integer, hence exact across shard
    layouts).
    """

    law: Distribution
    mean_ratio: EstimateWithCI
    survivor_counts: np.ndarray
    law_counts: np.ndarray
    labels: tuple[str, ...]


def _engine(problem: AbsorbedChainProblem, config: SimConfig, fvec, record_paths: bool):
    space = problem.space
    gamma = problem.gamma
    P = problem.kernel.normalized()
    cumulative = np.cumsum(P, axis=1)
    cumulative[:, -1] = 1.0
    killed = np.zeros((gamma, space.size), dtype=bool)
    for k in range(gamma):
        for x in problem.boundary.killing_set(k):
            killed[k, space.index(x)] = True

    init = problem.initial.to_array(space)
    if np.any(init < 0.0) or init.sum() <= 0.0:
        raise ValidationError("initial law must be nonnegative with positive mass")
    init_cum = np.cumsum(init / init.sum())
    init_cum[-1] = 1.0

    n_traj, horizon = config.trajectories, config.horizon
    tau = np.full(n_traj, -1, dtype=np.int64)
    final_state = np.full(n_traj, -1, dtype=np.int64)
    fsum = np.zeros(n_traj) if fvec is not None else None
    paths = (
        np.full((n_traj, horizon + 1), -1, dtype=np.int16) if record_paths else None
    )
    survivor_counts = np.zeros(horizon + 1, dtype=np.int64)
    law_counts = np.zeros((horizon + 1, space.size), dtype=np.int64)

    for lo, hi in config.shard_ranges():
        idx = np.arange(lo, hi, dtype=np.uint64)
        u0 = _uniforms(config.seed, idx, 0)
        states = np.searchsorted(init_cum, u0, side="right").astype(np.int64)
        states = np.minimum(states, space.size - 1)
        alive_idx = np.arange(lo, hi, dtype=np.int64)

        dead_now = killed[0, states]
        if dead_now.any():
            tau[alive_idx[dead_now]] = 0
            final_state[alive_idx[dead_now]] = states[dead_now]
            if record_paths:
                paths[alive_idx[dead_now], 0] = states[dead_now]
            alive_idx = alive_idx[~dead_now]
            states = states[~dead_now]
        if record_paths and alive_idx.size:
            paths[alive_idx, 0] = states
        survivor_counts[0] += alive_idx.size
        law_counts[0] += np.bincount(states, minlength=space.size)

        for t in range(1, horizon + 1):
            if alive_idx.size == 0:
                break
            if fvec is not None:
                fsum[alive_idx] += fvec[states]
            u = _uniforms(config.seed, alive_idx.astype(np.uint64), t)
            states = _sample_rows(cumulative, states, u)
            if record_paths:
                paths[alive_idx, t] = states
            dead_now = killed[t % gamma, states]
            if dead_now.any():
                tau[alive_idx[dead_now]] = t
                alive_idx = alive_idx[~dead_now]
                states = states[~dead_now]
            survivor_counts[t] += alive_idx.size
            law_counts[t] += np.bincount(states, minlength=space.size)
        final_state[alive_idx] = states

    return tau, final_state, fsum, paths, survivor_counts, law_counts


def simulate_paths(problem: AbsorbedChainProblem, config: SimConfig) -> SimBatch:
    """Simulate absorbed trajectories, truncated at the horizon.

    Paths record the visited state indices; entries after the absorption
    time are -1 (the absorbing state itself is recorded at time tau).
    """
    tau, _, _, paths, _, _ = _engine(problem, config, None, record_paths=True)
    return SimBatch(labels=problem.space.labels, paths=paths, tau=tau)


def estimate_conditionals(
    problem: AbsorbedChainProblem, f, config: SimConfig
) -> ConditionalEstimates:
    """Estimate the conditioned law at the horizon and the mean ratio of f.

    The mean ratio averages ``(1/n) sum_{k<n} f(X_k)`` over trajectories
    alive at the horizon; its standard error comes from the surviving
    sample alone.
    """
    if config.horizon < 1:
        raise ValidationError("horizon must be at least 1 for conditional estimates")
    fvec = state_function(problem, f)
    tau, final_state, fsum, _, survivor_counts, law_counts = _engine(
        problem, config, fvec, record_paths=False
    )
    alive = tau < 0
    n_surv = int(alive.sum())
    if n_surv == 0:
        raise NoSurvivorsError(
            f"no trajectory survived to horizon {config.horizon}; increase the "
            f"trajectory budget (currently {config.trajectories}) or lower the "
            "horizon"
        )
    ratios = fsum[alive] / config.horizon
    point = float(ratios.mean())
    se = (
        float(ratios.std(ddof=1) / np.sqrt(n_surv)) if n_surv > 1 else float("inf")
    )
    counts = np.bincount(final_state[alive], minlength=problem.space.size)
    law = Distribution(
        {
            x: float(c) / n_surv
            for x, c in zip(problem.space.labels, counts)
            if c > 0
        }
    )
    return ConditionalEstimates(
        law=law,
        mean_ratio=EstimateWithCI(point, se, n_surv),
        survivor_counts=survivor_counts,
        law_counts=law_counts,
        labels=problem.space.labels,
    )


def survival_curve(
    problem: AbsorbedChainProblem, config: SimConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical survival probabilities per step with binomial errors."""
    tau, _, _, _, survivor_counts, _ = _engine(problem, config, None, False)
    n = config.trajectories
    p_hat = survivor_counts / n
    se = np.sqrt(np.clip(p_hat * (1.0 - p_hat), 0.0, None) / n)
    return p_hat, se


def simulate_qprocess(
    kernel: QProcessKernel, x: str, steps: int, seed: int, paths: int = 1
) -> list[list[str]]:
    """Simulate the conditioned-forever chain from x for a number of steps.

    Returns one label sequence per path; by construction the chain never
    meets the killing sets.
    """
    if (x, 0) not in set(kernel.class_states):
        raise ValidationError(f"state {x!r} at phase 0 is not in the kernel's class")
    gamma = kernel.gamma
    slices = [kernel.slice_for(n) for n in range(gamma)]
    cums = []
    for sl in slices:
        c = np.cumsum(sl.matrix, axis=1)
        c[:, -1] = 1.0
        cums.append(c)
    row_maps = [
        {lab: i for i, lab in enumerate(sl.row_states)} for sl in slices
    ]
    # a state seen as column j of slice n is a row of slice n+1
    col_to_row = [
        np.array(
            [row_maps[(n + 1) % gamma][lab] for lab in slices[n].col_states],
            dtype=np.int64,
        )
        for n in range(gamma)
    ]

    start_col = slices[0].col_states.index(x)
    cur_col = np.full(paths, start_col, dtype=np.int64)
    history = np.empty((paths, steps + 1), dtype=np.int64)
    history[:, 0] = start_col
    traj = np.arange(paths, dtype=np.uint64)
    for t in range(1, steps + 1):
        sl = t % gamma
        rows = col_to_row[(t - 1) % gamma][cur_col]
        u = _uniforms(seed, traj, t)
        cur_col = np.argmax(cums[sl][rows] > u[:, None], axis=1)
        history[:, t] = cur_col
    return [
        [slices[t % gamma].col_states[int(history[i, t])] for t in range(steps + 1)]
        for i in range(paths)
    ]
