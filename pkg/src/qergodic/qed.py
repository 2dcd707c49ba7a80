"""Quasi-ergodic (mean-ratio) distributions for fixed and moving boundaries.

Among the communicating classes charged by the initial law, the one with
the largest decay rate governs the long-run conditioned time averages,
provided it is unique.  Its mean-ratio distribution weights each state by
the product of the left and right Perron vectors; for a moving boundary
the computation runs on the lifted chain and the phase coordinate is
summed out at the end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import AbsorbedChainProblem, Distribution, LiftedChain, lift_chain
from .conditioning import state_function
from .errors import Hypothesis1Error, NullEventError, ValidationError
from .spectral import ClassDecomposition, IrreducibleClass, decompose_classes

__all__ = [
    "ClassSelection",
    "QedResult",
    "select_dominant",
    "qed_fixed",
    "qed_moving",
]

RHO_TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class ClassSelection:
    """Outcome of picking the dominant class for an initial law.

    ``charged`` lists the classes meeting the support of the law,
    ``maximal`` those among them tying for the largest decay rate.  The
    selection is usable only when ``unique_dominant`` holds.
    """

    charged: tuple[int, ...]
    rho_max: float
    maximal: tuple[int, ...]
    unique_dominant: bool
    selected_index: int | None
    warnings: tuple[str, ...]

    def selected(self, decomposition: ClassDecomposition) -> IrreducibleClass:
        if self.selected_index is None:
            raise Hypothesis1Error(
                "no unique dominant class was selected", self.maximal
            )
        return decomposition.classes[self.selected_index]


def select_dominant(
    decomposition: ClassDecomposition,
    mu: np.ndarray,
    rel_tol: float = RHO_TIE_RTOL,
    strict: bool = True,
) -> ClassSelection:
    """Pick the class with the largest decay rate among those charged by mu.

    Ties within ``rel_tol`` (relative) are an error in strict mode: the
    limit theorems do not apply and choosing silently would fabricate an
    answer.  A warning is attached when surviving mass can flow from a
    charged class into a class the law never charged, since the decay
    rates of such classes do not enter the selection.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (decomposition.matrix.shape[0],):
        raise ValidationError(
            "initial law must be a vector over the matrix states"
        )
    if np.any(mu < 0.0) or mu.sum() <= 0.0:
        raise ValidationError("initial law must be nonnegative with positive mass")

    charged = tuple(
        i
        for i, cls in enumerate(decomposition.classes)
        if any(mu[s] > 0.0 for s in cls.states)
    )
    if not charged:
        raise ValidationError("initial law charges no state of the matrix")

    rho_max = max(decomposition.classes[i].rho for i in charged)
    if rho_max <= 0.0:
        raise NullEventError(
            "every class charged by the initial law has decay rate 0; "
            "survival is impossible beyond finitely many steps"
        )
    maximal = tuple(
        i
        for i in charged
        if decomposition.classes[i].rho >= rho_max * (1.0 - rel_tol)
    )
    unique = len(maximal) == 1

    warnings = []
    outside = decomposition.reachable_from(set(charged)) - set(charged)
    if outside:
        detail = ", ".join(
            f"class {i} (rho={decomposition.classes[i].rho:.6g})"
            for i in sorted(outside)
        )
        warnings.append(
            "surviving mass can flow from the charged classes into classes "
            f"the initial law does not charge ({detail}); the spectral "
            "selection ignores them, cross-check against the exact oracle"
        )
        if any(
            decomposition.classes[i].rho > rho_max * (1.0 - rel_tol)
            for i in outside
        ):
            warnings.append(
                "a reachable uncharged class has a decay rate at least as "
                "large as the selected one; the spectral answer may not "
                "describe the true limit"
            )

    if strict and not unique:
        names = "; ".join(
            f"class {i} with states {decomposition.classes[i].states} "
            f"(rho={decomposition.classes[i].rho:.12g})"
            for i in maximal
        )
        raise Hypothesis1Error(
            f"dominant class is not unique, {len(maximal)} classes tie for "
            f"the maximal decay rate: {names}",
            maximal,
        )
    return ClassSelection(
        charged=charged,
        rho_max=float(rho_max),
        maximal=maximal,
        unique_dominant=unique,
        selected_index=maximal[0] if unique else None,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True, eq=False)
class QedResult:
    """Mean-ratio distribution and the limit value of the time average."""

    decomposition: ClassDecomposition
    selection: ClassSelection
    eta: np.ndarray
    eta_distribution: Distribution
    phi: float | None
    lifted: LiftedChain | None = None

    @property
    def rho(self) -> float:
        return self.selection.rho_max


def _eta_on_class(cls: IrreducibleClass, n_states: int) -> np.ndarray:
    eta = np.zeros(n_states)
    eta[list(cls.states)] = cls.nu * cls.xi
    return eta


def qed_fixed(
    Q: np.ndarray,
    mu: np.ndarray,
    f: np.ndarray | None = None,
    labels=None,
) -> QedResult:
    """Mean-ratio distribution of a fixed-boundary survivor matrix.

    ``eta`` weights state i of the dominant class by ``nu(i) * xi(i)``
    (zero elsewhere); the conditioned time average of ``f`` converges to
    ``sum(f * eta)``.
    """
    Q = np.asarray(Q, dtype=float)
    decomposition = decompose_classes(Q)
    selection = select_dominant(decomposition, mu)
    cls = selection.selected(decomposition)
    eta = _eta_on_class(cls, Q.shape[0])
    if labels is None:
        labels = tuple(str(i) for i in range(Q.shape[0]))
    dist = Distribution(
        {lab: float(w) for lab, w in zip(labels, eta) if w != 0.0}
    )
    phi = None
    if f is not None:
        f = np.asarray(f, dtype=float)
        if f.shape != (Q.shape[0],):
            raise ValidationError("f must have one value per matrix state")
        phi = float(f @ eta)
    return QedResult(decomposition, selection, eta, dist, phi)


def qed_moving(problem: AbsorbedChainProblem, f=None) -> QedResult:
    """Mean-ratio distribution of a moving-boundary problem.

    Runs the fixed-boundary analysis on the lifted chain started from the
    initial law at phase 0, then sums the phase coordinate out of the
    lifted mean-ratio weights.  The limit value is the ``eta``-average of
    ``f`` read on the original states.
    """
    lifted = lift_chain(problem)
    decomposition = decompose_classes(lifted.survivor_matrix)
    selection = select_dominant(decomposition, lifted.initial_vector)
    cls = selection.selected(decomposition)
    eta_lifted = _eta_on_class(cls, len(lifted.survivors))

    marginal: dict[str, float] = {}
    for weight, (x, _) in zip(eta_lifted, lifted.survivors):
        if weight != 0.0:
            marginal[x] = marginal.get(x, 0.0) + float(weight)
    dist = Distribution(marginal)

    phi = None
    if f is not None:
        fvec = state_function(problem, f)
        phi = float(
            sum(fvec[problem.space.index(x)] * w for x, w in marginal.items())
        )
    return QedResult(decomposition, selection, eta_lifted, dist, phi, lifted)
