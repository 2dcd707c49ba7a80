"""Class structure and Perron theory for substochastic matrices.

Given a nonnegative matrix with row sums at most one, this module finds
the communicating classes, and per class: the period, the cyclic classes,
the decay rate (Perron root) with its positive left/right vectors, the
full peripheral eigensystem and the survival coefficient which prefixes
the geometric decay of the survival probability.

Conventions.  States are integer indices into the parent matrix.  For a
class of period ``T`` with cyclic classes ``C_0 .. C_{T-1}`` (the anchor,
the smallest state index in the class, sits in ``C_0``), one step of the
chain maps ``C_i`` into ``C_{i+1 mod T}``.  The left Perron vector ``nu``
sums to 1 over the class and the right vector ``xi`` is scaled so that
``sum(nu * xi) = 1``.  Peripheral eigenvectors come from ``nu``/``xi`` by
a phase twist per cyclic class and satisfy ``v_k Q = lambda_k v_k`` and
``Q w_k = lambda_k w_k`` as plain (unconjugated) products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, ValidationError

__all__ = [
    "POWER_TOL",
    "POWER_MAX_ITER",
    "IrreducibleClass",
    "ClassDecomposition",
    "PeripheralSystem",
    "EigenProjectionReport",
    "decompose_classes",
    "perron_data",
    "peripheral_system",
    "survival_coefficient",
    "verify_eigenprojection",
    "spectral_radius",
]

POWER_TOL = 1e-12
POWER_MAX_ITER = 10**6


@dataclass(frozen=True, eq=False)
class IrreducibleClass:
    """One communicating class with its Perron data.

    ``states`` are parent-matrix indices in increasing order; ``nu``,
    ``xi`` and ``submatrix`` are indexed by position within ``states``.
    A transient singleton without a self-loop gets ``rho = 0``, period 1
    and trivial vectors.
    """

    states: tuple[int, ...]
    period: int
    cyclic_classes: tuple[tuple[int, ...], ...]
    rho: float
    nu: np.ndarray
    xi: np.ndarray
    submatrix: np.ndarray
    nu_residual: float
    xi_residual: float

    @cached_property
    def _position(self) -> dict[int, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def _cyclic_of(self) -> dict[int, int]:
        return {s: j for j, cyc in enumerate(self.cyclic_classes) for s in cyc}

    @property
    def size(self) -> int:
        return len(self.states)

    def position(self, state: int) -> int:
        try:
            return self._position[state]
        except KeyError:
            raise ValidationError(f"state {state} is not in this class") from None

    def cyclic_index(self, state: int) -> int:
        self.position(state)
        return self._cyclic_of[state]

    @cached_property
    def nu_cyclic_mass(self) -> np.ndarray:
        """Total ``nu`` mass per cyclic class."""
        mass = np.zeros(self.period)
        for j, cyc in enumerate(self.cyclic_classes):
            mass[j] = sum(self.nu[self.position(s)] for s in cyc)
        return mass


@dataclass(frozen=True, eq=False)
class ClassDecomposition:
    """Partition of the states of a substochastic matrix into classes.

    Classes are ordered by their smallest contained state index.
    ``edges`` holds the direct transitions between distinct classes in the
    support digraph.
    """

    matrix: np.ndarray
    classes: tuple[IrreducibleClass, ...]
    class_of: np.ndarray
    edges: tuple[tuple[int, int], ...]

    def reachable_from(self, class_ids) -> set[int]:
        """Classes reachable from the given ones, excluding themselves."""
        start = set(class_ids)
        adjacency: dict[int, set[int]] = {}
        for a, b in self.edges:
            adjacency.setdefault(a, set()).add(b)
        seen = set(start)
        stack = list(start)
        while stack:
            for nxt in adjacency.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen - start


@dataclass(frozen=True, eq=False)
class PeripheralSystem:
    """Eigenpairs of maximal modulus for a periodic class.

    ``lambdas[k] = rho * exp(2i pi k / T)``; row ``k`` of ``left_vectors``
    (resp. ``right_vectors``) is the left (right) eigenvector for
    ``lambdas[k]`` over the class states.
    """

    lambdas: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    left_residual: float
    right_residual: float


@dataclass(frozen=True, eq=False)
class EigenProjectionReport:
    """Coefficients of a point mass on the peripheral left-eigenspace.

    ``alpha`` solves the Gram system of the peripheral left eigenvectors;
    ``gram_residual`` is ``max_k |alpha_k - w_k(x)|``.  The Gram solve
    agrees with the spectral coefficients only when the orthogonal
    complement of the peripheral span is invariant (e.g. symmetric class
    matrices); ``projection_residual`` checks the invariant-complement
    property directly and is small for every class: it is
    ``max_l |(delta_x - sum_k w_k(x) v_k) . w_l|``.
    """

    state: int
    alpha: np.ndarray
    w_values: np.ndarray
    gram_residual: float
    projection_residual: float


def _power_iteration(A: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a primitive nonnegative matrix.

    Iterates to float stagnation when possible (the extra accuracy is
    cheap and downstream comparisons need it); raises ConvergenceError if
    the successive-iterate change is still above ``tol`` at the budget.
    """
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0]), np.ones(1)
    x = np.full(n, 1.0 / n)
    diff = np.inf
    best = np.inf
    stall = 0
    polish = 0
    for _ in range(max_iter):
        y = A @ x
        s = y.sum()
        if s <= 0.0:
            # Irreducible blocks always keep positive mass; a zero image
            # means the caller handed us a nilpotent block.
            return 0.0, np.full(n, 1.0 / n)
        y /= s
        diff = np.abs(y - x).sum()
        x = y
        if diff < 1e-15:
            break
        if diff <= tol:
            # past tolerance, polish toward machine accuracy but within a
            # bounded extra budget so near-tied spectra cannot stall us
            polish += 1
            if polish > 3000:
                break
        if diff < 0.5 * best:
            best = diff
            stall = 0
        else:
            stall += 1
            if stall > 200 and diff <= tol:
                break
    if diff > tol:
        raise ConvergenceError(
            f"power iteration did not reach tolerance {tol:g} within "
            f"{max_iter} iterations (last change {diff:g})",
            residual=diff,
        )
    lam = float((A @ x).sum() / x.sum())
    return lam, x


def _relative_residual(vec: np.ndarray, image: np.ndarray, lam) -> float:
    scale = max(np.max(np.abs(vec)), 1e-300)
    return float(np.max(np.abs(image - lam * vec)) / scale)


def _strongly_connected(sub: np.ndarray) -> bool:
    n_comp, _ = connected_components(
        csr_matrix(sub > 0.0), directed=True, connection="strong"
    )
    return n_comp == 1


def perron_data(
    Q: np.ndarray,
    states,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> IrreducibleClass:
    """Period, cyclic classes and Perron data for one communicating class.

    The period is the gcd of directed cycle lengths through the anchor
    (the smallest state index), obtained from a BFS phase labelling; the
    Perron root and vectors come from power iteration on the T-step
    matrix restricted to a cyclic class, which is primitive, so the
    iteration converges geometrically and stays in real arithmetic.
    """
    Q = np.asarray(Q, dtype=float)
    states = tuple(sorted(int(s) for s in states))
    n = len(states)
    sub = Q[np.ix_(states, states)].copy()

    if n == 1 and sub[0, 0] <= 0.0:
        return IrreducibleClass(
            states=states,
            period=1,
            cyclic_classes=(states,),
            rho=0.0,
            nu=np.ones(1),
            xi=np.ones(1),
            submatrix=sub,
            nu_residual=0.0,
            xi_residual=0.0,
        )

    if not _strongly_connected(sub):
        raise ValidationError("the given states do not form an irreducible class")

    # Phase BFS from the anchor; each edge u -> v closes a cycle of length
    # dist(u) + 1 - dist(v) through the anchor, and the period divides all
    # of them.
    adjacency = [np.flatnonzero(sub[i] > 0.0) for i in range(n)]
    dist = np.full(n, -1)
    dist[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    period = 0
    for u in range(n):
        for v in adjacency[u]:
            period = gcd(period, int(dist[u]) + 1 - int(dist[v]))
    period = abs(period)
    if period == 0:
        raise ValidationError("the given states contain no directed cycle")

    cyclic_local = [
        np.flatnonzero(dist % period == j) for j in range(period)
    ]
    cyclic_classes = tuple(
        tuple(states[i] for i in block) for block in cyclic_local
    )

    # T-step matrix on C_0 as a product of the one-step blocks; primitive.
    blocks = [
        sub[np.ix_(cyclic_local[j], cyclic_local[(j + 1) % period])]
        for j in range(period)
    ]
    t_step = blocks[0]
    for b in blocks[1:]:
        t_step = t_step @ b
    theta, right0 = _power_iteration(t_step, tol, max_iter)
    _, left0 = _power_iteration(t_step.T, tol, max_iter)
    rho = float(theta) ** (1.0 / period)

    nu = np.zeros(n)
    xi = np.zeros(n)
    nu[cyclic_local[0]] = left0
    for j in range(period - 1):
        nu[cyclic_local[j + 1]] = nu[cyclic_local[j]] @ blocks[j] / rho
    xi[cyclic_local[0]] = right0
    for j in range(period - 1, 0, -1):
        xi[cyclic_local[j]] = blocks[j] @ xi[cyclic_local[(j + 1) % period]] / rho

    nu /= nu.sum()
    xi /= nu @ xi

    nu_res = _relative_residual(nu, nu @ sub, rho)
    xi_res = _relative_residual(xi, sub @ xi, rho)
    return IrreducibleClass(
        states=states,
        period=period,
        cyclic_classes=cyclic_classes,
        rho=rho,
        nu=nu,
        xi=xi,
        submatrix=sub,
        nu_residual=nu_res,
        xi_residual=xi_res,
    )


def decompose_classes(
    Q: np.ndarray,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> ClassDecomposition:
    """Strongly-connected-component partition of the support digraph.

    Classes come back ordered by smallest contained state index, each
    carrying its full Perron data.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {Q.shape}")
    n = Q.shape[0]
    if n == 0:
        return ClassDecomposition(Q, (), np.zeros(0, dtype=int), ())

    _, raw_labels = connected_components(
        csr_matrix(Q > 0.0), directed=True, connection="strong"
    )
    groups: dict[int, list[int]] = {}
    for state, lab in enumerate(raw_labels):
        groups.setdefault(int(lab), []).append(state)
    ordered = sorted(groups.values(), key=min)

    class_of = np.zeros(n, dtype=int)
    classes = []
    for idx, members in enumerate(ordered):
        class_of[members] = idx
        classes.append(perron_data(Q, members, tol=tol, max_iter=max_iter))

    rows, cols = np.nonzero(Q > 0.0)
    edges = sorted(
        {
            (int(class_of[a]), int(class_of[b]))
            for a, b in zip(rows, cols)
            if class_of[a] != class_of[b]
        }
    )
    return ClassDecomposition(Q, tuple(classes), class_of, tuple(edges))


def peripheral_system(cls: IrreducibleClass) -> PeripheralSystem:
    """All eigenpairs of modulus ``rho`` of a periodic class.

    For ``k = 0 .. T-1`` the eigenvalue is ``rho e^{2i pi k/T}`` and the
    eigenvectors are the Perron pair twisted by the cyclic-class phase:
    on ``C_j`` the left vector picks the factor ``e^{-2i pi jk/T}`` and
    the right vector the conjugate factor.
    """
    T = cls.period
    n = cls.size
    lambdas = cls.rho * np.exp(2j * np.pi * np.arange(T) / T)
    left = np.zeros((T, n), dtype=complex)
    right = np.zeros((T, n), dtype=complex)
    for j, cyc in enumerate(cls.cyclic_classes):
        pos = [cls.position(s) for s in cyc]
        for k in range(T):
            phase = 2.0 * np.pi * j * k / T
            left[k, pos] = np.exp(-1j * phase) * cls.nu[pos]
            right[k, pos] = np.exp(1j * phase) * cls.xi[pos]
    sub = cls.submatrix
    left_res = max(
        (_relative_residual(left[k], left[k] @ sub, lambdas[k]) for k in range(T)),
        default=0.0,
    )
    right_res = max(
        (_relative_residual(right[k], sub @ right[k], lambdas[k]) for k in range(T)),
        default=0.0,
    )
    return PeripheralSystem(lambdas, left, right, left_res, right_res)


def survival_coefficient(cls: IrreducibleClass, state: int, n: int) -> float:
    """Prefactor of ``rho^n`` in the survival probability from ``state``.

    With ``state`` in cyclic class ``C_k``, the probability of surviving
    ``n`` steps is ``c_n(state) * rho^n + o(rho^n)`` where
    ``c_n(state) = T * xi(state) * nu(C_{(n+k) mod T})``; the coefficient
    is strictly positive for every ``n``.
    """
    pos = cls.position(state)
    k = cls.cyclic_index(state)
    T = cls.period
    return float(T * cls.xi[pos] * cls.nu_cyclic_mass[(n + k) % T])


def verify_eigenprojection(cls: IrreducibleClass, state: int) -> EigenProjectionReport:
    """Expand a point mass over the peripheral left eigenvectors.

    Solves the Gram system of the peripheral left eigenvectors for the
    orthogonal-projection coefficients of ``delta_state`` and compares
    them with the right-eigenvector values ``w_k(state)``; also reports
    how far the remainder is from being annihilated by the right
    eigenvectors (the projection identity the decay expansion rests on).
    """
    system = peripheral_system(cls)
    V = system.left_vectors
    W = system.right_vectors
    T = cls.period
    pos = cls.position(state)

    # Gram system: b_m = <delta_x, v_m> = sum_l conj(alpha_l) <v_l, v_m>,
    # with <u, v> = sum conj(u_i) v_i.
    H = V.conj() @ V.T  # H[a, b] = <v_a, v_b>
    b = V[:, pos].copy()
    alpha = np.conj(np.linalg.solve(H.T, b))
    w_values = W[:, pos].copy()
    gram_residual = float(np.max(np.abs(alpha - w_values)))

    delta = np.zeros(cls.size, dtype=complex)
    delta[pos] = 1.0
    remainder = delta - w_values @ V
    projection_residual = float(
        max(abs(complex(remainder @ W[l])) for l in range(T))
    )
    return EigenProjectionReport(
        state=state,
        alpha=alpha,
        w_values=w_values,
        gram_residual=gram_residual,
        projection_residual=projection_residual,
    )


def spectral_radius(Q: np.ndarray) -> float:
    """Spectral radius of a nonnegative matrix via its class structure.

    Equals the largest class Perron root; exact for reducible matrices
    where plain power iteration can stall.
    """
    decomposition = decompose_classes(Q)
    return max((c.rho for c in decomposition.classes), default=0.0)
