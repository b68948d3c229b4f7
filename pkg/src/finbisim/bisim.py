"""Finite uniform bisimulations: construction, membership, and geometry.

Every class is a finite union of cells ``M (c + T B_r) + w`` where ``B_r`` is
the open 1-norm ball of radius r, ``c`` runs over a prefix cloud, ``T`` is the
certified similarity transform, and ``(M, w) = (A^eta, w)`` is the refinement
map (identity and zero for unrefined classes).  Because ``M`` and ``T`` are
shared by all classes of one bisimulation, membership reduces to a 1-norm
nearest-center query in the coordinates ``g = (M T)^{-1} x``.
"""
from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as la

from .errors import (AlphabetTooSmall, BudgetExceeded, FinBisimError,
                     NoSeparationWithinBudget, NotInvertible, NotSchurStable)
from .linalg import (SimilarityTransform, apply_rows, induced_one_norm, letter_gain,
                     matrix_powers, power_norm_sequence, reach_norm_bound, transform_for)
from .reachset import (ForcedResponse, enumerate_binary_partitions, letter_distance_matrix,
                       min_cross_distance, prefix_classes_partition, s1_disjointness_check)
from .sysmodel import RunConfig, SystemSpec, is_invertible

log = logging.getLogger(__name__)

_QUERY_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class Refinement:
    eta: int
    word: tuple  # letter indices (u_1, ..., u_eta)
    offset: np.ndarray  # w = B u_1 + A B u_2 + ... + A^{eta-1} B u_eta
    power: np.ndarray  # A^eta


@dataclass(frozen=True, eq=False)
class EquivalenceClass:
    id: int
    base_index: int
    base_centers: np.ndarray
    radius: float
    transform: SimilarityTransform
    refinement: Optional[Refinement] = None

    @property
    def map(self) -> np.ndarray:
        n = self.base_centers.shape[1]
        return np.eye(n) if self.refinement is None else self.refinement.power

    @property
    def offset(self) -> np.ndarray:
        n = self.base_centers.shape[1]
        return np.zeros(n) if self.refinement is None else self.refinement.offset

    def mapped_centers(self) -> np.ndarray:
        return apply_rows(self.map, self.base_centers) + self.offset

    def contains(self, x, tol: float = 0.0) -> bool:
        """Literal membership test: solve A^eta y = x - w, then look for a center
        with ||T^{-1}(y - c)||_1 < radius - tol."""
        y = np.asarray(x, float) - self.offset
        if self.refinement is not None:
            y = np.linalg.solve(self.refinement.power, y)
        z = (y - self.base_centers) @ self.transform.T_inv.T
        return bool(np.any(self.radius - np.abs(z).sum(axis=1) > tol))


@dataclass(frozen=True)
class Provenance:
    algorithm: str  # "alg1" | "alg2"
    k_tilde: int
    d: float
    kappa: float
    l_k_tilde: float
    h: float
    epsilon: float
    epsilon_auto: bool
    partition_index: Optional[int] = None
    partition_U1: Optional[tuple] = None
    partition_U2: Optional[tuple] = None
    eta: Optional[int] = None
    z: Optional[int] = None

    def as_dict(self):
        d = dict(self.__dict__)
        for key in ("partition_U1", "partition_U2"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("partition_U1", "partition_U2"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


class FiniteUniformBisimulation:
    """Ordered classes plus the shared machinery for batched membership queries."""

    def __init__(self, sys: SystemSpec, transform: SimilarityTransform,
                 classes: Sequence[EquivalenceClass], provenance: Provenance,
                 membership_tol: float = 1e-12):
        if len(classes) < 2:
            raise FinBisimError("a finite uniform bisimulation needs at least two classes")
        self.sys = sys
        self.transform = transform
        self.classes = tuple(classes)
        self.provenance = provenance
        self.membership_tol = membership_tol
        M = self.classes[0].map
        for pos, c in enumerate(self.classes):
            if c.id != pos:
                raise FinBisimError(f"class ids must be 0..N-1 in order, got {c.id} at {pos}")
            if not np.array_equal(c.map, M):
                raise FinBisimError("all classes must share one refinement map")
        self.map = M
        self._lu = la.lu_factor(M @ transform.T)
        cells, owner = [], []
        for c in self.classes:
            cells.append(self.to_cell_coords(c.mapped_centers()))
            owner.append(np.full(len(c.base_centers), c.id))
        self.cell_centers = np.concatenate(cells)
        self.cell_owner = np.concatenate(owner)
        self.radii = np.array([c.radius for c in self.classes])
        self.cell_radius = self.radii[self.cell_owner]
        self._class_starts = np.flatnonzero(np.r_[True, np.diff(self.cell_owner) != 0])

    # -- identity
    @property
    def class_ids(self) -> list[int]:
        return [c.id for c in self.classes]

    @property
    def names(self) -> list[str]:
        return [f"X{c.id + 1}" for c in self.classes]

    def __len__(self):
        return len(self.classes)

    # -- membership
    def to_cell_coords(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        return la.lu_solve(self._lu, X.T).T

    def _cell_slack(self, X) -> np.ndarray:
        """radius - ||g - t_cell||_1 for every (point, cell)."""
        G = self.to_cell_coords(X)
        return self.cell_radius - np.abs(G[:, None, :] - self.cell_centers[None, :, :]).sum(axis=2)

    def classify_many(self, X) -> np.ndarray:
        """Class id per row of X, -1 where no class contains the point.

        A point counts as inside only when it clears the boundary by more than
        ``membership_tol``; if corrupted classes overlap, the cell with the
        largest slack wins.
        """
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty(len(X), dtype=np.int64)
        for s in range(0, len(X), _QUERY_CHUNK):
            slack = self._cell_slack(X[s:s + _QUERY_CHUNK])
            best = slack.argmax(axis=1)
            inside = slack[np.arange(len(best)), best] > self.membership_tol
            out[s:s + _QUERY_CHUNK] = np.where(inside, self.cell_owner[best], -1)
        return out

    def classify(self, x) -> Optional[int]:
        c = int(self.classify_many(np.asarray(x, float)[None, :])[0])
        return None if c < 0 else c

    def memberships(self, X) -> np.ndarray:
        """Boolean (points x classes) matrix of the raw membership predicates."""
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty((len(X), len(self.classes)), dtype=bool)
        for s in range(0, len(X), _QUERY_CHUNK):
            inside = self._cell_slack(X[s:s + _QUERY_CHUNK]) > self.membership_tol
            out[s:s + _QUERY_CHUNK] = np.logical_or.reduceat(inside, self._class_starts, axis=1)
        return out

    # -- representatives and sampling
    def representatives(self, cid: int) -> np.ndarray:
        return self.classes[cid].mapped_centers()

    def sample(self, cid: int, rng: np.random.Generator, size: int = 1,
               scale: float = 0.999) -> np.ndarray:
        """Points drawn uniformly from a random cell of the class, shrunk by ``scale``."""
        c = self.classes[cid]
        n = self.sys.n
        centers = c.base_centers[rng.integers(len(c.base_centers), size=size)]
        b = sample_one_norm_ball(rng, size, n) * (scale * c.radius)
        local = centers + b @ self.transform.T.T
        return apply_rows(c.map, local) + c.offset

    # -- certificates
    def certificate(self) -> dict:
        p = self.provenance
        return {
            "d": p.d,
            "kappa_l": p.kappa * p.l_k_tilde,
            "d_ge_kappa_l": p.d >= p.kappa * p.l_k_tilde,
            "norm_certificate": self.transform.norm_certificate,
            "rho_plus_epsilon": self.transform.rho + self.transform.epsilon,
        }


def sample_one_norm_ball(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    """Uniform samples from the open unit 1-norm ball in R^n."""
    e = rng.exponential(size=(size, n + 1))
    simplex = e[:, :n] / e.sum(axis=1, keepdims=True)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(size, n))
    return simplex * signs


# ------------------------------------------------------------ algorithms

@dataclass
class _Setup:
    epsilon: float
    epsilon_auto: bool
    transform: SimilarityTransform
    h: float
    power_norms: list = field(default_factory=list)


def _setup(sys: SystemSpec, cfg: RunConfig) -> _Setup:
    if sys.q < 2:
        raise AlphabetTooSmall(f"need at least two letters, got q={sys.q}")
    if sys.rho >= 1:
        raise NotSchurStable(f"rho(A) = {sys.rho} >= 1")
    eps, auto = cfg.resolve_epsilon(sys.rho)
    st = transform_for(sys, eps)
    h = letter_gain(sys)
    norms = power_norm_sequence(sys.A, cfg.k_max)
    return _Setup(eps, auto, st, h, norms)


def _separated(d: float, threshold: float, slack: float) -> bool:
    return d > 0 and d >= threshold * (1 + slack)


def algorithm1(sys: SystemSpec, cfg: RunConfig) -> FiniteUniformBisimulation:
    """Two-class bisimulation from the first separated binary split of the alphabet.

    Scans depth k ascending and, inside each k, partitions in canonical order;
    the first (k, i) with d_k^(i) >= kappa * l_k wins.
    """
    s = _setup(sys, cfg)
    parts = enumerate_binary_partitions(sys.q)
    enum = ForcedResponse(sys, cfg.budget)
    last = (None, None)
    for k in range(1, cfg.k_max + 1):
        l_k = s.h * s.power_norms[k - 1]
        threshold = s.transform.kappa * l_k
        enum.check_budget(k)
        # d over a split = min over cross letter pairs of letter-block distances
        D = letter_distance_matrix([enum.letter_block(k, j)[0] for j in range(sys.q)])
        for p in parts:
            d = float(D[np.ix_(p.U1, p.U2)].min())
            last = (d, threshold)
            log.debug("k=%d partition=%d d=%g kappa*l=%g", k, p.index, d, threshold)
            if _separated(d, threshold, cfg.slack_tol):
                C1, C2 = prefix_classes_partition(sys, k, p, enum=enum)
                if min_cross_distance([C1, C2]) != d:
                    raise FinBisimError("split distance recomputation disagrees")
                radius = d / (2 * s.transform.T_norm)
                classes = [
                    EquivalenceClass(0, 0, C1.points, radius, s.transform),
                    EquivalenceClass(1, 1, C2.points, radius, s.transform),
                ]
                prov = Provenance("alg1", k, d, s.transform.kappa, l_k, s.h, s.epsilon,
                                  s.epsilon_auto, partition_index=p.index,
                                  partition_U1=p.U1, partition_U2=p.U2)
                return FiniteUniformBisimulation(sys, s.transform, classes, prov,
                                                 cfg.membership_tol)
    raise NoSeparationWithinBudget(cfg.k_max, *last)


def choose_eta(q: int, z: int) -> int:
    """Smallest eta >= 0 with q^(eta+1) > z."""
    eta = 0
    while q ** (eta + 1) <= z:
        eta += 1
    return eta


def refinement_offset(sys: SystemSpec, word: Sequence[int]) -> np.ndarray:
    """B u_1 + A B u_2 + ... + A^{eta-1} B u_eta, Horner order."""
    w = np.zeros(sys.n)
    for j in reversed(word):
        w = sys.BU[j] + apply_rows(sys.A, w[None, :])[0]
    return w


def algorithm2(sys: SystemSpec, cfg: RunConfig) -> FiniteUniformBisimulation:
    """q^(eta+1)-class bisimulation: per-letter base classes refined by input words.

    Class ids run over (word, base class) with words in lexicographic order of
    U^eta and base classes in letter order: id = word_rank * q + base.
    """
    s = _setup(sys, cfg)
    invertible, sigma_min = is_invertible(sys.A)
    if not invertible:
        raise NotInvertible(f"A is singular (smallest singular value {sigma_min:g})")
    s1 = s1_disjointness_check(sys)
    if not s1.certified:
        warnings.warn(
            "could not certify that the one-step sets B u_j + cl(A * forced responses) "
            f"are disjoint (worst margin {s1.min_margin:g}); continuing", RuntimeWarning)
    eta = choose_eta(sys.q, cfg.z)
    enum = ForcedResponse(sys, cfg.budget)
    last = (None, None)
    for k in range(1, cfg.k_max + 1):
        l_k = s.h * s.power_norms[k - 1]
        threshold = s.transform.kappa * l_k
        enum.check_budget(k)
        clouds = [enum.letter_block(k, j)[0] for j in range(sys.q)]
        d = float(letter_distance_matrix(clouds).min())
        last = (d, threshold)
        log.debug("k=%d d=%g kappa*l=%g", k, d, threshold)
        if _separated(d, threshold, cfg.slack_tol):
            break
    else:
        raise NoSeparationWithinBudget(cfg.k_max, *last)

    n_classes = sys.q ** (eta + 1)
    n_cells = n_classes * max(len(c) for c in clouds)
    if n_cells > cfg.budget:
        raise BudgetExceeded(eta, n_cells, cfg.budget)
    radius = d / (2 * s.transform.T_norm)
    power = matrix_powers(sys.A, eta)[eta]
    power.flags.writeable = False
    classes = []
    for word in itertools.product(range(sys.q), repeat=eta):
        ref = None
        if eta > 0:
            w = refinement_offset(sys, word)
            w.flags.writeable = False
            ref = Refinement(eta, tuple(word), w, power)
        for i, cloud in enumerate(clouds):
            classes.append(EquivalenceClass(len(classes), i, cloud, radius, s.transform, ref))
    prov = Provenance("alg2", k, d, s.transform.kappa, l_k, s.h, s.epsilon, s.epsilon_auto,
                      eta=eta, z=cfg.z)
    return FiniteUniformBisimulation(sys, s.transform, classes, prov, cfg.membership_tol)


def classify(fub, x) -> Optional[int]:
    return fub.classify(x)


# -------------------------------------------------------------- geometry

def class_geometry(fub: FiniteUniformBisimulation, cid: int, vertices: bool = True) -> list[dict]:
    """One record per cell of class ``cid``.

    For n = 2 each record also lists the parallelogram corners
    M (c +/- r T e_i) + w, ordered +e1, +e2, -e1, -e2.
    """
    c = fub.classes[cid]
    n = fub.sys.n
    if vertices and n != 2:
        raise ValueError(f"vertex lists are only defined for n = 2, got n = {n}")
    M, w, T, r = c.map, c.offset, fub.transform.T, c.radius
    out = []
    for center in c.base_centers:
        cell = {"center": center.tolist(), "radius": r, "T": T.tolist(),
                "M": M.tolist(), "w": w.tolist()}
        if vertices:
            corners = [center + sgn * r * T[:, i] for sgn in (1, -1) for i in range(2)]
            cell["vertices"] = [(M @ v + w).tolist() for v in corners]
        out.append(cell)
    return out


def cell_vertices(fub: FiniteUniformBisimulation, cid: int) -> np.ndarray:
    """All corners M (c +/- r T e_i) + w of the cells of class ``cid``, stacked."""
    c = fub.classes[cid]
    steps = c.radius * np.concatenate([fub.transform.T.T, -fub.transform.T.T])
    corners = (c.base_centers[:, None, :] + steps[None, :, :]).reshape(-1, fub.sys.n)
    return apply_rows(c.map, corners) + c.offset


def estimated_diameter(fub: FiniteUniformBisimulation, cid: int) -> float:
    """1-norm diameter of the class.

    Each cell is a convex polytope, and the diameter of a union of convex
    polytopes is attained between two vertices, so this is exact up to rounding.
    """
    V = cell_vertices(fub, cid)
    return float(max(np.abs(V[s:s + 256, None, :] - V[None, :, :]).sum(axis=2).max()
                     for s in range(0, len(V), 256)))


def diameter_upper_bound(fub: FiniteUniformBisimulation, cid: int) -> float:
    """||M||_1 * (largest center spread + 2 r ||T||_1)."""
    c = fub.classes[cid]
    P = c.base_centers
    spread = float(np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2).max()) if len(P) > 1 else 0.0
    return induced_one_norm(c.map) * (spread + 2 * c.radius * fub.transform.T_norm)


def diameter_bound(fub: FiniteUniformBisimulation) -> float:
    """||A^eta||_1 (diam bound of forced responses + diam of the S-ball)."""
    R = reach_norm_bound(fub.sys)
    r = max(c.radius for c in fub.classes)
    return induced_one_norm(fub.map) * (2 * R + 2 * r * fub.transform.T_norm)


# ----------------------------------------------------- generic relations

class PredicateRelation:
    """A finite partition given by membership predicates, for hand-built fixtures.

    ``predicates[i](X)`` returns a boolean per row; ``samplers[i](rng, size)``
    draws interior points; ``representatives[i]`` is the skeleton used when
    building a finite state machine.
    """

    def __init__(self, sys: SystemSpec, names: Sequence[str],
                 predicates: Sequence[Callable], samplers: Sequence[Callable],
                 representatives: Sequence):
        self.sys = sys
        self.names = list(names)
        self._pred = list(predicates)
        self._samplers = list(samplers)
        self._reps = [np.atleast_2d(np.asarray(r, float)) for r in representatives]

    @property
    def class_ids(self) -> list[int]:
        return list(range(len(self.names)))

    def __len__(self):
        return len(self.names)

    def memberships(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        return np.stack([np.asarray(p(X), bool) for p in self._pred], axis=1)

    def classify_many(self, X) -> np.ndarray:
        M = self.memberships(X)
        return np.where(M.any(axis=1), M.argmax(axis=1), -1)

    def classify(self, x) -> Optional[int]:
        c = int(self.classify_many(np.asarray(x, float)[None, :])[0])
        return None if c < 0 else c

    def representatives(self, cid: int) -> np.ndarray:
        return self._reps[cid]

    def sample(self, cid: int, rng: np.random.Generator, size: int = 1,
               scale: float = 0.999) -> np.ndarray:
        return np.asarray(self._samplers[cid](rng, size), float)


def labeled_point_relation(sys: SystemSpec, names: Sequence[str],
                           points: dict) -> PredicateRelation:
    """Relation known only on finitely many labeled points: ``points[name]`` lists
    the members of that class; everything else is unclassified."""
    members = [np.atleast_2d(np.asarray(points.get(nm, np.empty((0, sys.n))), float))
               .reshape(-1, sys.n) for nm in names]

    def pred(P):
        return lambda X: (X[:, None, :] == P[None, :, :]).all(axis=2).any(axis=1) \
            if len(P) else np.zeros(len(X), bool)

    def sampler(P):
        return lambda rng, size: P[rng.integers(len(P), size=size)]

    return PredicateRelation(sys, names, [pred(P) for P in members],
                             [sampler(P) for P in members], members)
