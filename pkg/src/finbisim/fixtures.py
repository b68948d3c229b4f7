"""Reference systems and hand-built relations used by tests, scripts and audits."""
from __future__ import annotations

import numpy as np

from .bisim import PredicateRelation, labeled_point_relation
from .sysmodel import SystemSpec

# 3-state plant with a classical (non-uniform) finite bisimulation
COUNTER_A = np.array([[2.0, 0.0, -1.0], [-1.0, -7.0, 11.0], [0.0, 4.0, 6.0]])
COUNTER_B = np.array([[1.0, 2.0], [1.0, 1.0], [1.0, 1.0]])
COUNTER_X = np.array([1.0, -2.0, -3.0])
COUNTER_X_PRIME = np.array([8.0, -18.0, -24.0])
COUNTER_U = np.array([0.0, 60.0])
COUNTER_NEXT_X = np.array([125.0, 40.0, 34.0])
COUNTER_NEXT_X_PRIME = np.array([160.0, -86.0, -156.0])

FIVE_LETTERS = [[1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]]


def triangular_five_letter() -> SystemSpec:
    """A = [[1/4, -3/20], [0, 1/10]], B = I, letters 0 and the signed unit vectors."""
    return SystemSpec([[0.25, -0.15], [0.0, 0.1]], np.eye(2), FIVE_LETTERS)


def cantor_segments(swapped: bool = False) -> SystemSpec:
    """A = diag(1/2, 0) (or diag(0, 1/2) when ``swapped``), B = I, four letters."""
    A = np.diag([0.0, 0.5]) if swapped else np.diag([0.5, 0.0])
    return SystemSpec(A, np.eye(2), [[1, 0], [0, 1], [0, -1], [0, 0]])


def unstable_strips() -> SystemSpec:
    """A = diag(2, 1/2), B = I, only the zero letter."""
    return SystemSpec(np.diag([2.0, 0.5]), np.eye(2), [[0, 0]])


def scalar(a: float, letters=((0.0,), (1.0,))) -> SystemSpec:
    return SystemSpec([[a]], [[1.0]], [list(u) for u in letters])


def counterexample_system() -> SystemSpec:
    return SystemSpec(COUNTER_A, COUNTER_B, [COUNTER_U, [0.0, 0.0]])


def strip_relation(x_span: float = 10.0) -> PredicateRelation:
    """Classes {1 < |y| < 2} and {|y| < 1} on the unstable strip system.

    Both strips are unbounded in x; samples take |x| < ``x_span``.
    """

    def outer(rng, size):
        y = rng.uniform(1.0, 2.0, size) * rng.choice([-1.0, 1.0], size)
        y = np.where((np.abs(y) <= 1) | (np.abs(y) >= 2), 1.5 * np.sign(y), y)
        return np.column_stack([rng.uniform(-x_span, x_span, size), y])

    def inner(rng, size):
        y = rng.uniform(-1.0, 1.0, size)
        y = np.where(np.abs(y) >= 1, 0.0, y)
        return np.column_stack([rng.uniform(-x_span, x_span, size), y])

    return PredicateRelation(
        unstable_strips(),
        ["X1", "X2"],
        [lambda X: (np.abs(X[:, 1]) > 1) & (np.abs(X[:, 1]) < 2),
         lambda X: np.abs(X[:, 1]) < 1],
        [outer, inner],
        [[[0.0, 1.5], [0.0, -1.5], [3.0, 1.25], [-3.0, -1.75]],
         [[0.0, 0.0], [2.0, 0.5], [-2.0, -0.9]]],
    )


def counterexample_relation() -> PredicateRelation:
    """Eight-class partition known only at the points the counterexample uses:
    x and x' share class q1, their successors under u land in q2 and q1."""
    names = [f"q{i}" for i in range(1, 9)]
    return labeled_point_relation(
        counterexample_system(), names,
        {"q1": [COUNTER_X, COUNTER_X_PRIME, COUNTER_NEXT_X_PRIME],
         "q2": [COUNTER_NEXT_X]},
    )


# Closures of the forced-response set of the four-letter diagonal plant, as
# unions of closed segments ((x0, y0), (x1, y1)).
#
# Printed matrix diag(1/2, 0): y is the second entry of the last letter, so
# y in {-1, 0, 1}; x = sum 2^-t [u_t]_1 fills [0, 2] on y = 0 (last letter
# e1 or 0 after an e1 prefix) and [0, 1] on y = +-1.
PRINTED_CLOSURE = (((0.0, 0.0), (2.0, 0.0)), ((0.0, 1.0), (1.0, 1.0)),
                   ((0.0, -1.0), (1.0, -1.0)))
# Swapped matrix diag(0, 1/2): x is the first entry of the last letter and
# y = sum 2^-t [u_t]_2 fills [-2, 2] (halved after a final e1).
STATED_CLOSURE = (((0.0, -2.0), (0.0, 2.0)), ((1.0, -1.0), (1.0, 1.0)))


def segment_points(segments, step: float) -> np.ndarray:
    """Points spaced at most ``step`` apart along each segment, endpoints included."""
    out = []
    for p0, p1 in segments:
        p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
        count = int(np.ceil(np.abs(p1 - p0).sum() / step)) + 1
        out.append(p0 + np.linspace(0.0, 1.0, count)[:, None] * (p1 - p0))
    return np.concatenate(out)


def hausdorff_to_segments(P: np.ndarray, segments, step: float = 2.0 ** -14) -> float:
    """Euclidean Hausdorff distance between a point cloud and a union of segments.

    The segments are discretized at ``step``, so the result is within
    ``step / 2`` of the exact value.
    """
    from scipy.spatial import cKDTree

    S = segment_points(segments, step)
    d_ps = cKDTree(S).query(P)[0].max()
    d_sp = cKDTree(P).query(S)[0].max()
    return float(max(d_ps, d_sp))
