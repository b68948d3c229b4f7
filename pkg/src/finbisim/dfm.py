"""Quotient finite state machine of a bisimulation, its simulation, and exports."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NotWellDefined, UnclassifiableSuccessor

GRAPH_HEADER = "// finbisim-dfm/1"


@dataclass(frozen=True, eq=False)
class Dfm:
    """States are class ids 0..N-1; ``delta[s, j]`` is the successor under letter j."""

    names: tuple
    alphabet: np.ndarray
    delta: np.ndarray

    @property
    def states(self) -> list[int]:
        return list(range(len(self.names)))

    @property
    def q(self) -> int:
        return len(self.alphabet)

    def __eq__(self, other):
        return (isinstance(other, Dfm) and self.names == other.names
                and np.array_equal(self.alphabet, other.alphabet)
                and np.array_equal(self.delta, other.delta))

    def step(self, state: int, letter: int) -> int:
        return int(self.delta[state, letter])


def letter_index(alphabet: np.ndarray, u) -> int:
    hits = np.flatnonzero((np.asarray(alphabet) == np.asarray(u, float)).all(axis=1))
    if len(hits) == 0:
        raise KeyError(f"{u} is not a letter of the alphabet")
    return int(hits[0])


def build_dfm(rel) -> Dfm:
    """f(q, u) = class of A x + B u, required to agree for every representative x of q."""
    sys = rel.sys
    n_states = len(rel.class_ids)
    delta = np.empty((n_states, sys.q), dtype=np.int64)
    for cid in rel.class_ids:
        reps = np.atleast_2d(rel.representatives(cid))
        Ax = reps @ sys.A.T
        for j in range(sys.q):
            targets = rel.classify_many(Ax + sys.BU[j])
            known = np.flatnonzero(targets >= 0)
            if len(known):
                first = known[0]
                bad = known[targets[known] != targets[first]]
                if len(bad):
                    b = bad[0]
                    raise NotWellDefined(cid, j, (reps[first].tolist(), reps[b].tolist()),
                                         (int(targets[first]), int(targets[b])))
            missing = np.flatnonzero(targets < 0)
            if len(missing):
                raise UnclassifiableSuccessor(cid, j, reps[missing[0]].tolist())
            delta[cid, j] = targets[0]
    delta.flags.writeable = False
    return Dfm(tuple(rel.names), sys.U, delta)


def simulate_dfm(dfm: Dfm, q0: int, inputs: Sequence[int]) -> list[int]:
    if not 0 <= q0 < len(dfm.names):
        raise KeyError(f"unknown state {q0}")
    seq = [int(q0)]
    for j in inputs:
        if not 0 <= j < dfm.q:
            raise KeyError(f"unknown letter index {j}")
        seq.append(int(dfm.delta[seq[-1], j]))
    return seq


def simulate_plant(sys, x0, inputs: Sequence[int]) -> np.ndarray:
    """States x_0, ..., x_T of x_{t+1} = A x_t + B u_t (rows)."""
    xs = [np.asarray(x0, float)]
    for j in inputs:
        xs.append(sys.A @ xs[-1] + sys.BU[j])
    return np.array(xs)


@dataclass(frozen=True)
class TraceVerdict:
    ok: bool
    divergence: Optional[int] = None  # first index t with classify(x_t) != q_t
    plant_label: Optional[int] = None
    dfm_label: Optional[int] = None


def trace_equivalence_check(sys, rel, dfm: Dfm, x0, inputs: Sequence[int]) -> TraceVerdict:
    q0 = rel.classify(x0)
    if q0 is None:
        raise ValueError("initial state lies outside every class")
    xs = simulate_plant(sys, x0, inputs)
    qs = simulate_dfm(dfm, q0, inputs)
    labels = rel.classify_many(xs)
    for t, (a, b) in enumerate(zip(labels, qs)):
        if a != b:
            return TraceVerdict(False, t, None if a < 0 else int(a), b)
    return TraceVerdict(True)


# ----------------------------------------------------------------- export

def _letter_label(j: int, u) -> str:
    return f"u{j}=(" + ",".join(repr(float(v)) for v in u) + ")"


def export_graph(dfm: Dfm) -> str:
    """Graphviz DOT text: one node per state, one labeled edge per (state, letter)."""
    lines = [GRAPH_HEADER, "digraph dfm {"]
    for name in dfm.names:
        lines.append(f'  "{name}";')
    for s, name in enumerate(dfm.names):
        for j, u in enumerate(dfm.alphabet):
            lines.append(f'  "{name}" -> "{dfm.names[dfm.delta[s, j]]}" '
                         f'[label="{_letter_label(j, u)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


_NODE = re.compile(r'^\s*"([^"]+)";\s*$')
_EDGE = re.compile(r'^\s*"([^"]+)"\s*->\s*"([^"]+)"\s*\[label="u(\d+)=\(([^)]*)\)"\];\s*$')


def parse_graph(text: str) -> Dfm:
    """Read back the output of :func:`export_graph`."""
    names, edges, letters = [], [], {}
    for line in text.splitlines():
        if m := _EDGE.match(line):
            j = int(m.group(3))
            letters[j] = [float(v) for v in m.group(4).split(",")]
            edges.append((m.group(1), j, m.group(2)))
        elif m := _NODE.match(line):
            names.append(m.group(1))
    index = {nm: i for i, nm in enumerate(names)}
    q = len(letters)
    delta = np.full((len(names), q), -1, dtype=np.int64)
    for src, j, dst in edges:
        delta[index[src], j] = index[dst]
    if (delta < 0).any():
        raise ValueError("graph is not total")
    return Dfm(tuple(names), np.array([letters[j] for j in range(q)]), delta)


def transition_table(dfm: Dfm) -> str:
    """Tab-separated (state, letter-index, next-state) rows."""
    rows = ["state\tletter\tnext"]
    for s, name in enumerate(dfm.names):
        for j in range(dfm.q):
            rows.append(f"{name}\t{j}\t{dfm.names[dfm.delta[s, j]]}")
    return "\n".join(rows) + "\n"
