"""Seeded auditors for the properties a bisimulation must have.

Random streams come from numpy's PCG64 bit generator (O'Neill's permuted
congruential generator, 128-bit state, XSL-RR output) seeded through
``numpy.random.SeedSequence(seed)``; the stream for a given seed is the same on
every platform.  All audits draw from a fresh generator so that (seed, options)
fix every sample.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fixtures
from .bisim import FiniteUniformBisimulation
from .dfm import Dfm, build_dfm, simulate_plant
from .errors import NotWellDefined, UnclassifiableSuccessor
from .sysmodel import RunConfig, SystemSpec

MAX_WITNESSES = 25
SAMPLE_SCALE = 0.999
DISJOINT_RTOL = 1e-9


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass
class AuditReport:
    property: str
    samples: int
    violations: list = field(default_factory=list)
    violation_count: int = 0
    seed: Optional[int] = None
    elapsed: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "FAIL" if self.violation_count else "PASS"

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def add(self, witness: dict):
        self.violation_count += 1
        if len(self.violations) < MAX_WITNESSES:
            self.violations.append(witness)

    def as_dict(self, timing: bool = False) -> dict:
        d = {
            "property": self.property,
            "verdict": self.verdict,
            "samples": self.samples,
            "violation_count": self.violation_count,
            "violations": self.violations,
            "seed": self.seed,
            "notes": self.notes,
        }
        if timing:
            d["elapsed_s"] = self.elapsed
        return d


def _populated(rel) -> list[int]:
    return [c for c in rel.class_ids if len(rel.representatives(c))]


def _spread(rel, rng, count: int):
    """``count`` interior samples assigned round-robin to the (nonempty) classes."""
    ids = _populated(rel)
    owner = np.array(ids, dtype=np.int64)[np.arange(count) % max(1, len(ids))] if ids \
        else np.empty(0, np.int64)
    X = np.empty((count, rel.sys.n))
    for c in ids:
        idx = np.flatnonzero(owner == c)
        if len(idx):
            X[idx] = rel.sample(c, rng, len(idx), SAMPLE_SCALE)
    return X, owner


def sample_class_point(rel, cid: int, rng: np.random.Generator,
                       scale: float = SAMPLE_SCALE) -> np.ndarray:
    return rel.sample(cid, rng, 1, scale)[0]


def _no_evidence(report, count):
    if count == 0:
        report.notes.append("no evidence: zero samples requested")


def check_invariance(sys: SystemSpec, rel, cfg: RunConfig) -> AuditReport:
    """Random trajectories from class interiors must never leave the union of classes."""
    t0 = time.perf_counter()
    rng = make_rng(cfg.seed)
    rep = AuditReport("invariance", cfg.sample_count, seed=cfg.seed)
    _no_evidence(rep, cfg.sample_count)
    X, owner = _spread(rel, rng, cfg.sample_count)
    words = rng.integers(sys.q, size=(cfg.sample_count, cfg.trajectory_depth))
    start = rel.classify_many(X) if len(X) else np.empty(0, np.int64)
    alive = np.ones(len(X), bool)
    for i in np.flatnonzero(start != owner):
        rep.add({"kind": "sample-outside-class", "sample": int(i), "x0": X[i].tolist(),
                 "class": int(owner[i]), "t": 0, "word": []})
        alive[i] = False
    x0 = X.copy()
    for t in range(cfg.trajectory_depth):
        X = X @ sys.A.T + sys.BU[words[:, t]]
        labels = rel.classify_many(X) if len(X) else np.empty(0, np.int64)
        for i in np.flatnonzero(alive & (labels < 0)):
            rep.add({"kind": "left-invariant-set", "sample": int(i), "x0": x0[i].tolist(),
                     "class": int(owner[i]), "t": t + 1,
                     "word": words[i, :t + 1].tolist(), "x": X[i].tolist()})
            alive[i] = False
    rep.elapsed = time.perf_counter() - t0
    return rep


def check_uniformity(sys: SystemSpec, rel, cfg: RunConfig) -> AuditReport:
    """Pairs from one class must land in one class under every letter.

    Pairs where a successor is unclassified are counted in the notes and left
    to the invariance audit.
    """
    t0 = time.perf_counter()
    rng = make_rng(cfg.seed)
    rep = AuditReport("uniformity", cfg.sample_count, seed=cfg.seed)
    _no_evidence(rep, cfg.sample_count)
    if len(rel.class_ids) < 2:
        rep.notes.append("relation has fewer than two classes; "
                         "a finite uniform bisimulation needs more than one")
    X, owner = _spread(rel, rng, cfg.sample_count)
    Y = np.empty_like(X)
    for c in np.unique(owner):
        idx = np.flatnonzero(owner == c)
        Y[idx] = rel.sample(int(c), rng, len(idx), SAMPLE_SCALE)
    unclassified = 0
    for j in range(sys.q):
        ta = rel.classify_many(X @ sys.A.T + sys.BU[j]) if len(X) else np.empty(0, int)
        tb = rel.classify_many(Y @ sys.A.T + sys.BU[j]) if len(X) else np.empty(0, int)
        unclassified += int(((ta < 0) | (tb < 0)).sum())
        for i in np.flatnonzero((ta >= 0) & (tb >= 0) & (ta != tb)):
            rep.add({"kind": "split-successors", "class": int(owner[i]), "letter": j,
                     "x": X[i].tolist(), "x_prime": Y[i].tolist(),
                     "targets": [int(ta[i]), int(tb[i])]})
    if unclassified:
        rep.notes.append(f"{unclassified} successor pairs had an unclassified member")
    rep.elapsed = time.perf_counter() - t0
    return rep


def _analytic_disjointness(fub: FiniteUniformBisimulation, rep: AuditReport):
    # base clouds of different classes are at least d apart
    d = fub.provenance.d
    bases = {}
    for c in fub.classes:
        bases.setdefault(c.base_index, c.base_centers)
    keys = sorted(bases)
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            P, Q = bases[keys[a]], bases[keys[b]]
            D = np.abs(P[:, None, :] - Q[None, :, :]).sum(axis=2)
            bad = np.argwhere(D < d * (1 - DISJOINT_RTOL))
            for i, k in bad[:MAX_WITNESSES]:
                rep.add({"kind": "base-centers-too-close", "bases": [keys[a], keys[b]],
                         "centers": [P[i].tolist(), Q[k].tolist()], "distance": float(D[i, k]),
                         "d": d})
    # every pair of cells of different classes: open 1-norm balls in cell coordinates
    C, owner, r = fub.cell_centers, fub.cell_owner, fub.cell_radius
    for s in range(0, len(C), 512):
        D = np.abs(C[s:s + 512, None, :] - C[None, :, :]).sum(axis=2)
        need = (r[s:s + 512, None] + r[None, :]) * (1 - DISJOINT_RTOL)
        clash = (D < need) & (owner[s:s + 512, None] < owner[None, :])
        for i, k in np.argwhere(clash):
            rep.add({"kind": "cells-overlap", "classes": [int(owner[s + i]), int(owner[k])],
                     "cells": [int(s + i), int(k)], "distance": float(D[i, k]),
                     "radius_sum": float(r[s + i] + r[k])})


def check_disjointness(rel, cfg: RunConfig) -> AuditReport:
    """Analytic separation of the cells (bisimulations only) plus a sampled check
    that each sample satisfies exactly one membership predicate."""
    t0 = time.perf_counter()
    rng = make_rng(cfg.seed)
    rep = AuditReport("disjointness", cfg.sample_count, seed=cfg.seed)
    if isinstance(rel, FiniteUniformBisimulation):
        _analytic_disjointness(rel, rep)
    else:
        rep.notes.append("no analytic check for predicate relations")
    _no_evidence(rep, cfg.sample_count)
    X, owner = _spread(rel, rng, cfg.sample_count)
    if len(X):
        M = rel.memberships(X)
        hits = M.sum(axis=1)
        for i in np.flatnonzero((hits != 1) | ~M[np.arange(len(X)), owner]):
            rep.add({"kind": "membership-count", "x": X[i].tolist(), "class": int(owner[i]),
                     "members": np.flatnonzero(M[i]).tolist()})
    rep.elapsed = time.perf_counter() - t0
    return rep


def check_trace_equivalence(sys: SystemSpec, rel, dfm: Dfm, cfg: RunConfig,
                            words: int = 1000, length: int = 100) -> AuditReport:
    """Plant trajectories and machine runs must carry the same class labels."""
    t0 = time.perf_counter()
    rng = make_rng(cfg.seed)
    rep = AuditReport("trace-equivalence", words, seed=cfg.seed)
    _no_evidence(rep, words)
    X, owner = _spread(rel, rng, words)
    W = rng.integers(sys.q, size=(words, length))
    x0 = X.copy()
    states = rel.classify_many(X) if len(X) else np.empty(0, np.int64)
    live = states >= 0
    for i in np.flatnonzero(~live):
        rep.add({"kind": "initial-state-unclassified", "x0": x0[i].tolist()})
    states = np.where(live, states, 0)
    for t in range(length):
        X = X @ sys.A.T + sys.BU[W[:, t]]
        states = dfm.delta[states, W[:, t]]
        labels = rel.classify_many(X) if len(X) else np.empty(0, np.int64)
        for i in np.flatnonzero(live & (labels != states)):
            rep.add({"kind": "trace-divergence", "x0": x0[i].tolist(), "t": t + 1,
                     "word": W[i, :t + 1].tolist(), "plant_label": int(labels[i]),
                     "dfm_label": int(states[i])})
            live[i] = False
    rep.elapsed = time.perf_counter() - t0
    return rep


def check_regularity(fub: FiniteUniformBisimulation) -> AuditReport:
    """Cells are open: positive radius, and a boundary point is not inside its own cell."""
    rep = AuditReport("regularity", len(fub.cell_centers))
    for c in fub.classes:
        if not c.radius > 0:
            rep.add({"kind": "nonpositive-radius", "class": c.id, "radius": c.radius})
    T = fub.transform.T
    for c in fub.classes:
        center = c.base_centers[0]
        edge = c.map @ (center + c.radius * T[:, 0]) + c.offset
        cell = np.flatnonzero(fub.cell_owner == c.id)[0]
        slack = fub._cell_slack(edge[None, :])[0, cell]
        if slack > fub.membership_tol:
            rep.add({"kind": "boundary-inside", "class": c.id, "x": edge.tolist(),
                     "slack": float(slack)})
    return rep


def recheck_witness(sys: SystemSpec, rel, prop: str, w: dict, dfm: Optional[Dfm] = None) -> bool:
    """Re-evaluate a single witness from scratch; True iff the violation reproduces."""
    if prop == "invariance":
        if w["kind"] == "sample-outside-class":
            return rel.classify(w["x0"]) != w["class"]
        xs = simulate_plant(sys, w["x0"], w["word"])
        return rel.classify(xs[-1]) is None
    if prop == "uniformity":
        u = sys.BU[w["letter"]]
        a = rel.classify(sys.A @ np.asarray(w["x"]) + u)
        b = rel.classify(sys.A @ np.asarray(w["x_prime"]) + u)
        return a is not None and b is not None and a != b
    if prop == "disjointness":
        if w["kind"] == "membership-count":
            M = rel.memberships(np.asarray(w["x"])[None, :])[0]
            return M.sum() != 1 or not M[w["class"]]
        if w["kind"] == "cells-overlap":
            i, k = w["cells"]
            D = np.abs(rel.cell_centers[i] - rel.cell_centers[k]).sum()
            return D < (rel.cell_radius[i] + rel.cell_radius[k]) * (1 - DISJOINT_RTOL)
        P, Q = map(np.asarray, w["centers"])
        return np.abs(P - Q).sum() < w["d"] * (1 - DISJOINT_RTOL)
    if prop == "trace-equivalence" and w["kind"] == "machine-undefined":
        try:
            build_dfm(rel)
        except (NotWellDefined, UnclassifiableSuccessor):
            return True
        return False
    if prop == "trace-equivalence":
        q0 = rel.classify(w["x0"])
        xs = simulate_plant(sys, w["x0"], w["word"])
        q = q0
        for j in w["word"]:
            q = dfm.step(q, j)
        return rel.classify(xs[-1]) != q
    raise ValueError(f"unknown property {prop!r}")


# ---------------------------------------------------------- diagnostics

@dataclass
class Diagnostic:
    rho: float
    warnings: list = field(default_factory=list)  # (code, message)
    notes: list = field(default_factory=list)  # {"code", "message"} dicts

    @property
    def codes(self) -> list[str]:
        return [c for c, _ in self.warnings]

    def as_dict(self):
        return {"rho": self.rho, "warnings": [{"code": c, "message": m} for c, m in self.warnings],
                "notes": self.notes}


UNSTABLE_BOUNDED = "unstable-no-bounded-regular-fub"
UNSTABLE_SCALAR = "unstable-scalar-no-regular-fub"
UNBOUNDED_CAVEAT = "unbounded-zero-class-caveat"


def necessary_condition_report(sys: SystemSpec) -> Diagnostic:
    """Contrapositive of the necessary conditions for regular bisimulations.

    With rho(A) > 1 no regular finite uniform bisimulation can have 0 in the
    interior of a bounded class [0]; for scalar plants (|a| > 1) boundedness is
    not even needed.
    """
    diag = Diagnostic(sys.rho)
    has_zero = any(not np.any(u) for u in sys.U)
    if sys.n == 1:
        a = float(sys.A[0, 0])
        if abs(a) > 1:
            diag.warnings.append((UNSTABLE_SCALAR,
                                  f"|a| = {abs(a):g} > 1: no regular finite uniform bisimulation "
                                  "on an invariant set has 0 in the interior of its class"))
    elif sys.rho > 1:
        diag.warnings.append((UNSTABLE_BOUNDED,
                              f"rho(A) = {sys.rho:g} > 1: no regular finite uniform bisimulation "
                              "on an invariant set has 0 in the interior of a bounded class [0]"))
        diag.notes.append({"code": UNBOUNDED_CAVEAT,
                           "message": "regular bisimulations whose zero class is unbounded "
                                      "may still exist"})
    if diag.warnings and not has_zero:
        diag.notes.append({"code": "zero-letter-absent",
                           "message": "the alphabet lacks 0, which the necessary conditions "
                                      "assume"})
    return diag


def counterexample_audit() -> AuditReport:
    """x, x' in one class of a classical bisimulation whose successors under the
    same letter fall in different classes; reproduced in exact arithmetic."""
    t0 = time.perf_counter()
    rep = AuditReport("counterexample", 2)
    A, B, u = fixtures.COUNTER_A, fixtures.COUNTER_B, fixtures.COUNTER_U
    for x, expected in ((fixtures.COUNTER_X, fixtures.COUNTER_NEXT_X),
                        (fixtures.COUNTER_X_PRIME, fixtures.COUNTER_NEXT_X_PRIME)):
        got = A @ x + B @ u
        if not np.array_equal(got, expected):
            rep.add({"x": x.tolist(), "expected": expected.tolist(), "got": got.tolist()})
    rep.elapsed = time.perf_counter() - t0
    return rep


def run_audits(sys: SystemSpec, rel, cfg: RunConfig, dfm: Optional[Dfm] = None,
               trace_words: int = 1000, trace_length: int = 100) -> list[AuditReport]:
    reports = [check_invariance(sys, rel, cfg), check_uniformity(sys, rel, cfg),
               check_disjointness(rel, cfg)]
    if dfm is None:
        try:
            dfm = build_dfm(rel)
        except (NotWellDefined, UnclassifiableSuccessor) as exc:
            rep = AuditReport("trace-equivalence", 0, seed=cfg.seed)
            rep.add({"kind": "machine-undefined", "error": type(exc).__name__,
                     "message": str(exc)})
            reports.append(rep)
            return reports
    reports.append(check_trace_equivalence(sys, rel, dfm, cfg, trace_words, trace_length))
    return reports
