"""Versioned JSON files: the bisimulation artifact and the geometry export.

Floats are written with Python's shortest round-trip repr, so loading an
artifact reproduces every bit and identical runs give identical files.
"""
from __future__ import annotations

import json

import numpy as np

from . import __version__
from .bisim import (EquivalenceClass, FiniteUniformBisimulation, Provenance, Refinement,
                    class_geometry)
from .errors import DigestMismatch, FinBisimError
from .linalg import SimilarityTransform
from .sysmodel import SystemSpec

ARTIFACT_FORMAT = "finbisim-fub/1"
GEOMETRY_FORMAT = "finbisim-geometry/1"


def _system_dict(sys: SystemSpec) -> dict:
    d = {"n": sys.n, "m": sys.m, "A": sys.A.tolist(), "B": sys.B.tolist(), "U": sys.U.tolist()}
    if sys.transform_override is not None:
        d["transform"] = sys.transform_override.tolist()
    return d


def _system_from(d) -> SystemSpec:
    return SystemSpec(np.array(d["A"], float), np.array(d["B"], float),
                      np.array(d["U"], float),
                      None if d.get("transform") is None else np.array(d["transform"], float))


def fub_to_dict(fub: FiniteUniformBisimulation) -> dict:
    bases = {}
    for c in fub.classes:
        bases.setdefault(c.base_index, c.base_centers)
    ref = fub.classes[0].refinement
    return {
        "format": ARTIFACT_FORMAT,
        "tool_version": __version__,
        "spec_digest": fub.sys.digest(),
        "system": _system_dict(fub.sys),
        "transform": fub.transform.as_dict(),
        "provenance": fub.provenance.as_dict(),
        "membership_tol": fub.membership_tol,
        "refinement_map": None if ref is None else ref.power.tolist(),
        "base_classes": [bases[i].tolist() for i in sorted(bases)],
        "classes": [
            {
                "id": c.id,
                "base": c.base_index,
                "radius": c.radius,
                "word": None if c.refinement is None else list(c.refinement.word),
                "offset": None if c.refinement is None else c.refinement.offset.tolist(),
            }
            for c in fub.classes
        ],
    }


def fub_from_dict(d: dict) -> FiniteUniformBisimulation:
    if d.get("format") != ARTIFACT_FORMAT:
        raise FinBisimError(f"not a {ARTIFACT_FORMAT} artifact (format={d.get('format')!r})")
    sys = _system_from(d["system"])
    st = SimilarityTransform.from_dict(d["transform"])
    prov = Provenance.from_dict(d["provenance"])
    bases = [np.array(b, float).reshape(-1, sys.n) for b in d["base_classes"]]
    power = None if d["refinement_map"] is None else np.array(d["refinement_map"], float)
    classes = []
    for c in d["classes"]:
        ref = None
        if c["word"] is not None:
            ref = Refinement(prov.eta, tuple(c["word"]), np.array(c["offset"], float), power)
        classes.append(EquivalenceClass(c["id"], c["base"], bases[c["base"]], c["radius"], st, ref))
    return FiniteUniformBisimulation(sys, st, classes, prov, d.get("membership_tol", 1e-12))


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def save_fub(fub: FiniteUniformBisimulation, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(fub_to_dict(fub)))


def load_fub(path, expect_digest: str | None = None) -> FiniteUniformBisimulation:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if expect_digest is not None and d.get("spec_digest") != expect_digest:
        raise DigestMismatch(
            f"artifact was computed for spec digest {d.get('spec_digest')}, "
            f"but the given spec has digest {expect_digest}")
    return fub_from_dict(d)


def geometry_dict(fub: FiniteUniformBisimulation) -> dict:
    """One record per class; n = 2 records carry parallelogram vertex lists."""
    two_d = fub.sys.n == 2
    return {
        "format": GEOMETRY_FORMAT,
        "tool_version": __version__,
        "spec_digest": fub.sys.digest(),
        "provenance": fub.provenance.as_dict(),
        "T": fub.transform.T.tolist(),
        "classes": [
            {
                "id": c.id,
                "name": name,
                "radius": c.radius,
                "centers": c.base_centers.tolist(),
                "refinement": None if c.refinement is None else {
                    "eta": c.refinement.eta,
                    "word": list(c.refinement.word),
                    "w": c.refinement.offset.tolist(),
                    "A_eta": c.refinement.power.tolist(),
                },
                "cells": class_geometry(fub, c.id, vertices=two_d),
            }
            for c, name in zip(fub.classes, fub.names)
        ],
    }
