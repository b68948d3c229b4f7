"""Plant description, run options, and the YAML spec file format.

A spec file looks like::

    format: finbisim-spec/1
    n: 2
    m: 2
    A: [[0.25, -0.15], [0, 0.1]]
    B: [[1, 0], [0, 1]]
    U: [[1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]]
    options:
      epsilon: auto
      k_max: 12
      z: 4
    transform: null          # optional n x n override for T

Numbers may be YAML numbers or strings holding a decimal or a ``p/q`` rational.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from functools import cached_property
from typing import Optional, Union

import numpy as np
import yaml

from .errors import SpecError
from . import linalg

SPEC_FORMAT = "finbisim-spec/1"

# smallest singular value must exceed this multiple of ||A||_1
INVERTIBILITY_RTOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """x_{t+1} = A x_t + B u_t with u_t drawn from the finite alphabet U.

    ``U`` is stored as a (q, m) array whose row order is the canonical letter
    order used for every enumeration.
    """

    A: np.ndarray
    B: np.ndarray
    U: np.ndarray
    transform_override: Optional[np.ndarray] = None

    def __post_init__(self):
        A = _frozen(self.A)
        B = _frozen(self.B)
        U = _frozen(self.U)
        if U.ndim == 1:
            U = _frozen(U.reshape(-1, 1))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "U", U)
        if self.transform_override is not None:
            object.__setattr__(self, "transform_override", _frozen(self.transform_override))
        n = A.shape[0]
        if A.ndim != 2 or A.shape != (n, n) or n < 1:
            raise SpecError(f"A must be square, got shape {A.shape}", "A")
        if B.ndim != 2 or B.shape[0] != n or B.shape[1] < 1:
            raise SpecError(f"B must be {n} x m, got shape {B.shape}", "B")
        if U.ndim != 2 or U.shape[0] < 1 or U.shape[1] != B.shape[1]:
            raise SpecError(
                f"alphabet letters must be {B.shape[1]}-vectors, got shape {U.shape}", "U"
            )
        for name, arr in (("A", A), ("B", B), ("U", U)):
            if not np.all(np.isfinite(arr)):
                raise SpecError("non-finite entry", name)
        seen = {}
        for j, row in enumerate(U):
            key = row.tobytes()
            if key in seen:
                raise SpecError(f"duplicate letter {row.tolist()} (also U[{seen[key]}])", f"U[{j}]")
            seen[key] = j
        T = self.transform_override
        if T is not None and T.shape != (n, n):
            raise SpecError(f"transform must be {n} x {n}", "transform")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.U.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return linalg.eigenvalues(self.A)

    @cached_property
    def rho(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    @cached_property
    def BU(self) -> np.ndarray:
        """Images B u of the letters, one row per letter."""
        return _frozen(linalg.apply_rows(self.B, self.U))

    def __eq__(self, other):
        if not isinstance(other, SystemSpec):
            return NotImplemented
        same_T = (self.transform_override is None) == (other.transform_override is None)
        if same_T and self.transform_override is not None:
            same_T = _bits_equal(self.transform_override, other.transform_override)
        return (
            same_T
            and _bits_equal(self.A, other.A)
            and _bits_equal(self.B, other.B)
            and _bits_equal(self.U, other.U)
        )

    __hash__ = None

    def digest(self) -> str:
        """sha256 over the exact bits of (A, B, U, transform override)."""
        h = hashlib.sha256()
        for arr in (self.A, self.B, self.U):
            h.update(str(arr.shape).encode())
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        if self.transform_override is not None:
            h.update(b"T")
            h.update(np.ascontiguousarray(self.transform_override, dtype="<f8").tobytes())
        return h.hexdigest()


def _bits_equal(a, b) -> bool:
    return a.shape == b.shape and a.tobytes() == b.tobytes()


@dataclass(frozen=True)
class RunConfig:
    epsilon: Union[float, str] = "auto"
    k_max: int = 12
    z: int = 1
    sample_count: int = 10_000
    trajectory_depth: int = 50
    seed: int = 0
    membership_tol: float = 1e-12
    slack_tol: float = 1e-9
    budget: int = 10_000_000

    def __post_init__(self):
        if self.epsilon != "auto":
            if isinstance(self.epsilon, str) or not math.isfinite(self.epsilon) or self.epsilon <= 0:
                raise SpecError(f"epsilon must be 'auto' or a positive real, got {self.epsilon!r}",
                                "options.epsilon")
        for name in ("k_max", "z", "trajectory_depth", "budget"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise SpecError(f"must be a positive integer, got {v!r}", f"options.{name}")
        if not isinstance(self.sample_count, int) or self.sample_count < 0:
            raise SpecError("must be a nonnegative integer", "options.sample_count")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise SpecError("must be an unsigned 64-bit integer", "options.seed")
        for name in ("membership_tol", "slack_tol"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise SpecError("must be a nonnegative real", f"options.{name}")

    def resolve_epsilon(self, rho: float) -> tuple[float, bool]:
        """Return (epsilon, was_auto). Raises SpecError when out of (0, 1 - rho)."""
        if self.epsilon == "auto":
            if rho >= 1:
                raise SpecError(f"cannot choose epsilon: spectral radius {rho} >= 1",
                                "options.epsilon")
            return (1.0 - rho) / 2.0, True
        if not 0 < self.epsilon < 1 - rho:
            raise SpecError(
                f"epsilon={self.epsilon} outside (0, 1 - rho(A)) = (0, {1 - rho})",
                "options.epsilon",
            )
        return float(self.epsilon), False


_OPTION_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_OPTIONS = {"k_max", "z", "sample_count", "trajectory_depth", "seed", "budget"}


# ---------------------------------------------------------------- parsing

class _Located:
    """Maps a field path such as ``A[1][0]`` to its 1-based line number."""

    def __init__(self, root):
        self.lines = {}
        if root is not None:
            self._walk(root, "")

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = str(k.value)
                self._walk(v, f"{path}.{key}" if path else key)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, f"{path}[{i}]")

    def at(self, path):
        line = self.lines.get(path)
        return f"line {line}, {path}" if line else path


def _number(value, where, loc) -> float:
    if isinstance(value, bool):
        raise SpecError(f"expected a number, got {value!r}", loc.at(where))
    if isinstance(value, (int, float)):
        x = float(value)
    elif isinstance(value, str):
        try:
            x = float(Fraction(value.strip())) if "/" in value else float(value)
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"not a decimal or p/q literal: {value!r}", loc.at(where)) from None
    else:
        raise SpecError(f"expected a number, got {type(value).__name__}", loc.at(where))
    if not math.isfinite(x):
        raise SpecError(f"non-finite entry {value!r}", loc.at(where))
    return x


def _matrix(value, where, loc, rows=None, cols=None) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise SpecError("expected a nonempty list of rows", loc.at(where))
    out = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            row = [row] if cols == 1 else row
        if not isinstance(row, list):
            raise SpecError("expected a list", loc.at(f"{where}[{i}]"))
        out.append([_number(v, f"{where}[{i}][{j}]", loc) for j, v in enumerate(row)])
    widths = {len(r) for r in out}
    if len(widths) != 1:
        raise SpecError("ragged rows", loc.at(where))
    arr = np.array(out, dtype=float)
    if rows is not None and arr.shape[0] != rows:
        raise SpecError(f"expected {rows} rows, got {arr.shape[0]}", loc.at(where))
    if cols is not None and arr.shape[1] != cols:
        raise SpecError(f"expected {cols} columns, got {arr.shape[1]}", loc.at(where))
    return arr


def _posint(doc, key, loc) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise SpecError(f"expected a positive integer, got {v!r}", loc.at(key))
    return v


def parse_spec(text: str) -> tuple[SystemSpec, RunConfig]:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark else None
        raise SpecError(f"malformed spec file: {getattr(exc, 'problem', exc)}", where) from None
    loc = _Located(root)
    if not isinstance(doc, dict):
        raise SpecError("spec file must be a mapping", "line 1")
    unknown = set(doc) - {"format", "n", "m", "A", "B", "U", "options", "transform"}
    if unknown:
        k = sorted(map(str, unknown))[0]
        raise SpecError(f"unknown field {k!r}", loc.at(k))
    if doc.get("format") != SPEC_FORMAT:
        raise SpecError(f"format must be {SPEC_FORMAT!r}, got {doc.get('format')!r}",
                        loc.at("format") if "format" in doc else "format")
    for key in ("n", "m", "A", "B", "U"):
        if key not in doc:
            raise SpecError("missing required field", key)
    n = _posint(doc, "n", loc)
    m = _posint(doc, "m", loc)
    A = _matrix(doc["A"], "A", loc, n, n)
    B = _matrix(doc["B"], "B", loc, n, m)
    U = _matrix(doc["U"], "U", loc, None, m)
    T = None
    if doc.get("transform") is not None:
        T = _matrix(doc["transform"], "transform", loc, n, n)
    sys = SystemSpec(A, B, U, T)

    opts = doc.get("options") or {}
    if not isinstance(opts, dict):
        raise SpecError("options must be a mapping", loc.at("options"))
    kwargs = {}
    for key, value in opts.items():
        where = f"options.{key}"
        if key not in _OPTION_TYPES:
            raise SpecError(f"unknown option {key!r}", loc.at(where))
        if key in _INT_OPTIONS:
            if isinstance(value, str) and value.strip().lstrip("+").isdigit():
                value = int(value)
            if not isinstance(value, int) or isinstance(value, bool):
                raise SpecError(f"expected an integer, got {value!r}", loc.at(where))
            kwargs[key] = value
        elif key == "epsilon" and value == "auto":
            kwargs[key] = "auto"
        else:
            kwargs[key] = _number(value, where, loc)
    try:
        cfg = RunConfig(**kwargs)
    except SpecError as exc:
        raise SpecError(str(exc).split(": ", 1)[-1], loc.at(exc.locator)) from None
    if cfg.epsilon != "auto":
        try:
            cfg.resolve_epsilon(sys.rho)
        except SpecError as exc:
            raise SpecError(str(exc).split(": ", 1)[-1], loc.at("options.epsilon")) from None
    return sys, cfg


def load_spec(path) -> tuple[SystemSpec, RunConfig]:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def serialize_spec(sys: SystemSpec, cfg: Optional[RunConfig] = None) -> str:
    """Inverse of :func:`parse_spec`; floats are written with ``repr`` so bits survive."""
    doc = {
        "format": SPEC_FORMAT,
        "n": sys.n,
        "m": sys.m,
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "U": sys.U.tolist(),
    }
    if sys.transform_override is not None:
        doc["transform"] = sys.transform_override.tolist()
    if cfg is not None:
        doc["options"] = {f.name: getattr(cfg, f.name) for f in fields(RunConfig)}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


# ------------------------------------------------------------- hypotheses

@dataclass(frozen=True)
class HypothesisReport:
    rho: float
    schur_stable: bool
    zero_in_alphabet: bool
    A_invertible: bool
    multi_letter: bool
    sigma_min: float = field(repr=False, default=0.0)

    def as_dict(self):
        return {
            "rho": self.rho,
            "schur_stable": self.schur_stable,
            "zero_in_alphabet": self.zero_in_alphabet,
            "A_invertible": self.A_invertible,
            "multi_letter": self.multi_letter,
        }


def is_invertible(A: np.ndarray) -> tuple[bool, float]:
    sigma_min = float(np.linalg.svd(A, compute_uv=False).min())
    return sigma_min > INVERTIBILITY_RTOL * linalg.induced_one_norm(A), sigma_min


def validate_hypotheses(sys: SystemSpec) -> HypothesisReport:
    rho = sys.rho
    invertible, sigma_min = is_invertible(sys.A)
    zero = any(not np.any(row) for row in sys.U)
    return HypothesisReport(
        rho=rho,
        schur_stable=rho < 1,
        zero_in_alphabet=zero,
        A_invertible=invertible,
        multi_letter=sys.q > 1,
        sigma_min=sigma_min,
    )


def with_options(cfg: RunConfig, **changes) -> RunConfig:
    """``dataclasses.replace`` that drops ``None`` values (handy for CLI flags)."""
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
