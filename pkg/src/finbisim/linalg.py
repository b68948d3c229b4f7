"""Matrix analysis: spectra, induced 1-norms, powers, and the scaled Schur transform."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import NotSchurStable, NumericError, SpecError, UnsupportedSpectrum

DELTA_GRID = tuple(10.0 ** -p for p in range(13))
INVERSE_TOL = 1e-9
REACH_MAX_K = 64


def eigenvalues(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration failed: {exc}") from None


def spectral_radius(A) -> float:
    return float(np.max(np.abs(eigenvalues(A))))


def induced_one_norm(A) -> float:
    """Max absolute column sum."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.abs(A).sum(axis=0).max())


def apply_rows(M, X) -> np.ndarray:
    """Rows of ``X`` mapped by ``M`` (i.e. ``X @ M.T``), accumulated in a fixed
    column order so the bits do not depend on batch size or BLAS kernel."""
    M = np.asarray(M, dtype=float)
    X = np.asarray(X, dtype=float)
    out = np.empty((X.shape[0], M.shape[0]))
    for i in range(M.shape[0]):
        acc = M[i, 0] * X[:, 0]
        for j in range(1, M.shape[1]):
            acc = acc + M[i, j] * X[:, j]
        out[:, i] = acc
    return out


def matrix_powers(A, k_max: int) -> list[np.ndarray]:
    """[A^0, A^1, ..., A^k_max] by repeated multiplication."""
    A = np.asarray(A, dtype=float)
    out = [np.eye(A.shape[0])]
    for k in range(1, k_max + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            P = out[-1] @ A
        if not np.all(np.isfinite(P)):
            raise NumericError(f"A^{k} overflowed")
        out.append(P)
    return out


def power_norm_sequence(A, k_max: int) -> list[float]:
    """[||A^1||_1, ..., ||A^k_max||_1]."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    norms = [induced_one_norm(P) for P in matrix_powers(A, k_max)[1:]]
    if not np.all(np.isfinite(norms)):
        raise NumericError("power norm overflowed")
    return norms


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    T: np.ndarray
    T_inv: np.ndarray
    epsilon: float
    norm_certificate: float
    kappa: float
    rho: float

    @property
    def T_norm(self) -> float:
        return induced_one_norm(self.T)

    @property
    def T_inv_norm(self) -> float:
        return induced_one_norm(self.T_inv)

    def as_dict(self):
        return {
            "T": self.T.tolist(),
            "T_inv": self.T_inv.tolist(),
            "epsilon": self.epsilon,
            "norm_certificate": self.norm_certificate,
            "kappa": self.kappa,
            "rho": self.rho,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["T"], float), np.array(d["T_inv"], float), d["epsilon"],
                   d["norm_certificate"], d["kappa"], d["rho"])


def certify_transform(A, T, epsilon: float, rho: float | None = None,
                      T_inv=None) -> SimilarityTransform | None:
    """Check ``T`` against the norm bound and inverse gate; None if it fails."""
    A = np.asarray(A, dtype=float)
    rho = spectral_radius(A) if rho is None else rho
    if rho + epsilon >= 1:
        raise NotSchurStable(f"rho(A) + epsilon = {rho + epsilon} >= 1")
    T = np.asarray(T, dtype=float)
    if T_inv is None:
        try:
            T_inv = np.linalg.inv(T)
        except np.linalg.LinAlgError:
            return None
    if not (np.all(np.isfinite(T)) and np.all(np.isfinite(T_inv))):
        return None
    if induced_one_norm(T @ T_inv - np.eye(len(T))) > INVERSE_TOL:
        return None
    cert = induced_one_norm(T_inv @ A @ T)
    if not cert <= rho + epsilon:
        return None
    kappa = 2 * induced_one_norm(T) * induced_one_norm(T_inv) / (1 - rho - epsilon)
    if not (np.isfinite(kappa) and kappa > 0):
        return None
    T.flags.writeable = False
    T_inv.flags.writeable = False
    return SimilarityTransform(T, T_inv, float(epsilon), cert, float(kappa), float(rho))


def build_transform(A, epsilon: float, rho: float | None = None) -> SimilarityTransform:
    """T = Q diag(1, d, d^2, ...) from the real Schur form, first d on the decade
    grid 1 .. 1e-12 whose certificate holds."""
    A = np.asarray(A, dtype=float)
    rho = spectral_radius(A) if rho is None else rho
    if rho + epsilon >= 1:
        raise NotSchurStable(f"rho(A) + epsilon = {rho + epsilon} >= 1")
    _, Q = la.schur(A, output="real")
    n = A.shape[0]
    best = None
    for delta in DELTA_GRID:
        scale = delta ** np.arange(n)
        T = Q * scale
        T_inv = Q.T / scale[:, None]
        st = certify_transform(A, T, epsilon, rho, T_inv)
        if st is not None:
            return st
        cert = induced_one_norm(T_inv @ A @ T)
        best = cert if best is None else min(best, cert)
    raise UnsupportedSpectrum(
        f"no diagonal scaling of the real Schur basis reaches ||T^-1 A T||_1 <= "
        f"rho + epsilon = {rho + epsilon} (best found {best}); complex eigenvalue "
        "pairs often cause this. Supply T via the 'transform' field of the spec file."
    )


def transform_for(sys, epsilon: float) -> SimilarityTransform:
    """Use the spec file's T override when present, otherwise build one."""
    if sys.transform_override is not None:
        st = certify_transform(sys.A, sys.transform_override.copy(), epsilon, sys.rho)
        if st is None:
            raise SpecError(
                f"supplied transform fails ||T^-1 A T||_1 <= rho + epsilon = "
                f"{sys.rho + epsilon} or is not invertible", "transform")
        return st
    return build_transform(sys.A, epsilon, sys.rho)


def letter_gain(sys) -> float:
    """h = max ||B u||_1 over the alphabet."""
    return float(np.abs(sys.BU).sum(axis=1).max())


def reach_norm_bound(sys) -> float:
    """Upper bound R on ||alpha||_1 over all forced responses alpha.

    With K the first power such that ||A^K||_1 < 1,
    R = h * sum_{t<K} ||A^t||_1 / (1 - ||A^K||_1).
    """
    if sys.rho >= 1:
        raise NotSchurStable(f"rho(A) = {sys.rho} >= 1; forced responses are unbounded")
    h = letter_gain(sys)
    powers = matrix_powers(sys.A, REACH_MAX_K)
    norms = [induced_one_norm(P) for P in powers]
    for K in range(1, REACH_MAX_K + 1):
        if norms[K] < 1:
            return h * sum(norms[:K]) / (1 - norms[K])
    raise NumericError(
        f"||A^K||_1 >= 1 for every K <= {REACH_MAX_K}; A is too close to marginal stability"
    )
