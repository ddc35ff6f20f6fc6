"""Sub-linear monotone functions on symmetric matrices.

G is represented as a support-function maximum G(A) = max over a finite set
Theta of PSD matrices of trace(A Sigma).  This form is automatically
sub-additive, positively homogeneous and monotone for the PSD order; the
property suite asserts it anyway, together with the entrywise Lipschitz
bound after normalising G(I) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SYM_TOL = 1e-12
PSD_TOL = 1e-10


def _check_symmetric(A: np.ndarray, d: int, what: str = "matrix") -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape != (d, d):
        raise DomainError(f"{what} must be {d}x{d}")
    if np.max(np.abs(A - A.T)) > SYM_TOL * max(1.0, float(np.max(np.abs(A)))):
        raise DomainError(f"{what} must be symmetric")
    return A


@dataclass(frozen=True, eq=False)
class GFunction:
    """Support-function representation by a finite set of PSD matrices."""

    dimension: int
    theta: tuple

    def __post_init__(self):
        if len(self.theta) == 0:
            raise DomainError("theta must be nonempty")
        mats = []
        for S in self.theta:
            S = _check_symmetric(S, self.dimension, "theta entry")
            if float(np.linalg.eigvalsh(S)[0]) < -PSD_TOL:
                raise DomainError("theta entry is not positive semidefinite")
            mats.append(S)
        object.__setattr__(self, "theta", tuple(mats))

    @classmethod
    def from_matrices(cls, mats) -> "GFunction":
        mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in mats]
        return cls(mats[0].shape[0], tuple(mats))

    @classmethod
    def from_interval(cls, s: "SigmaInterval") -> "GFunction":
        return cls(1, (np.array([[s.lower]]), np.array([[s.upper]])))

    @property
    def sigma_sq_max(self) -> float:
        """Largest diagonal entry across theta (drives CFL and domain sizing)."""
        return max(float(np.max(np.diag(S))) for S in self.theta)

    def trace_max(self) -> float:
        return max(float(np.trace(S)) for S in self.theta)


@dataclass(frozen=True)
class SigmaInterval:
    """1-d variance interval [lower, upper]."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise DomainError("need 0 <= lower <= upper")


def g_eval_argmax(G: GFunction, A: np.ndarray) -> tuple[float, int]:
    """G(A) with the attaining theta index (lowest on ties)."""
    A = _check_symmetric(A, G.dimension)
    vals = np.array([float(np.tensordot(A, S)) for S in G.theta])
    idx = int(np.argmax(vals))
    return float(vals[idx]), idx


def g_eval(G: GFunction, A: np.ndarray) -> float:
    """max over theta of trace(A Sigma)."""
    return g_eval_argmax(G, A)[0]


def g_1d(s: SigmaInterval, alpha: float) -> float:
    """One-dimensional closed form: alpha+ upper - alpha- lower."""
    return alpha * s.upper if alpha >= 0 else alpha * s.lower


def regularize(G: GFunction, eps: float) -> GFunction:
    """Uniform-ellipticity lift: add eps * I to every theta entry."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    eye = eps * np.eye(G.dimension)
    return GFunction(G.dimension, tuple(S + eye for S in G.theta))


@dataclass
class GLawReport:
    violations: dict
    tolerance: float = 1e-10

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.violations.values())


def _random_symmetric(rng, d: int) -> np.ndarray:
    M = rng.normal(size=(d, d))
    return (M + M.T) / 2


def verify_g_laws(G: GFunction, trials: int = 1000, seed: int = 0) -> GLawReport:
    """Sampled sub-additivity, homogeneity, PSD-order monotonicity, and the
    entrywise Lipschitz bound after normalising so G(I) = 1."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    d = G.dimension
    worst = {"subadditive": 0.0, "homogeneous": 0.0, "monotone": 0.0, "lipschitz": 0.0}
    gI = g_eval(G, np.eye(d))
    Gn = GFunction(d, tuple(S / gI for S in G.theta)) if gI > 0 else None
    for _ in range(trials):
        A = _random_symmetric(rng, d)
        B = _random_symmetric(rng, d)
        worst["subadditive"] = max(worst["subadditive"],
                                   g_eval(G, A + B) - g_eval(G, A) - g_eval(G, B))
        lam = float(rng.uniform(0.0, 3.0))
        worst["homogeneous"] = max(worst["homogeneous"],
                                   abs(g_eval(G, lam * A) - lam * g_eval(G, A)))
        L = rng.normal(size=(d, d))
        worst["monotone"] = max(worst["monotone"],
                                g_eval(G, A) - g_eval(G, A + L @ L.T))
        if Gn is not None:
            bound = d * float(np.max(np.abs(A - B)))
            worst["lipschitz"] = max(worst["lipschitz"],
                                     abs(g_eval(Gn, A) - g_eval(Gn, B)) - bound)
    return GLawReport(worst)
