"""Interaction matrix M, the class-A test, the Index(K) count and blow-up candidates.

For critical points q_1..q_k with nonpositive Laplacian,

    M_ii = -Lap K(q_i) / K(q_i)^(n/2sigma)
    M_ij = -n(n-1) G(q_i, q_j) / (K(q_i) K(q_j))^(1/2sigma),   G = 2/|q_i - q_j|^2

and mu(M) is its smallest eigenvalue.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .conformal_op import green_G
from .curvature import CriticalPoint, CurvatureModel, PointClass, find_critical_points
from .errors import DomainError, NotInClassError, SizeError
from .sphere import ProblemParams, geodesic_distance

MAX_KMINUS = 20


def jacobi_eigenvalues(A, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations (ascending)."""
    A = np.array(A, dtype=float)
    k = A.shape[0]
    if A.shape != (k, k):
        raise DomainError("matrix must be square")
    if k > 64:
        raise SizeError("cyclic Jacobi is meant for k <= 64")
    if k == 1:
        return A.diagonal().copy()
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, np.sum(A * A) - np.sum(np.diag(A) ** 2)))
        if off <= tol * scale:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = A[p, q]
                if abs(apq) <= 1e-3 * tol * scale:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * rp - s * rq, s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
    return np.sort(np.diag(A))


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    points: tuple
    entries: np.ndarray
    mu: float

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))


def build_M(points, params: ProblemParams, allow_zero: bool = True) -> InteractionMatrix:
    """Interaction matrix of critical points outside K+ (Laplacian <= 0)."""
    pts = tuple(points)
    k = len(pts)
    if k == 0:
        raise DomainError("need at least one point")
    n, sigma = params.n, params.sigma
    for j, q in enumerate(pts):
        if q.laplacian > 0 or (not allow_zero and q.laplacian == 0):
            raise DomainError(f"point {j} has positive Laplacian; only critical points outside K+ are admissible")
        if q.value <= 0:
            raise DomainError("K must be positive at every point")
    M = np.empty((k, k))
    for i in range(k):
        M[i, i] = -pts[i].laplacian / pts[i].value ** (n / (2 * sigma))
        for j in range(i + 1, k):
            if geodesic_distance(pts[i].location, pts[j].location) <= 1e-6:
                raise DomainError(f"points {i} and {j} coincide")
            off = -n * (n - 1) * green_G(pts[i].location, pts[j].location) / (pts[i].value * pts[j].value) ** (
                1 / (2 * sigma)
            )
            M[i, j] = M[j, i] = off
    M.setflags(write=False)
    return InteractionMatrix(pts, M, float(jacobi_eigenvalues(M)[0]))


@dataclass(frozen=True, eq=False)
class Census:
    """Critical points of K together with the dimensional context."""

    points: tuple
    params: ProblemParams
    tol_degen: float = 1e-12

    @classmethod
    def of(cls, K: CurvatureModel, multistart: int = 200, workers: int = 1) -> "Census":
        return cls(tuple(find_critical_points(K, multistart, workers=workers)), K.params, K.tol_degen)

    @property
    def kminus(self) -> tuple:
        return tuple(p for p in self.points if p.cls is PointClass.KMINUS)

    @property
    def outside_kplus(self) -> tuple:
        return tuple(p for p in self.points if p.cls is not PointClass.KPLUS)

    def to_dict(self) -> list:
        return [p.to_dict() for p in self.points]


def _census(K) -> Census:
    return K if isinstance(K, Census) else Census.of(K)


def _subsets(items, min_size: int = 1):
    for size in range(min_size, len(items) + 1):
        yield from itertools.combinations(range(len(items)), size)


def _require_morse(c: Census):
    for p in c.points:
        if not p.is_morse:
            raise NotInClassError("K has a degenerate critical point; only non-degenerate critical points are allowed", p)


def in_A(K, rel_tol_mu: float = 1e-9):
    """(membership, witnesses) for the class A of Morse functions with nonvanishing mu."""
    c = _census(K)
    _require_morse(c)
    witnesses = []
    for p in c.points:
        if abs(p.laplacian) <= c.tol_degen:
            witnesses.append({"reason": "zero Laplacian", "points": [p.location.tolist()]})
    km = c.kminus
    for sub in _subsets(km, 2):
        M = build_M([km[i] for i in sub], c.params)
        if abs(M.mu) <= rel_tol_mu * M.norm:
            witnesses.append({"reason": "mu(M) = 0", "subset": list(sub), "mu": M.mu})
    return not witnesses, witnesses


def subset_table(K) -> list[dict]:
    c = _census(K)
    km = c.kminus
    if len(km) > MAX_KMINUS:
        raise SizeError(f"|K-| = {len(km)} exceeds {MAX_KMINUS}")
    rows = []
    for sub in _subsets(km, 1):
        M = build_M([km[i] for i in sub], c.params)
        indices = sum(km[i].morse_index for i in sub)
        rows.append({"subset": list(sub), "mu": M.mu, "sign": (-1) ** (len(sub) - 1 + indices)})
    return rows


def index_of(K) -> int:
    """-1 + sum over subsets S of K- with mu(M_S) > 0 of (-1)^(|S| - 1 + sum of Morse indices)."""
    c = _census(K)
    if len(c.kminus) > MAX_KMINUS:
        raise SizeError(f"|K-| = {len(c.kminus)} exceeds {MAX_KMINUS}")
    ok, witnesses = in_A(c)
    if not ok:
        raise NotInClassError("K is not in class A", witnesses)
    return -1 + sum(r["sign"] for r in subset_table(c) if r["mu"] > 0)


def pair_criterion(p: CriticalPoint, q: CriticalPoint, n: int) -> bool:
    """Lap K(p) Lap K(q) < n^2 (n-1)^2 / 4 K(p) K(q)."""
    return p.laplacian * q.laplacian < n * n * (n - 1) ** 2 / 4.0 * p.value * q.value


def corollary_check(K):
    """(criterion holds for every K- pair, simplified count, agreement with index_of).

    Agreement is None when the criterion fails (nothing is claimed then).
    """
    c = _census(K)
    _require_morse(c)
    km = c.kminus
    holds = all(pair_criterion(km[i], km[j], c.params.n) for i, j in itertools.combinations(range(len(km)), 2))
    simplified = -1 + sum((-1) ** p.morse_index for p in km)
    agreement = (index_of(c) == simplified) if holds else None
    return holds, simplified, agreement


@dataclass(frozen=True)
class BlowupConfig:
    subset: tuple
    mu: float
    zero_laplacian_singleton: bool = False


def blowup_configs(K, tol_mu: float | None = None, rel_tol_mu: float = 1e-9) -> list[BlowupConfig]:
    """Subsets of critical points outside K+ whose interaction matrix is singular.

    Singletons are candidates only through a vanishing Laplacian; they are
    flagged so callers can decide which convention to apply. Subsets of size
    >= 2 are drawn from K-.
    """
    c = _census(K)
    out = []
    for idx, p in enumerate(c.points):
        if p.cls is PointClass.KPLUS:
            continue
        M = build_M([p], c.params)
        tol = tol_mu if tol_mu is not None else rel_tol_mu * max(abs(M.mu), 1.0)
        if abs(M.mu) <= tol:
            out.append(BlowupConfig((idx,), M.mu, True))
    km_idx = [i for i, p in enumerate(c.points) if p.cls is PointClass.KMINUS]
    if len(km_idx) > MAX_KMINUS:
        raise SizeError(f"|K-| = {len(km_idx)} exceeds {MAX_KMINUS}")
    for sub in _subsets(km_idx, 2):
        chosen = [km_idx[i] for i in sub]
        M = build_M([c.points[i] for i in chosen], c.params)
        tol = tol_mu if tol_mu is not None else rel_tol_mu * M.norm
        if abs(M.mu) <= tol:
            out.append(BlowupConfig(tuple(chosen), M.mu))
    return out
