"""Candidate correspondences and the weighted consistency graph.

Vertices of the graph are candidate matches (object a in scan i, object b in
scan j, same dimension).  Two candidates are consistent when the invariant
distance between their objects inside scan i agrees with the distance between
the matched objects inside scan j; agreement is gated at epsilon and scored
with a Gaussian kernel of width sigma.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .graff_core import _SPAN_RANK_TOL, GraffElement, shifted_graff_distance

__all__ = [
    "Scan",
    "Candidate",
    "ConsistencyParams",
    "DistanceFn",
    "generate_candidates",
    "consistency_score",
    "weight",
    "build_affinity",
    "internal_distance_matrix",
    "unique_matches",
]


class DistanceFn(str, Enum):
    """Distance used for internal object pairs when scoring consistency."""

    GRAFF_SHIFTED = "graff_shifted"
    GR_ONLY = "gr_only"
    EUCLIDEAN_CENTROID = "euclidean_centroid"
    GR_TIMES_EUCLIDEAN = "gr_times_euclidean"
    NORMAL_DOT_DIRECTION = "normal_dot_direction"


@dataclass(frozen=True, eq=False)
class Scan:
    """Ordered collection of landmark objects, optionally with centroids.

    Centroid metadata is only needed by the centroid-based distance
    functions; geometry-only pipelines can leave it out.
    """

    id: str
    objects: tuple[GraffElement, ...]
    centroids: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.centroids is not None:
            cents = tuple(np.asarray(c, dtype=float) for c in self.centroids)
            if len(cents) != len(self.objects):
                raise ValueError("centroids must align one-to-one with objects")
            object.__setattr__(self, "centroids", cents)

    def __len__(self) -> int:
        return len(self.objects)


class Candidate(NamedTuple):
    a: int  # index into scan i
    b: int  # index into scan j


@dataclass(frozen=True)
class ConsistencyParams:
    epsilon: float = 0.2  # gate threshold, radians
    sigma: float = 0.02   # kernel width, radians
    rho: float = 40.0     # displacement scaling, meters

    def __post_init__(self):
        if self.epsilon <= 0 or self.sigma <= 0 or self.rho <= 0:
            raise ValueError("epsilon, sigma and rho must all be positive")


def generate_candidates(scan_i: Scan, scan_j: Scan) -> list[Candidate]:
    """All same-dimension object pairings, in lexicographic (a, b) order."""
    return [
        Candidate(a, b)
        for a, el_a in enumerate(scan_i.objects)
        for b, el_b in enumerate(scan_j.objects)
        if el_a.k == el_b.k
    ]


def weight(c: float, params: ConsistencyParams) -> float:
    """Kernel score in [0, 1]; scores at or beyond the gate are exactly zero."""
    if c < 0:
        raise ValueError("consistency score must be nonnegative")
    if c >= params.epsilon:
        return 0.0
    return float(np.exp(-(c * c) / (2.0 * params.sigma * params.sigma)))


def consistency_score(
    u1: Candidate,
    u2: Candidate,
    scan_i: Scan,
    scan_j: Scan,
    params: ConsistencyParams,
) -> float:
    """|d(i_a1, i_a2) - d(j_b1, j_b2)| with u1's objects as first arguments."""
    di = shifted_graff_distance(scan_i.objects[u1.a], scan_i.objects[u2.a], params.rho)
    dj = shifted_graff_distance(scan_j.objects[u1.b], scan_j.objects[u2.b], params.rho)
    return abs(di - dj)


def unique_matches(
    candidates: Sequence[Candidate],
    indices: Sequence[int],
    scores: np.ndarray,
) -> tuple[Candidate, ...]:
    """Reduce a selected candidate set to a one-to-one correspondence set.

    A landmark cannot match two different landmarks, but a dense consistent
    set may contain such duplicates when two objects are near-congruent.
    Candidates are kept in decreasing score order (ties by index), skipping
    any whose endpoint on either side is already taken.
    """
    order = sorted(indices, key=lambda k: (-float(scores[k]), k))
    used_a: set[int] = set()
    used_b: set[int] = set()
    kept: list[Candidate] = []
    for k in order:
        cand = candidates[k]
        if cand.a in used_a or cand.b in used_b:
            continue
        kept.append(cand)
        used_a.add(cand.a)
        used_b.add(cand.b)
    return tuple(sorted(kept))


def _kind_groups(objects: Sequence[GraffElement]) -> list[tuple[list[int], int]]:
    lines = [i for i, el in enumerate(objects) if el.k == 1]
    planes = [i for i, el in enumerate(objects) if el.k == 2]
    return [(idx, k) for idx, k in ((lines, 1), (planes, 2)) if idx]


def internal_distance_matrix(scan: Scan, rho: float) -> np.ndarray:
    """All pairwise shifted distances within one scan, as an n x n array.

    This is the cache that turns the O(m^2) affinity construction into
    O(n^2) distance evaluations; pairs are batched by dimension so the
    small SVDs run vectorized.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    n = len(scan.objects)
    D = np.zeros((n, n))
    if n == 0:
        return D
    b0 = np.stack([el.b0 for el in scan.objects])
    for idx_x, kx in _kind_groups(scan.objects):
        Ax = np.stack([scan.objects[i].A for i in idx_x])  # (nx, 3, kx)
        for idx_y, ky in _kind_groups(scan.objects):
            Ay = np.stack([scan.objects[i].A for i in idx_y])
            nx, ny = len(idx_x), len(idx_y)
            # direction-subspace angles
            sigma = np.linalg.svd(np.einsum("xak,yal->xykl", Ax, Ay), compute_uv=False)
            th_dir_sq = np.sum(np.arccos(np.clip(sigma, 0.0, 1.0)) ** 2, axis=2)
            # minimal separation: displacement outside the joint span
            joint = np.concatenate(
                [np.broadcast_to(Ax[:, None], (nx, ny, 3, kx)), np.broadcast_to(Ay[None, :], (nx, ny, 3, ky))],
                axis=3,
            )
            U, s, _ = np.linalg.svd(joint, full_matrices=True)
            delta = b0[idx_y][None, :, :] - b0[idx_x][:, None, :]
            coeff = np.einsum("xyac,xya->xyc", U, delta)
            keep = np.zeros((nx, ny, 3))
            keep[..., : s.shape[2]] = s > _SPAN_RANK_TOL
            r = delta - np.einsum("xyac,xyc->xya", U, coeff * keep)
            gap = np.sqrt(np.sum(r * r, axis=2))
            th_aff = np.arctan(gap / rho)
            D[np.ix_(idx_x, idx_y)] = np.sqrt(th_dir_sq + th_aff * th_aff)
    np.fill_diagonal(D, 0.0)
    return D


def _gr_distance_matrix(scan: Scan) -> np.ndarray:
    n = len(scan.objects)
    D = np.zeros((n, n))
    for idx_x, kx in _kind_groups(scan.objects):
        Ax = np.stack([scan.objects[i].A for i in idx_x])
        for idx_y, ky in _kind_groups(scan.objects):
            Ay = np.stack([scan.objects[i].A for i in idx_y])
            G = np.einsum("xak,yal->xykl", Ax, Ay)
            sigma = np.linalg.svd(G, compute_uv=False)
            th = np.arccos(np.clip(sigma, 0.0, 1.0))
            D[np.ix_(idx_x, idx_y)] = np.sqrt(np.sum(th * th, axis=2))
    np.fill_diagonal(D, 0.0)
    return D


def _rep_vector_angle_matrix(scan: Scan) -> np.ndarray:
    """Angle between single representative vectors: a line's direction, a
    plane's normal.  The naive direction/normal dot-product baseline."""
    n = len(scan.objects)
    if n == 0:
        return np.zeros((0, 0))
    reps = np.zeros((n, 3))
    for i, el in enumerate(scan.objects):
        if el.k == 1:
            reps[i] = el.A[:, 0]
        else:
            normal = np.cross(el.A[:, 0], el.A[:, 1])
            reps[i] = normal / np.linalg.norm(normal)
    D = np.arccos(np.clip(np.abs(reps @ reps.T), 0.0, 1.0))
    np.fill_diagonal(D, 0.0)
    return D


def _centroid_distance_matrix(scan: Scan) -> np.ndarray:
    if scan.centroids is None:
        raise ValueError(f"scan {scan.id!r} lacks centroid metadata required by this distance function")
    C = np.stack(scan.centroids)
    diff = C[:, None, :] - C[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def _candidate_grid(D_i: np.ndarray, D_j: np.ndarray, a_idx: np.ndarray, b_idx: np.ndarray) -> np.ndarray:
    """Consistency scores for every candidate pair.

    The internal distances are symmetric; the elementwise max merely pins
    floating-point symmetry so the affinity matrix is exactly symmetric.
    """
    Ci = D_i[np.ix_(a_idx, a_idx)]
    Cj = D_j[np.ix_(b_idx, b_idx)]
    C = np.abs(Ci - Cj)
    return np.maximum(C, C.T)


def build_affinity(
    scan_i: Scan,
    scan_j: Scan,
    params: ConsistencyParams,
    distance_fn: DistanceFn = DistanceFn.GRAFF_SHIFTED,
    max_candidates: int | None = None,
) -> tuple[np.ndarray, list[Candidate]]:
    """Affinity matrix over all candidates plus the aligned candidate list.

    `max_candidates` is a guard for very large scan pairs: the full bipartite
    same-dimension candidate set is always used, and exceeding the cap raises
    instead of silently truncating it.
    """
    distance_fn = DistanceFn(distance_fn)
    candidates = generate_candidates(scan_i, scan_j)
    m = len(candidates)
    if max_candidates is not None and m > max_candidates:
        raise ValueError(f"candidate set of size {m} exceeds the cap of {max_candidates}")
    if m == 0:
        return np.zeros((0, 0)), candidates
    a_idx = np.array([c.a for c in candidates])
    b_idx = np.array([c.b for c in candidates])

    if distance_fn is DistanceFn.GR_TIMES_EUCLIDEAN:
        # Product of an angular and a radial kernel, each with its own gate;
        # the radial scale is expressed in radians via the rho scaling.
        C_th = _candidate_grid(_gr_distance_matrix(scan_i), _gr_distance_matrix(scan_j), a_idx, b_idx)
        C_r = _candidate_grid(
            _centroid_distance_matrix(scan_i) / params.rho,
            _centroid_distance_matrix(scan_j) / params.rho,
            a_idx,
            b_idx,
        )
        s2 = params.sigma * params.sigma
        M = np.exp(-(C_r * C_r) / s2) * np.exp(-(C_th * C_th) / s2)
        M[(C_th >= params.epsilon) | (C_r >= params.epsilon)] = 0.0
    else:
        if distance_fn is DistanceFn.GRAFF_SHIFTED:
            D_i = internal_distance_matrix(scan_i, params.rho)
            D_j = internal_distance_matrix(scan_j, params.rho)
        elif distance_fn is DistanceFn.GR_ONLY:
            D_i = _gr_distance_matrix(scan_i)
            D_j = _gr_distance_matrix(scan_j)
        elif distance_fn is DistanceFn.NORMAL_DOT_DIRECTION:
            D_i = _rep_vector_angle_matrix(scan_i)
            D_j = _rep_vector_angle_matrix(scan_j)
        else:
            D_i = _centroid_distance_matrix(scan_i) / params.rho
            D_j = _centroid_distance_matrix(scan_j) / params.rho
        C = _candidate_grid(D_i, D_j, a_idx, b_idx)
        M = np.exp(-(C * C) / (2.0 * params.sigma * params.sigma))
        M[C >= params.epsilon] = 0.0

    np.fill_diagonal(M, 1.0)
    return M, candidates
