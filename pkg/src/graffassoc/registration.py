"""Closed-form rigid registration of matched lines and planes.

Rotation comes first, from an SVD of the cross-covariance of matched
directions and normals; translation then solves a stacked linear
least-squares system built from plane offsets and point-to-line residuals.
Directions and normals carry a sign ambiguity that is resolved by seeding
candidate rotations from the two least-parallel matches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graff_core import LinePD, PlaneHesse, RigidTransform, from_pd

__all__ = [
    "MatchSet",
    "AlignmentError",
    "VerifyThresholds",
    "InsufficientMatchesError",
    "DegenerateConfigurationError",
    "estimate_transform",
    "alignment_error",
    "verify",
    "rotation_to_quaternion",
]

MIN_MATCHES = 3

# Rotation is underdetermined when the direction/normal cross-covariance is
# (numerically) rank deficient; same idea for the translation system.
_RANK_RTOL = 1e-9


class InsufficientMatchesError(ValueError):
    """Fewer matches than the minimum needed to attempt an estimate."""


class DegenerateConfigurationError(ValueError):
    """Matches exist but do not pin down all six degrees of freedom."""


@dataclass(frozen=True)
class MatchSet:
    """Matched (source, target) line pairs and plane pairs."""

    line_pairs: tuple[tuple[LinePD, LinePD], ...] = ()
    plane_pairs: tuple[tuple[PlaneHesse, PlaneHesse], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "line_pairs", tuple(self.line_pairs))
        object.__setattr__(self, "plane_pairs", tuple(self.plane_pairs))

    def __len__(self) -> int:
        return len(self.line_pairs) + len(self.plane_pairs)


@dataclass(frozen=True)
class AlignmentError:
    rot_deg: float
    trans_m: float


@dataclass(frozen=True)
class VerifyThresholds:
    max_rot_deg: float = 5.0
    max_trans_m: float = 1.0


def _kabsch(H: np.ndarray) -> np.ndarray:
    """Rotation maximizing tr(R H) for H = sum of source x target outer products."""
    U, _, Vt = np.linalg.svd(H)
    V = Vt.T
    D = np.diag([1.0, 1.0, float(np.sign(np.linalg.det(V @ U.T)) or 1.0)])
    return V @ D @ U.T


def estimate_transform(matches: MatchSet, weights: np.ndarray | None = None) -> RigidTransform:
    """Estimate the rigid transform mapping source objects onto targets.

    `weights`, when given, holds one nonnegative weight per match, lines
    first then planes; the default weights every constraint equally.

    Raises InsufficientMatchesError below 3 matches and
    DegenerateConfigurationError when rotation or translation is not fully
    constrained (e.g. all planes parallel).
    """
    n_lines = len(matches.line_pairs)
    n_total = len(matches)
    if n_total < MIN_MATCHES:
        raise InsufficientMatchesError(f"need at least {MIN_MATCHES} matches, got {n_total}")
    if weights is None:
        w = np.ones(n_total)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n_total,) or np.any(w < 0):
            raise ValueError("weights must be one nonnegative value per match")

    # Stack direction/normal pairs: lines first, planes after.
    X = np.zeros((n_total, 3))
    Y = np.zeros((n_total, 3))
    for i, (src, tgt) in enumerate(matches.line_pairs):
        X[i], Y[i] = src.a, tgt.a
    for i, (src, tgt) in enumerate(matches.plane_pairs):
        X[n_lines + i], Y[n_lines + i] = src.n, tgt.n

    R, signs = _resolve_rotation(X, Y, w)

    sw = np.sqrt(w)
    rows = []
    rhs = []
    for i, (src, tgt) in enumerate(matches.line_pairs):
        # A line only constrains translation across its direction.
        proj = np.eye(3) - np.outer(tgt.a, tgt.a)
        b0_src = from_pd(src).b0
        b0_tgt = from_pd(tgt).b0
        rows.append(sw[i] * proj)
        rhs.append(sw[i] * (proj @ (b0_tgt - R @ b0_src)))
    for i, (src, tgt) in enumerate(matches.plane_pairs):
        s = signs[n_lines + i]
        swi = sw[n_lines + i]
        rows.append(swi * (s * tgt.n)[None, :])
        rhs.append(np.array([swi * (s * tgt.d - src.d)]))

    A = np.vstack(rows)
    b = np.concatenate(rhs)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size < 3 or sv[2] <= _RANK_RTOL * sv[0]:
        raise DegenerateConfigurationError("translation is not fully constrained by these matches")
    t, *_ = np.linalg.lstsq(A, b, rcond=None)
    return RigidTransform(R, t)


def _resolve_rotation(X: np.ndarray, Y: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best rotation given per-match sign ambiguity of directions/normals.

    Seeds: the two least-parallel source vectors.  For each of the four sign
    hypotheses on the seeds, remaining signs follow from agreement under the
    seed rotation; the hypothesis with the lowest total residual wins.
    """
    n = X.shape[0]
    dots = np.abs(X @ X.T)
    np.fill_diagonal(dots, np.inf)
    i, j = np.unravel_index(int(np.argmin(dots)), dots.shape)
    if i > j:
        i, j = j, i

    best = None
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            H_seed = np.outer(X[i], s1 * Y[i]) + np.outer(X[j], s2 * Y[j])
            R_seed = _kabsch(H_seed)
            agreement = np.einsum("na,na->n", Y, X @ R_seed.T)
            signs = np.where(agreement >= 0.0, 1.0, -1.0)
            signs[i], signs[j] = s1, s2
            H = (X * w[:, None]).T @ (Y * signs[:, None])
            R = _kabsch(H)
            residual = float(np.sum(w * (2.0 - 2.0 * signs * np.einsum("na,na->n", Y, X @ R.T))))
            if best is None or residual < best[0] - 1e-15:
                best = (residual, R, signs, H)
    _, R, signs, H = best
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[1] <= _RANK_RTOL * max(sv[0], 1e-300):
        raise DegenerateConfigurationError("rotation is not fully constrained: directions are all parallel")
    return R, signs


def alignment_error(estimate: RigidTransform, truth: RigidTransform) -> AlignmentError:
    """Geodesic rotation error (degrees) and Euclidean translation error (m)."""
    cos_angle = (float(np.trace(truth.R.T @ estimate.R)) - 1.0) / 2.0
    rot = float(np.degrees(np.arccos(np.clip(cos_angle, -1.0, 1.0))))
    trans = float(np.linalg.norm(estimate.t - truth.t))
    return AlignmentError(rot, trans)


def verify(
    estimate: RigidTransform,
    truth: RigidTransform,
    thresholds: VerifyThresholds = VerifyThresholds(),
) -> bool:
    """Accept the estimate iff both errors are strictly inside the thresholds."""
    err = alignment_error(estimate, truth)
    return err.rot_deg < thresholds.max_rot_deg and err.trans_m < thresholds.max_trans_m


def rotation_to_quaternion(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) for a rotation matrix, scalar part >= 0."""
    R = np.asarray(R, dtype=float)
    t = float(np.trace(R))
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
        elif i == 1:
            s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
            q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s])
        else:
            s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
            q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    q /= np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    elif q[0] == 0.0 and q[np.nonzero(q)[0][0]] < 0.0:
        # 180-degree rotations: make the first nonzero component positive.
        q = -q
    return q
