"""Scan-to-scan association pipeline shared by the CLI and the benchmark.

Chains consistency-graph construction, densest-set selection, one-to-one
reduction and closed-form registration.  After the first estimate, matches
violating the self-consistency gates are dropped one at a time (worst
first, re-fitting after each) until the surviving set agrees with its own
transform; a result that cannot reach agreement is reported as failed
rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clique_solver import SolverParams, solve_densest
from .consistency import (
    ConsistencyParams,
    DistanceFn,
    Scan,
    build_affinity,
    unique_matches,
)
from .graff_core import RigidTransform, to_hesse, to_pd, transform_line, transform_plane
from .registration import (
    DegenerateConfigurationError,
    InsufficientMatchesError,
    MatchSet,
    estimate_transform,
)

__all__ = [
    "Association",
    "associate_scans",
    "matchset_from_pairs",
    "match_residuals",
    "MAX_ANGLE_RESIDUAL_RAD",
    "MAX_OFFSET_RESIDUAL_M",
    "PIPELINE_SOLVER",
]

# Self-consistency gates: a match disagreeing with the estimated transform
# by more than these is not an inlier (half the usual verification budget).
MAX_ANGLE_RESIDUAL_RAD = float(np.radians(2.0))
MAX_OFFSET_RESIDUAL_M = 0.5

# Correspondence selection favors purity over raw density; see SolverParams.
PIPELINE_SOLVER = SolverParams(rounding="mass_capped")


@dataclass(frozen=True)
class Association:
    """Outcome of matching two scans; `transform` is None when it failed."""

    n_candidates: int
    matches: tuple[tuple[int, int], ...]
    objective: float
    transform: RigidTransform | None
    max_angle_residual_rad: float | None
    max_offset_residual_m: float | None
    failure: str | None


def matchset_from_pairs(scan_i: Scan, scan_j: Scan, pairs) -> MatchSet:
    line_pairs = []
    plane_pairs = []
    for a, b in pairs:
        el_i = scan_i.objects[a]
        el_j = scan_j.objects[b]
        if el_i.k == 1:
            line_pairs.append((to_pd(el_i), to_pd(el_j)))
        else:
            plane_pairs.append((to_hesse(el_i), to_hesse(el_j)))
    return MatchSet(tuple(line_pairs), tuple(plane_pairs))


def match_residuals(scan_i: Scan, scan_j: Scan, pairs, transform: RigidTransform):
    """Per-match alignment residuals under a transform: (angles rad, offsets m).

    Lines: angle between transformed and target directions (sign-free) and
    the perpendicular distance between the two lines.  Planes: angle between
    normals and the offset difference after sign alignment.
    """
    angles = np.zeros(len(pairs))
    offsets = np.zeros(len(pairs))
    for idx, (a, b) in enumerate(pairs):
        el_i, el_j = scan_i.objects[a], scan_j.objects[b]
        if el_i.k == 1:
            moved = transform_line(to_pd(el_i), transform)
            target = to_pd(el_j)
            angles[idx] = np.arccos(np.clip(abs(float(moved.a @ target.a)), 0.0, 1.0))
            proj = np.eye(3) - np.outer(target.a, target.a)
            offsets[idx] = float(np.linalg.norm(proj @ (moved.p - target.p)))
        else:
            moved = transform_plane(to_hesse(el_i), transform)
            target = to_hesse(el_j)
            dot = float(moved.n @ target.n)
            angles[idx] = np.arccos(np.clip(abs(dot), 0.0, 1.0))
            sign = 1.0 if dot >= 0 else -1.0
            offsets[idx] = abs(moved.d - sign * target.d)
    return angles, offsets


def _try_estimate(scan_i: Scan, scan_j: Scan, pairs):
    try:
        return estimate_transform(matchset_from_pairs(scan_i, scan_j, pairs)), None
    except (InsufficientMatchesError, DegenerateConfigurationError) as exc:
        return None, str(exc)


def associate_scans(
    scan_i: Scan,
    scan_j: Scan,
    params: ConsistencyParams = ConsistencyParams(),
    distance_fn: DistanceFn = DistanceFn.GRAFF_SHIFTED,
    solver: SolverParams = PIPELINE_SOLVER,
) -> Association:
    M, candidates = build_affinity(scan_i, scan_j, params, distance_fn)
    selection = solve_densest(M, solver)
    chosen = tuple(
        (c.a, c.b) for c in unique_matches(candidates, selection.indices, selection.u)
    )

    def failed(reason: str) -> Association:
        return Association(len(candidates), chosen, selection.objective, None, None, None, reason)

    if len(chosen) < 3:
        return failed(f"only {len(chosen)} correspondences found, need at least 3")
    transform, reason = _try_estimate(scan_i, scan_j, chosen)
    if transform is None:
        return failed(reason)

    # Drop the single worst residual violator and re-fit until the set is
    # self-consistent; one bad match can bias the first estimate enough to
    # make good matches look bad, so removals are one at a time.
    angles, offsets = match_residuals(scan_i, scan_j, chosen, transform)
    while True:
        violation = np.maximum(angles / MAX_ANGLE_RESIDUAL_RAD, offsets / MAX_OFFSET_RESIDUAL_M)
        worst = int(np.argmax(violation))
        if violation[worst] <= 1.0:
            break
        if len(chosen) - 1 < 3:
            return failed("matches are mutually inconsistent under the estimated transform")
        chosen = chosen[:worst] + chosen[worst + 1 :]
        transform, reason = _try_estimate(scan_i, scan_j, chosen)
        if transform is None:
            return failed(reason)
        angles, offsets = match_residuals(scan_i, scan_j, chosen, transform)
    return Association(
        n_candidates=len(candidates),
        matches=chosen,
        objective=selection.objective,
        transform=transform,
        max_angle_residual_rad=float(angles.max()) if len(chosen) else 0.0,
        max_offset_residual_m=float(offsets.max()) if len(chosen) else 0.0,
        failure=None,
    )
