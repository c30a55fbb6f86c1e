import numpy as np

from graffassoc import (
    GraffElement,
    LinePD,
    PlaneHesse,
    RigidTransform,
    from_hesse,
    from_pd,
    rotation_about_axis,
)


def rot_angle_rad(R1: np.ndarray, R2: np.ndarray) -> float:
    """Geodesic angle between rotations; atan2 form stays accurate near zero
    where the arccos((tr-1)/2) form floors at ~sqrt(eps)."""
    rel = R1.T @ R2
    skew = 0.5 * np.array([rel[2, 1] - rel[1, 2], rel[0, 2] - rel[2, 0], rel[1, 0] - rel[0, 1]])
    return float(np.arctan2(np.linalg.norm(skew), (np.trace(rel) - 1.0) / 2.0))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    axis = rng.normal(size=3)
    return rotation_about_axis(axis, rng.uniform(0.0, np.pi))


def random_transform(rng: np.random.Generator, span: float = 50.0) -> RigidTransform:
    return RigidTransform(random_rotation(rng), rng.uniform(-span, span, size=3))


def random_line(rng: np.random.Generator, span: float = 30.0) -> GraffElement:
    return from_pd(LinePD(rng.normal(size=3), rng.uniform(-span, span, size=3)))


def random_plane(rng: np.random.Generator, span: float = 30.0) -> GraffElement:
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    return from_hesse(PlaneHesse(n, rng.uniform(-span, span)))


def random_element(rng: np.random.Generator, span: float = 30.0) -> GraffElement:
    return random_line(rng, span) if rng.uniform() < 0.5 else random_plane(rng, span)
