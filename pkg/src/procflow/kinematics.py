"""Rigid-body math for navigated tool placement.

Provides unit-quaternion rigid transforms, paired-point landmark
registration with per-landmark residual reporting, and the placement
error metrics (Euclidean translation distance, axis-angle rotation
magnitude) used by the simulation harness.

All lengths are millimeters, all angles degrees unless noted.
Quaternions are stored scalar-last, ``(x, y, z, w)``, matching the pose
file column order ``qx,qy,qz,qw,tx,ty,tz``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_QUAT_NORM_TOL = 1e-9


class KinematicsError(ValueError):
    """Invalid kinematics input."""


class RegistrationError(KinematicsError):
    """Landmark registration cannot be computed for the given sets."""


class DegenerateGeometryError(RegistrationError):
    """Landmark configuration admits no unique rotation (collinear points)."""


def _quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def _quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([-q[0], -q[1], -q[2], q[3]])


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def _matrix_to_quat(m: np.ndarray) -> np.ndarray:
    # Shepperd's method: pick the largest diagonal combination for stability.
    t = np.trace(m)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        return np.array(
            [(m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s, 0.25 * s]
        )
    i = int(np.argmax(np.diag(m)))
    if i == 0:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        return np.array(
            [0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s, (m[2, 1] - m[1, 2]) / s]
        )
    if i == 1:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        return np.array(
            [(m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s, (m[0, 2] - m[2, 0]) / s]
        )
    s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
    return np.array(
        [(m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s, (m[1, 0] - m[0, 1]) / s]
    )


@dataclass(frozen=True)
class RigidTransform:
    """Rotation (unit quaternion, scalar-last) plus translation in mm."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        norm = float(np.linalg.norm(q))
        if abs(norm - 1.0) > 1e-6:
            raise KinematicsError(f"quaternion norm {norm:.9f} is not 1")
        object.__setattr__(self, "rotation", q / norm)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.array([0.0, 0.0, 0.0, 1.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "RigidTransform":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (4, 4):
            raise KinematicsError(f"expected 4x4 homogeneous matrix, got {m.shape}")
        return cls(_matrix_to_quat(m[:3, :3]), m[:3, 3].copy())

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle_deg: float,
                        translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        a = np.asarray(axis, dtype=float).reshape(3)
        n = float(np.linalg.norm(a))
        if n == 0.0:
            raise KinematicsError("rotation axis must be nonzero")
        half = math.radians(angle_deg) / 2.0
        q = np.concatenate([a / n * math.sin(half), [math.cos(half)]])
        return cls(q, np.asarray(translation, dtype=float))

    @classmethod
    def from_rotation_vector(cls, rotvec_deg: Sequence[float],
                             translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        """Rotation vector in degrees: direction = axis, norm = angle."""
        v = np.asarray(rotvec_deg, dtype=float).reshape(3)
        angle = float(np.linalg.norm(v))
        if angle == 0.0:
            return cls(np.array([0.0, 0.0, 0.0, 1.0]), np.asarray(translation, dtype=float))
        return cls.from_axis_angle(v, angle, translation)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = _quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one 3-vector or an (N, 3) array of points."""
        p = np.asarray(points, dtype=float)
        r = _quat_to_matrix(self.rotation)
        return p @ r.T + self.translation

    def rotation_angle_deg(self) -> float:
        """Axis-angle magnitude of the rotation, in [0, 180] degrees."""
        w = min(1.0, abs(float(self.rotation[3])))
        return math.degrees(2.0 * math.acos(w))


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform applying ``b`` first, then ``a`` (matrix product a·b)."""
    q = _quat_multiply(a.rotation, b.rotation)
    t = a.apply(b.translation)
    return RigidTransform(q, t)


def invert(a: RigidTransform) -> RigidTransform:
    q = _quat_conjugate(a.rotation)
    t = -(_quat_to_matrix(q) @ a.translation)
    return RigidTransform(q, t)


@dataclass(frozen=True)
class PoseError:
    """Placement error between a planned and a measured tool pose."""

    translational_mm: float
    rotational_deg: float


def pose_error(planned: RigidTransform, measured: RigidTransform) -> PoseError:
    """Euclidean translation distance and relative axis-angle magnitude."""
    dt = float(np.linalg.norm(planned.translation - measured.translation))
    rel = _quat_multiply(_quat_conjugate(planned.rotation), measured.rotation)
    w = min(1.0, abs(float(rel[3])))
    return PoseError(dt, math.degrees(2.0 * math.acos(w)))


PLANNED_FRAME = "planned"
DIGITIZED_FRAME = "digitized"


@dataclass
class LandmarkSet:
    """Ordered, labeled 3D landmarks in one coordinate frame."""

    labels: tuple[str, ...]
    points: np.ndarray
    frame: str = PLANNED_FRAME

    def __post_init__(self) -> None:
        self.labels = tuple(self.labels)
        self.points = np.asarray(self.points, dtype=float).reshape(len(self.labels), 3)
        if len(set(self.labels)) != len(self.labels):
            raise KinematicsError("landmark labels must be unique")

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_csv(cls, path: str | Path, frame: str = PLANNED_FRAME) -> "LandmarkSet":
        """Read ``label,x,y,z`` rows (mm)."""
        labels: list[str] = []
        pts: list[list[float]] = []
        with open(path, newline="") as fp:
            for row in csv.reader(fp):
                if not row or row[0].startswith("#"):
                    continue
                if len(row) != 4:
                    raise KinematicsError(f"expected 'label,x,y,z', got {row!r}")
                labels.append(row[0].strip())
                pts.append([float(v) for v in row[1:]])
        return cls(tuple(labels), np.array(pts), frame)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fp:
            writer = csv.writer(fp)
            for label, p in zip(self.labels, self.points):
                writer.writerow([label, f"{p[0]:.6f}", f"{p[1]:.6f}", f"{p[2]:.6f}"])


def load_pose(path: str | Path) -> RigidTransform:
    """Read a ``qx,qy,qz,qw,tx,ty,tz`` pose file."""
    text = Path(path).read_text().strip()
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 7:
        raise KinematicsError(f"expected 7 pose values, got {len(vals)}")
    return RigidTransform(np.array(vals[:4]), np.array(vals[4:]))


def save_pose(pose: RigidTransform, path: str | Path) -> None:
    vals = list(pose.rotation) + list(pose.translation)
    Path(path).write_text(",".join(f"{v:.9f}" for v in vals) + "\n")


@dataclass(frozen=True)
class RegistrationResult:
    """Least-squares alignment of planned onto digitized landmarks."""

    transform: RigidTransform
    residuals: np.ndarray
    avg_residual: float
    rms_residual: float


def register(planned: LandmarkSet, digitized: LandmarkSet,
             min_points: int = 3) -> RegistrationResult:
    """Closed-form rigid fit of ``planned`` onto ``digitized``.

    Minimizes the sum of squared correspondence distances over all rigid
    transforms (SVD solution with reflection guard). Residuals are the
    per-landmark distances after applying the fitted transform;
    ``avg_residual`` is their arithmetic mean, ``rms_residual`` the root
    mean square (diagnostic).
    """
    if len(planned) != len(digitized):
        raise RegistrationError(
            f"landmark counts differ: {len(planned)} planned vs {len(digitized)} digitized"
        )
    if planned.labels != digitized.labels:
        raise RegistrationError("landmark labels/order differ between the two sets")
    if len(planned) < min_points:
        raise RegistrationError(f"need at least {min_points} landmarks, got {len(planned)}")

    p = planned.points
    d = digitized.points
    cp = p.mean(axis=0)
    cd = d.mean(axis=0)
    h = (p - cp).T @ (d - cd)

    # Collinear planned points leave the rotation about their axis free.
    sp = np.linalg.svd(p - cp, compute_uv=False)
    if sp[1] <= 1e-8 * max(sp[0], 1.0):
        raise DegenerateGeometryError("planned landmarks are collinear; rotation is not unique")

    u, _, vt = np.linalg.svd(h)
    sign = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, sign]) @ u.T
    t = cd - r @ cp

    transform = RigidTransform(_matrix_to_quat(r), t)
    residuals = np.linalg.norm(transform.apply(p) - d, axis=1)
    return RegistrationResult(
        transform=transform,
        residuals=residuals,
        avg_residual=float(residuals.mean()),
        rms_residual=float(np.sqrt((residuals**2).mean())),
    )
