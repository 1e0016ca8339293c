"""
Gravity direction on the unit sphere.

Convention: the camera frame is x right, y down, z forward. Gravity of an
upright camera is (0, 1, 0). A camera with roll r and pitch p sees

    g = Rz(r) Rx(p) (0, 1, 0) = (sin r cos p, cos r cos p, sin p)

so roll = atan2(gx, gy) and pitch = asin(gz). Positive pitch tilts the
optical axis toward the ground.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.exceptions import DomainError, GimbalLockError

POLE_EPS = 1e-12


@dataclass(eq=False)
class GravityDir:
    """Unit 3-vector of gravity in the camera frame."""

    vec: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vec, dtype=float).reshape(-1)
        if v.shape != (3,):
            raise DomainError(f"Gravity must be a 3-vector, got shape {v.shape}")
        n = np.linalg.norm(v)
        if not (n > 0 and np.isfinite(n)):
            raise DomainError(f"Gravity must be finite and nonzero, got {v}")
        self.vec = v / n

    @classmethod
    def upright(cls) -> "GravityDir":
        return cls(np.array([0.0, 1.0, 0.0]))

    @classmethod
    def from_roll_pitch(cls, roll: float, pitch: float) -> "GravityDir":
        return from_roll_pitch(roll, pitch)

    @property
    def x(self) -> float:
        return float(self.vec[0])

    @property
    def y(self) -> float:
        return float(self.vec[1])

    @property
    def z(self) -> float:
        return float(self.vec[2])

    def roll_pitch(self, strict: bool = False) -> Tuple[float, float]:
        return roll_pitch(self, strict=strict)

    def tangent_basis(self) -> np.ndarray:
        return tangent_basis(self)

    def retract(self, delta) -> "GravityDir":
        return retract(self, delta)

    def angle_to(self, other: "GravityDir") -> float:
        return angle_between(self.vec, other.vec)

    def __repr__(self) -> str:
        return f"GravityDir({self.x:.6g}, {self.y:.6g}, {self.z:.6g})"


def from_roll_pitch(roll: float, pitch: float) -> GravityDir:
    """Gravity for a camera with the given roll and pitch (radians)."""
    sr, cr = math.sin(roll), math.cos(roll)
    sp, cp = math.sin(pitch), math.cos(pitch)
    return GravityDir(np.array([sr * cp, cr * cp, sp]))


def roll_pitch(g: GravityDir, strict: bool = False) -> Tuple[float, float]:
    """
    Roll and pitch (radians) of a gravity direction.

    At the poles (gravity along the optical axis) roll is undefined and
    reported as 0, unless ``strict`` is set.

    Raises:
        GimbalLockError: At a pole with ``strict=True``
    """
    gx, gy, gz = g.vec
    pitch = math.asin(min(1.0, max(-1.0, gz)))
    if math.hypot(gx, gy) < POLE_EPS:
        if strict:
            raise GimbalLockError(
                "Roll is undefined when gravity is parallel to the optical axis"
            )
        return 0.0, pitch
    return math.atan2(gx, gy), pitch


def roll_pitch_jacobian(g: GravityDir) -> np.ndarray:
    """
    Derivative of (roll, pitch) with respect to the ambient gravity vector.

    Returns a 2x3 matrix. The roll row is zero at the poles.
    """
    gx, gy, gz = g.vec
    rho2 = gx * gx + gy * gy
    jac = np.zeros((2, 3))
    if rho2 > POLE_EPS * POLE_EPS:
        jac[0] = [gy / rho2, -gx / rho2, 0.0]
        jac[1, 2] = 1.0 / math.sqrt(rho2)
    return jac


def tangent_basis(g: GravityDir) -> np.ndarray:
    """
    Orthonormal 3x2 basis of the tangent plane at g.

    The first column is the coordinate axis least aligned with g projected
    onto the tangent plane (lowest index on ties); the second is g x b1.
    """
    v = g.vec
    axis = int(np.argmin(np.abs(v)))
    e = np.zeros(3)
    e[axis] = 1.0
    b1 = e - np.dot(e, v) * v
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(v, b1)
    b2 /= np.linalg.norm(b2)
    return np.stack([b1, b2], axis=1)


def retract(g: GravityDir, delta) -> GravityDir:
    """
    Exponential-map retraction g' = cos|t| g + sin|t| t/|t| with t = B(g) delta.

    The geodesic arc length from g to g' equals |delta|.
    """
    delta = np.asarray(delta, dtype=float).reshape(2)
    t = tangent_basis(g) @ delta
    theta = float(np.linalg.norm(t))
    if theta < 1e-12:
        return GravityDir(g.vec + t)
    return GravityDir(math.cos(theta) * g.vec + math.sin(theta) * (t / theta))


def angle_between(a, b) -> float:
    """Angle in radians between two 3-vectors, stable near 0 and pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(math.atan2(np.linalg.norm(np.cross(a, b)), float(np.dot(a, b))))
