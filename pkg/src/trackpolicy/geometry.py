"""Pinhole camera math, two-view triangulation, and rigid point-set fitting.

Conventions used throughout the package:

* World and camera frames are right-handed. Camera frames follow the usual
  computer-vision layout: x right, y down, z forward along the optical axis.
* ``CameraPose`` stores the world->camera map, so ``X_cam = R @ X_world + t``.
* Pixels are continuous ``(u, v)`` with u along image width, v along height.
* Everything runs in float64; triangulation at ~10 cm baselines needs it.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCameraError, DegenerateConfigurationError, DegenerateRaysError

_ORTHO_TOL = 1e-9
_MIN_CAMERA_Z = 1e-6
_MIN_BASELINE = 1e-6
_PARALLEL_TOL = 1e-9


def _vec3(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    return v


def _check_rotation(r: np.ndarray, name: str) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {r.shape}")
    if np.max(np.abs(r.T @ r - np.eye(3))) > _ORTHO_TOL:
        raise ValueError(f"{name} is not orthonormal within {_ORTHO_TOL}")
    if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
        raise ValueError(f"{name} must have det +1 (got {np.linalg.det(r)})")
    return r


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixel units."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class CameraPose:
    """World->camera rigid map: X_cam = rotation @ X_world + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _check_rotation(self.rotation, "rotation").copy())
        object.__setattr__(self, "translation", _vec3(self.translation, "translation").copy())

    def camera_center(self) -> np.ndarray:
        """Camera origin expressed in world coordinates."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class RigidTransform:
    """Element of SE(3): y = rotation @ x + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", _check_rotation(self.rotation, "rotation").copy())
        object.__setattr__(self, "translation", _vec3(self.translation, "translation").copy())

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self o other: apply ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        """Transform one (3,) point or an (n, 3) stack."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation


Camera = tuple[CameraIntrinsics, CameraPose]


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle in radians of a 3x3 rotation matrix."""
    c = (np.trace(r) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def axis_angle_to_matrix(v) -> np.ndarray:
    """Rodrigues map from an axis-angle 3-vector (angle = norm)."""
    v = _vec3(v, "axis_angle")
    theta = np.linalg.norm(v)
    if theta < 1e-12:
        return np.eye(3)
    k = v / theta
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)


def matrix_to_axis_angle(r: np.ndarray) -> np.ndarray:
    """Inverse Rodrigues map; returns the zero vector for the identity."""
    theta = rotation_angle(r)
    if theta < 1e-12:
        return np.zeros(3)
    if theta > np.pi - 1e-6:
        # Near pi the off-diagonal extraction is ill-conditioned; recover
        # the axis from the symmetric part instead.
        m = (r + np.eye(3)) / 2.0
        axis = np.sqrt(np.clip(np.diag(m), 0.0, None))
        # Fix signs using the largest component.
        i = int(np.argmax(axis))
        if axis[i] > 0:
            axis = axis.copy()
            axis[(i + 1) % 3] = m[i, (i + 1) % 3] / axis[i]
            axis[(i + 2) % 3] = m[i, (i + 2) % 3] / axis[i]
        axis = axis / np.linalg.norm(axis)
        return theta * axis
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return theta * w / (2.0 * np.sin(theta))


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> CameraPose:
    """World->camera pose for a camera at ``eye`` looking toward ``target``."""
    eye = _vec3(eye, "eye")
    target = _vec3(target, "target")
    up = _vec3(up, "up")
    forward = target - eye
    n = np.linalg.norm(forward)
    if n < 1e-12:
        raise ValueError("eye and target coincide")
    z = forward / n
    x = np.cross(z, up)
    nx = np.linalg.norm(x)
    if nx < 1e-12:
        raise ValueError("view direction parallel to up vector")
    x = x / nx
    y = np.cross(z, x)
    r = np.stack([x, y, z])
    return CameraPose(r, -r @ eye)


def project(point, intrinsics: CameraIntrinsics, pose: CameraPose) -> np.ndarray:
    """Project a world point through a pinhole camera. Returns pixel (u, v)."""
    p_cam = pose.rotation @ _vec3(point, "point") + pose.translation
    z = p_cam[2]
    if z <= _MIN_CAMERA_Z:
        raise BehindCameraError(f"point at camera-frame z={z:.3e} m is not in front of the camera")
    u = intrinsics.fx * p_cam[0] / z + intrinsics.cx
    v = intrinsics.fy * p_cam[1] / z + intrinsics.cy
    return np.array([u, v])


def project_points(points, intrinsics: CameraIntrinsics, pose: CameraPose) -> np.ndarray:
    """``project`` over an (n, 3) stack. Returns (n, 2).

    Deliberately row-wise, not a batch matmul: consumers compare these pixels
    bit-for-bit against per-point project() calls, and BLAS batch products
    are not ulp-identical to row dots.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    uv = np.empty((p.shape[0], 2))
    for i in range(p.shape[0]):
        uv[i] = project(p[i], intrinsics, pose)
    return uv


def pixel_ray(pixel, intrinsics: CameraIntrinsics, pose: CameraPose):
    """Back-project a pixel to a world-frame ray (origin, unit direction)."""
    px = np.asarray(pixel, dtype=np.float64)
    d_cam = np.array([(px[0] - intrinsics.cx) / intrinsics.fx,
                      (px[1] - intrinsics.cy) / intrinsics.fy,
                      1.0])
    d_world = pose.rotation.T @ d_cam
    return pose.camera_center(), d_world / np.linalg.norm(d_world)


def triangulate(px1, px2, cam1: Camera, cam2: Camera) -> np.ndarray:
    """Two-view triangulation: midpoint of closest approach between rays.

    Raises DegenerateRaysError when the cameras coincide (baseline < 1e-6 m)
    or the rays are parallel within 1e-9 rad.
    """
    o1, d1 = pixel_ray(px1, *cam1)
    o2, d2 = pixel_ray(px2, *cam2)
    if np.linalg.norm(o2 - o1) < _MIN_BASELINE:
        raise DegenerateRaysError("camera centers coincide; baseline below 1e-6 m")
    if np.linalg.norm(np.cross(d1, d2)) < _PARALLEL_TOL:
        raise DegenerateRaysError("back-projected rays are parallel within 1e-9 rad")
    # Closest points: solve for the ray parameters s, t minimizing
    # |(o1 + s d1) - (o2 + t d2)|^2.
    r = o2 - o1
    a = d1 @ d1
    b = d1 @ d2
    c = d2 @ d2
    det = a * c - b * b
    s = (c * (d1 @ r) - b * (d2 @ r)) / det
    t = (b * (d1 @ r) - a * (d2 @ r)) / det
    return 0.5 * ((o1 + s * d1) + (o2 + t * d2))


def reprojection_residual_px(point3, px1, px2, cam1: Camera, cam2: Camera) -> float:
    """Mean pixel distance between a 3D point's projections and the inputs.

    Zero iff the two pixels are exactly consistent with ``point3``.
    """
    e1 = np.linalg.norm(project(point3, *cam1) - np.asarray(px1, dtype=np.float64))
    e2 = np.linalg.norm(project(point3, *cam2) - np.asarray(px2, dtype=np.float64))
    return float(0.5 * (e1 + e2))


def project_rotation(r) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (polar decomposition).

    Long pose-composition chains amplify float drift multiplicatively when
    conjugated (the pose's own error folds into the conjugate and back);
    projecting once per composition keeps the chain at the ulp level.
    """
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=np.float64))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def fit_rigid_transform(src, dst) -> RigidTransform:
    """Least-squares rigid alignment (Kabsch): minimizes sum |R src + t - dst|^2.

    Uses the SVD sign correction so the result is a proper rotation even when
    the optimal orthogonal map would be a reflection. Raises
    DegenerateConfigurationError for k < 3 or rank-deficient source points
    (two smallest singular values of the centered source <= 1e-9); callers
    needing liveness fall back to ``translation_fit``.
    """
    a = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if a.shape != b.shape:
        raise ValueError(f"src/dst shapes disagree: {a.shape} vs {b.shape}")
    k = a.shape[0]
    if k < 3:
        raise DegenerateConfigurationError(f"need at least 3 points, got {k}")
    ca = a.mean(axis=0)
    cb = b.mean(axis=0)
    a0 = a - ca
    b0 = b - cb
    sv = np.linalg.svd(a0, compute_uv=False)
    if sv[1] <= 1e-9 or sv[2] <= 1e-9:
        raise DegenerateConfigurationError(
            f"source points are rank-deficient (singular values {sv})")
    h = a0.T @ b0
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(r, cb - r @ ca)


def translation_fit(src, dst) -> RigidTransform:
    """Translation-only fallback: identity rotation, centroid shift."""
    a = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    return RigidTransform(np.eye(3), b.mean(axis=0) - a.mean(axis=0))


def tracks_to_actions(frames, allow_fallback: bool = True) -> list[RigidTransform]:
    """Per-step rigid deltas for an (H+1, k, 3) stack of keypoint frames.

    Element h maps frame h onto frame h+1 in the world frame. With
    ``allow_fallback`` a degenerate fit degrades to translation-only instead
    of raising; otherwise the error is re-raised annotated with the frame
    index.
    """
    f = np.asarray(frames, dtype=np.float64)
    if f.ndim != 3 or f.shape[2] != 3 or f.shape[0] < 2:
        raise ValueError(f"expected (H+1, k, 3) frames with H >= 1, got {f.shape}")
    deltas = []
    for h in range(f.shape[0] - 1):
        try:
            deltas.append(fit_rigid_transform(f[h], f[h + 1]))
        except DegenerateConfigurationError as exc:
            if not allow_fallback:
                raise DegenerateConfigurationError(f"frame {h}: {exc}") from exc
            deltas.append(translation_fit(f[h], f[h + 1]))
    return deltas
