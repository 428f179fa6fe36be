"""UR5e kinematics: DH forward kinematics, SO(3) log/exp, finite-difference
Jacobian and the damped-least-squares iterative IK solver.

The hot paths (FK, Jacobian, IK loop) are numba kernels operating on raw
arrays; the public functions wrap them with the ``Pose`` / config types.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

# a, alpha, d, theta_offset per joint (standard DH, Universal Robots data sheet)
UR5E_DH = np.array(
    [
        [0.0, math.pi / 2, 0.1625, 0.0],
        [-0.425, 0.0, 0.0, 0.0],
        [-0.3922, 0.0, 0.0, 0.0],
        [0.0, math.pi / 2, 0.1333, 0.0],
        [0.0, -math.pi / 2, 0.0997, 0.0],
        [0.0, 0.0, 0.0996, 0.0],
    ]
)

WRIST_JOINTS = (3, 4, 5)
ORTHONORMAL_TOL = 1e-9

JointVector = np.ndarray


class KinematicsError(ValueError):
    """Raised on invalid kinematic input (non-rotation matrices, bad limits)."""


@dataclass(frozen=True)
class DHRow:
    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.alpha, self.d, self.theta_offset)):
            raise KinematicsError(f"non-finite DH row: {self}")


def dh_table(rows: Sequence[DHRow]) -> np.ndarray:
    """Pack DH rows into the (n, 4) array layout used by the kernels."""
    return np.array([[r.a, r.alpha, r.d, r.theta_offset] for r in rows], dtype=float)


def check_rotation(R: np.ndarray, tol: float = ORTHONORMAL_TOL) -> None:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise KinematicsError("rotation must be a finite 3x3 matrix")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        raise KinematicsError("rotation matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise KinematicsError("rotation matrix has det != +1")


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: world position (m) and rotation matrix."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(p)):
            raise KinematicsError("pose position must be finite")
        check_rotation(R)
        p.flags.writeable = False
        R.flags.writeable = False
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "rotation", R)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), np.eye(3))

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "Pose":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, 3], T[:3, :3])

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T

    def compose(self, other: "Pose") -> "Pose":
        """Return ``self * other`` (``other`` expressed in this frame)."""
        return Pose(
            self.position + self.rotation @ other.position,
            self.rotation @ other.rotation,
        )


@dataclass(frozen=True)
class PoseError:
    position_error: np.ndarray
    orientation_error: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.position_error, self.orientation_error])

    @property
    def position_norm(self) -> float:
        return float(np.linalg.norm(self.position_error))

    @property
    def orientation_norm(self) -> float:
        return float(np.linalg.norm(self.orientation_error))


@dataclass(frozen=True)
class JointLimits:
    lower: np.ndarray = field(default_factory=lambda: np.full(6, -2 * math.pi))
    upper: np.ndarray = field(default_factory=lambda: np.full(6, 2 * math.pi))
    # per-solve excursion budget for the wrist joints
    wrist_excursion: float = math.pi

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(6)
        hi = np.array(self.upper, dtype=float).reshape(6)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))) or np.any(lo > hi):
            raise KinematicsError("joint limits must be finite with lower <= upper")
        if not self.wrist_excursion > 0:
            raise KinematicsError("wrist excursion budget must be positive")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, q: np.ndarray, tol: float = 0.0) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))


@dataclass(frozen=True)
class IkConfig:
    damping: float = 1e-4
    max_iterations: int = 1000
    position_tolerance: float = 1e-4
    orientation_tolerance: float = 1e-3
    step_clamp: float = 0.1
    singularity_threshold: float = 1e-6
    step_base: float = 0.01
    step_min: float = 0.001
    step_max: float = 0.05
    jacobian_perturbation: float = 1e-6

    def __post_init__(self):
        values = (
            self.damping,
            self.max_iterations,
            self.position_tolerance,
            self.orientation_tolerance,
            self.step_clamp,
            self.singularity_threshold,
            self.step_base,
            self.step_min,
            self.step_max,
            self.jacobian_perturbation,
        )
        if not all(v > 0 for v in values):
            raise KinematicsError("all IK parameters must be positive")
        if not self.step_min <= self.step_base <= self.step_max:
            raise KinematicsError("need step_min <= step_base <= step_max")


@dataclass(frozen=True)
class IkResult:
    joints: np.ndarray
    converged: bool
    iterations: int
    final_error: PoseError
    # joint vectors visited, row 0 is the seed; only filled when requested
    history: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _dh_into(a, alpha, d, theta, T):
    ct = math.cos(theta)
    st = math.sin(theta)
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    T[0, 0] = ct
    T[0, 1] = -st * ca
    T[0, 2] = st * sa
    T[0, 3] = a * ct
    T[1, 0] = st
    T[1, 1] = ct * ca
    T[1, 2] = -ct * sa
    T[1, 3] = a * st
    T[2, 0] = 0.0
    T[2, 1] = sa
    T[2, 2] = ca
    T[2, 3] = d
    T[3, 0] = 0.0
    T[3, 1] = 0.0
    T[3, 2] = 0.0
    T[3, 3] = 1.0


@njit(cache=True)
def _mul4_into(A, B, C):
    # rigid transforms only: the last row is taken as (0, 0, 0, 1)
    for i in range(3):
        a0 = A[i, 0]
        a1 = A[i, 1]
        a2 = A[i, 2]
        C[i, 0] = a0 * B[0, 0] + a1 * B[1, 0] + a2 * B[2, 0]
        C[i, 1] = a0 * B[0, 1] + a1 * B[1, 1] + a2 * B[2, 1]
        C[i, 2] = a0 * B[0, 2] + a1 * B[1, 2] + a2 * B[2, 2]
        C[i, 3] = a0 * B[0, 3] + a1 * B[1, 3] + a2 * B[2, 3] + A[i, 3]
    C[3, 0] = 0.0
    C[3, 1] = 0.0
    C[3, 2] = 0.0
    C[3, 3] = 1.0


@njit(cache=True)
def _fk(q, dh):
    T = np.eye(4)
    A = np.empty((4, 4))
    tmp = np.empty((4, 4))
    for i in range(dh.shape[0]):
        _dh_into(dh[i, 0], dh[i, 1], dh[i, 2], q[i] + dh[i, 3], A)
        _mul4_into(T, A, tmp)
        T[:, :] = tmp
    return T


@njit(cache=True)
def _so3_log(R):
    # Shepperd's quaternion extraction, then the angle from atan2; accurate
    # at both theta -> 0 and theta -> pi.
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr >= R[0, 0] and tr >= R[1, 1] and tr >= R[2, 2]:
        s = math.sqrt(1.0 + tr) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = math.sqrt(max(1.0 + R[0, 0] - R[1, 1] - R[2, 2], 0.0)) * 2.0
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] >= R[2, 2]:
        s = math.sqrt(max(1.0 + R[1, 1] - R[0, 0] - R[2, 2], 0.0)) * 2.0
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = math.sqrt(max(1.0 + R[2, 2] - R[0, 0] - R[1, 1], 0.0)) * 2.0
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    if w < 0.0:
        w = -w
        x = -x
        y = -y
        z = -z
    vn = math.sqrt(x * x + y * y + z * z)
    out = np.zeros(3)
    if vn < 1e-300:
        return out
    k = 2.0 * math.atan2(vn, w) / vn
    out[0] = k * x
    out[1] = k * y
    out[2] = k * z
    return out


@njit(cache=True)
def _rel_log(Ra, Rb):
    # log(Ra @ Rb^T)
    M = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            M[i, j] = Ra[i, 0] * Rb[j, 0] + Ra[i, 1] * Rb[j, 1] + Ra[i, 2] * Rb[j, 2]
    return _so3_log(M)


@njit(cache=True)
def _pose_error(T, target_p, target_R):
    e = np.empty(6)
    for i in range(3):
        e[i] = target_p[i] - T[i, 3]
    e[3:] = _rel_log(target_R, T)
    return e


@njit(cache=True)
def _jacobian(q, dh, h):
    n = dh.shape[0]
    prefix = np.empty((n + 1, 4, 4))
    suffix = np.empty((n + 1, 4, 4))
    A = np.empty((4, 4))
    tmp = np.empty((4, 4))
    Tp = np.empty((4, 4))
    Tm = np.empty((4, 4))
    prefix[0] = np.eye(4)
    suffix[n] = np.eye(4)
    for i in range(n):
        _dh_into(dh[i, 0], dh[i, 1], dh[i, 2], q[i] + dh[i, 3], A)
        _mul4_into(prefix[i], A, prefix[i + 1])
    for i in range(n - 1, -1, -1):
        _dh_into(dh[i, 0], dh[i, 1], dh[i, 2], q[i] + dh[i, 3], A)
        _mul4_into(A, suffix[i + 1], suffix[i])
    T0 = prefix[n]
    J = np.empty((6, n))
    for i in range(n):
        _dh_into(dh[i, 0], dh[i, 1], dh[i, 2], q[i] + h + dh[i, 3], A)
        _mul4_into(prefix[i], A, tmp)
        _mul4_into(tmp, suffix[i + 1], Tp)
        _dh_into(dh[i, 0], dh[i, 1], dh[i, 2], q[i] - h + dh[i, 3], A)
        _mul4_into(prefix[i], A, tmp)
        _mul4_into(tmp, suffix[i + 1], Tm)
        wp = _rel_log(Tp, T0)
        wm = _rel_log(Tm, T0)
        for r in range(3):
            J[r, i] = (Tp[r, 3] - Tm[r, 3]) / (2.0 * h)
            J[3 + r, i] = (wp[r] - wm[r]) / (2.0 * h)
    return J, T0.copy()


@njit(cache=True)
def _lu_solve(A, b):
    # Gaussian elimination with partial pivoting; returns (x, det(A))
    n = A.shape[0]
    M = A.copy()
    x = b.copy()
    det = 1.0
    for k in range(n):
        p = k
        big = abs(M[k, k])
        for i in range(k + 1, n):
            if abs(M[i, k]) > big:
                big = abs(M[i, k])
                p = i
        if p != k:
            for j in range(n):
                t = M[k, j]
                M[k, j] = M[p, j]
                M[p, j] = t
            t = x[k]
            x[k] = x[p]
            x[p] = t
            det = -det
        piv = M[k, k]
        det *= piv
        if piv == 0.0:
            continue
        for i in range(k + 1, n):
            f = M[i, k] / piv
            if f != 0.0:
                for j in range(k, n):
                    M[i, j] -= f * M[k, j]
                x[i] -= f * x[k]
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for j in range(i + 1, n):
            acc -= M[i, j] * x[j]
        x[i] = acc / M[i, i]
    return x, det


@njit(cache=True)
def _gram(J):
    m = J.shape[0]
    n = J.shape[1]
    G = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            acc = 0.0
            for k in range(n):
                acc += J[i, k] * J[j, k]
            G[i, j] = acc
            G[j, i] = acc
    return G


@njit(cache=True)
def _det(A):
    _, d = _lu_solve(A, np.zeros(A.shape[0]))
    return d


@njit(cache=True)
def _dls_step(J, e, lam):
    A = _gram(J)
    for i in range(A.shape[0]):
        A[i, i] += lam
    x, _ = _lu_solve(A, e)
    return J.T @ x


@njit(cache=True)
def _adaptive_step(error_norm, near_singular, base, lo, hi):
    alpha = min(max(base * (1.0 + error_norm), lo), hi)
    if near_singular:
        alpha = max(0.5 * alpha, lo)
    return alpha


@njit(cache=True)
def _clamp_step(dq, limit):
    m = 0.0
    for v in dq:
        if abs(v) > m:
            m = abs(v)
    if m <= limit:
        return dq.copy()
    out = dq * (limit / m)
    # guard against the scaled max landing one ulp above the limit
    for i in range(out.shape[0]):
        if out[i] > limit:
            out[i] = limit
        elif out[i] < -limit:
            out[i] = -limit
    return out


@njit(cache=True)
def _enforce_limits(q, lower, upper, reference, budget):
    out = q.copy()
    for i in range(out.shape[0]):
        if out[i] < lower[i]:
            out[i] = lower[i]
        elif out[i] > upper[i]:
            out[i] = upper[i]
    for i in range(3, min(6, out.shape[0])):
        lo = max(reference[i] - budget, lower[i])
        hi = min(reference[i] + budget, upper[i])
        if out[i] < lo:
            out[i] = lo
        elif out[i] > hi:
            out[i] = hi
    return out


@njit(cache=True)
def _solve_ik(
    q_init,
    target_p,
    target_R,
    dh,
    lower,
    upper,
    budget,
    lam,
    max_iter,
    tol_pos,
    tol_rot,
    step_clamp,
    sing_thr,
    step_base,
    step_min,
    step_max,
    h,
    history,
):
    q = q_init.copy()
    record = history.shape[0] > 0
    if record:
        history[0] = q
    it = 0
    converged = False
    e = _pose_error(_fk(q, dh), target_p, target_R)
    while True:
        ep = math.sqrt(e[0] ** 2 + e[1] ** 2 + e[2] ** 2)
        er = math.sqrt(e[3] ** 2 + e[4] ** 2 + e[5] ** 2)
        if ep < tol_pos and er < tol_rot:
            converged = True
            break
        if it >= max_iter:
            break
        J, _ = _jacobian(q, dh, h)
        near_singular = _det(_gram(J)) < sing_thr
        dq = _dls_step(J, e, lam)
        alpha = _adaptive_step(np.linalg.norm(e), near_singular, step_base, step_min, step_max)
        step = _clamp_step(alpha * dq, step_clamp)
        q = _enforce_limits(q + step, lower, upper, q_init, budget)
        it += 1
        if record:
            history[it] = q
        e = _pose_error(_fk(q, dh), target_p, target_R)
    return q, converged, it, e


# ---------------------------------------------------------------------------
# public API


def _as_q(q) -> np.ndarray:
    q = np.ascontiguousarray(q, dtype=float).reshape(-1)
    if not np.all(np.isfinite(q)):
        raise KinematicsError("joint vector must be finite")
    return q


def _as_dh(dh) -> np.ndarray:
    if dh is None:
        return UR5E_DH
    if len(dh) and isinstance(dh[0], DHRow):
        dh = dh_table(dh)
    return np.ascontiguousarray(dh, dtype=float)


def forward_kinematics(q: JointVector, dh=None) -> Pose:
    """Flange pose for joint angles ``q`` as the product of the DH link transforms."""
    return Pose.from_matrix(_fk(_as_q(q), _as_dh(dh)))


def so3_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix, norm in [0, pi]."""
    R = np.ascontiguousarray(R, dtype=float)
    check_rotation(R)
    return _so3_log(R)


def so3_exp(omega: np.ndarray) -> np.ndarray:
    """Rodrigues' formula."""
    w = np.asarray(omega, dtype=float).reshape(3)
    theta = float(np.linalg.norm(w))
    K = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    A = math.sin(theta) / theta
    B = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + A * K + B * K @ K


def pose_error(current: Pose, target: Pose) -> PoseError:
    return PoseError(
        target.position - current.position,
        _rel_log(np.ascontiguousarray(target.rotation), np.ascontiguousarray(current.rotation)),
    )


def numerical_jacobian(q: JointVector, dh=None, perturbation: float = 1e-6) -> np.ndarray:
    """Central-difference 6xN Jacobian: position rows, then world-frame
    rotation rows taken from the log of each perturbed rotation relative to
    the nominal one."""
    J, _ = _jacobian(_as_q(q), _as_dh(dh), float(perturbation))
    return J


def dls_step(J: np.ndarray, e, damping: float) -> np.ndarray:
    """``J^T (J J^T + damping I)^-1 e``."""
    if not damping > 0:
        raise KinematicsError("damping must be positive")
    if isinstance(e, PoseError):
        e = e.stacked
    return _dls_step(np.ascontiguousarray(J, dtype=float), np.ascontiguousarray(e, dtype=float), float(damping))


def adaptive_step_size(error_norm: float, near_singular: bool = False, config: IkConfig = IkConfig()) -> float:
    if error_norm < 0:
        raise KinematicsError("error norm must be non-negative")
    return _adaptive_step(float(error_norm), bool(near_singular), config.step_base, config.step_min, config.step_max)


def clamp_step(dq: np.ndarray, limit: float) -> np.ndarray:
    """Scale ``dq`` uniformly so its largest component is at most ``limit``."""
    if not limit > 0:
        raise KinematicsError("step limit must be positive")
    return _clamp_step(np.ascontiguousarray(dq, dtype=float), float(limit))


def enforce_joint_limits(q: JointVector, limits: JointLimits = JointLimits(), reference=None) -> np.ndarray:
    """Clamp ``q`` into ``limits``; wrist joints are further kept within the
    excursion budget of ``reference`` (the joint vector a solve started from)."""
    q = _as_q(q)
    ref = q if reference is None else _as_q(reference)
    return _enforce_limits(q, limits.lower, limits.upper, ref, float(limits.wrist_excursion))


def solve_ik(
    q_init: JointVector,
    target: Pose,
    config: IkConfig = IkConfig(),
    dh=None,
    limits: JointLimits = JointLimits(),
    record: bool = False,
) -> IkResult:
    q0 = _as_q(q_init)
    dh = _as_dh(dh)
    history = np.zeros((config.max_iterations + 1 if record else 0, q0.shape[0]))
    q, converged, iters, e = _solve_ik(
        q0,
        np.ascontiguousarray(target.position),
        np.ascontiguousarray(target.rotation),
        dh,
        limits.lower,
        limits.upper,
        float(limits.wrist_excursion),
        config.damping,
        int(config.max_iterations),
        config.position_tolerance,
        config.orientation_tolerance,
        config.step_clamp,
        config.singularity_threshold,
        config.step_base,
        config.step_min,
        config.step_max,
        config.jacobian_perturbation,
        history,
    )
    return IkResult(
        joints=q,
        converged=bool(converged),
        iterations=int(iters),
        final_error=PoseError(e[:3].copy(), e[3:].copy()),
        history=history[: iters + 1] if record else None,
    )
