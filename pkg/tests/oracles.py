"""Independent reference implementations the tests check against.

Nothing here imports the package's kernels: FK is a straight chain of
elementary transforms, the Jacobian is the geometric (cross-product) one,
and rotation logs come from scipy's quaternion conversion.
"""
import numpy as np
from scipy.spatial.transform import Rotation

UR5E = {
    "a": [0.0, -0.425, -0.3922, 0.0, 0.0, 0.0],
    "alpha": [np.pi / 2, 0.0, 0.0, np.pi / 2, -np.pi / 2, 0.0],
    "d": [0.1625, 0.0, 0.0, 0.1333, 0.0997, 0.0996],
}


def rot_x(t):
    c, s = np.cos(t), np.sin(t)
    T = np.eye(4)
    T[1:3, 1:3] = [[c, -s], [s, c]]
    return T


def rot_z(t):
    c, s = np.cos(t), np.sin(t)
    T = np.eye(4)
    T[0:2, 0:2] = [[c, -s], [s, c]]
    return T


def trans(x=0.0, y=0.0, z=0.0):
    T = np.eye(4)
    T[:3, 3] = [x, y, z]
    return T


def fk_frames(q, dh=UR5E):
    """Frames 0..6 as 4x4 matrices: Rz(theta) Tz(d) Tx(a) Rx(alpha) per link."""
    frames = [np.eye(4)]
    for i in range(6):
        A = rot_z(q[i]) @ trans(z=dh["d"][i]) @ trans(x=dh["a"][i]) @ rot_x(dh["alpha"][i])
        frames.append(frames[-1] @ A)
    return frames


def fk(q):
    return fk_frames(q)[-1]


def geometric_jacobian(q):
    frames = fk_frames(q)
    p_end = frames[-1][:3, 3]
    J = np.zeros((6, 6))
    for i in range(6):
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        J[:3, i] = np.cross(z, p_end - p)
        J[3:, i] = z
    return J


def log_rotation(R):
    return Rotation.from_matrix(R).as_rotvec()


def exp_rotation(w):
    return Rotation.from_rotvec(w).as_matrix()


def random_rotation(rng):
    return Rotation.random(random_state=rng).as_matrix()
