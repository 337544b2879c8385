"""Site-local rotating frames for helical textures.

Each frame is a sequence of rotations R_j with R_j zhat = Omega_j. The bond
couplings seen from the rotating frame are JR_j = R_j^T J R_{j+1}, and a
time-dependent frame contributes an effective field hR_j. Three fixed gauge
conventions are provided (transverse helix, generalized transverse helix,
generalized longitudinal helix) plus a geodesic fallback for arbitrary
textures. The stationarity residual measures whether a texture is a
mean-field solution in the given frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import complete_K, jacobi_sncndn
from .scars import coupling_matrix


@dataclass
class FrameData:
    """Rotating-frame snapshot: rotations, bond couplings, effective fields.

    R[j] is the rotation at site j, JR[j] = R[j]^T J R[j+1] the coupling on
    the bond (j, j+1) with periodic wrap, hR[j] the effective field at site
    j. omega holds the per-site precession frequency once a spin length S is
    supplied to :func:`stationarity_residual` (None until then).
    """

    R: np.ndarray
    JR: np.ndarray
    hR: np.ndarray
    omega: np.ndarray | None = None

    @property
    def L(self) -> int:
        return self.R.shape[0]


def _bond_couplings(R: np.ndarray, J: np.ndarray) -> np.ndarray:
    R_next = np.roll(R, -1, axis=0)
    return np.einsum("jab,bc,jcd->jad", R.transpose(0, 2, 1), J, R_next)


def _rotation_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rotation_z(phis: np.ndarray) -> np.ndarray:
    c, s = np.cos(phis), np.sin(phis)
    zero = np.zeros_like(c)
    one = np.ones_like(c)
    return np.stack(
        [
            np.stack([c, -s, zero], axis=-1),
            np.stack([s, c, zero], axis=-1),
            np.stack([zero, zero, one], axis=-1),
        ],
        axis=-2,
    )


def frame_transverse(
    theta: float,
    q: float,
    omega: float,
    L: int,
    t: float = 0.0,
    dJz: float = 0.0,
) -> FrameData:
    """Rotating frame for the transverse helix with cone angle theta.

    R_j(t) = Rz(q j - omega t) Ry(theta). The underlying couplings are the
    kappa = 0 parent diag(1, 1, cos q) plus the detuning dJz; the frame
    rotation about z contributes the homogeneous effective field
    hR = omega * Ry(theta)^T zhat = omega * (-sin theta, 0, cos theta).
    """
    if not 0.0 < theta < math.pi:
        raise ValueError(f"spherical chart is singular at theta = {theta}")
    J = np.diag([1.0, 1.0, math.cos(q) + dJz])
    phis = q * np.arange(L) - omega * t
    R = _rotation_z(phis) @ _rotation_y(theta)
    hR = np.tile(omega * np.array([-math.sin(theta), 0.0, math.cos(theta)]), (L, 1))
    return FrameData(R=R, JR=_bond_couplings(R, J), hR=hR)


def _check_family_domain(kappa: float, q: float) -> None:
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    if not 0.0 < q < complete_K(kappa):
        raise ValueError(f"q = {q} outside (0, K(kappa))")


def frame_gtsh(kappa: float, q: float, L: int, dJz: float = 0.0) -> FrameData:
    """Static frame for the generalized transverse helix (in-plane texture).

    R_j is a pi/2 rotation about y followed by a z-rotation by the amplitude
    am(qj, kappa); the lab z-axis maps to the rotating -x axis, so the Jz
    coupling (cn(q) + dJz) occupies the xx slot of JR.
    """
    _check_family_domain(kappa, q)
    J = np.diag(list(parent_triple(kappa, q)))
    J[2, 2] += dJz
    sn, cn, _ = jacobi_sncndn(q * np.arange(L), kappa)
    zero = np.zeros(L)
    R = np.stack(
        [
            np.stack([zero, -sn, cn], axis=-1),
            np.stack([zero, cn, sn], axis=-1),
            np.stack([-np.ones(L), zero, zero], axis=-1),
        ],
        axis=-2,
    )
    hR = np.zeros((L, 3))
    return FrameData(R=R, JR=_bond_couplings(R, J), hR=hR)


def frame_glsh(kappa: float, q: float, L: int, dJx: float = 0.0) -> FrameData:
    """Static frame for the generalized longitudinal helix (yz-plane texture).

    R_j rotates about x by -arcsin(kappa sn(qj, kappa)); the lab x-axis is
    fixed, so the Jx coupling (dn(q) + dJx) occupies the xx slot of JR.
    """
    _check_family_domain(kappa, q)
    J = np.diag(list(parent_triple(kappa, q)))
    J[0, 0] += dJx
    sn, _, dn = jacobi_sncndn(q * np.arange(L), kappa)
    zero = np.zeros(L)
    one = np.ones(L)
    R = np.stack(
        [
            np.stack([one, zero, zero], axis=-1),
            np.stack([zero, dn, kappa * sn], axis=-1),
            np.stack([zero, -kappa * sn, dn], axis=-1),
        ],
        axis=-2,
    )
    hR = np.zeros((L, 3))
    return FrameData(R=R, JR=_bond_couplings(R, J), hR=hR)


def parent_triple(kappa: float, q: float) -> tuple[float, float, float]:
    """(Jx, Jy, Jz) = (dn(q), 1, cn(q)) without constructing XYZCouplings."""
    _, cn, dn = jacobi_sncndn(q, kappa)
    return dn, 1.0, cn


def frames_from_texture(texture: np.ndarray, J) -> FrameData:
    """Geodesic frame for an arbitrary unit texture.

    Rotates zhat to Omega_j about the axis zhat x Omega_j (the shortest arc).
    Well defined whenever Omega_j != -zhat; textures containing the south
    pole are rejected rather than silently gauge-fixed.
    """
    omega = np.asarray(texture, dtype=float)
    if omega.ndim != 2 or omega.shape[1] != 3:
        raise ValueError(f"texture must have shape (L, 3), got {omega.shape}")
    norms = np.linalg.norm(omega, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("texture rows must be unit vectors")
    c = omega[:, 2]
    if np.any(c <= -1.0 + 1e-12):
        raise ValueError("geodesic frame undefined at Omega = -zhat")
    # Rodrigues form R = I + [v]x + [v]x^2 / (1 + c) with v = zhat x Omega.
    vx, vy = -omega[:, 1], omega[:, 0]
    L = len(omega)
    R = np.zeros((L, 3, 3))
    inv = 1.0 / (1.0 + c)
    R[:, 0, 0] = 1.0 - vy * vy * inv
    R[:, 0, 1] = vx * vy * inv
    R[:, 0, 2] = omega[:, 0]
    R[:, 1, 0] = vx * vy * inv
    R[:, 1, 1] = 1.0 - vx * vx * inv
    R[:, 1, 2] = omega[:, 1]
    R[:, 2, 0] = -vy
    R[:, 2, 1] = vx
    R[:, 2, 2] = c
    mat = coupling_matrix(J)
    return FrameData(R=R, JR=_bond_couplings(R, mat), hR=np.zeros((L, 3)))


def stationarity_residual(frame: FrameData, S: float) -> tuple[np.ndarray, np.ndarray]:
    """Transverse residual of the mean-field fixed-point condition.

    The torque on the frame axis at site j is
    t_j = S (JR_{j-1}^T + JR_j) zhat + hR_j; a texture is stationary in its
    frame exactly when t_j is parallel to zhat. Returns (residual, omega)
    where residual_j = |(t_j^x, t_j^y)| and omega_j = t_j^z is the per-site
    precession frequency. The frame's omega attribute is filled in place.
    """
    JR_prev = np.roll(frame.JR, 1, axis=0)
    t = S * (JR_prev.transpose(0, 2, 1) + frame.JR)[:, :, 2] + frame.hR
    residual = np.hypot(t[:, 0], t[:, 1])
    omega = t[:, 2].copy()
    frame.omega = omega
    return residual, omega
