"""Scar textures of the spin-S XYZ chain and their coupling maps.

A scar texture is a product state of coherent spins whose Bloch vectors trace
an elliptic helix: Omega_j = (a*cn(qj+phi), b*sn(qj+phi), g*dn(qj+phi)) with
a = sqrt(1-g^2), b = sqrt(1-g^2(1-k^2)). For the parent couplings
(Jx, Jy, Jz) = (dn(q,k), 1, cn(q,k)) this product state is an exact
eigenstate of the XYZ ring; the residuals of the two eigenstate conditions
are exposed by :func:`gz_condition_residuals`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import complete_E, complete_K, jacobi_am, jacobi_epsilon, jacobi_sncndn

#: residuals below this are machine-level "exactly satisfied"
EXACT_RESIDUAL_TOL = 1e-10
#: residuals above this indicate a physically broken condition
BROKEN_RESIDUAL_TOL = 1e-3


@dataclass(frozen=True)
class XYZCouplings:
    """Diagonal exchange couplings, with optional detunings dJx, dJz.

    The parent convention is Jy = 1 with 0 <= Jz <= Jx <= 1; the detunings
    model the perturbed Hamiltonians used in the stability analysis and add
    onto Jx and Jz in :meth:`totals`.
    """

    Jx: float
    Jy: float
    Jz: float
    dJx: float = 0.0
    dJz: float = 0.0

    def totals(self) -> tuple[float, float, float]:
        return (self.Jx + self.dJx, self.Jy, self.Jz + self.dJz)

    def as_matrix(self) -> np.ndarray:
        """3x3 diagonal coupling matrix including detunings."""
        return np.diag(self.totals())

    def detuned(self, dJx: float = 0.0, dJz: float = 0.0) -> "XYZCouplings":
        return XYZCouplings(self.Jx, self.Jy, self.Jz, self.dJx + dJx, self.dJz + dJz)


def coupling_matrix(J) -> np.ndarray:
    """Coerce an XYZCouplings or an array-like into a 3x3 coupling matrix."""
    if isinstance(J, XYZCouplings):
        return J.as_matrix()
    mat = np.asarray(J, dtype=float)
    if mat.shape == (3,):
        return np.diag(mat)
    if mat.shape != (3, 3):
        raise ValueError(f"coupling must be XYZCouplings, 3-vector or 3x3, got {mat.shape}")
    return mat


@dataclass(frozen=True)
class ScarParams:
    """Parameters of a scar texture on a periodic ring of L sites."""

    kappa: float
    q: float
    gamma: float
    L: int
    S: float = 1.0
    phi: float = 0.0
    M: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.L < 2:
            raise ValueError(f"need at least two sites, got L = {self.L}")
        two_s = 2.0 * self.S
        if two_s <= 0 or abs(two_s - round(two_s)) > 1e-12:
            raise ValueError(f"2S must be a positive integer, got S = {self.S}")
        if self.kappa < 1.0:
            if not 0.0 < self.q < complete_K(self.kappa):
                raise ValueError(
                    f"q = {self.q} outside the principal branch (0, K(kappa))"
                )
        elif self.q <= 0.0:
            raise ValueError(f"q must be positive, got {self.q}")

    @classmethod
    def commensurate(
        cls,
        kappa: float,
        M: int,
        L: int,
        gamma: float,
        S: float = 1.0,
        phi: float = 0.0,
    ) -> "ScarParams":
        """Scar with q = 4MK/L, the winding compatible with the periodic ring."""
        q = 4.0 * M * complete_K(kappa) / L
        return cls(kappa=kappa, q=q, gamma=gamma, L=L, S=S, phi=phi, M=M)

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "q": self.q,
            "gamma": self.gamma,
            "L": self.L,
            "S": self.S,
            "phi": self.phi,
            "M": self.M,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScarParams":
        return cls(
            kappa=d["kappa"],
            q=d["q"],
            gamma=d["gamma"],
            L=int(d["L"]),
            S=d.get("S", 1.0),
            phi=d.get("phi", 0.0),
            M=d.get("M"),
        )


def parent_couplings(kappa: float, q: float) -> XYZCouplings:
    """Couplings (dn(q,kappa), 1, cn(q,kappa)) whose XYZ ring the scar solves.

    Parameters
    ----------
    kappa : float
        Modulus in [0, 1).
    q : float
        Wavenumber on the principal branch 0 < q < K(kappa).
    """
    if not 0.0 <= kappa < 1.0:
        raise ValueError(f"kappa must lie in [0, 1), got {kappa}")
    if not 0.0 < q < complete_K(kappa):
        raise ValueError(f"q = {q} outside (0, K(kappa))")
    _, cn, dn = jacobi_sncndn(q, kappa)
    return XYZCouplings(Jx=dn, Jy=1.0, Jz=cn)


def solve_kq(Jx: float, Jz: float) -> tuple[float, float]:
    """Invert the parent map: find (kappa, q) with dn(q) = Jx, cn(q) = Jz.

    kappa follows from kappa^2 = (1 - Jx^2)/(1 - Jz^2); q is then the unique
    root of cn(q, kappa) = Jz on the principal branch 0 < q <= K(kappa),
    located by a Newton iteration on the amplitude (am' = dn, so the iteration
    is monotone and quadratically convergent from q0 = arccos(Jz) * 2K/pi).

    Raises on Jz > Jx (no real modulus) and on Jx = Jz = 1 (isotropic point,
    kappa indeterminate).
    """
    if not (0.0 <= Jz <= Jx <= 1.0):
        raise ValueError(f"need 0 <= Jz <= Jx <= 1, got Jx = {Jx}, Jz = {Jz}")
    if Jx == 1.0 and Jz == 1.0:
        raise ValueError("Jx = Jz = 1 is the isotropic point; kappa is indeterminate")
    if Jx == Jz:
        # kappa = 1 boundary: dn = cn = sech q exactly.
        return 1.0, float(np.arccosh(1.0 / Jz))
    kappa = math.sqrt((1.0 - Jx * Jx) / (1.0 - Jz * Jz))
    if kappa > 1.0:
        raise ValueError(f"no modulus in [0, 1] for Jx = {Jx}, Jz = {Jz}")
    K = complete_K(kappa)
    target = math.acos(Jz)
    q = target * 2.0 * K / math.pi
    for _ in range(60):
        dn = jacobi_sncndn(q, kappa)[2]
        step = (jacobi_am(q, kappa) - target) / dn
        q -= step
        if abs(step) < 1e-15 * max(1.0, q):
            break
    q = min(max(q, 0.0), K)
    return kappa, q


def scar_texture(p: ScarParams) -> np.ndarray:
    """Bloch vectors of the scar, shape (L, 3), each row unit-norm."""
    alpha = math.sqrt(max(0.0, 1.0 - p.gamma**2))
    beta = math.sqrt(max(0.0, 1.0 - p.gamma**2 * (1.0 - p.kappa**2)))
    args = p.q * np.arange(p.L) + p.phi
    sn, cn, dn = jacobi_sncndn(args, p.kappa)
    return np.column_stack([alpha * cn, beta * sn, p.gamma * dn])


def texture_energy(texture: np.ndarray, J, S: float) -> float:
    """Classical bond energy S^2 sum_j Omega_j . J Omega_{j+1} of a ring."""
    mat = coupling_matrix(J)
    omega = np.asarray(texture, dtype=float)
    nxt = np.roll(omega, -1, axis=0)
    return float(S * S * np.einsum("ja,ab,jb->", omega, mat, nxt))


def energy_density(kappa: float, q: float, S: float) -> float:
    """Scar energy per site for the parent couplings.

    e = S^2 ( cn*dn + sn*[eps(q) - q*E/K] ) at modulus kappa; reduces to
    S^2 cos(q) at kappa = 0 and to S^2 as q -> 0.
    """
    if not 0.0 <= kappa < 1.0:
        raise ValueError(f"kappa must lie in [0, 1), got {kappa}")
    K = complete_K(kappa)
    E = complete_E(kappa)
    sn, cn, dn = jacobi_sncndn(q, kappa)
    bracket = jacobi_epsilon(q, kappa) - q * E / K
    return float(S * S * (cn * dn + sn * bracket))


def gz_condition_residuals(texture: np.ndarray, J) -> tuple[np.ndarray, np.ndarray]:
    """Per-site residuals of the two product-eigenstate conditions.

    r1_j collects the in-plane anisotropy of the rotated bond coupling,
    r2_j the transverse-longitudinal mixing of the two bonds meeting at j:

        r1_j = |JR_j^xx - JR_j^yy + i (JR_j^xy + JR_j^yx)|
        r2_j = |(JR_j^xz + JR_{j-1}^zx) + i (JR_j^yz + JR_{j-1}^zy)|

    Both vanish (<= 1e-10) exactly when the texture is a product eigenstate
    of the XYZ ring with couplings J. The magnitudes are gauge invariant:
    a local z-rotation of the frame multiplies the two complex combinations
    by pure phases, so the geodesic frame used here is as good as any.
    """
    from .rotframe import frames_from_texture

    omega = np.asarray(texture, dtype=float)
    if isinstance(J, XYZCouplings) or np.asarray(J, dtype=float).ndim <= 2:
        frame = frames_from_texture(omega, coupling_matrix(J))
        JR = frame.JR
    else:
        JR = np.asarray(J, dtype=float)
        if JR.shape != (len(omega), 3, 3):
            raise ValueError(
                f"per-bond couplings must have shape ({len(omega)}, 3, 3), got {JR.shape}"
            )
    r1 = np.abs(
        JR[:, 0, 0] - JR[:, 1, 1] + 1j * (JR[:, 0, 1] + JR[:, 1, 0])
    )
    prev = np.roll(JR, 1, axis=0)
    r2 = np.abs(
        (JR[:, 0, 2] + prev[:, 2, 0]) + 1j * (JR[:, 1, 2] + prev[:, 2, 1])
    )
    return r1, r2


def commensurate_q(kappa: float, L: int) -> list[tuple[int, float]]:
    """All windings (M, q = 4MK/L) with 0 < q < K on an L-site ring."""
    if L < 2:
        raise ValueError(f"need at least two sites, got L = {L}")
    K = complete_K(kappa)
    return [(M, 4.0 * M * K / L) for M in range(1, (L - 1) // 4 + 1)]


def save_texture(path, texture: np.ndarray) -> None:
    """Write a texture as CSV with columns (j, Ox, Oy, Oz)."""
    omega = np.asarray(texture, dtype=float)
    rows = np.column_stack([np.arange(len(omega)), omega])
    np.savetxt(
        path,
        rows,
        delimiter=",",
        header="j,Ox,Oy,Oz",
        comments="",
        fmt=["%d", "%.17g", "%.17g", "%.17g"],
    )


def load_texture(path) -> np.ndarray:
    """Read a texture written by :func:`save_texture`."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    order = np.argsort(rows[:, 0])
    return rows[order, 1:4]
