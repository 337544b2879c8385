"""Discrete Landau-Lifshitz dynamics on the XYZ ring.

The mean-field equations Odot_j = S J(O_{j-1} + O_{j+1}) x O_j are integrated
with a hand-rolled fixed-step RK4. Norm drift is monitored and reported, never
projected away: silent renormalization would erase exactly the instability
signatures this module exists to measure. Also provides the traveling-wave
residuals of the perturbed helix ansatz, a Benettin twin-trajectory Lyapunov
estimator, and the real 2L x 2L generator of the linearized dynamics about a
stationary frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import jacobi_sncndn
from .rotframe import FrameData, stationarity_residual
from .scars import coupling_matrix

#: per-site norm drift beyond this aborts the integration
NORM_DRIFT_TOL = 1e-6


class IntegrationError(RuntimeError):
    """Raised when the fixed-step integrator loses the unit-sphere constraint."""


@dataclass
class ClassicalTrajectory:
    """Sampled mean-field trajectory with its conserved diagnostics."""

    times: np.ndarray
    textures: np.ndarray  # (n_times, L, 3)
    energy: np.ndarray

    @property
    def L(self) -> int:
        return self.textures.shape[1]

    def save_csv(self, texture_path, energy_path=None) -> None:
        """Write (t, j, Ox, Oy, Oz) rows; optionally an energy series CSV."""
        n_t, L, _ = self.textures.shape
        t_col = np.repeat(self.times, L)
        j_col = np.tile(np.arange(L), n_t)
        rows = np.column_stack([t_col, j_col, self.textures.reshape(n_t * L, 3)])
        np.savetxt(
            texture_path,
            rows,
            delimiter=",",
            header="t,j,Ox,Oy,Oz",
            comments="",
            fmt=["%.17g", "%d", "%.17g", "%.17g", "%.17g"],
        )
        if energy_path is not None:
            np.savetxt(
                energy_path,
                np.column_stack([self.times, self.energy]),
                delimiter=",",
                header="t,energy",
                comments="",
                fmt="%.17g",
            )


def _ll_rhs(omega: np.ndarray, J: np.ndarray, S: float) -> np.ndarray:
    # omega may carry leading batch axes (e.g. stacked twin trajectories);
    # sites live on axis -2.
    field = S * (np.roll(omega, 1, axis=-2) + np.roll(omega, -1, axis=-2)) @ J.T
    return np.cross(field, omega)


def _rk4_step(omega: np.ndarray, J: np.ndarray, S: float, dt: float) -> np.ndarray:
    k1 = _ll_rhs(omega, J, S)
    k2 = _ll_rhs(omega + 0.5 * dt * k1, J, S)
    k3 = _ll_rhs(omega + 0.5 * dt * k2, J, S)
    k4 = _ll_rhs(omega + dt * k3, J, S)
    return omega + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def classical_energy(omega: np.ndarray, J: np.ndarray, S: float) -> float:
    """Classical Hamiltonian S sum_j O_j . J O_{j+1} generating the flow."""
    return float(S * np.einsum("ja,ab,jb->", omega, J, np.roll(omega, -1, axis=0)))


def ll_evolve(
    initial: np.ndarray,
    J,
    S: float,
    dt: float | None = None,
    T: float = 10.0,
    max_samples: int = 1001,
) -> ClassicalTrajectory:
    """Integrate the discrete Landau-Lifshitz equations on a periodic ring.

    Parameters
    ----------
    initial : (L, 3) array
        Unit Bloch vectors at t = 0.
    J : XYZCouplings or 3x3 array
        Exchange matrix (detunings included).
    S : float
        Spin length; enters the equations linearly, so the default step
        dt = 1e-3/S keeps the error budget S-independent.
    dt, T : float
        Fixed step and final time. The step is trimmed so the grid lands on T.
    max_samples : int
        Trajectory snapshots are thinned to at most this many (plus t = 0).

    Raises
    ------
    IntegrationError
        If any site norm drifts from 1 by more than NORM_DRIFT_TOL; the drift
        is reported, not projected away. Reduce dt in that case.
    """
    omega = np.array(initial, dtype=float)
    if omega.ndim != 2 or omega.shape[1] != 3:
        raise ValueError(f"initial texture must be (L, 3), got {omega.shape}")
    norms = np.linalg.norm(omega, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("initial texture must be unit-norm per site")
    if dt is None:
        dt = 1e-3 / S
    if dt <= 0 or T <= 0:
        raise ValueError("dt and T must be positive")
    mat = coupling_matrix(J)

    n_steps = max(1, int(round(T / dt)))
    dt_eff = T / n_steps
    stride = max(1, math.ceil(n_steps / max_samples))

    times = [0.0]
    textures = [omega.copy()]
    energies = [classical_energy(omega, mat, S)]
    for step in range(1, n_steps + 1):
        omega = _rk4_step(omega, mat, S, dt_eff)
        if step % stride == 0 or step == n_steps:
            drift = np.max(np.abs(np.linalg.norm(omega, axis=1) - 1.0))
            if drift > NORM_DRIFT_TOL:
                raise IntegrationError(
                    f"norm drift {drift:.2e} exceeds {NORM_DRIFT_TOL:.0e} at "
                    f"t = {step * dt_eff:.3f}; reduce dt (currently {dt_eff:.2e})"
                )
            times.append(step * dt_eff)
            textures.append(omega.copy())
            energies.append(classical_energy(omega, mat, S))
    return ClassicalTrajectory(
        times=np.array(times),
        textures=np.array(textures),
        energy=np.array(energies),
    )


def traveling_wave_residuals(
    kappa: float,
    q: float,
    gamma: float,
    omega: float,
    dJ: tuple[float, float, float],
    S: float,
    L: int,
    t: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-site residuals of the traveling elliptic-helix ansatz.

    The ansatz O_j(t) with phase u_j = qj - omega*t solves the perturbed
    dynamics (detunings dJ = (dJx, dJy, dJz) on top of the parent couplings)
    exactly when three left = right conditions hold; this returns
    |left - right| for each, evaluated at every site at time t. With
    D_j = 1 - kappa^2 sn^2(u_j) sn^2(q) and a = sqrt(1-g^2),
    b = sqrt(1-g^2(1-k^2)):

        r1_j = | 2 S b g (dJy cn(q) - dJz) dn(q) / D_j - a w |
        r2_j = | 2 S a g (dJx cn(q) - dJz dn(q)) / D_j - b w |
        r3_j = | 2 S a b (dJx - dJy dn(q)) / D_j - g k^2 w |
    """
    dJx, dJy, dJz = dJ
    alpha = math.sqrt(max(0.0, 1.0 - gamma**2))
    beta = math.sqrt(max(0.0, 1.0 - gamma**2 * (1.0 - kappa**2)))
    _, cnq, dnq = jacobi_sncndn(q, kappa)
    u = q * np.arange(L) - omega * t
    snu = jacobi_sncndn(u, kappa)[0]
    snq = jacobi_sncndn(q, kappa)[0]
    denom = 1.0 - (kappa * snu * snq) ** 2
    r1 = np.abs(2.0 * S * beta * gamma * (dJy * cnq - dJz) * dnq / denom - alpha * omega)
    r2 = np.abs(2.0 * S * alpha * gamma * (dJx * cnq - dJz * dnq) / denom - beta * omega)
    r3 = np.abs(2.0 * S * alpha * beta * (dJx - dJy * dnq) / denom - gamma * kappa**2 * omega)
    return r1, r2, r3


@dataclass
class LyapunovEstimate:
    """Largest-exponent estimate from twin trajectories.

    rate is the fitted exponential growth rate of the tangent separation;
    converged is False when no exponential window was found (bounded or
    oscillatory separation), in which case rate is 0 by convention.
    """

    rate: float
    converged: bool
    times: np.ndarray
    log_growth: np.ndarray

    def __float__(self) -> float:
        return self.rate


def classical_lyapunov(
    initial: np.ndarray,
    J,
    S: float,
    eps0: float = 1e-7,
    T: float | None = None,
    dt: float | None = None,
    renorm_interval: float | None = None,
    discard_fraction: float = 0.2,
    seed: int = 0,
) -> LyapunovEstimate:
    """Benettin estimate of the largest Lyapunov exponent.

    A twin trajectory is launched a tangent distance eps0 from `initial`;
    the separation is renormalized back to eps0 at fixed intervals and the
    accumulated log growth is fitted linearly after dropping the first
    `discard_fraction` of the run as transient. When the fitted slope is
    not resolvably positive (fewer than two e-folds over the window, or
    smaller than three standard errors), the motion is classified stable
    and the returned rate is exactly 0 with converged=False.
    """
    if eps0 > 1e-6:
        raise ValueError(f"eps0 must be <= 1e-6 for a tangent-space estimate, got {eps0}")
    if T is None:
        T = 400.0 / S
    if dt is None:
        # the twin separation only needs the growth rate to ~1%, so a coarser
        # step than ll_evolve's default is plenty (RK4 error ~ (w dt)^4)
        dt = 5e-3 / S
    if renorm_interval is None:
        renorm_interval = 1.0 / S
    mat = coupling_matrix(J)
    base = np.array(initial, dtype=float)
    L = len(base)

    rng = np.random.default_rng(seed)
    tangent = rng.standard_normal((L, 3))
    # remove the radial component so the kick lives on the sphere
    tangent -= (np.sum(tangent * base, axis=1, keepdims=True)) * base
    tangent *= eps0 / np.linalg.norm(tangent)
    twin = base + tangent
    twin /= np.linalg.norm(twin, axis=1, keepdims=True)

    steps_per_block = max(1, int(round(renorm_interval / dt)))
    n_blocks = max(4, int(round(T / (steps_per_block * dt))))
    dt_eff = renorm_interval / steps_per_block

    pair = np.stack([base, twin])
    block_times = np.empty(n_blocks)
    log_growth = np.empty(n_blocks)
    total_log = 0.0
    for b in range(n_blocks):
        for _ in range(steps_per_block):
            pair = _rk4_step(pair, mat, S, dt_eff)
        sep = pair[1] - pair[0]
        dist = np.linalg.norm(sep)
        total_log += math.log(dist / eps0)
        block_times[b] = (b + 1) * renorm_interval
        log_growth[b] = total_log
        pair[1] = pair[0] + sep * (eps0 / dist)
        pair[1] /= np.linalg.norm(pair[1], axis=1, keepdims=True)

    start = int(discard_fraction * n_blocks)
    t_fit = block_times[start:]
    y_fit = log_growth[start:]
    design = np.column_stack([t_fit, np.ones_like(t_fit)])
    coef, res, *_ = np.linalg.lstsq(design, y_fit, rcond=None)
    slope = coef[0]
    dof = max(1, len(t_fit) - 2)
    resid_var = (res[0] / dof) if res.size else 0.0
    t_var = np.sum((t_fit - t_fit.mean()) ** 2)
    slope_se = math.sqrt(resid_var / t_var) if t_var > 0 else np.inf

    window = t_fit[-1] - t_fit[0]
    if slope <= 0 or slope * window < 2.0 or slope < 3.0 * slope_se:
        return LyapunovEstimate(0.0, False, block_times, log_growth)
    return LyapunovEstimate(float(slope), True, block_times, log_growth)


def linearized_dynamics_matrix(frame: FrameData, S: float) -> np.ndarray:
    """Real generator T of the linearized dynamics about a stationary frame.

    In canonical coordinates (x_0..x_{L-1}, p_0..p_{L-1}) for the transverse
    frame displacements, d/dt (x, p) = T (x, p) with

        xdot_j = -w_j p_j + S (JR_{j-1}^xy x_{j-1} + JR_j^yx x_{j+1}
                               + JR_{j-1}^yy p_{j-1} + JR_j^yy p_{j+1})
        pdot_j = +w_j x_j - S (JR_{j-1}^xx x_{j-1} + JR_j^xx x_{j+1}
                               + JR_{j-1}^yx p_{j-1} + JR_j^xy p_{j+1})

    where w_j is the per-site precession frequency. The complex spin-wave
    generator shares its spectrum with i*T (quantum-classical equivalence),
    which is what the cross-checks assert.
    """
    JR = frame.JR
    L = frame.L
    _, omega = stationarity_residual(frame, S)
    idx = np.arange(L)
    prev = (idx - 1) % L
    nxt = (idx + 1) % L
    T = np.zeros((2 * L, 2 * L))
    T[idx, L + idx] = -omega
    T[L + idx, idx] = omega
    np.add.at(T, (idx, prev), S * JR[prev, 0, 1])
    np.add.at(T, (idx, nxt), S * JR[idx, 1, 0])
    np.add.at(T, (idx, L + prev), S * JR[prev, 1, 1])
    np.add.at(T, (idx, L + nxt), S * JR[idx, 1, 1])
    np.add.at(T, (L + idx, prev), -S * JR[prev, 0, 0])
    np.add.at(T, (L + idx, nxt), -S * JR[idx, 0, 0])
    np.add.at(T, (L + idx, L + prev), -S * JR[prev, 1, 0])
    np.add.at(T, (L + idx, L + nxt), -S * JR[idx, 0, 1])
    return T
