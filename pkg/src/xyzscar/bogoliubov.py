"""Momentum-space stability theory for perturbed helix states.

Transverse helices reduce to a scalar dispersion with a closed-form
instability window and asymptotic decay rates. The elliptic families need a
flavour index: the unit cell spans lambda = 4K(kappa)/q sites, and each
quasimomentum k carries a pair of lambda x lambda Bloch matrices (A_k, B_k)
whose Bogoliubov spectrum decides stability. Everything here is the k-space
mirror of the real-space machinery in spinwave; several tests drive both
routes and demand agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .elliptic import complete_K, jacobi_sncndn
from .spinwave import ContrastSeries

STABILITY_THRESHOLD = 1e-6


# ---------------------------------------------------------------------------
# transverse helix: scalar dispersion and closed-form window


@dataclass
class DispersionCurve:
    """Transverse-helix dispersion data on a k grid.

    omega_sw is the quasiparticle dispersion; w_tilde the reduced (per-S)
    dispersion whose imaginary part sets the growth rate. A and B_plus,
    B_minus are the underlying pairing/hopping combinations.
    """

    k: np.ndarray
    omega_sw: np.ndarray
    w_tilde: np.ndarray
    A: np.ndarray
    B_plus: np.ndarray
    B_minus: np.ndarray


def _sign_plus(x: np.ndarray) -> np.ndarray:
    """sign(x) with sign(0) = +1 (convention at isolated zeros)."""
    return np.where(x >= 0.0, 1.0, -1.0)


def transverse_dispersion(k, q: float, theta: float, dJz: float, S: float = 1.0) -> DispersionCurve:
    """Quasiparticle dispersion of the z-detuned transverse helix.

    With X = sin^2(theta) dJz:

        A_k  = S X cos k
        B_k  = S (X cos k - 4 cos q sin^2(k/2) - 2 cos(theta) sin q sin k)
        w_sw = (B- + sign(B+) sqrt((B+)^2 - 4 A^2)) / 2
        w~_k = 2 sqrt(2) sin(k/2) sqrt(cos q) sqrt(2 cos q sin^2(k/2) - X cos k)

    Square roots take the principal complex branch (upper half-plane), which
    makes w~ odd in k. Both dispersions go complex on the same k windows.
    """
    if not (0.0 < q < math.pi / 2):
        raise ValueError(f"need 0 < q < pi/2, got {q}")
    if not (0.0 < theta < math.pi):
        raise ValueError(f"need 0 < theta < pi, got {theta}")
    k = np.asarray(k, dtype=float)
    X = math.sin(theta) ** 2 * dJz
    s2 = np.sin(k / 2.0) ** 2
    A = S * X * np.cos(k)
    B = S * (X * np.cos(k) - 4.0 * math.cos(q) * s2 - 2.0 * math.cos(theta) * math.sin(q) * np.sin(k))
    Bm = S * (X * np.cos(-k) - 4.0 * math.cos(q) * s2 + 2.0 * math.cos(theta) * math.sin(q) * np.sin(k))
    B_plus = B + Bm
    B_minus = B - Bm
    root = np.sqrt((B_plus**2 - 4.0 * A**2).astype(complex))
    omega_sw = 0.5 * (B_minus + _sign_plus(B_plus) * root)
    w_tilde = (
        2.0
        * math.sqrt(2.0)
        * np.sin(k / 2.0)
        * math.sqrt(math.cos(q))
        * np.sqrt((2.0 * math.cos(q) * s2 - X * np.cos(k)).astype(complex))
    )
    return DispersionCurve(k=k, omega_sw=omega_sw, w_tilde=w_tilde, A=A, B_plus=B_plus, B_minus=B_minus)


def stable_window(q: float, theta: float) -> tuple[float, float]:
    """Documented stable detuning window (-cos q / sin^2 theta, 0).

    The dispersion is real throughout this window. (Reality in fact extends
    down to -2 cos q / sin^2 theta before the zone-edge window opens; the
    returned endpoints are the documented ones.)
    """
    return (-math.cos(q) / math.sin(theta) ** 2, 0.0)


@dataclass(frozen=True)
class InstabilityWindow:
    """Complex-dispersion window (k_lower, k_upper) and its fastest mode.

    side is "gapless" for the small-k window of positive detuning and
    "zone-edge" for the window at k = pi of strongly negative detuning.
    rate_max = b1(k_max) is per unit S.
    """

    k_lower: float
    k_upper: float
    k_max: float
    rate_max: float
    side: str


def _b1(k, q: float, X: float) -> float:
    s2 = np.sin(k / 2.0) ** 2
    arg = 2.0 * (math.cos(q) + X) * s2 - X
    return (
        2.0
        * math.sqrt(2.0)
        * np.abs(np.sin(k / 2.0))
        * math.sqrt(math.cos(q))
        * np.sqrt(np.abs(arg))
    )


def instability_window(q: float, theta: float, dJz: float):
    """Locate the complex window of the transverse dispersion, if any.

    dJz > 0: a window (0, k_*) opens about k = 0 with
    sin^2(k_*/2) = X / (2(cos q + X)), X = sin^2(theta) dJz; the interior
    growth maximum is found by bounded golden-section/parabolic search.
    dJz <= 0: the dispersion stays real until dJz < -2 cos q / sin^2 theta,
    where a window opens at the zone edge; there the growth increases
    monotonically to k = pi, so the maximizer is the edge itself. Returns
    None when the spectrum is real everywhere.
    """
    X = math.sin(theta) ** 2 * dJz
    cq = math.cos(q)
    if dJz > 0.0:
        k_star = 2.0 * math.asin(math.sqrt(X / (2.0 * (cq + X))))
        res = minimize_scalar(
            lambda kk: -_b1(kk, q, X),
            bounds=(0.0, k_star),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return InstabilityWindow(
            k_lower=0.0,
            k_upper=k_star,
            k_max=float(res.x),
            rate_max=float(-res.fun),
            side="gapless",
        )
    if X >= -2.0 * cq:
        return None
    # zone-edge window: cos k below cq/(cq+X); growth is monotone on it
    k_edge = math.acos(cq / (cq + X))
    return InstabilityWindow(
        k_lower=k_edge,
        k_upper=math.pi,
        k_max=math.pi,
        rate_max=float(_b1(math.pi, q, X)),
        side="zone-edge",
    )


def _phi(z: np.ndarray) -> np.ndarray:
    """Entire function sin^2(sqrt(z))/z, with sinh growth for z < 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    pos = ~small & (z > 0)
    neg = ~small & (z < 0)
    zs = z[small]
    out[small] = 1.0 - zs / 3.0 + 2.0 * zs**2 / 45.0 - zs**3 / 315.0
    out[pos] = np.sin(np.sqrt(z[pos])) ** 2 / z[pos]
    y = np.sqrt(-z[neg])
    out[neg] = np.sinh(y) ** 2 / (-z[neg])
    return out


def scaling_function(tau, q: float, theta: float, dJz: float, n_k: int | None = None) -> np.ndarray:
    """Thermodynamic-limit scaling function f(tau) of the contrast.

        f(tau) = (1/2pi) Int dk (A~_k^2 / w~_k^2) sin^2(w~_k tau)

    with A~_k = sin^2(theta) cos(k) dJz. The integrand is written as
    A~^2 tau^2 phi(w~^2 tau^2), which is analytic in k (only even powers of
    w~ appear), so the uniform trapezoid rule converges spectrally; the grid
    grows with tau to resolve the oscillations.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    if n_k is None:
        n_k = max(8192, 256 * (int(np.max(tau)) + 1))
    k = -math.pi + 2.0 * math.pi * (np.arange(n_k) + 0.5) / n_k
    X = math.sin(theta) ** 2 * dJz
    A_red = X * np.cos(k)
    s2 = np.sin(k / 2.0) ** 2
    w2 = 8.0 * math.cos(q) * s2 * (2.0 * math.cos(q) * s2 - X * np.cos(k))
    out = np.empty(len(tau))
    chunk = max(1, int(2e7) // n_k)
    for i in range(0, len(tau), chunk):
        t = tau[i : i + chunk, None]
        vals = (A_red**2)[None, :] * t**2 * _phi(w2[None, :] * t**2)
        out[i : i + chunk] = vals.mean(axis=1)
    return out


@dataclass(frozen=True)
class DecayRates:
    """Asymptotic contrast decay rates on one side of the transition.

    branch is "algebraic" (stable side: f grows linearly with slope gamma1)
    or "exponential" (unstable side: gamma2_exact = 2 S b1(k*) with the
    perturbative small-detuning limit alongside).
    """

    branch: str
    gamma1: float | None = None
    gamma2_exact: float | None = None
    gamma2_perturbative: float | None = None


def rates(q: float, theta: float, dJz: float, S: float = 1.0) -> DecayRates:
    """Late-time decay rate of the contrast for the detuned transverse helix.

    Stable branch (dJz < 0 inside the documented window):
        gamma1 = (1/2 sqrt(2)) (sin^3 theta / sqrt(cos q)) |dJz|^(3/2)
    Unstable branch (dJz > 0):
        gamma2 = 2 S b1(k*) exactly, ~ 2 S sin^2(theta) dJz perturbatively.
    """
    if dJz > 0.0:
        win = instability_window(q, theta, dJz)
        return DecayRates(
            branch="exponential",
            gamma2_exact=2.0 * S * win.rate_max,
            gamma2_perturbative=2.0 * S * math.sin(theta) ** 2 * dJz,
        )
    lo, _ = stable_window(q, theta)
    if dJz < lo or dJz == 0.0:
        raise ValueError(
            f"dJz={dJz} is outside both asymptotic branches "
            f"(stable window is ({lo:.6f}, 0))"
        )
    gamma1 = (
        (1.0 / (2.0 * math.sqrt(2.0)))
        * math.sin(theta) ** 3
        / math.sqrt(math.cos(q))
        * abs(dJz) ** 1.5
    )
    return DecayRates(branch="algebraic", gamma1=gamma1)


# ---------------------------------------------------------------------------
# multi-flavour Bloch problem for the elliptic families


@dataclass
class BlochMatrixPair:
    """Hermitian pairing (A) and hopping (B) matrices at quasimomentum k."""

    k: float
    A: np.ndarray
    B: np.ndarray

    @property
    def lam(self) -> int:
        return len(self.V_diagonal)

    @property
    def V_diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.B))


def bloch_matrices(eta, zeta, V, k: float) -> BlochMatrixPair:
    """Assemble (A_k, B_k) for a unit cell with per-bond eta, zeta and onsite V.

    B has V on the diagonal, eta_s at (s+1, s) with conjugates mirrored, and
    the wrap bond carries the Bloch phase: B[lam-1, 0] = eta e^{ik}. A has
    the same layout with zeta (zero diagonal). For lam <= 2 the wrap bond
    coincides with an interior bond and the contributions accumulate.
    zeta must be real for the pair to be Hermitian.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=complex))
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    V = np.atleast_1d(np.asarray(V, dtype=float))
    lam = len(V)
    if not (len(eta) == len(zeta) == lam):
        raise ValueError("eta, zeta, V must have equal length")
    if np.abs(zeta.imag).max() > 1e-12:
        raise ValueError("pairing amplitude zeta must be real")
    A = np.zeros((lam, lam), dtype=complex)
    B = np.zeros((lam, lam), dtype=complex)
    if lam == 1:
        ph = np.exp(1j * k)
        B[0, 0] = V[0] + eta[0] * ph + np.conj(eta[0] * ph)
        A[0, 0] = zeta[0].real * 2.0 * math.cos(k)
        return BlochMatrixPair(k=k, A=A, B=B)
    B[np.arange(lam), np.arange(lam)] = V
    for s in range(lam - 1):
        B[s + 1, s] += eta[s]
        B[s, s + 1] += np.conj(eta[s])
        A[s + 1, s] += zeta[s]
        A[s, s + 1] += np.conj(zeta[s])
    ph = np.exp(1j * k)
    B[lam - 1, 0] += eta[lam - 1] * ph
    B[0, lam - 1] += np.conj(eta[lam - 1] * ph)
    A[lam - 1, 0] += zeta[lam - 1] * ph
    A[0, lam - 1] += np.conj(zeta[lam - 1] * ph)
    return BlochMatrixPair(k=k, A=A, B=B)


def unit_cell_size(kappa: float, q: float) -> int:
    """lambda = 4K(kappa)/q, required to be an integer (commensurate cell)."""
    lam_f = 4.0 * complete_K(kappa) / q
    lam = round(lam_f)
    if lam < 1 or abs(lam_f - lam) > 1e-9 * max(1.0, lam):
        raise ValueError(f"unit cell 4K/q = {lam_f} is not an integer")
    return lam


def family_coefficients(family: str, kappa: float, q: float, delta: float, S: float = 1.0):
    """Per-cell (eta, zeta, V) arrays for the gtsh or glsh family.

    gtsh takes a z detuning, glsh an x detuning; either way the pairing is
    (S/2) delta, the hopping adds delta to twice the parent elliptic value,
    and the onsite potential is the detuning-independent elliptic profile.
    """
    lam = unit_cell_size(kappa, q)
    snq, cnq, dnq = jacobi_sncndn(q, kappa)
    if family == "gtsh":
        eta = 0.5 * S * (2.0 * cnq + delta)
    elif family == "glsh":
        eta = 0.5 * S * (2.0 * dnq + delta)
    else:
        raise ValueError(f"unknown family {family!r} (expected 'gtsh' or 'glsh')")
    zeta = 0.5 * S * delta
    sn_s = jacobi_sncndn(q * np.arange(lam), kappa)[0]
    V = -2.0 * S * cnq * dnq / (1.0 - (kappa * sn_s * snq) ** 2)
    return np.full(lam, eta, dtype=complex), np.full(lam, zeta, dtype=complex), V


def multiflavour_matrices(
    k: float, family: str, kappa: float, q: float, delta: float, S: float = 1.0
) -> BlochMatrixPair:
    """Bloch pair (A_k, B_k) of the detuned gtsh/glsh flavour problem."""
    eta, zeta, V = family_coefficients(family, kappa, q, delta, S)
    return bloch_matrices(eta, zeta, V, k)


def bogoliubov_generator(pair: BlochMatrixPair, pair_minus: BlochMatrixPair | None = None) -> np.ndarray:
    """Complex generator C_k of d/dt (a_k, a+_{-k}) = -i C_k (a_k, a+_{-k}).

    The general lower row is (-conj(A_{-k}), -conj(B_{-k})). For real eta and
    zeta the -k matrices are the elementwise conjugates of the +k ones and
    the generator reduces to the printed form [[B, A], [-A, -B]]; pass
    pair_minus explicitly when the hopping is complex (the single-flavour
    transverse recast).
    """
    A, B = pair.A, pair.B
    if pair_minus is None:
        return np.block([[B, A], [-A, -B]])
    return np.block([[B, A], [-np.conj(pair_minus.A), -np.conj(pair_minus.B)]])


def dynamical_matrix(pair: BlochMatrixPair) -> np.ndarray:
    """Real dynamical matrix D_k of the canonical quadrature evolution.

    4 lam x 4 lam for k not in {0, pi} (coordinates ordered q_k, q_{-k},
    p_k, p_{-k}), 2 lam x 2 lam at the self-conjugate momenta. Assumes the
    real-eta symmetry B_{-k} = conj(B_k), A_{-k} = conj(A_k).
    """
    A, B, k = pair.A, pair.B, pair.k
    ReA, ImA = A.real, A.imag
    ReB, ImB = B.real, B.imag
    if abs(math.sin(k)) < 1e-12:
        return np.block([[ImB + ImA, ReB - ReA], [-(ReB + ReA), ImB - ImA]])
    return np.block(
        [
            [ImB, ImA, ReB, -ReA],
            [-ImA, -ImB, -ReA, ReB],
            [-ReB, -ReA, ImB, -ImA],
            [-ReA, -ReB, ImA, -ImB],
        ]
    )


def _momentum_grid(n_k: int) -> np.ndarray:
    """Midpoint grid over (-pi, pi): avoids the marginal k = 0 mode, whose
    numerically split zero eigenvalue would otherwise set the noise floor."""
    return -math.pi + 2.0 * math.pi * (np.arange(n_k) + 0.5) / n_k


def _stacked_bloch(family, kappa, q, delta, S, k_grid):
    """Vectorized (A_k, B_k) stacks: k enters only through the wrap phase."""
    eta, zeta, V = family_coefficients(family, kappa, q, delta, S)
    lam = len(V)
    if lam == 1:
        ph = np.exp(1j * np.asarray(k_grid))
        B = (V[0] + eta[0] * ph + np.conj(eta[0] * ph)).reshape(-1, 1, 1)
        A = (zeta[0] * ph + np.conj(zeta[0] * ph)).reshape(-1, 1, 1)
        return A.astype(complex), B.astype(complex)
    A0 = np.zeros((lam, lam), dtype=complex)
    B0 = np.diag(V).astype(complex)
    for s in range(lam - 1):
        B0[s + 1, s] += eta[s]
        B0[s, s + 1] += np.conj(eta[s])
        A0[s + 1, s] += zeta[s]
        A0[s, s + 1] += np.conj(zeta[s])
    wrap = np.zeros((lam, lam), dtype=complex)
    wrap[lam - 1, 0] = 1.0
    ph = np.exp(1j * np.asarray(k_grid))[:, None, None]
    B = B0[None] + eta[lam - 1] * ph * wrap + np.conj(eta[lam - 1] * ph) * wrap.T
    A = A0[None] + zeta[lam - 1] * ph * wrap + np.conj(zeta[lam - 1] * ph) * wrap.T
    return A, B


def _screened_rate(minus: np.ndarray, plus: np.ndarray) -> float:
    """max |Im sqrt(mu)| over mu in spec(minus @ plus), momentum-stacked.

    Positive definiteness of both factors forces every mu real positive, so
    blocks of momenta are screened out by batched Cholesky (bisecting on
    failure); eigenvalues are computed, batched, only for the momenta where
    a factor is not PD.
    """
    fail: list[int] = []
    stack = [np.arange(len(minus))]
    while stack:
        blk = stack.pop()
        try:
            np.linalg.cholesky(minus[blk])
            np.linalg.cholesky(plus[blk])
        except np.linalg.LinAlgError:
            if len(blk) == 1:
                fail.append(int(blk[0]))
            else:
                mid = len(blk) // 2
                stack.append(blk[:mid])
                stack.append(blk[mid:])
    if not fail:
        return 0.0
    for first, second in ((minus, plus), (plus, minus)):
        # if one factor is PD = L L+, spec(minus plus) = spec(L+ other L),
        # Hermitian, so the cheaper eigvalsh applies and mu is exactly real
        try:
            L = np.linalg.cholesky(first[fail])
        except np.linalg.LinAlgError:
            continue
        Lh = np.conj(np.swapaxes(L, -1, -2))
        mu = np.linalg.eigvalsh(Lh @ second[fail] @ L)
        return float(np.sqrt(max(0.0, -mu.min())))
    mu = np.linalg.eigvals(minus[fail] @ plus[fail])
    return float(np.abs(np.sqrt(mu.astype(complex)).imag).max())


def lyapunov_max(
    family: str, kappa: float, q: float, delta: float, S: float = 1.0, n_k: int = 400
) -> float:
    """Largest Bogoliubov growth rate over the sublattice Brillouin zone.

    The spectrum of C_k = [[B, A], [-A, -B]] is (+/-) the square roots of
    spec((B-A)(B+A)), so the growth rate is max |Im sqrt(mu)|. The -k
    matrices are elementwise conjugates of the +k ones, so only half the
    zone is diagonalized; an n_k-point full-zone midpoint grid is assumed.
    Values at or below STABILITY_THRESHOLD * S count as stable.
    """
    if n_k < 2:
        raise ValueError("n_k must be >= 2")
    k_half = _momentum_grid(n_k)[n_k // 2 :]
    A, B = _stacked_bloch(family, kappa, q, delta, S, k_half)
    return _screened_rate(B - A, B + A)


def growth_rate_direct(eta, zeta, V, k_grid) -> float:
    """Growth rate via direct diagonalization of C_k (no symmetry shortcuts).

    Works for complex hopping too, by building B at both +k and -k. Slower
    than lyapunov_max; used as the independent route in consistency tests.
    """
    rate = 0.0
    for k in np.atleast_1d(k_grid):
        pair = bloch_matrices(eta, zeta, V, float(k))
        pair_m = bloch_matrices(eta, zeta, V, -float(k))
        C = bogoliubov_generator(pair, pair_m)
        rate = max(rate, float(np.abs(np.linalg.eigvals(C).imag).max()))
    return rate


def contrast_multiflavour(
    family: str,
    kappa: float,
    q: float,
    delta: float,
    S: float = 1.0,
    T: float = 20.0,
    n_k: int = 400,
    n_samples: int = 201,
) -> ContrastSeries:
    """Thermodynamic-limit contrast from the flavour problem.

        D_SW(t) = 1 - (1/2 pi lam S) sum_{ss'} Int dk |exp(-i C_k t)_{s, lam+s'}|^2

    The k integral is a midpoint rule with n_k points; each momentum is
    propagated by powers of its own sample-step exponential.
    """
    if T <= 0 or n_samples < 2:
        raise ValueError("need T > 0 and at least two samples")
    k_grid = _momentum_grid(n_k)
    A, B = _stacked_bloch(family, kappa, q, delta, S, k_grid)
    lam = A.shape[1]
    C = np.block([[B, A], [-A, -B]])
    times = np.linspace(0.0, T, n_samples)
    step = times[1] - times[0]
    E = expm(-1j * step * C)
    V = np.zeros((len(k_grid), 2 * lam, lam), dtype=complex)
    V[:, :lam, :] = np.eye(lam)
    D = np.empty(n_samples)
    D[0] = 1.0
    for n in range(1, n_samples):
        V = E @ V
        pair_density = np.sum(np.abs(V[:, lam:, :]) ** 2) / len(k_grid)
        D[n] = 1.0 - pair_density / (lam * S)
    return ContrastSeries(times=times, D=D, f=S * (1.0 - D))


def _scan_cell(args) -> dict:
    kappa, lam, delta, family, S, n_k = args
    q = 4.0 * complete_K(kappa) / lam
    thr = STABILITY_THRESHOLD * S
    lm = lyapunov_max(family, kappa, q, -delta, S, n_k)
    lp = lyapunov_max(family, kappa, q, +delta, S, n_k)
    return {
        "kappa": kappa,
        "lambda": int(lam),
        "q": q,
        "class": f"{'U' if lm > thr else 'S'}-{'U' if lp > thr else 'S'}",
        "lyap_minus": float(lm),
        "lyap_plus": float(lp),
    }


def phase_scan(
    kappa_grid,
    lambdas,
    delta: float = 0.01,
    family: str = "glsh",
    S: float = 1.0,
    n_k: int = 400,
    workers: int | None = None,
) -> list[dict]:
    """Classify helix stability over a (kappa, lambda) grid at detuning +-delta.

    Each record holds the growth rates at -delta and +delta and the class
    string "{U|S}-{U|S}" (minus sign first), with U meaning the rate exceeds
    STABILITY_THRESHOLD * S. Cells are independent, so workers > 1 fans them
    out over a process pool; record order is grid order either way.
    """
    cells = [
        (float(kappa), int(lam), delta, family, S, n_k)
        for kappa in np.atleast_1d(kappa_grid)
        for lam in lambdas
    ]
    if workers is not None and workers > 1 and len(cells) > 1:
        from multiprocessing import Pool

        with Pool(min(workers, len(cells))) as pool:
            return pool.map(_scan_cell, cells)
    return [_scan_cell(cell) for cell in cells]
