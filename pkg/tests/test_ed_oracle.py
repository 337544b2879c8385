import math

import numpy as np
import pytest
from scipy import sparse

from xyzscar import ed_oracle as ed
from xyzscar import rotframe, scars, spinwave
from xyzscar.elliptic import complete_K

THETA = math.pi / 4
GAMMA = math.cos(THETA)


def transverse_params(L=6, M=1, S=1.0, gamma=GAMMA):
    return scars.ScarParams.commensurate(0.0, M, L, gamma=gamma, S=S)


class TestSpinOperators:
    @pytest.mark.parametrize("S", [0.5, 1.0, 1.5, 2.0, 2.5])
    def test_commutators_and_casimir(self, S):
        ops = ed.spin_operators(S)
        pairs = [
            (ops.Sx, ops.Sy, ops.Sz),
            (ops.Sy, ops.Sz, ops.Sx),
            (ops.Sz, ops.Sx, ops.Sy),
        ]
        for a, b, c in pairs:
            assert np.abs(a @ b - b @ a - 1j * c).max() <= 1e-12
        casimir = ops.Sx @ ops.Sx + ops.Sy @ ops.Sy + ops.Sz @ ops.Sz
        assert np.abs(casimir - S * (S + 1) * np.eye(ops.dim)).max() <= 1e-12

    def test_half_spin_is_pauli_over_two(self):
        ops = ed.spin_operators(0.5)
        np.testing.assert_allclose(ops.Sx, np.array([[0, 0.5], [0.5, 0]]))
        np.testing.assert_allclose(ops.Sz, np.diag([0.5, -0.5]))

    def test_ordering_highest_weight_first(self):
        ops = ed.spin_operators(1.5)
        np.testing.assert_allclose(np.diag(ops.Sz).real, [1.5, 0.5, -0.5, -1.5])

    @pytest.mark.parametrize("S", [0.0, -1.0, 0.7])
    def test_rejects_bad_spin(self, S):
        with pytest.raises(ValueError, match="2S"):
            ed.spin_operators(S)


class TestCoherentState:
    def test_north_pole_is_highest_weight(self):
        psi = ed.coherent_state([0.0, 0.0, 1.0], 2.0)
        expected = np.zeros(5)
        expected[0] = 1.0
        np.testing.assert_array_equal(psi, expected)

    def test_equator_half_spin(self):
        psi = ed.coherent_state([1.0, 0.0, 0.0], 0.5)
        overlap = abs(np.vdot(psi, np.array([1.0, 1.0]) / math.sqrt(2)))
        assert abs(overlap - 1.0) <= 1e-12

    def test_south_pole_convention(self):
        psi = ed.coherent_state([0.0, 0.0, -1.0], 1.5)
        assert abs(abs(psi[-1]) - 1.0) <= 1e-12
        assert np.abs(psi[:-1]).max() <= 1e-12

    @pytest.mark.parametrize("S", [0.5, 1.0, 2.0])
    def test_expectation_reproduces_direction(self, S):
        rng = np.random.default_rng(11)
        ops = ed.spin_operators(S)
        for _ in range(6):
            omega = rng.normal(size=3)
            omega /= np.linalg.norm(omega)
            psi = ed.coherent_state(omega, S)
            for axis, op in enumerate((ops.Sx, ops.Sy, ops.Sz)):
                value = float(np.vdot(psi, op @ psi).real)
                assert abs(value / S - omega[axis]) <= 1e-10

    def test_rejects_non_unit_vector(self):
        with pytest.raises(ValueError, match="unit length"):
            ed.coherent_state([0.0, 0.0, 2.0], 1.0)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError, match="3-vector"):
            ed.coherent_state([1.0, 0.0], 1.0)


class TestProductAndSiteOperators:
    def test_product_state_site_expectations(self):
        p = transverse_params(L=5, S=1.0)
        texture = scars.scar_texture(p)
        psi = ed.product_state(texture, 1.0)
        assert abs(np.linalg.norm(psi) - 1.0) <= 1e-10
        ops = ed.spin_operators(1.0)
        for j in range(5):
            for axis, op in enumerate((ops.Sx, ops.Sy, ops.Sz)):
                full = ed.site_operator(op, j, 5)
                value = float(np.vdot(psi, full @ psi).real)
                assert abs(value - texture[j, axis]) <= 1e-10

    def test_site_operator_rejects_bad_site(self):
        op = ed.spin_operators(0.5).Sx
        with pytest.raises(ValueError, match="site index"):
            ed.site_operator(op, 4, 4)

    def test_dimension_cap(self):
        with pytest.raises(ValueError, match="cap"):
            ed.product_state(np.tile([0.0, 0.0, 1.0], (13, 1)), 0.5)


class TestBuildHamiltonian:
    def test_two_site_ising_ring_by_hand(self):
        """A 2-ring keeps both bonds, so H = 2 Jz Sz Sz with eigenvalues
        +-1/2, each doubly degenerate."""
        H = ed.build_hamiltonian((0.0, 0.0, 1.0), 0.5, 2).toarray()
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvalsh(H)), [-0.5, -0.5, 0.5, 0.5], atol=1e-14
        )

    def test_zero_couplings_zero_hamiltonian(self):
        H = ed.build_hamiltonian((0.0, 0.0, 0.0), 1.0, 3)
        assert H.nnz == 0

    def test_hermiticity(self):
        H = ed.build_hamiltonian((0.9, 1.0, 0.35), 1.0, 5)
        assert np.abs((H - H.conj().T).toarray()).max() <= 1e-12

    def test_translation_symmetry(self):
        H = ed.build_hamiltonian((0.7, 1.0, 0.4), 0.5, 6)
        T = ed.translation_operator(0.5, 6)
        assert np.abs((H @ T - T @ H).toarray()).max() <= 1e-12

    def test_translation_is_permutation(self):
        T = ed.translation_operator(1.0, 3)
        assert np.abs((T @ T.conj().T - sparse.identity(27)).toarray()).max() == 0.0

    def test_full_matrix_coupling_accepted(self):
        mat = np.array([[1.0, 0.2, 0.0], [0.2, 1.0, 0.0], [0.0, 0.0, 0.5]])
        H = ed.build_hamiltonian(mat, 0.5, 4)
        assert np.abs((H - H.conj().T).toarray()).max() <= 1e-12

    def test_dimension_cap(self):
        with pytest.raises(ValueError, match="cap"):
            ed.build_hamiltonian((1.0, 1.0, 0.5), 0.5, 13)

    def test_rejects_single_site(self):
        with pytest.raises(ValueError, match="two sites"):
            ed.build_hamiltonian((1.0, 1.0, 0.5), 0.5, 1)


class TestEigenstateResidual:
    @pytest.mark.parametrize("S", [0.5, 1.0])
    def test_transverse_scar_is_exact(self, S):
        p = transverse_params(S=S)
        assert ed.eigenstate_residual(p) <= 1e-10

    @pytest.mark.parametrize("kappa,gamma", [(0.5, 0.0), (0.9, 0.7071), (0.9, 1.0)])
    def test_elliptic_scars_are_exact(self, kappa, gamma):
        p = scars.ScarParams.commensurate(kappa, 1, 6, gamma=gamma, S=1.0)
        assert ed.eigenstate_residual(p) <= 1e-10

    def test_phase_offset_still_exact(self):
        p = scars.ScarParams.commensurate(0.5, 1, 6, gamma=0.3, S=1.0, phi=0.8)
        assert ed.eigenstate_residual(p) <= 1e-10

    def test_energy_matches_density(self):
        p = scars.ScarParams.commensurate(0.9, 1, 5, gamma=0.7071, S=1.0)
        texture = scars.scar_texture(p)
        psi = ed.product_state(texture, p.S)
        H = ed.build_hamiltonian(scars.parent_couplings(p.kappa, p.q), p.S, p.L)
        per_site = float(np.vdot(psi, H @ psi).real) / p.L
        target = scars.energy_density(p.kappa, p.q, p.S)
        assert abs(per_site - target) <= 1e-9 * abs(target)

    def test_detuned_coupling_breaks_eigenstate(self):
        p = transverse_params()
        J = scars.parent_couplings(p.kappa, p.q).detuned(dJz=0.03)
        assert ed.eigenstate_residual(p, J=J) > 1e-3

    def test_rejects_incommensurate(self):
        p = scars.ScarParams(kappa=0.0, q=1.0, gamma=GAMMA, L=6, S=0.5)
        with pytest.raises(ValueError, match="commensurate"):
            ed.eigenstate_residual(p)


class TestEvolveExact:
    def setup_method(self):
        self.H = ed.build_hamiltonian((1.0, 1.0, 0.4), 0.5, 4)
        rng = np.random.default_rng(3)
        psi = rng.normal(size=16) + 1j * rng.normal(size=16)
        self.psi0 = psi / np.linalg.norm(psi)

    def test_zero_time_is_identity(self):
        states = ed.evolve_exact(self.psi0, self.H, [0.0])
        np.testing.assert_allclose(states[0], self.psi0, atol=1e-12)

    def test_norm_preserved(self):
        states = ed.evolve_exact(self.psi0, self.H, np.linspace(0, 20, 9))
        norms = np.linalg.norm(states, axis=1)
        assert np.abs(norms - 1.0).max() <= 1e-10

    def test_energy_conserved(self):
        states = ed.evolve_exact(self.psi0, self.H, np.linspace(0, 10, 7))
        energies = np.einsum("td,td->t", states.conj(), (self.H @ states.T).T).real
        assert np.abs(energies - energies[0]).max() <= 1e-10

    def test_eigenstate_overlap_stays_unity(self):
        p = transverse_params()
        psi0 = ed.product_state(scars.scar_texture(p), p.S)
        H = ed.build_hamiltonian(scars.parent_couplings(p.kappa, p.q), p.S, p.L)
        states = ed.evolve_exact(psi0, H, [0.0, 1.5, 7.0])
        overlaps = np.abs(states @ psi0.conj())
        assert np.abs(overlaps - 1.0).max() <= 1e-10

    def test_two_spin_rabi(self):
        """XX 2-ring in the one-flip sector is a [[0, 1], [1, 0]] block, so
        the stay probability of |up, down> is cos(t)^2 exactly."""
        H = ed.build_hamiltonian((1.0, 1.0, 0.0), 0.5, 2)
        psi0 = np.zeros(4, dtype=complex)
        psi0[1] = 1.0
        times = np.linspace(0.0, 3.0, 31)
        states = ed.evolve_exact(psi0, H, times)
        stay = np.abs(states[:, 1]) ** 2
        np.testing.assert_allclose(stay, np.cos(times) ** 2, atol=1e-12)

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="Hermitian"):
            ed.evolve_exact(np.array([1.0, 0.0]), bad, [0.1])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            ed.evolve_exact(np.ones(3), np.eye(2), [0.1])


class TestContrastExact:
    def test_parent_contrast_is_flat(self):
        series = ed.contrast_exact(transverse_params(), 0.0, T=8.0, n_samples=17)
        assert np.abs(series.D - 1.0).max() <= 1e-12
        assert np.abs(series.f).max() <= 1e-12

    @pytest.mark.parametrize(
        "kappa,gamma,family", [(0.5, 0.0, "gtsh"), (0.8, 1.0, "glsh")]
    )
    def test_static_families_flat_at_parent(self, kappa, gamma, family):
        p = scars.ScarParams.commensurate(kappa, 1, 6, gamma=gamma, S=0.5)
        series = ed.contrast_exact(p, 0.0, T=5.0, n_samples=11, family=family)
        assert np.abs(series.D - 1.0).max() <= 1e-12

    def test_detuning_decays_contrast(self):
        p = scars.ScarParams.commensurate(0.8, 1, 6, gamma=1.0, S=0.5)
        series = ed.contrast_exact(p, -0.05, T=10.0, n_samples=21)
        assert series.D[-1] < 1.0 - 1e-4

    def test_transverse_asymmetry_small_ring(self):
        """The unstable-side momentum window 0 < k < 0.242 contains no mode
        of a 6-site ring (smallest nonzero k is 2pi/6), so the decay here is
        dominated by the sign-symmetric secular k = 0 growth and the split
        between the detuning signs is a few percent, unstable side larger.
        """
        p = transverse_params(S=1.0)
        plus = ed.contrast_exact(p, +0.03, T=10.0, n_samples=41)
        minus = ed.contrast_exact(p, -0.03, T=10.0, n_samples=41)
        f_plus, f_minus = 1.0 - plus.D[-1], 1.0 - minus.D[-1]
        assert f_plus > f_minus
        assert 1.0 < f_plus / f_minus < 1.1

    def test_short_time_spinwave_agreement(self):
        """Leading 1/S error budget: |D_exact - D_SW| <= 0.5 (S t)^2 / S^2
        out to St = 2."""
        S, dJz = 1.0, 0.03
        p = transverse_params(S=S)
        omega = -2.0 * S * GAMMA * dJz
        frame = rotframe.frame_transverse(THETA, p.q, omega, p.L, dJz=dJz)
        coeffs = spinwave.sw_coefficients(frame, S)
        sw = spinwave.contrast_sw(coeffs, S, T=2.0 / S, n_samples=21, theta=THETA)
        exact = ed.contrast_exact(p, dJz, T=2.0 / S, n_samples=21)
        envelope = 0.5 * (S * sw.times) ** 2 / S**2 + 1e-12
        assert np.all(np.abs(exact.D - sw.D) <= envelope)

    def test_family_inference_rejects_generic_gamma(self):
        p = scars.ScarParams.commensurate(0.5, 1, 6, gamma=0.4, S=0.5)
        with pytest.raises(ValueError, match="gamma"):
            ed.contrast_exact(p, 0.01, T=1.0, n_samples=3)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError, match="family"):
            ed.contrast_exact(transverse_params(), 0.01, family="spiral")

    def test_theta_fills_spin_contrast_column(self):
        series = ed.contrast_exact(
            transverse_params(), 0.02, T=2.0, n_samples=5, theta=THETA
        )
        assert series.C is not None
        assert abs(series.C[0] - 1.0) <= 1e-10

    def test_validates_grid(self):
        with pytest.raises(ValueError, match="positive"):
            ed.contrast_exact(transverse_params(), 0.01, T=0.0)
        with pytest.raises(ValueError, match="two samples"):
            ed.contrast_exact(transverse_params(), 0.01, n_samples=1)


class TestStateIO:
    def test_round_trip(self, tmp_path):
        p = transverse_params(L=5, S=1.0)
        psi = ed.product_state(scars.scar_texture(p), 1.0)
        path = tmp_path / "state.bin"
        ed.save_state(path, psi, 5, 1.0)
        loaded, L, S = ed.load_state(path)
        assert (L, S) == (5, 1.0)
        np.testing.assert_array_equal(loaded, psi)

    def test_layout_is_documented_format(self, tmp_path):
        """Header: three little-endian int64 (L, 2S, dim); body: interleaved
        re/im little-endian float64."""
        psi = np.array([0.5 + 0.25j, -0.5 - 0.75j], dtype=complex)
        path = tmp_path / "tiny.bin"
        ed.save_state(path, psi, 1, 0.5)
        raw = path.read_bytes()
        header = np.frombuffer(raw[:24], dtype="<i8")
        np.testing.assert_array_equal(header, [1, 1, 2])
        body = np.frombuffer(raw[24:], dtype="<f8")
        np.testing.assert_array_equal(body, [0.5, 0.25, -0.5, -0.75])

    def test_save_rejects_wrong_dimension(self, tmp_path):
        with pytest.raises(ValueError, match="shape"):
            ed.save_state(tmp_path / "x.bin", np.ones(3, dtype=complex), 2, 0.5)

    def test_load_rejects_truncation(self, tmp_path):
        p = transverse_params(L=5, S=0.5)
        psi = ed.product_state(scars.scar_texture(p), 0.5)
        path = tmp_path / "state.bin"
        ed.save_state(path, psi, 5, 0.5)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="truncated"):
            ed.load_state(path)

    def test_load_rejects_inconsistent_header(self, tmp_path):
        path = tmp_path / "bad.bin"
        with open(path, "wb") as fh:
            np.array([2, 1, 3], dtype="<i8").tofile(fh)
            np.zeros(6, dtype="<f8").tofile(fh)
        with pytest.raises(ValueError, match="inconsistent"):
            ed.load_state(path)
