import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psmet.linalg import (
    QuadratureGrid,
    eig_hermitian,
    grid_inner,
    grid_norm,
    hermiticity_defect,
    inv_psd,
    invert_sym_2x2,
    orthonormalize,
    psd_min_eig,
    require_density,
    require_hermitian,
    trapezoid_grid,
)


def eig2_analytic(a):
    """Independent closed-form eigenvalues of a 2x2 Hermitian matrix."""
    m = (a[0, 0].real + a[1, 1].real) / 2
    r = math.hypot((a[0, 0].real - a[1, 1].real) / 2, abs(a[0, 1]))
    return m + r, m - r


def random_hermitian(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (x + x.conj().T) / 2


class TestEigHermitian:
    def test_identity(self):
        vals, vecs = eig_hermitian(np.eye(2))
        assert np.allclose(vals, [1.0, 1.0])
        assert np.allclose(vecs @ vecs.conj().T, np.eye(2), atol=1e-12)

    def test_pauli_x(self):
        vals, vecs = eig_hermitian(np.array([[0, 1], [1, 0]], dtype=complex))
        assert np.allclose(vals, [1.0, -1.0], atol=1e-12)
        # eigenvectors (1, +-1)/sqrt(2) up to phase
        for k, lam in enumerate(vals):
            assert abs(vecs[1, k] / vecs[0, k] - lam) < 1e-10

    def test_sensor_state_spectrum(self):
        # rho'(phi=0.3, Gamma=0.5): eigenvalues (1 +- exp(-Gamma^2)) / 2
        phi, gam = 0.3, 0.5
        off = np.exp(-1j * phi - gam**2) / 2
        rho = np.array([[0.5, off], [np.conj(off), 0.5]])
        vals, _ = eig_hermitian(rho)
        expect_hi = (1 + math.exp(-0.25)) / 2
        expect_lo = (1 - math.exp(-0.25)) / 2
        assert abs(vals[0] - expect_hi) < 1e-14
        assert abs(vals[1] - expect_lo) < 1e-14
        assert round(vals[0], 5) == 0.88940
        assert round(vals[1], 5) == 0.11060

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="asymmetry"):
            eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_descending_order_and_reconstruction_mixed_sizes(self):
        rng = np.random.default_rng(7)
        for n in (2, 3, 5, 9, 16):
            a = random_hermitian(rng, n)
            vals, vecs = eig_hermitian(a)
            assert np.all(np.diff(vals) <= 1e-13)
            recon = (vecs * vals) @ vecs.conj().T
            assert np.abs(recon - a).max() < 1e-9
            # against an independent solver
            ref = np.sort(np.linalg.eigvalsh(a))[::-1]
            assert np.abs(vals - ref).max() < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=1, max_value=16), st.integers(min_value=0, max_value=2**31))
    def test_reconstruction_property(self, n, seed):
        a = random_hermitian(np.random.default_rng(seed), n)
        vals, vecs = eig_hermitian(a)
        assert np.abs((vecs * vals) @ vecs.conj().T - a).max() < 1e-9
        assert np.abs(vecs.conj().T @ vecs - np.eye(n)).max() < 1e-10
        assert abs(vals.sum() - np.trace(a).real) < 1e-10 * max(1.0, np.abs(a).max())


class TestPsdMinEig:
    def test_zero(self):
        assert psd_min_eig(np.zeros((2, 2))) == 0.0

    def test_indefinite_diag(self):
        assert abs(psd_min_eig(np.diag([3.0, -2.0])) - (-2.0)) < 1e-14

    def test_sensor_bound_gap_is_psd(self):
        # H(Gamma) - Q_gauss(Gamma, sigma) must be PSD; both from closed forms.
        gam, sigma = 0.5, 0.2
        a_par = math.pi**2 / (8 * sigma**2)
        h = np.diag([math.exp(-2 * gam**2), 4 * gam**2 / math.expm1(2 * gam**2)])
        qpp = math.exp(-gam**2) / (math.cosh(gam**2) + math.sinh(gam**2) / math.tanh(a_par))
        qgg = 2 * gam**2 / math.sinh(gam**2) * math.sinh(a_par) / math.sinh(gam**2 + a_par)
        gap = h - np.diag([qpp, qgg])
        # at sigma = 0.2 the gap is zero to rounding; negativity must stay
        # within the rounding floor
        assert psd_min_eig(gap) >= -1e-12
        assert abs(psd_min_eig(gap) - min(eig2_analytic(gap.astype(complex)))) < 1e-14
        # a wide apparatus leaves a strictly positive gap
        gap_wide = h - np.diag(
            [
                math.exp(-gam**2)
                / (math.cosh(gam**2) + math.sinh(gam**2) / math.tanh(math.pi**2 / 8)),
                2 * gam**2 / math.sinh(gam**2) * math.sinh(math.pi**2 / 8) / math.sinh(gam**2 + math.pi**2 / 8),
            ]
        )
        assert psd_min_eig(gap_wide) > 1e-3


class TestInvertSym2x2:
    def test_identity(self):
        assert np.allclose(invert_sym_2x2(np.eye(2)), np.eye(2))

    def test_diag(self):
        assert np.allclose(invert_sym_2x2(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))

    def test_sensor_qfim_inverse(self):
        gam = 0.5
        h = np.diag([math.exp(-2 * gam**2), 4 * gam**2 / math.expm1(2 * gam**2)])
        hinv = invert_sym_2x2(h)
        assert abs(hinv[0, 0] - math.exp(0.5)) < 1e-12
        assert abs(hinv[1, 1] - (math.expm1(0.5))) < 1e-12
        assert round(hinv[0, 0], 5) == 1.64872
        assert round(hinv[1, 1], 5) == 0.64872
        assert np.abs(h @ hinv - np.eye(2)).max() < 1e-10

    def test_near_singular_rejected(self):
        with pytest.raises(ValueError, match="det"):
            invert_sym_2x2(np.array([[1.0, 1.0], [1.0, 1.0]]))

    @settings(max_examples=50, deadline=None)
    @given(
        st.floats(min_value=-3, max_value=3),
        st.floats(min_value=-3, max_value=3),
        st.floats(min_value=-3, max_value=3),
    )
    def test_double_inverse_round_trip(self, a, b, c):
        m = np.array([[a, c], [c, b]])
        det = a * b - c * c
        if abs(det) < 1e-3:  # stay well-conditioned
            return
        assert np.abs(invert_sym_2x2(invert_sym_2x2(m)) - m).max() < 1e-8

    def test_inv_psd_matches_2x2(self):
        m = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert np.abs(inv_psd(m) - invert_sym_2x2(m)).max() < 1e-11


class TestGrid:
    def test_rejects_bad_grids(self):
        with pytest.raises(ValueError):
            QuadratureGrid(np.array([0.0, 0.0, 1.0]), np.ones(3))
        with pytest.raises(ValueError):
            QuadratureGrid(np.array([0.0, 1.0]), np.array([1.0, -1.0]))

    def test_ground_gaussian_normalization(self):
        sigma = 0.5
        grid = trapezoid_grid(-8.0, 8.0, 1024)
        amp = (2 * sigma**2 / np.pi) ** 0.25 * np.exp(-grid.points**2 * sigma**2)
        assert abs(grid_inner(grid, amp, amp).real - 1.0) < 1e-8

    def test_gram_schmidt_orthogonality(self):
        grid = trapezoid_grid(-6.0, 6.0, 512)
        f = np.exp(-grid.points**2) * (1.0 + 0.0j)
        g = np.exp(-grid.points**2) * grid.points  # odd: orthogonal by parity
        g = g - grid_inner(grid, f, g) / grid_inner(grid, f, f) * f
        assert abs(grid_inner(grid, f, g)) < 1e-10

    def test_success_mode_vectors_orthogonal_at_right_angle(self):
        # <xi1|xi2> in the success mode vanishes at postselection angle pi/2.
        sigma, gam, phi, g = 1.0, 0.5, 1e-6, np.pi / 2
        grid = trapezoid_grid(-8.0, 8.0, 2048)
        p = grid.points
        xi = (2 * sigma**2 / np.pi) ** 0.25 * np.exp(-(p**2) * sigma**2)
        half = np.sqrt(0.5)
        b1 = half * (np.exp(-1j * g * p) * (-np.exp(-1j * phi)) * half + np.exp(1j * g * p) * half)
        b2 = half * (np.exp(-1j * g * p) * (np.exp(-1j * phi)) * half + np.exp(1j * g * p) * half)
        # postselector (sin(pi/4), cos(pi/4)) folded in: both components weight 1/sqrt(2)
        f1 = (np.exp(-1j * g * p) * (-np.exp(-1j * phi)) + np.exp(1j * g * p)) / 2 * xi
        f2 = (np.exp(-1j * g * p) * (np.exp(-1j * phi)) + np.exp(1j * g * p)) / 2 * xi
        assert abs(grid_inner(grid, f1, f2)) < 1e-5

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_conjugate_symmetry_exact(self, seed):
        rng = np.random.default_rng(seed)
        grid = trapezoid_grid(-1.0, 1.0, 64)
        f = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        g = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        assert grid_inner(grid, f, g) == np.conj(grid_inner(grid, g, f))

    def test_length_mismatch(self):
        grid = trapezoid_grid(0.0, 1.0, 8)
        with pytest.raises(ValueError, match="length mismatch"):
            grid_inner(grid, np.ones(7), np.ones(8))

    def test_orthonormalize_rank(self):
        grid = trapezoid_grid(-5.0, 5.0, 256)
        f = np.exp(-grid.points**2)
        basis = orthonormalize(grid, [f, 2.0 * f, grid.points * f])
        assert basis.shape[0] == 2
        for i in range(2):
            for j in range(2):
                want = 1.0 if i == j else 0.0
                assert abs(grid_inner(grid, basis[i], basis[j]) - want) < 1e-10


class TestValidation:
    def test_hermiticity_defect(self):
        assert hermiticity_defect(np.eye(3)) == 0.0
        assert abs(hermiticity_defect(np.array([[0, 1], [0, 0]])) - 1.0) < 1e-15

    def test_require_density(self):
        rho = np.array([[0.5, 0.5], [0.5, 0.5]])
        require_density(rho)
        with pytest.raises(ValueError, match="trace"):
            require_density(2 * rho)
        with pytest.raises(ValueError, match="negative"):
            require_density(np.diag([1.5, -0.5]))

    def test_require_hermitian_returns_symmetrized(self):
        a = np.array([[1.0, 0.5 + 1e-15j], [0.5, 2.0]])
        h = require_hermitian(a)
        assert hermiticity_defect(h) == 0.0
