import numpy as np
import pytest

from src.backend.models.errors import InvalidDiscretizationError, SpectralDimensionError
from src.backend.models.spectrum import GridState, SpectralState
from src.backend.services.spectral_core import (
    apply_A_power,
    build_dirichlet_spectrum,
    frac_norm,
    from_grid,
    grid_inner,
    inner,
    project,
    to_grid,
)


class TestBuildDirichletSpectrum:
    def test_eigenvalues_on_pi(self):
        """Test lambda_k = k^2 on (0, pi)"""
        spectrum = build_dirichlet_spectrum(4)
        np.testing.assert_allclose(spectrum.eigenvalues, [1.0, 4.0, 9.0, 16.0])
        assert spectrum.domain_length == pytest.approx(np.pi)

    def test_eigenvalues_scale_with_length(self):
        """Test lambda_k = (k pi / L)^2"""
        spectrum = build_dirichlet_spectrum(2, L=2.0)
        np.testing.assert_allclose(spectrum.eigenvalues, [(np.pi / 2) ** 2, np.pi**2])

    @pytest.mark.parametrize("m, L", [(0, np.pi), (2.5, np.pi), (3, -1.0)])
    def test_rejects(self, m, L):
        """Test invalid mode counts and domains"""
        with pytest.raises(InvalidDiscretizationError):
            build_dirichlet_spectrum(m, L)


class TestNorms:
    def setup_method(self):
        """Set up a four-mode spectrum"""
        self.spectrum = build_dirichlet_spectrum(4)

    def test_frac_norm_of_eigenvector(self):
        """Test ||A^alpha e_k|| = lambda_k^alpha"""
        e2 = SpectralState.basis(2, 4)
        assert frac_norm(e2, 0.5, self.spectrum) == pytest.approx(2.0)
        assert frac_norm(e2, -0.5, self.spectrum) == pytest.approx(0.5)
        assert frac_norm(e2, 0.0, self.spectrum) == pytest.approx(1.0)

    def test_order_mismatch(self):
        """Test a state longer than the spectrum is refused"""
        with pytest.raises(SpectralDimensionError):
            frac_norm(SpectralState(np.ones(5)), 0.5, self.spectrum)

    def test_apply_A_power(self):
        """Test the spectral multiplier"""
        u = SpectralState([1.0, 1.0, 1.0, 1.0])
        np.testing.assert_allclose(apply_A_power(u, 1.0, self.spectrum).coeffs, [1, 4, 9, 16])

    def test_project(self):
        """Test projection keeps the leading modes"""
        u = SpectralState([1.0, 2.0, 3.0], time=1.5)
        projected = project(u, 2)
        np.testing.assert_array_equal(projected.coeffs, [1.0, 2.0])
        assert projected.time == 1.5
        with pytest.raises(InvalidDiscretizationError):
            project(u, 0)

    def test_inner_pads(self):
        """Test the inner product of states of different order"""
        assert inner(SpectralState([1.0, 2.0]), SpectralState([3.0, 4.0, 5.0])) == 11.0


class TestGridTransforms:
    def test_eigenvector_on_grid(self):
        """Test e_1 sampled at the interior nodes"""
        m = 7
        grid = to_grid(SpectralState.basis(1, m))
        np.testing.assert_allclose(
            grid.values, np.sqrt(2.0 / np.pi) * np.sin(grid.nodes), atol=1e-14
        )

    def test_round_trip(self):
        """Test from_grid inverts to_grid on a random state"""
        rng = np.random.default_rng(0)
        for L in (np.pi, 2.5):
            u = SpectralState(rng.standard_normal(64))
            back = from_grid(to_grid(u, L))
            np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-12)

    def test_quadrature_matches_inner(self):
        """Test nodal quadrature reproduces the spectral inner product"""
        rng = np.random.default_rng(1)
        u = SpectralState(rng.standard_normal(16))
        v = SpectralState(rng.standard_normal(16))
        assert grid_inner(to_grid(u), to_grid(v)) == pytest.approx(inner(u, v), abs=1e-12)

    def test_grid_state_domain_is_kept(self):
        """Test the domain length travels with the grid"""
        grid = to_grid(SpectralState([1.0, 0.0]), 3.0)
        assert isinstance(grid, GridState)
        assert grid.domain_length == 3.0
