import numpy as np
import pytest

from src.backend.models.errors import MissingDerivativeError
from src.backend.models.history_segment import HistorySegment
from src.backend.models.spectrum import SpectralState
from src.backend.services.functionals import DEFAULT_MU, delay_compensator, lyapunov_V
from src.backend.services.history import constant_history, init_from_function


class TestDelayCompensator:
    def test_constant_history_vanishes(self):
        """Test a constant history carries no delay energy"""
        h = constant_history(SpectralState([1.0, 2.0]), r=1.0, dt=0.1)
        assert delay_compensator(h) == pytest.approx(0.0)

    def test_unit_derivative(self):
        """Test (mu / r) int_0^r s ds = mu r / 2 for |u'| = 1"""
        h = init_from_function(lambda theta: SpectralState([theta, 0.0], theta), 2.0, 0.1, 2)
        assert delay_compensator(h) == pytest.approx(DEFAULT_MU * 2.0 / 2.0)
        assert delay_compensator(h, mu=1.0) == pytest.approx(1.0)

    def test_needs_derivatives(self):
        """Test the compensator without a derivative buffer"""
        h = HistorySegment(np.zeros((11, 2)), r=1.0, dt=0.1, t_now=0.0)
        with pytest.raises(MissingDerivativeError):
            delay_compensator(h)


class TestLyapunovV:
    def test_heat_model(self, heat_spec):
        """Test V is the energy of the newest state when G vanishes"""
        h = constant_history(SpectralState([0.0, 1.0, 0.0, 0.0]), r=1.0, dt=0.25)
        sample = lyapunov_V(heat_spec, h)
        # (||u||^2 + ||A^{1/2} u||^2) / 2 with lambda_2 = 4
        assert sample.kinetic == pytest.approx(2.5)
        assert sample.potential == pytest.approx(0.0)
        assert sample.total == pytest.approx(2.5)
        assert sample.t == 0.0

    def test_potential_enters(self, nicholson_spec):
        """Test the potential of g(s) = s adds ||u||^2 / 2"""
        u = np.zeros(8)
        u[0] = 2.0
        h = constant_history(SpectralState(u), r=1.0, dt=0.25)
        sample = lyapunov_V(nicholson_spec, h)
        assert sample.potential == pytest.approx(2.0)
        assert sample.total == pytest.approx(4.0 + 2.0)
