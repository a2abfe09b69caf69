import numpy as np
import pytest

from src.backend.models.errors import (
    HistoryTimeError,
    InvalidDiscretizationError,
    MissingDerivativeError,
    SpectralDimensionError,
)
from src.backend.models.history_segment import HistorySegment, steps_per_delay
from src.backend.models.spectrum import SpectralState


class TestStepsPerDelay:
    def test_divisible(self):
        """Test exact and floating-point divisible pairs"""
        assert steps_per_delay(1.0, 0.1) == 10
        assert steps_per_delay(1.0, 0.01) == 100

    @pytest.mark.parametrize("r, dt", [(1.0, 0.3), (0.0, 0.1), (1.0, -0.1), (0.1, 1.0)])
    def test_rejects(self, r, dt):
        """Test non-divisible or non-positive pairs"""
        with pytest.raises(InvalidDiscretizationError):
            steps_per_delay(r, dt)


class TestHistorySegment:
    def setup_method(self):
        """Set up a four-step history of scalar-valued modes"""
        self.states = np.arange(5, dtype=float).reshape(5, 1) * np.ones((5, 2))
        self.segment = HistorySegment(self.states, r=1.0, dt=0.25, t_now=0.0)

    def test_times_and_order(self):
        """Test the time grid ends at t_now"""
        np.testing.assert_allclose(self.segment.times, [-1.0, -0.75, -0.5, -0.25, 0.0])
        assert self.segment.size == 5
        assert self.segment.m == 2
        np.testing.assert_array_equal(self.segment.newest.coeffs, [4.0, 4.0])
        np.testing.assert_array_equal(self.segment.coeffs(0), [0.0, 0.0])

    def test_push_drops_oldest(self):
        """Test pushing advances the window"""
        self.segment.push(SpectralState([9.0, 9.0], 0.25))
        assert self.segment.t_now == pytest.approx(0.25)
        np.testing.assert_array_equal(self.segment.coeffs(0), [1.0, 1.0])
        np.testing.assert_array_equal(self.segment.coeffs(-1), [9.0, 9.0])
        np.testing.assert_array_equal(self.segment.ordered_states()[:, 0], [1, 2, 3, 4, 9])

    def test_push_rejects_wrong_time(self):
        """Test a state off the uniform grid is refused"""
        with pytest.raises(HistoryTimeError):
            self.segment.push(SpectralState([9.0, 9.0], 0.3))

    def test_push_rejects_wrong_order(self):
        """Test a state of another Galerkin order is refused"""
        with pytest.raises(SpectralDimensionError):
            self.segment.push(SpectralState([9.0], 0.25))

    def test_rollback_restores(self):
        """Test rollback undoes exactly one push"""
        before = self.segment.ordered_states().copy()
        self.segment.push(SpectralState([9.0, 9.0], 0.25)).rollback()
        np.testing.assert_array_equal(self.segment.ordered_states(), before)
        assert self.segment.t_now == 0.0
        with pytest.raises(RuntimeError):
            self.segment.rollback()

    def test_snapshot_is_independent(self):
        """Test the snapshot is unaffected by later pushes"""
        self.segment.push(SpectralState([9.0, 9.0], 0.25))
        copy = self.segment.snapshot()
        self.segment.push(SpectralState([7.0, 7.0], 0.5))
        assert copy.t_now == pytest.approx(0.25)
        np.testing.assert_array_equal(copy.ordered_states()[:, 0], [1, 2, 3, 4, 9])

    def test_wrong_row_count(self):
        """Test the buffer needs N + 1 rows"""
        with pytest.raises(SpectralDimensionError):
            HistorySegment(np.zeros((4, 2)), r=1.0, dt=0.25, t_now=0.0)

    def test_derivative_buffer(self):
        """Test derivatives travel with pushes and are optional"""
        with pytest.raises(MissingDerivativeError):
            self.segment.deriv_coeffs(0)
        segment = HistorySegment(self.states, 1.0, 0.25, 0.0, derivs=np.zeros((5, 2)))
        segment.push(SpectralState([1.0, 1.0], 0.25), SpectralState([2.0, 3.0], 0.25))
        np.testing.assert_array_equal(segment.deriv_coeffs(-1), [2.0, 3.0])
        segment.set_newest_derivative(SpectralState([5.0, 5.0]))
        np.testing.assert_array_equal(segment.ordered_derivs()[-1], [5.0, 5.0])
