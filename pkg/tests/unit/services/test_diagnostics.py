from dataclasses import replace
from unittest.mock import patch

import numpy as np
import pytest

from src.backend.models.errors import FitError, NonDissipativeError
from src.backend.models.spectrum import SpectralState
from src.backend.models.trajectory import IntegratorConfig, TrajectoryRecord
from src.backend.services import diagnostics
from src.backend.services.history import init_from_function
from src.backend.services.integrator import integrate
from src.protocols.schemas import Scheme


def _constant(coeffs):
    return lambda theta: SpectralState(coeffs, theta)


def _record_with_energy(values) -> TrajectoryRecord:
    record = TrajectoryRecord()
    for i, value in enumerate(values):
        record.append([float(i)] + [0.0] * 6, [float(i), float(value), 0.0])
    return record


class TestFitDecay:
    def test_recovers_parameters(self):
        """Test the fit of an exact exponential with a floor"""
        t = np.linspace(0.0, 5.0, 60)
        fit = diagnostics.fit_decay(t, 3.0 * np.exp(-2.0 * t) + 0.5)
        assert fit.rate == pytest.approx(2.0, rel=1e-4)
        assert fit.floor == pytest.approx(0.5, abs=1e-4)
        assert fit.amplitude == pytest.approx(3.0, rel=1e-4)
        assert fit.residual < 1e-4

    def test_window_restarts_clock(self):
        """Test the amplitude refers to the first sample of the window"""
        t = np.linspace(0.0, 10.0, 101)
        fit = diagnostics.fit_decay(t, np.exp(-t) + 1.0, window=(2.0, 10.0))
        assert fit.rate == pytest.approx(1.0, rel=1e-4)
        assert fit.amplitude == pytest.approx(np.exp(-2.0), rel=1e-3)

    def test_rising_series(self):
        """Test a series approaching its floor from below keeps a positive rate"""
        t = np.linspace(0.0, 10.0, 101)
        fit = diagnostics.fit_decay(t, 2.0 - 3.0 * np.exp(-0.7 * t))
        assert fit.rate == pytest.approx(0.7, rel=1e-4)
        assert fit.floor == pytest.approx(2.0, abs=1e-4)
        assert fit.amplitude == pytest.approx(-3.0, rel=1e-4)
        assert fit.residual < 1e-4

    def test_rising_positive_series(self):
        """Test a positive rising series fits with a negative amplitude"""
        t = np.linspace(0.0, 20.0, 201)
        fit = diagnostics.fit_decay(t, 5.0 - 4.0 * np.exp(-0.3 * t))
        assert fit.rate == pytest.approx(0.3, rel=1e-4)
        assert fit.floor == pytest.approx(5.0, rel=1e-4)
        assert fit.amplitude < 0.0

    def test_distance_floor_stays_nonnegative(self):
        """Test a nonnegative series never gets a negative floor"""
        t = np.linspace(0.0, 5.0, 51)
        fit = diagnostics.fit_decay(t, 2.0 * np.exp(-t) + 0.01 * np.sin(7.0 * t) ** 2)
        assert fit.floor >= 0.0
        assert fit.rate >= 0.0

    def test_forced_nonnegative_floor(self):
        """Test nonnegative=True clamps the floor of a series that dips below zero"""
        t = np.linspace(0.0, 5.0, 51)
        fit = diagnostics.fit_decay(t, np.exp(-2.0 * t) - 0.1, nonnegative=True)
        assert 0.0 <= fit.floor < 1e-6
        assert fit.rate >= 0.0

    def test_flat_series(self):
        """Test a constant series has zero rate"""
        fit = diagnostics.fit_decay(np.arange(20.0), np.full(20, 4.0))
        assert fit.rate == 0.0
        assert fit.floor == 4.0

    @pytest.mark.parametrize(
        "times, values",
        [(np.arange(5.0), np.ones(5)), (np.arange(20.0), np.ones(19)), (np.arange(20.0), np.full(20, np.nan))],
    )
    def test_rejects(self, times, values):
        """Test short, mismatched and non-finite series"""
        with pytest.raises(FitError):
            diagnostics.fit_decay(times, values)


class TestAbsorbingRadius:
    def test_settling_series(self):
        """Test the radius and entry time of a settling monitor"""
        record = _record_with_energy([10, 5, 3, 2, 1.5, 1.2, 1.1, 1.05, 1.02, 1.01])
        radius = diagnostics.absorbing_radius(record)
        assert radius.R_star == pytest.approx(1.05)
        assert radius.t_entry == 6.0
        assert radius.quantity == "energy"

    def test_growing_series(self):
        """Test a monitor still growing in the tail"""
        record = _record_with_energy(np.arange(1.0, 11.0))
        with pytest.raises(NonDissipativeError):
            diagnostics.absorbing_radius(record)

    def test_other_quantity(self):
        """Test the radius of a diagnostic column"""
        record = _record_with_energy([1.0] * 8)
        radius = diagnostics.absorbing_radius(record, quantity="norm_H")
        assert radius.R_star == 0.0
        assert radius.t_entry == 0.0
        assert radius.quantity == "norm_H"

    def test_bad_fraction(self):
        """Test tail fractions outside (0, 1)"""
        with pytest.raises(ValueError):
            diagnostics.absorbing_radius(_record_with_energy([1.0] * 8), tail_fraction=1.0)


class TestPairSeparation:
    def test_heat_flow_decays_at_lambda_1(self, heat_spec):
        """Test the separation of two heat trajectories decays like exp(-lambda_1 t)"""
        cfg = IntegratorConfig(dt=0.05, T_final=3.0, scheme=Scheme.ETD1, record_every=2)
        report = diagnostics.pair_separation(heat_spec, _constant([1.0, 0, 0, 0]), _constant([0.0, 0, 0, 0]), cfg)
        assert report.decay_rate == pytest.approx(1.0, rel=1e-6)
        assert report.initial_distance == pytest.approx(2.0)
        assert report.weak_term[0] == pytest.approx(1.0)
        assert report.sup_dist_H[-1] == pytest.approx(1.0)
        assert 0.0 < report.fitted_C < np.inf
        assert len(report.times) == 31

    def test_identical_data(self, nicholson_spec):
        """Test identical initial data never separate"""
        cfg = IntegratorConfig(dt=0.05, T_final=1.0, record_every=5)
        phi = _constant(np.full(8, 0.3))
        report = diagnostics.pair_separation(nicholson_spec, phi, phi, cfg)
        assert report.fitted_C == 0.0
        assert max(report.cl_dist) == 0.0


class TestDependenceScaling:
    def test_linear_model_scales_linearly(self, heat_spec):
        """Test separations of a linear flow are proportional to delta"""
        cfg = IntegratorConfig(dt=0.1, T_final=2.0, scheme=Scheme.ETD1)
        result = diagnostics.dependence_scaling(
            heat_spec, _constant([1.0, 0.5, 0, 0]), _constant([1.0, 1.0, 0, 0]), [1e-2, 1e-3], cfg
        )
        assert result["slope_sup_dist"] == pytest.approx(1.0, abs=1e-6)
        assert result["slope_smoothing"] == pytest.approx(1.0, abs=1e-6)
        assert result["smoothing_time"] == 2.0
        assert result["sup_dist_H"][0] == pytest.approx(1e-2)

    def test_rejects(self, heat_spec):
        """Test a single delta and a smoothing time beyond T_final"""
        cfg = IntegratorConfig(dt=0.1, T_final=1.0)
        phi = _constant([1.0, 0, 0, 0])
        with pytest.raises(FitError):
            diagnostics.dependence_scaling(heat_spec, phi, phi, [1e-2], cfg)
        with pytest.raises(FitError):
            diagnostics.dependence_scaling(heat_spec, phi, phi, [1e-2, 1e-3], cfg)


class TestAlmostLipschitz:
    def test_bound_holds(self, nicholson_spec):
        """Test the delay-term estimate on ramp pairs"""
        rng = np.random.default_rng(4)
        for _ in range(10):
            a, b = rng.standard_normal(8), rng.standard_normal(8)
            h1 = init_from_function(lambda th, a=a: SpectralState((1 + th) * a, th), 1.0, 0.05, 8)
            h2 = init_from_function(lambda th, b=b: SpectralState((1 + th) * b, th), 1.0, 0.05, 8)
            lhs, rhs = diagnostics.almost_lipschitz_check(nicholson_spec, h1, h2)
            assert lhs <= rhs * (1.0 + 1e-9)


class TestLyapunovSandwich:
    def setup_method(self):
        """Set up histories sampled along a short Nicholson trajectory"""
        self.histories = []

    def _sample(self, spec):
        cfg = IntegratorConfig(dt=0.05, T_final=2.0, record_every=5)
        integrate(spec, _constant(np.full(8, 0.5)), cfg, on_record=lambda h, t: self.histories.append(h.snapshot()))

    def test_fitted_constants_within_bounds(self, nicholson_spec):
        """Test the fitted constants against the analytic bounds"""
        self._sample(nicholson_spec)
        result = diagnostics.lyapunov_sandwich(nicholson_spec, self.histories)
        assert result["holds"] is True
        assert result["c0_bound"] == 0.5
        assert result["c1_bound"] == pytest.approx(2.0)
        assert 0.5 <= result["c0"]
        assert result["c1"] <= 2.0 + 1e-9
        assert result["c_upper"] == pytest.approx(0.0, abs=1e-9)

    def test_constants_come_from_samples(self, nicholson_spec):
        """Test the fitted constants move with the sampled trajectory"""
        self._sample(nicholson_spec)
        first = diagnostics.lyapunov_sandwich(nicholson_spec, self.histories[:2])
        full = diagnostics.lyapunov_sandwich(nicholson_spec, self.histories)
        assert full["c0"] <= first["c0"]
        assert full["c1"] >= first["c1"]
        assert (first["c0"], first["c1"]) != (full["c0"], full["c1"])

    def test_inflated_functional_breaks_upper_bound(self, nicholson_spec):
        """Test an inflated functional fails the check"""
        self._sample(nicholson_spec)
        real = diagnostics.lyapunov_V

        def inflated(spec, h, mu):
            sample = real(spec, h, mu)
            return replace(sample, kinetic=10.0 * sample.kinetic)

        with patch("src.backend.services.diagnostics.lyapunov_V", side_effect=inflated):
            result = diagnostics.lyapunov_sandwich(nicholson_spec, self.histories)
        assert result["holds"] is False
        assert result["c1"] > result["c1_bound"]

    def test_needs_histories(self, nicholson_spec):
        """Test an empty history list"""
        with pytest.raises(FitError):
            diagnostics.lyapunov_sandwich(nicholson_spec, [])
