from unittest.mock import patch

import numpy as np
import pytest

from src.backend.experiments import validation
from src.backend.models.errors import ConfigError, FitError
from src.backend.models.point_cloud import PointCloud
from src.backend.services import model_terms


class TestSuiteSelection:
    def _config(self, config_dict, config_parser, params):
        config_dict["experiment"] = {"kind": "validate", "seed": 1, "params": params}
        return config_parser.build(config_dict)

    def test_default_skips_opt_in(self, config_dict, config_parser):
        """Test the default selection leaves out the slow suites"""
        names = validation.selected_checks(self._config(config_dict, config_parser, {}))
        assert "attractor_dimension" not in names
        assert "spectral_exactness" in names
        assert len(names) == len(validation.CHECKS) - len(validation.OPT_IN)

    def test_explicit_suites(self, config_dict, config_parser):
        """Test suites listed in params run in order"""
        config = self._config(config_dict, config_parser, {"suites": ["potentiality", "spectral_exactness"]})
        assert validation.phases(config) == ("potentiality", "spectral_exactness", "writing")

    def test_unknown_suite(self, config_dict, config_parser):
        """Test an unknown suite name"""
        config = self._config(config_dict, config_parser, {"suites": ["spectral_exactness", "bogus"]})
        with pytest.raises(ValueError, match="bogus"):
            validation.selected_checks(config)


class TestChecks:
    def test_run_check_catches_errors(self, small_config):
        """Test a raising check is reported as failed"""

        def broken(config):
            raise RuntimeError("boom")

        with patch.dict(validation.CHECKS, {"broken": broken}):
            result = validation.run_check("broken", small_config)
        assert result["passed"] is False
        assert result["details"] == {"error": "RuntimeError: boom"}
        assert result["seconds"] >= 0.0

    def test_spectral_exactness(self, small_config):
        """Test the spectral identities hold to rounding"""
        passed, details = validation.check_spectral(small_config)
        assert passed
        assert details["grid_round_trip"] <= 1e-12

    def test_linear_exactness(self, small_config):
        """Test the exponential integrator reproduces the heat semigroup"""
        passed, details = validation.check_linear_exactness(small_config)
        assert passed
        assert details["steps"] == 1000

    def test_delay_oracle_first_interval(self):
        """Test the method-of-steps solution on [0, r] with and without damping"""
        assert validation.delay_ode_oracle(1.0) == pytest.approx(0.0, abs=1e-12)
        assert validation.delay_ode_oracle(2.0) == pytest.approx(-0.5, abs=1e-12)
        assert validation.delay_ode_oracle(1.0, lam=1.0) == pytest.approx(2.0 / np.e - 1.0, rel=1e-10)

    def test_delay_oracle_suite(self, small_config):
        """Test both schemes reach their order on the nearly undamped delay equation"""
        passed, details = validation.check_delay_oracle(small_config)
        assert passed, details
        assert details["lambda_1"] < 1e-4
        assert details["etd1"]["errors"][-1] < details["etd1"]["errors"][0]

    def test_linear_model(self):
        """Test the helper model switches off G"""
        spec = validation.linear_model(4, slope=2.0)
        assert spec.m == 4
        assert spec.gterm.is_zero
        assert spec.fmap.b.slope == 2.0

    def test_run_validate(self, config_dict, config_parser, memory_writer):
        """Test the validation report"""
        config_dict["experiment"] = {
            "kind": "validate",
            "seed": 1,
            "params": {"suites": ["spectral_exactness", "etd_linear_exactness"]},
        }
        phases = []
        outcome = validation.run_validate(config_parser.build(config_dict), memory_writer, phases.append)

        assert phases == ["spectral_exactness", "etd_linear_exactness", "writing"]
        assert outcome.passed
        report = memory_writer.read_json("validation.json")
        assert report["passed"] is True
        assert report["failed"] == []
        assert [s["name"] for s in report["suites"]] == ["spectral_exactness", "etd_linear_exactness"]


class TestModelChecks:
    """Suites that evaluate G, Pi and the dissipativity constants"""

    def test_model_terms_check_not_shadowed(self):
        """Test the suite and the pointwise dissipativity check stay distinct"""
        assert validation.check_g_dissipativity is model_terms.check_dissipativity
        assert validation.CHECKS["dissipativity"] is validation.check_dissipativity

    def test_potentiality_covers_cubic(self, small_config):
        """Test the potential check runs on the configured g and the full cubic"""
        passed, details = validation.check_potentiality(small_config)
        assert passed, details
        assert set(details["max_relative_error"]) == {"reference_cubic", "configured"}
        assert all(gap <= 1e-6 for gap in details["max_relative_error"].values())

    def test_potentiality_without_g(self, config_dict, config_parser):
        """Test a vanishing g leaves only the reference cubic"""
        config_dict["model"]["g"] = {"a1": 0.0, "a2": 0.0, "a3": 0.0}
        passed, details = validation.check_potentiality(config_parser.build(config_dict))
        assert passed
        assert list(details["max_relative_error"]) == ["reference_cubic"]

    def test_dissipativity_constants(self, small_config):
        """Test fitted constants hold on a fresh sample for both nonlinearities"""
        passed, details = validation.check_dissipativity_constants(small_config)
        assert passed, details
        cubic = details["reference_cubic"]
        # -min g' of s^3 + s^2 / 2 - s is 13 / 12
        assert cubic["c1"] >= 13.0 / 12.0 - 1e-12
        assert cubic["holds"] is True
        assert details["configured"]["holds"] is True

    def test_dissipativity_constants_report_failure(self, small_config):
        """Test a violated bound fails the suite"""
        with patch("src.backend.experiments.validation.check_g_dissipativity", return_value=False):
            passed, details = validation.check_dissipativity_constants(small_config)
        assert passed is False
        assert details["reference_cubic"]["holds"] is False


class TestDissipativitySuite:
    def setup_method(self):
        """Set up a forced heat model with a unique equilibrium"""
        self.model = {
            "spectrum": {"m": 8, "L": float(np.pi)},
            "eta": {"kind": "constant", "r": 1.0, "params": {"tau0": 1.0}},
            "fmap": {"b": {"kind": "linear", "slope": 0.0}, "B": {"kind": "identity"}},
            "g": {"a1": 0.0, "a2": 1.0, "a3": 0.0},
            "h": [1.0],
        }

    def test_runs_share_a_ball(self, config_dict, config_parser):
        """Test small and large initial data settle in the same ball with positive decay rates"""
        config_dict["model"] = self.model
        config_dict["experiment"] = {"kind": "validate", "seed": 2, "params": {"dissipativity_T": 20.0}}
        passed, details = validation.check_dissipativity(config_parser.build(config_dict))

        assert details["spread"] <= 0.1
        assert len(details["lyapunov_decay"]) == 2
        assert all(d is not None and d["rate"] > 0.0 for d in details["lyapunov_decay"])

    def test_failed_fit_is_reported(self, config_dict, config_parser):
        """Test a failed decay fit fails the suite instead of raising"""
        config_dict["model"] = self.model
        config_dict["experiment"] = {"kind": "validate", "seed": 2, "params": {"dissipativity_T": 5.0}}
        with patch("src.backend.experiments.validation.fit_decay", side_effect=FitError("no decay")):
            passed, details = validation.check_dissipativity(config_parser.build(config_dict))
        assert passed is False
        assert details["lyapunov_decay"] == [None, None]


class TestAttractorDimension:
    def setup_method(self):
        """Set up a circle embedded in 32 coefficients"""
        angle = np.linspace(0.0, 2.0 * np.pi, 4000, endpoint=False)
        points = np.zeros((angle.size, 32))
        points[:, 0], points[:, 1] = np.cos(angle), np.sin(angle)
        self.circle = PointCloud(points)

    def test_uses_feedback_instance(self, small_config):
        """Test the suite samples the oscillating preset, not the validation model"""
        with patch("src.backend.experiments.validation.sample_attractor", return_value=self.circle) as sampler:
            passed, details = validation.check_attractor_dimension(small_config)

        spec = sampler.call_args.args[0]
        assert spec.m == 32
        assert spec.fmap.b.c1 == 10.0
        assert sampler.call_args.kwargs["embed_modes"] == 32
        assert details["preset"] == "feedback"
        assert passed, details
        assert set(details["slopes"]) == {"8", "16", "32"}
        assert details["spread"] == pytest.approx(0.0)

    def test_point_attractor_fails(self, small_config):
        """Test an attractor collapsed to one point does not pass"""
        point = PointCloud(np.ones((50, 32)))
        with patch("src.backend.experiments.validation.sample_attractor", return_value=point):
            passed, details = validation.check_attractor_dimension(small_config)
        assert passed is False
        assert details["slopes"]["8"] == 0.0

    def test_unknown_preset(self, config_dict, config_parser):
        """Test a missing dimension preset is a config error"""
        config_dict["experiment"] = {"kind": "validate", "params": {"dimension_preset": "missing"}}
        with pytest.raises(ConfigError):
            validation.check_attractor_dimension(config_parser.build(config_dict))

    @pytest.mark.slow
    def test_feedback_attractor(self, small_config):
        """Test the sampled feedback attractor has a consistent nonzero slope"""
        passed, details = validation.check_attractor_dimension(small_config)
        assert passed, details
        assert all(0.0 < s < 3.0 for s in details["slopes"].values())
