from pathlib import Path

import numpy as np
import pytest

from src.backend.models.experiment_config import OUTPUT_DIR_ENV, InitialProfile


class TestInitialProfile:
    def test_constant(self):
        """Test a constant history is padded to m"""
        phi = InitialProfile("constant", (1.0, 2.0)).sampler(4, 1.0)
        np.testing.assert_array_equal(phi(-0.5).coeffs, [1.0, 2.0, 0.0, 0.0])
        assert phi(-0.5).time == -0.5

    def test_ramp(self):
        """Test the ramp vanishes at -r and equals u0 at 0"""
        phi = InitialProfile("ramp", (2.0,)).sampler(2, 2.0)
        np.testing.assert_allclose(phi(-2.0).coeffs, [0.0, 0.0])
        np.testing.assert_allclose(phi(-1.0).coeffs, [1.0, 0.0])
        np.testing.assert_allclose(phi(0.0).coeffs, [2.0, 0.0])

    def test_random_amplitude(self):
        """Test random profiles are seeded and scaled to the amplitude"""
        profile = InitialProfile("random", amplitude=100.0)
        a = profile.base_state(8, np.random.default_rng(1))
        b = profile.base_state(8, np.random.default_rng(1))
        np.testing.assert_array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(100.0)


class TestExperimentConfig:
    def test_rng_is_seeded(self, small_config):
        """Test generators depend on seed and offset only"""
        assert small_config.rng(1).random() == small_config.rng(1).random()
        assert small_config.rng(0).random() != small_config.rng(1).random()

    def test_with_seed(self, small_config):
        """Test overriding the seed updates the echoed config"""
        other = small_config.with_seed(42)
        assert other.seed == 42
        assert other.raw["experiment"]["seed"] == 42
        assert small_config.seed == 3

    def test_initial_profile_defaults(self, small_config):
        """Test the profile when params carry no initial block"""
        profile = small_config.initial_profile()
        assert profile.kind == "constant"
        assert profile.coeffs == (1.0,)

    def test_resolve_output_dir_precedence(self, small_config):
        """Test --out, then the environment, then runs/<kind>"""
        env = {OUTPUT_DIR_ENV: "/tmp/from-env"}
        assert small_config.resolve_output_dir("/tmp/flag", env) == Path("/tmp/flag")
        assert small_config.resolve_output_dir(None, env) == Path("/tmp/from-env")
        assert small_config.resolve_output_dir(None, {}) == Path("runs") / "simulate"
