# tests/test_kernel.py
"""
核函数与目标函数测试
"""

import numpy as np
import pytest

from src.analysis.kernel import (
    integrated_objective,
    per_focal_objective,
    per_focal_terms,
    weight_matrix,
    weight_row,
)
from src.core.exceptions import NegativeBandwidthError, NonFiniteError, ShapeMismatchError
from src.core.models import BandwidthField, DistanceMatrix


class TestWeights:
    """测试指数核权重"""

    def test_weight_row_values(self):
        """测试 exp(-γ·d²)"""
        row = weight_row([0.0, 0.5, 1.0], 2.0)
        np.testing.assert_allclose(row.w, np.exp(-2.0 * np.array([0.0, 0.25, 1.0])))
        assert row.gamma_used == 2.0

    def test_zero_gamma_is_uniform(self):
        """测试 γ=0 时权重全为 1"""
        np.testing.assert_array_equal(weight_row([0.1, 0.9], 0.0).w, [1.0, 1.0])

    def test_weights_in_unit_interval(self, sample_distance):
        """测试权重落在 (0, 1]，自身权重为 1"""
        W = weight_matrix(sample_distance, np.full(sample_distance.c, 5.0))
        assert np.all(W > 0) and np.all(W <= 1)
        np.testing.assert_allclose(np.diag(W), 1.0)

    def test_negative_gamma(self):
        """测试负带宽"""
        with pytest.raises(NegativeBandwidthError):
            weight_row([0.5], -1.0)

    def test_nonfinite_gamma(self):
        """测试非有限带宽"""
        with pytest.raises(NonFiniteError):
            weight_row([0.5], np.nan)


class TestObjective:
    """测试整体目标函数"""

    def test_per_focal_objective(self):
        """测试单焦点目标的手算值"""
        value = per_focal_objective([1.0, 2.0], [0.0, 1.0], 1.0)
        assert value == pytest.approx(1.0 + 1.0 + 4.0 * np.exp(-1.0))

    def test_zero_gamma_is_sse(self):
        """测试 γ=0 时目标为未加权残差平方和"""
        assert per_focal_objective([1.0, -2.0, 3.0], [0.1, 0.2, 0.3], 0.0) == pytest.approx(14.0)

    def test_two_point_example(self):
        """测试 c=1、n=2、d=(1,1)、e²=(4,4)、γ=ln 4 时目标为 2·ln 4 + 2"""
        dm = DistanceMatrix(d=np.array([[1.0, 1.0]]), d_raw_max=1.0, squared_row_sums=np.array([2.0]))
        value = integrated_objective(np.array([[2.0, 2.0]]), dm, BandwidthField.global_(np.log(4.0)))
        assert value == pytest.approx(2.0 * np.log(4.0) + 2.0, rel=1e-12)
        assert value == pytest.approx(4.7726, abs=1e-4)

    def test_integrated_matches_sum(self, sample_distance):
        """测试整体目标等于逐焦点目标之和"""
        rng = np.random.RandomState(42)
        errors = rng.normal(size=sample_distance.d.shape)
        gammas = rng.uniform(0, 3, size=sample_distance.c)
        expected = sum(per_focal_objective(errors[o], sample_distance.d[o], gammas[o])
                       for o in range(sample_distance.c))
        value = integrated_objective(errors, sample_distance, BandwidthField.local(gammas))
        assert value == pytest.approx(expected, rel=1e-12)
        assert per_focal_terms(errors, sample_distance, gammas).shape == (sample_distance.c,)

    def test_shape_mismatch(self, sample_distance):
        """测试残差形状不符"""
        with pytest.raises(ShapeMismatchError):
            integrated_objective(np.zeros((2, 2)), sample_distance, BandwidthField.global_(1.0))

    def test_nonfinite_errors(self):
        """测试残差含 NaN"""
        with pytest.raises(NonFiniteError):
            per_focal_objective([np.nan], [0.5], 1.0)
