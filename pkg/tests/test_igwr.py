# tests/test_igwr.py
"""
交替方向法估计测试
"""

import numpy as np
import pytest

from src.core.config import SolverConfig
from src.core.dataset import build_distance_matrix, validate_dataset
from src.core.exceptions import ConfigError
from src.core.models import BandwidthField, SpatialDataset
from src.estimation.igwr import IGWREstimator, recommend_p

from tests.conftest import make_dataset

GEORGIA_RSS = [2020, 1592, 1479, 1393, 1358, 1325]


class TestRecommendP:
    """测试肘部规则"""

    def test_georgia_rss_sequence(self):
        """测试 Georgia RSS 序列推荐 p=4"""
        assert recommend_p(range(1, 7), GEORGIA_RSS) == 4

    def test_georgia_rss_without_tolerance(self):
        """测试阈值为 0 时 Georgia 序列只由离弦最远点决定，推荐 p=2"""
        assert recommend_p(range(1, 7), GEORGIA_RSS, tolerance=0.0) == 2

    def test_rss_not_decreasing(self):
        """测试 RSS 从 p=2 起上升时推荐 p=1"""
        assert recommend_p([1, 2, 3], [10.0, 11.0, 12.0]) == 1

    def test_chord_fallback(self):
        """测试始终显著下降时取离首末连线最远的点"""
        rss = [100.0, 40.0, 30.0, 25.0, 21.0]
        assert recommend_p([1, 2, 3, 4, 5], rss) == 2

    def test_short_sequence(self):
        """测试两个点且持续下降时取最后一个"""
        assert recommend_p([1, 2], [10.0, 5.0]) == 2

    def test_length_mismatch(self):
        """测试长度不一致"""
        with pytest.raises(ConfigError):
            recommend_p([1, 2], [1.0])


class TestIGWRFit:
    """测试 igwr_fit"""

    @pytest.mark.parametrize('mode', ['global', 'local'])
    def test_trace_is_monotone(self, mode):
        """测试每个半步目标函数不上升"""
        ds = make_dataset(n=30, m_free=4, noise=1.0, seed=3)
        dm = build_distance_matrix(ds)
        report = IGWREstimator().igwr_fit(ds, dm, 2, mode)
        values = report.objective_values()
        assert np.all(values[1:] <= values[:-1] * (1 + 1e-9) + 1e-12)
        steps = [entry.step for entry in report.objective_trace]
        assert steps == ['beta', 'gamma'] * report.iterations
        assert report.mode == mode

    @pytest.mark.parametrize('mode', ['global', 'local'])
    @pytest.mark.parametrize('seed', range(10))
    def test_trace_monotone_random_instances(self, seed, mode):
        """测试随机实例上目标轨迹不上升，且子集基数与约束始终成立"""
        ds = make_dataset(n=25, m_free=5, noise=1.0, seed=100 + seed, spatial=seed % 2 == 0)
        dm = build_distance_matrix(ds)
        p = 1 + seed % 3
        report = IGWREstimator().igwr_fit(ds, dm, p, mode)
        values = report.objective_values()
        assert np.all(values[1:] <= values[:-1] * (1 + 1e-9) + 1e-12)
        assert report.selected.p == p
        assert report.beta.respects(report.selected)
        assert np.all(report.gamma.gamma >= 0)

    def test_recovers_true_subset(self, sample_dataset, sample_distance):
        """测试选出生成数据的变量并满足子集约束"""
        report = IGWREstimator().igwr_fit(sample_dataset, sample_distance, 2)
        assert report.converged
        assert report.selected_names == ['x1', 'x2']
        assert report.beta.respects(report.selected)
        assert report.r2 > 0.9
        assert report.r2_adj <= report.r2
        assert report.metrics.hat_trace is not None

    def test_fixed_point(self, sample_dataset, sample_distance):
        """测试从收敛点重新开始时一轮即停且目标不变"""
        estimator = IGWREstimator(SolverConfig(theta=1e-10, max_adm_iters=500))
        report = estimator.igwr_fit(sample_dataset, sample_distance, 2)
        assert report.converged
        again = estimator.igwr_fit(sample_dataset, sample_distance, 2,
                                   gamma_init=report.gamma, warm_start=report.selected,
                                   seed_objective=report.objective)
        assert again.iterations == 1
        assert again.selected == report.selected
        assert again.objective == pytest.approx(report.objective, rel=1e-9)

    def test_perfect_fit(self, perfect_dataset):
        """测试无噪声数据一轮收敛，RSS 为 0，带宽为 0"""
        dm = build_distance_matrix(perfect_dataset)
        report = IGWREstimator().igwr_fit(perfect_dataset, dm, 2)
        assert report.selected_names == ['a', 'c']
        assert report.iterations == 1
        assert report.converged
        assert report.rss == pytest.approx(0.0, abs=1e-18)
        assert report.gamma.gamma[0] == 0.0

    def test_local_bandwidths(self, sample_dataset, sample_distance):
        """测试 local 模式每个焦点一个带宽"""
        report = IGWREstimator().igwr_fit(sample_dataset, sample_distance, 2, 'local')
        assert report.gamma.gamma.shape == (sample_dataset.c,)
        assert np.all(report.gamma.gamma >= 0)

    def test_required_and_excluded(self, sample_dataset, sample_distance):
        """测试必选与排除变量"""
        estimator = IGWREstimator(SolverConfig(required_vars=('x4',), excluded_vars=('x2',)))
        report = estimator.igwr_fit(sample_dataset, sample_distance, 2)
        assert 'x4' in report.selected_names
        assert 'x2' not in report.selected_names

    def test_gamma_init_mode_mismatch(self, sample_dataset, sample_distance):
        """测试初始带宽模式与拟合模式不一致"""
        with pytest.raises(ConfigError):
            IGWREstimator().igwr_fit(sample_dataset, sample_distance, 2, 'local',
                                     gamma_init=BandwidthField.global_(1.0))

    def test_unknown_mode(self, sample_dataset, sample_distance):
        """测试未知模式"""
        with pytest.raises(ConfigError):
            IGWREstimator().igwr_fit(sample_dataset, sample_distance, 2, 'mixed')

    def test_max_iters_not_converged(self):
        """测试迭代上限内未收敛时给出提示"""
        ds = make_dataset(n=30, m_free=4, noise=1.0, seed=3)
        dm = build_distance_matrix(ds)
        report = IGWREstimator(SolverConfig(theta=1e-300, max_adm_iters=1)).igwr_fit(ds, dm, 2)
        if not report.converged:
            assert report.iterations == 1
            assert any('未收敛' in w for w in report.warnings)

    def test_unmatched_focal_points(self):
        """测试焦点不在观测点上时仍可拟合，但不计算有效自由度指标"""
        base = make_dataset(n=25, m_free=3)
        focal = np.vstack([base.coords[:20], [[50.0, 50.0]]])
        ds = validate_dataset(base.replace(focal_coords=focal))
        dm = build_distance_matrix(ds)
        report = IGWREstimator().igwr_fit(ds, dm, 1)
        assert report.metrics.hat_trace is None
        assert report.metrics.n == 20
        assert np.isnan(report.fitted[-1])


class TestSweep:
    """测试 p 扫描"""

    def test_three_active_variables(self):
        """测试恰有三个有效变量时推荐 p=3"""
        rng = np.random.RandomState(42)
        n = 200
        coords = rng.uniform(0, 10, size=(n, 2))
        X = rng.normal(size=(n, 4))
        y = 1.0 + 2.0 * X[:, 0] + 1.5 * X[:, 1] - 1.0 * X[:, 2] + 0.1 * rng.normal(size=n)
        ds = validate_dataset(SpatialDataset.from_arrays(y, X, coords))
        dm = build_distance_matrix(ds)
        result = IGWREstimator().sweep_p(ds, dm, range(1, 5))
        assert result.p_values == [1, 2, 3, 4]
        assert result.recommended_p == 3
        assert result.report_for(3).selected_names == ['x1', 'x2', 'x3']

    def test_sweep_structure(self, tiny_dataset):
        """测试扫描结果与肘部规则一致"""
        dm = build_distance_matrix(tiny_dataset)
        result = IGWREstimator().sweep_p(tiny_dataset, dm, [3, 1, 2])
        assert result.p_values == [1, 2, 3]
        assert result.recommended_p == recommend_p(result.p_values, result.rss_values)
        with pytest.raises(KeyError):
            result.report_for(5)
