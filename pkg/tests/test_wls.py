# tests/test_wls.py
"""
加权最小二乘测试
"""

import numpy as np
import pytest
import statsmodels.api as sm

from src.analysis.kernel import weight_matrix, weight_row
from src.analysis.wls import FocalGram, WlsEngine, hat_row, loo_predict, wls_fit
from src.core.dataset import build_distance_matrix
from src.core.exceptions import ShapeMismatchError, SingularNormalMatrixError
from src.core.models import SpatialDataset, SubsetMask

from tests.conftest import make_dataset


def _gram(ds, dm, gamma=3.0):
    return FocalGram(ds.X, ds.y, weight_matrix(dm, np.full(dm.c, gamma)))


class TestSingleFocal:
    """测试单焦点加权最小二乘"""

    def test_matches_statsmodels(self, sample_dataset, sample_distance):
        """测试与 statsmodels WLS 一致"""
        mask = SubsetMask.from_columns(sample_dataset.m, [1, 2])
        w = weight_row(sample_distance.d[3], 4.0)
        solution = wls_fit(sample_dataset, mask, w, sample_dataset.X[3])
        reference = sm.WLS(sample_dataset.y, sample_dataset.X[:, [0, 1, 2]], weights=w.w).fit()
        np.testing.assert_allclose(solution.beta_sub, reference.params, rtol=1e-9, atol=1e-12)
        e = sample_dataset.y - sample_dataset.X[:, [0, 1, 2]] @ reference.params
        assert solution.wsse == pytest.approx(np.sum(w.w * e ** 2), rel=1e-9)
        assert solution.sse_unweighted == pytest.approx(np.sum(e ** 2), rel=1e-9)
        assert solution.ridge == 0.0
        XS = sample_dataset.X[:, [0, 1, 2]]
        dense = np.linalg.pinv(XS.T @ (XS * w.w[:, None])) @ (XS.T @ (w.w * sample_dataset.y))
        np.testing.assert_allclose(solution.beta_sub, dense, rtol=1e-8)

    @pytest.mark.parametrize('seed', range(10))
    def test_matches_pinv_random_draws(self, seed):
        """测试随机子集与随机带宽下系数与伪逆解一致（每组 10 次抽样）"""
        ds = make_dataset(n=25, m_free=5, noise=1.0, seed=200 + seed)
        dm = build_distance_matrix(ds)
        rng = np.random.RandomState(seed)
        for _ in range(10):
            size = rng.randint(1, ds.m_free + 1)
            free = sorted(rng.choice(ds.free_indices, size=size, replace=False).tolist())
            mask = SubsetMask.from_columns(ds.m, free)
            o = rng.randint(dm.c)
            w = weight_row(dm.d[o], rng.uniform(0, 10))
            solution = wls_fit(ds, mask, w, ds.X_focal[o])
            XS = ds.X[:, list(mask.columns)]
            dense = np.linalg.pinv(XS.T @ (XS * w.w[:, None])) @ (XS.T @ (w.w * ds.y))
            np.testing.assert_allclose(solution.beta_sub, dense, rtol=1e-7, atol=1e-9)

    def test_hat_row_reproduces_prediction(self, sample_dataset, sample_distance):
        """测试帽子行与 y 的内积等于焦点预测"""
        mask = SubsetMask.from_columns(sample_dataset.m, [1, 3])
        w = weight_row(sample_distance.d[5], 2.0)
        h = hat_row(sample_dataset, mask, w, sample_dataset.X[5])
        solution = wls_fit(sample_dataset, mask, w, sample_dataset.X[5])
        assert h @ sample_dataset.y == pytest.approx(solution.fitted_at_focal, rel=1e-9)

    def test_loo_predict_oracle(self, sample_dataset, sample_distance):
        """测试留一预测等于去掉该观测后的拟合预测"""
        mask = SubsetMask.from_columns(sample_dataset.m, [1, 2])
        w = weight_row(sample_distance.d[0], 2.0)
        keep = np.arange(1, sample_dataset.n)
        X = sample_dataset.X[keep][:, [0, 1, 2]]
        sw = np.sqrt(w.w[keep])
        beta, *_ = np.linalg.lstsq(X * sw[:, None], sample_dataset.y[keep] * sw, rcond=None)
        expected = sample_dataset.X[0, [0, 1, 2]] @ beta
        assert loo_predict(sample_dataset, mask, w, 0) == pytest.approx(expected, rel=1e-8)

    def test_weight_length(self, sample_dataset):
        """测试权重长度不符"""
        mask = SubsetMask.from_columns(sample_dataset.m, [1])
        with pytest.raises(ShapeMismatchError):
            wls_fit(sample_dataset, mask, weight_row([0.0, 1.0], 1.0), sample_dataset.X[0])


class TestBatch:
    """测试批量焦点求解"""

    def test_subset_wsse_matches_direct(self, sample_dataset, sample_distance):
        """测试 Gram 公式的 WSSE 与残差重算一致"""
        engine = WlsEngine()
        gram = _gram(sample_dataset, sample_distance)
        cols = (0, 2, 4)
        wsse = engine.subset_wsse(gram, cols)
        local = engine.fit_local(sample_dataset, gram, cols)
        np.testing.assert_allclose(wsse, local.wsse, rtol=1e-8, atol=1e-10)
        assert engine.subset_wsse(gram, cols) is wsse

    def test_fit_local_matches_single(self, sample_dataset, sample_distance):
        """测试批量系数与单焦点结果一致"""
        engine = WlsEngine()
        gram = _gram(sample_dataset, sample_distance)
        mask = SubsetMask.from_columns(sample_dataset.m, [1, 2])
        local = engine.fit_local(sample_dataset, gram, mask.columns)
        for o in (0, 7, 19):
            w = weight_row(sample_distance.d[o], 3.0)
            single = engine.wls_fit(sample_dataset, mask, w, sample_dataset.X[o])
            np.testing.assert_allclose(local.beta[o, list(mask.columns)], single.beta_sub, rtol=1e-9)
        assert np.all(local.beta[:, [3, 4]] == 0.0)

    def test_more_columns_never_increase_wsse(self, sample_dataset, sample_distance):
        """测试嵌套子集的 WSSE 单调不增"""
        engine = WlsEngine()
        gram = _gram(sample_dataset, sample_distance)
        small = engine.subset_wsse(gram, (0, 1))
        large = engine.subset_wsse(gram, (0, 1, 3))
        assert np.all(large <= small + 1e-10)

    def test_hat_trace_matches_matrix(self, sample_dataset, sample_distance):
        """测试帽子矩阵迹与逐焦点帽子行拼成的矩阵对角线之和一致"""
        engine = WlsEngine()
        gram = _gram(sample_dataset, sample_distance)
        mask = SubsetMask.from_columns(sample_dataset.m, [1, 2])
        H = np.vstack([
            engine.hat_row(sample_dataset, mask, weight_row(sample_distance.d[o], 3.0), sample_dataset.X[o])
            for o in range(sample_distance.c)
        ])
        assert engine.hat_trace(sample_dataset, gram, mask.columns) == pytest.approx(np.trace(H), rel=1e-9)
        local = engine.fit_local(sample_dataset, gram, mask.columns)
        np.testing.assert_allclose(H @ sample_dataset.y, local.fitted_at_focal, rtol=1e-8)

    def test_loo_predictions_match_single(self, sample_dataset, sample_distance):
        """测试批量留一预测与单焦点版本一致"""
        engine = WlsEngine()
        gram = _gram(sample_dataset, sample_distance, 2.0)
        mask = SubsetMask.from_columns(sample_dataset.m, [2])
        batch = engine.loo_predictions(sample_dataset, gram, mask.columns)
        for o in (0, 11):
            w = weight_row(sample_distance.d[o], 2.0)
            assert batch[o] == pytest.approx(engine.loo_predict(sample_dataset, mask, w, o), rel=1e-8)

    def test_hat_trace_needs_matched_focals(self):
        """测试焦点未全部匹配时帽子矩阵迹无定义"""
        rng = np.random.RandomState(42)
        ds = SpatialDataset.from_arrays(rng.normal(size=8), rng.normal(size=(8, 1)),
                                        rng.uniform(size=(8, 2)), focal_coords=[[5.0, 5.0]])
        W = np.ones((1, 8))
        with pytest.raises(ShapeMismatchError):
            WlsEngine().hat_trace(ds, FocalGram(ds.X, ds.y, W), (0, 1))


class TestSingular:
    """测试奇异法方程"""

    def test_ridge_fallback(self):
        """测试全零列触发抖动回退并给出提示"""
        rng = np.random.RandomState(42)
        x = rng.normal(size=10)
        ds = SpatialDataset.from_arrays(rng.normal(size=10), np.column_stack([x, np.zeros(10)]),
                                        rng.uniform(size=(10, 2)))
        engine = WlsEngine()
        gram = FocalGram(ds.X, ds.y, np.ones((ds.c, ds.n)))
        local = engine.fit_local(ds, gram, (0, 1, 2))
        assert np.all(np.isfinite(local.beta))
        assert np.all(local.ridge > 0)
        assert engine.drain_warnings()

    def test_singular_raises(self):
        """测试抖动上限为 0 时报错并给出焦点编号"""
        G = np.zeros((2, 2, 2))
        G[1] = np.eye(2)
        engine = WlsEngine(ridge=0.0, ridge_max=0.0)
        with pytest.raises(SingularNormalMatrixError) as info:
            engine.solve_batch(G, np.ones((2, 2, 1)), focal_ids=[4, 9])
        assert info.value.focal_index == 4
