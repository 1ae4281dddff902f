import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from brann import metrics

finite = st.floats(-1e6, 1e6)


class TestHandExamples:
    def test_perfect_fit(self):
        y = [0.1, 0.5, 0.2]
        assert metrics.mae(y, y) == 0.0 and metrics.rmse(y, y) == 0.0 and metrics.r2(y, y) == 1.0

    def test_constant_offset(self):
        assert metrics.mae([0, 0, 0, 0], [1, 1, 1, 1]) == 1.0
        assert metrics.rmse([0, 0, 0, 0], [1, 1, 1, 1]) == 1.0

    def test_mean_predictor(self):
        t, p = [1, 2, 3], [2, 2, 2]
        assert metrics.mae(t, p) == 2 / 3
        assert metrics.rmse(t, p) == math.sqrt(2 / 3)
        assert metrics.r2(t, p) == 0.0


class TestErrors:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            metrics.mae([1, 2], [1])

    def test_empty(self):
        with pytest.raises(ValueError):
            metrics.rmse([], [])

    def test_degenerate_r2(self):
        with pytest.raises(metrics.DegenerateTargetsError, match="degenerate targets"):
            metrics.r2([1.0, 1.0], [1.0, 2.0])

    def test_report_tolerates_degenerate(self):
        rep = metrics.MetricReport.compute([1.0, 1.0], [1.0, 2.0])
        assert math.isnan(rep.r2) and rep.n == 2


class TestProperties:
    @given(arrays(float, st.integers(1, 40), elements=finite), st.data())
    def test_mae_le_rmse(self, t, data):
        p = data.draw(arrays(float, t.size, elements=finite))
        # squared errors below ~1e-154 underflow, hence the absolute slack
        assert metrics.mae(t, p) <= metrics.rmse(t, p) * (1 + 1e-12) + 1e-150

    def test_mae_le_rmse_random(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = rng.integers(1, 30)
            t, p = rng.normal(size=n), rng.standard_cauchy(size=n)
            assert metrics.mae(t, p) <= metrics.rmse(t, p) * (1 + 1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        t, p = rng.normal(size=50), rng.normal(size=50)
        for f in (metrics.mae, metrics.rmse):
            assert f(t + 3.7, p + 3.7) == pytest.approx(f(t, p), abs=1e-12)

    @pytest.mark.parametrize("s, c", [(2.0, 1.0), (-0.5, 4.0), (1e3, -7.0)])
    def test_r2_affine_invariance(self, s, c):
        rng = np.random.default_rng(2)
        t, p = rng.normal(size=50), rng.normal(size=50)
        assert metrics.r2(s * t + c, s * p + c) == pytest.approx(metrics.r2(t, p), abs=1e-10)

    def test_multi_output_pooled(self):
        t = np.array([[0.0, 1.0], [2.0, 3.0]])
        p = t + np.array([[1.0, 0.0], [0.0, 1.0]])
        assert metrics.mae(t, p) == 0.5
        np.testing.assert_allclose(metrics.mae(t.ravel(), p.ravel()), metrics.mae(t, p))


class TestReport:
    def test_single_target_has_pooled_row_only(self):
        rows = metrics.metric_report([[1.0], [2.0], [3.0]], [[2.0], [2.0], [2.0]], ("vb_mm",), "test")
        assert rows == [("test", "all", 2 / 3, math.sqrt(2 / 3), 0.0, 3)]

    def test_multi_target_breakdown(self):
        t = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 4.0]])
        rows = metrics.metric_report(t, t, ("f1", "f2"), "train")
        assert [r[1] for r in rows] == ["all", "f1", "f2"]
        assert rows[0][5] == 6 and rows[1][5] == 3

    def test_csv(self):
        text = metrics.format_report([("train", "all", 0.5, 0.25, 0.9, 4)])
        assert text == "split,target,mae,rmse,r2,n\ntrain,all,0.5,0.25,0.9,4\n"
