import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import cusum_naive, ratio_naive
from panelcp import (
    DegenerateDataError,
    InvalidDataError,
    PanelDataset,
    PartialMeans,
    UnsupportedHorizonError,
    cusum_statistic,
    partial_sum_process,
    ratio_statistic,
)

finite = st.one_of(
    st.integers(-5000, 5000).map(lambda k: k / 100),
    st.floats(-50, 50, allow_nan=False, allow_infinity=False, allow_subnormal=False)
    .filter(lambda v: v == 0 or abs(v) > 1e-8),
)


def panels(min_t=2, max_t=8, max_n=4):
    shape = st.tuples(st.integers(1, max_n), st.integers(min_t, max_t))
    return shape.flatmap(lambda s: arrays(float, s, elements=finite))


class TestPanelDataset:
    def test_shape(self):
        d = PanelDataset(np.zeros((3, 5)))
        assert (d.n_panels, d.horizon) == (3, 5)

    def test_single_row_promoted(self):
        assert PanelDataset([1.0, 2.0, 3.0]).values.shape == (1, 3)

    def test_immutable(self):
        d = PanelDataset(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            d.values[0, 0] = 1.0

    def test_copies_input(self):
        raw = np.zeros((2, 3))
        d = PanelDataset(raw)
        raw[0, 0] = 5.0
        assert d.values[0, 0] == 0.0

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        y = np.zeros((2, 4))
        y[1, 2] = bad
        with pytest.raises(InvalidDataError, match="panel 2, time 3"):
            PanelDataset(y)

    @pytest.mark.parametrize("shape", [(2, 1), (0, 4), (2, 2, 2)])
    def test_bad_shapes(self, shape):
        with pytest.raises(InvalidDataError):
            PanelDataset(np.zeros(shape))


class TestPartialMeans:
    def test_values(self):
        pm = PartialMeans.of([[1.0, 3.0, 8.0]])
        np.testing.assert_allclose(pm.forward, [[1.0, 2.0, 4.0]])
        np.testing.assert_allclose(pm.backward, [[5.5, 8.0]])

    @settings(max_examples=100, deadline=None)
    @given(panels())
    def test_forward_backward_identity(self, y):
        pm = PartialMeans.of(y)
        T = y.shape[1]
        t = np.arange(1, T)
        lhs = t * pm.forward[:, :-1] + (T - t) * pm.backward
        scale = 1 + np.abs(y).sum()
        np.testing.assert_allclose(lhs, T * pm.forward[:, -1:] * np.ones_like(lhs),
                                   atol=1e-12 * scale)
        np.testing.assert_allclose(pm.forward[:, -1], y.mean(axis=1), atol=1e-12 * scale)


class TestCusum:
    def test_constant_panel(self):
        assert cusum_statistic([[7.3, 7.3, 7.3]]) == 0.0

    def test_two_points(self):
        assert cusum_statistic([[0.0, 2.0]]) == pytest.approx(1.0, abs=1e-15)

    def test_non_finite(self):
        with pytest.raises(InvalidDataError):
            cusum_statistic([[0.0, np.nan, 1.0]])

    def test_scaling_and_shift(self, rng):
        y = rng.normal(size=(5, 7))
        c = cusum_statistic(y)
        assert cusum_statistic(3.5 * y) == pytest.approx(3.5 * c, rel=1e-12)
        shifted = y + rng.normal(size=(5, 1)) * 10
        assert cusum_statistic(shifted) == pytest.approx(c, rel=1e-10)

    def test_matches_naive(self, rng):
        for _ in range(50):
            y = rng.normal(size=(rng.integers(1, 4), rng.integers(2, 7)))
            assert cusum_statistic(y) == pytest.approx(cusum_naive(y), abs=1e-12)


class TestRatio:
    def test_hand_example(self):
        assert ratio_statistic([[0.0, 1.0, 0.0, 1.0]]) == pytest.approx(1.0, abs=1e-15)

    def test_step_at_end_matches_naive(self):
        y = [[0.0, 0.0, 0.0, 0.0, 1.0]]
        assert ratio_statistic(y) == pytest.approx(ratio_naive(y), abs=1e-12)

    def test_short_horizon(self):
        with pytest.raises(UnsupportedHorizonError, match="T ≥ 4"):
            ratio_statistic([[0.0, 1.0, 2.0]])

    def test_all_denominators_zero(self):
        with pytest.raises(DegenerateDataError):
            ratio_statistic([[1.0, 1.0, 1.0, 1.0], [2.0, 2.0, 2.0, 2.0]])

    def test_zero_denominator_skipped(self):
        # t = 2 has a flat tail; t = 3 does not
        y = [[0.0, 1.0, 5.0, 5.0, 6.0]]
        ref = ratio_naive(y)
        assert ref is not None
        assert ratio_statistic(y) == pytest.approx(ref, abs=1e-12)

    def test_affine_invariance(self, rng):
        y = rng.normal(size=(4, 8))
        r = ratio_statistic(y)
        z = 2.7 * y + rng.normal(size=(4, 1)) * 100
        assert ratio_statistic(z) == pytest.approx(r, rel=1e-10)

    def test_matches_naive(self, rng):
        for _ in range(50):
            y = rng.normal(size=(rng.integers(1, 4), rng.integers(4, 7)))
            assert ratio_statistic(y) == pytest.approx(ratio_naive(y), abs=1e-10)


class TestPartialSumProcess:
    def test_zero_centering(self):
        np.testing.assert_allclose(partial_sum_process([[1.0, 3.0]], "none"), [1.0, 4.0])

    def test_constant_panels_mean_centered(self):
        u = partial_sum_process(np.full((3, 5), 2.0), "panel_mean")
        np.testing.assert_array_equal(u, np.zeros(5))

    @settings(max_examples=100, deadline=None)
    @given(panels())
    def test_bridge_identity(self, y):
        u = partial_sum_process(y, "none")
        T = y.shape[1]
        bridge = np.abs(u[:-1] - np.arange(1, T) / T * u[-1]).max()
        assert bridge == pytest.approx(cusum_statistic(y), abs=1e-9 * (1 + np.abs(y).sum()))

    def test_forward_bridge_identity(self, rng):
        # U(s) - (s/t) U(t) equals the partial sum of deviations from the first-t mean
        y = rng.normal(size=(3, 6))
        u = partial_sum_process(y, "none")
        for t in range(1, 7):
            for s in range(1, t + 1):
                direct = (y[:, :s] - y[:, :t].mean(axis=1, keepdims=True)).sum() / np.sqrt(3)
                assert u[s - 1] - s / t * u[t - 1] == pytest.approx(direct, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(panels(min_t=4, max_t=8), st.floats(0.01, 100), st.integers(0, 2**31))
def test_invariances(y, a, seed):
    shifts = np.random.default_rng(seed).normal(scale=20, size=(y.shape[0], 1))
    c = cusum_statistic(y)
    assert cusum_statistic(a * y) == pytest.approx(a * c, rel=1e-10, abs=1e-9)
    assert cusum_statistic(y + shifts) == pytest.approx(c, rel=1e-9, abs=1e-8)
    try:
        r = ratio_statistic(y)
    except DegenerateDataError:
        return
    if not np.isfinite(r) or r > 1e6:
        return  # near-zero denominator; relative comparison is meaningless
    assert ratio_statistic(a * y) == pytest.approx(r, rel=1e-8)
