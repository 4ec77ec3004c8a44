import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tomobench.histogram import (
    BinSpec,
    analytic_histogram,
    build_histogram,
    histogram_table,
    mirrored_histogram,
    optimal_bin_width,
    rule_of_thumb_widths,
    stat_error,
    undersampling_error,
)
from tomobench.sampler import phase_stream, sample_phase
from tomobench.states import StateSpec, tomogram_pdf

finite = st.floats(-50, 50, allow_nan=False)


def total_error(b, h, n, d=1, hbar=0.5):
    # error model in dimensionless units, b given in quadrature units
    u = b / math.sqrt(hbar)
    return stat_error(h, n, u) + undersampling_error(h, u, d)


class TestBuild:
    def test_single_sample(self):
        h = build_histogram([0.0], BinSpec(1.0))
        assert h.densities.tolist() == [1.0] and h.start == 0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_histogram([])

    def test_bad_width_rejected(self):
        with pytest.raises(ValueError):
            BinSpec(0.0)

    def test_vacuum_peak(self):
        x = sample_phase(StateSpec.coherent(0), 0.0, 100_000, stream=phase_stream(1, 0))
        h = build_histogram(x)
        peak = h.densities.max()
        assert abs(peak - math.sqrt(2 / math.pi)) < 3 * stat_error(peak, h.total, h.spec.width)

    @pytest.mark.invariant
    @given(arrays(float, st.integers(1, 300), elements=finite), st.floats(0.01, 3.0))
    def test_normalisation_identity(self, x, b):
        h = build_histogram(x, BinSpec(b))
        assert h.counts.sum() == x.size
        assert b * h.densities.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(h.densities >= 0)

    def test_mirrored_grid_is_commensurate(self):
        h = mirrored_histogram([0.01, 0.19], BinSpec(0.1))
        assert h.spec.mirror_index(0) == -1
        np.testing.assert_allclose(h.centers, [-0.15, -0.05])
        assert h.counts.tolist() == [1, 1]

    def test_export_columns(self):
        table = histogram_table(build_histogram([0.0, 0.1, 0.2]))
        assert list(table) == ["bin_center", "density", "stat_err", "und_err"]

    def test_analytic_histogram_normalised(self):
        for average in (False, True):
            h = analytic_histogram(StateSpec.detected_spacs(0.83, 0.6), 0.4, bin_average=average)
            assert h.spec.width * h.densities.sum() == pytest.approx(1.0, abs=1e-4)


class TestErrorModel:
    def test_stat_error_examples(self):
        assert stat_error(0.0, 10, 0.1) == 0
        assert stat_error(0.8, 5321, 0.075) == pytest.approx(0.0448, abs=5e-5)
        assert stat_error(0.8, 4 * 5321, 0.075) == pytest.approx(stat_error(0.8, 5321, 0.075) / 2)

    def test_undersampling_examples(self):
        assert undersampling_error(0.8, 0.0) == 0
        assert undersampling_error(0.8, 0.075) == pytest.approx(0.0270, abs=5e-5)
        assert undersampling_error(0.8, 0.075, 2) / undersampling_error(0.8, 0.075, 1) == pytest.approx(math.sqrt(2))


class TestOptimalWidth:
    def test_typical_value(self):
        assert optimal_bin_width(1 / math.sqrt(2 * math.pi), 5321) == pytest.approx(0.06, abs=0.002)

    def test_cube_root_law(self):
        assert optimal_bin_width(0.4, 8000) == pytest.approx(optimal_bin_width(0.4, 1000) / 2)

    def test_zero_density_rejected(self):
        with pytest.raises(ValueError):
            optimal_bin_width(0.0, 100)

    @given(st.floats(0.01, 2.0), st.integers(1, 10**7), st.integers(1, 5), st.floats(0.1, 2.0))
    def test_stationary_point(self, h, n, d, hbar):
        b = optimal_bin_width(h, n, d, hbar)
        eps = 1e-4 * b
        slope = (total_error(b + eps, h, n, d, hbar) - total_error(b - eps, h, n, d, hbar)) / (2 * eps)
        scale = total_error(b, h, n, d, hbar) / b
        assert abs(slope) / scale < 1e-7

    @pytest.mark.invariant
    def test_halving_and_doubling_increase_error(self):
        h, n = 1 / math.sqrt(2 * math.pi), 5321
        b = optimal_bin_width(h, n)
        best = total_error(b, h, n)
        assert total_error(b / 2, h, n) > best
        assert total_error(2 * b, h, n) > best


class TestRulesOfThumb:
    def test_reference_conditions(self, coherent_data):
        pooled = rule_of_thumb_widths(coherent_data.pooled(), n=5321)
        single = rule_of_thumb_widths(coherent_data.blocks[0].samples)
        assert pooled["scott"] == pytest.approx(0.14, abs=0.01)
        assert single["sqrt_width"] == pytest.approx(0.055, abs=0.005)
        assert abs(single["sturges_bins"] - 13) <= 1
        assert single["sturges_width"] == pytest.approx(0.3, abs=0.05)

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            rule_of_thumb_widths([1.0])
        with pytest.raises(ValueError):
            rule_of_thumb_widths([1.0, 1.0])


@pytest.mark.invariant
def test_histogram_converges_to_tomogram():
    state = StateSpec.detected_spacs(0.83, 0.6)
    spec = BinSpec()
    inside = total = 0
    for seed in range(50):
        x = sample_phase(state, 0.7, 5321, stream=phase_stream(seed, 0))
        h = build_histogram(x, spec)
        w = tomogram_pdf(state, h.centers, 0.7)
        # errors at the expected density, so empty bins keep a finite band
        band = 3 * (stat_error(w, h.total, spec.width) + undersampling_error(w, spec.width))
        inside += int(np.sum(np.abs(h.densities - w) <= band))
        total += h.densities.size
    assert inside / total >= 0.99
