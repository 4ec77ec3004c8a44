import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tomobench.histogram import BinSpec, analytic_histogram, build_histogram
from tomobench.inequalities import (
    DEFAULT_RENYI_GRID,
    PURITY_BRANCH_POINT,
    CheckResult,
    MomentPair,
    Verdict,
    entropic_bound,
    heisenberg_check,
    moment_pair,
    purity_bound_phi,
    purity_heisenberg_check,
    renyi_asymmetry,
    renyi_check,
    renyi_from_histograms,
    renyi_lhs,
    renyi_rhs,
    renyi_summary_check,
    shannon_entropy,
    shannon_pair_check,
    shannon_pair_from_histograms,
    shannon_phase_averaged,
    state_extended_check,
)
from tomobench.sampler import PhaseBlock, QuadratureDataset, SimulationPlan, simulate_dataset
from tomobench.states import StateSpec

HBAR = 0.5
VACUUM = MomentPair(0.25, 0.0, 0.25, 0.0)
CHECK_NAMES = ("heisenberg", "purity_heisenberg", "shannon_pair", "shannon_phase_averaged", "renyi_summary")

moments = st.floats(0.05, 2.0)
errors = st.floats(0.0, 0.1)


def symmetric_pair(product, product_err):
    s = math.sqrt(product)
    return MomentPair(s, product_err / (s * math.sqrt(2)), s, product_err / (s * math.sqrt(2)))


def gaussian_slices(b, sigma2=HBAR / 2, average=False):
    state = StateSpec.coherent(0)
    assert sigma2 == HBAR / 2
    return [analytic_histogram(state, t, BinSpec(b), half_width=8.0, bin_average=average) for t in (0, np.pi / 2)]


class TestVerdict:
    def test_bands(self):
        assert CheckResult("x", 1.0, 0.1, 1.05).verdict is Verdict.SATURATED
        assert CheckResult("x", 1.2, 0.1, 1.0).verdict is Verdict.SATISFIED
        assert CheckResult("x", 0.8, 0.1, 1.0).verdict is Verdict.VIOLATED
        assert CheckResult("x", 0.8, 0.1, 1.0, 0.3).verdict is Verdict.SATURATED

    @given(st.floats(-5, 5), errors, st.floats(-5, 5), errors)
    def test_consistent_with_margin(self, lhs, le, rhs, re):
        c = CheckResult("x", lhs, le, rhs, re)
        if c.verdict is Verdict.SATURATED:
            assert abs(c.margin) <= c.error
        else:
            assert (c.margin > 0) == (c.verdict is Verdict.SATISFIED)

    def test_negative_variances_rejected(self):
        with pytest.raises(ValueError):
            MomentPair(-0.1, 0, 0.2, 0)


class TestHeisenberg:
    def test_vacuum_saturates(self):
        c = heisenberg_check(VACUUM, HBAR)
        assert c.lhs == c.rhs == 0.0625
        assert c.verdict is Verdict.SATURATED

    def test_reported_values(self):
        assert heisenberg_check(symmetric_pair(0.0612, 0.0014), HBAR).verdict is Verdict.SATURATED
        assert heisenberg_check(symmetric_pair(0.101, 0.006), HBAR).verdict is Verdict.SATISFIED

    def test_simulated_coherent(self, coherent_data):
        c = heisenberg_check(moment_pair(coherent_data), HBAR)
        assert c.lhs == pytest.approx(0.0625, abs=0.003)

    def test_error_propagation(self):
        m = MomentPair(0.3, 0.01, 0.2, 0.02)
        assert m.product_err == pytest.approx(math.hypot(0.2 * 0.01, 0.3 * 0.02))


class TestPurityBound:
    def test_examples(self):
        assert purity_bound_phi(1.0).value == 1.0
        phi = purity_bound_phi(0.83)
        assert phi.value == pytest.approx(1.1876, abs=5e-4) and phi.branch == "exact"
        assert HBAR**2 * phi.value**2 / 4 == pytest.approx(0.0882, abs=5e-4)

    def test_branch_consistency(self):
        mu = PURITY_BRANCH_POINT
        exact = 2 - math.sqrt(2 * mu - 1)
        approx = purity_bound_phi(mu - 1e-12).value
        assert purity_bound_phi(mu).branch == "exact"
        assert purity_bound_phi(mu - 1e-12).branch == "approximate"
        assert abs(approx - exact) / exact <= 0.04

    @pytest.mark.parametrize("mu", [0.0, -0.2, 1.01, float("nan")])
    def test_domain(self, mu):
        with pytest.raises(ValueError):
            purity_bound_phi(mu)

    @given(st.floats(0.01, 1.0))
    def test_at_least_one(self, mu):
        assert purity_bound_phi(mu).value >= 1.0 - 1e-12

    def test_reduces_to_heisenberg_for_pure_states(self):
        m = MomentPair(0.26, 0.004, 0.245, 0.004)
        a, b = heisenberg_check(m, HBAR), purity_heisenberg_check(m, (1.0, 0.0), HBAR)
        assert (a.lhs, a.lhs_err, a.rhs, a.rhs_err, a.verdict) == (b.lhs, b.lhs_err, b.rhs, b.rhs_err, b.verdict)

    def test_reported_values(self):
        # mu and its error chosen so that rhs = 0.085 +- 0.006
        mu = (1 + (2 - math.sqrt(0.085 * 16)) ** 2) / 2
        err = 0.006 / (HBAR**2 / 2 * math.sqrt(0.085 * 16) / math.sqrt(2 * mu - 1))
        c = purity_heisenberg_check(symmetric_pair(0.101, 0.006), (mu, err), HBAR)
        assert c.rhs == pytest.approx(0.085, abs=1e-9)
        assert c.rhs_err == pytest.approx(0.006, abs=1e-9)
        assert c.verdict is Verdict.SATISFIED

    def test_clamps_purity_above_one(self):
        assert purity_heisenberg_check(VACUUM, (1.02, 0.03), HBAR).rhs == 0.0625

    def test_simulated_detected_spacs_over_seeds(self, seed_runs):
        for run in seed_runs:
            c = run["spacs"]["purity_heisenberg"]
            assert c.margin >= 2 * c.error


class TestStateExtended:
    def test_ideal_coherent_pair_saturates(self):
        c = state_extended_check(VACUUM, VACUUM, HBAR)
        assert c.lhs == 0.0625 and c.verdict is Verdict.SATURATED

    @given(moments, errors, moments, errors, moments, errors, moments, errors)
    def test_swap_symmetry(self, a, ae, b, be, c, ce, d, de):
        m1, m2 = MomentPair(a, ae, b, be), MomentPair(c, ce, d, de)
        x, y = state_extended_check(m1, m2, HBAR), state_extended_check(m2, m1, HBAR)
        assert x.lhs == pytest.approx(y.lhs, rel=1e-15)
        assert x.lhs_err == pytest.approx(y.lhs_err, rel=1e-12)


class TestShannon:
    def test_bounds(self):
        assert entropic_bound(HBAR) == pytest.approx(1.45, abs=5e-3)
        assert entropic_bound(HBAR, 0.03) == pytest.approx(1.42, abs=5e-3)
        assert entropic_bound(HBAR) == pytest.approx(math.log(math.pi * HBAR) + 1)

    def test_gaussian_saturates_on_fine_grid(self):
        hq, hp = gaussian_slices(0.002)
        c = shannon_pair_from_histograms(hq, hp, HBAR)
        assert c.lhs == pytest.approx(1.4516, abs=1e-3)
        assert c.lhs == pytest.approx(c.rhs, abs=1e-5)

    def test_empty_bins_ignored(self):
        h = build_histogram([0.0, 1.0], BinSpec(0.5))
        assert shannon_entropy(h).S == pytest.approx(-math.log(1.0))

    @pytest.mark.invariant
    def test_bin_doubling_identity(self):
        sigma2 = HBAR / 2
        for b in (0.075, 0.15):
            narrow = shannon_entropy(gaussian_slices(b, average=True)[0]).S
            wide = shannon_entropy(gaussian_slices(2 * b, average=True)[0]).S
            expected = 0.5 * math.log((sigma2 + (2 * b) ** 2 / 12) / (sigma2 + b**2 / 12))
            assert wide - narrow == pytest.approx(expected, abs=1e-3)

    def test_simulated_coherent_pair(self, coherent_data):
        c = shannon_pair_check(coherent_data, 0.0, HBAR)
        assert 1.41 <= c.lhs <= 1.46
        assert c.rhs == pytest.approx(entropic_bound(HBAR, 0.03))

    def test_missing_conjugate_rejected(self):
        ds = QuadratureDataset([PhaseBlock(0.0, np.arange(10.0)), PhaseBlock(np.pi, np.arange(10.0))])
        with pytest.raises(KeyError):
            shannon_pair_check(ds, 0.0, HBAR)

    def test_phase_averaged_vacuum_matches_pair(self, vacuum_data):
        avg = shannon_phase_averaged(vacuum_data, HBAR)
        pair = shannon_pair_check(vacuum_data, 0.0, HBAR)
        assert abs(avg.lhs - pair.lhs) <= math.hypot(avg.lhs_err, pair.lhs_err)

    def test_phase_averaged_needs_three_phases(self):
        ds = QuadratureDataset([PhaseBlock(0.0, [0.1, 0.2]), PhaseBlock(1.0, [0.3, 0.4])])
        with pytest.raises(ValueError):
            shannon_phase_averaged(ds, HBAR)

    @pytest.mark.invariant
    def test_bounds_are_state_independent(self, coherent_data, spacs_data):
        for name in ("shannon_pair", "shannon_phase_averaged"):
            a = shannon_pair_check(coherent_data, 0.0, HBAR) if name == "shannon_pair" \
                else shannon_phase_averaged(coherent_data, HBAR)
            b = shannon_pair_check(spacs_data, 0.0, HBAR) if name == "shannon_pair" \
                else shannon_phase_averaged(spacs_data, HBAR)
            assert a.rhs == b.rhs
        ra, rb = renyi_check(coherent_data, hbar=HBAR), renyi_check(spacs_data, hbar=HBAR)
        assert [p.rhs for p in ra.points] == [p.rhs for p in rb.points]


class TestRenyi:
    def test_conjugate_orders(self):
        curve = renyi_from_histograms(*gaussian_slices(0.075), [0.4], HBAR)
        p = curve.points[0]
        assert 1 / p.beta + 1 / p.gamma == pytest.approx(2.0)

    @pytest.mark.parametrize("r", [-1.0, 1.0, 1.5, 0.0])
    def test_domain(self, r):
        hq, hp = gaussian_slices(0.075)
        with pytest.raises(ValueError):
            renyi_from_histograms(hq, hp, [r], HBAR)

    def test_gaussian_saturates_for_all_r(self):
        hq, hp = gaussian_slices(0.001)
        for r in (-0.9, -0.5, -0.1, 0.1, 0.5, 0.9):
            assert renyi_lhs(hq, hp, r) == pytest.approx(renyi_rhs(r, HBAR), abs=1e-6)

    def test_small_r_limit(self, spacs_data):
        pair = shannon_pair_check(spacs_data, 0.0, HBAR, correction=0.0)
        curve = renyi_check(spacs_data, 0.0, (-1e-3, 1e-3), HBAR, correction=0.0)
        for p in curve.points:
            assert p.lhs == pytest.approx(pair.lhs, abs=1e-2)
            assert p.rhs == pytest.approx(pair.rhs, abs=1e-2)

    @pytest.mark.invariant
    def test_small_r_difference_is_linear(self, spacs_data):
        pair = shannon_pair_check(spacs_data, 0.0, HBAR, correction=0.0)
        gaps = [renyi_check(spacs_data, 0.0, (r,), HBAR, correction=0.0).points[0].lhs - pair.lhs
                for r in (1e-3, 1e-2)]
        assert gaps[1] / gaps[0] == pytest.approx(10.0, rel=0.1)

    def test_coherent_symmetric_spacs_asymmetric(self, coherent_data, spacs_data):
        coh, spacs = renyi_check(coherent_data, hbar=HBAR), renyi_check(spacs_data, hbar=HBAR)
        for r in (0.2, 0.5, 0.8):
            d, e = renyi_asymmetry(coh, r)
            assert abs(d) <= 2 * e
        assert any(abs(d) >= 2 * e for d, e in (renyi_asymmetry(spacs, r) for r in (0.5, 0.6, 0.7, 0.8, 0.9)))

    def test_curve_export(self, coherent_data):
        curve = renyi_check(coherent_data, hbar=HBAR)
        cols = curve.columns()
        assert len(cols) == 4 and cols[0] == list(DEFAULT_RENYI_GRID)
        assert renyi_summary_check(curve).name.startswith("renyi(r=")


@pytest.mark.invariant
def test_verdict_stability(seed_runs):
    violated = []
    for seed, run in enumerate(seed_runs):
        for state in ("coherent", "spacs"):
            for name in CHECK_NAMES:
                if run[state][name].verdict is Verdict.VIOLATED:
                    violated.append((seed, state, name))
        if run["state_extended"].verdict is Verdict.VIOLATED:
            violated.append((seed, "pair", "state_extended"))
    assert not violated, violated
