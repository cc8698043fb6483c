import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import energychain as ec
from energychain import ChainConfig, ExchangeDraw, RateFunction

POS = st.floats(min_value=1e-3, max_value=1e3)
OPEN01 = st.floats(min_value=1e-9, max_value=1.0 - 1e-9)
KINDS = st.sampled_from(ec.RATE_KINDS)


def cfg_for(kind="sqrt_product", n=3, m=10, tl=1.0, tr=1.0, cap=None, seed=0):
    return ChainConfig(n_cells=n, particles_per_cell=m, t_left=tl, t_right=tr,
                       rate_fn=RateFunction(kind), rate_cap=cap, master_seed=seed)


class TestRate:
    def test_hand_values(self):
        assert ec.rate(RateFunction("sqrt_product"), 1.0, 4.0, 10.0) == 2.0
        assert ec.rate(RateFunction("constant", c=1.0), 3.7, 0.2, 10.0) == 1.0
        assert ec.rate(RateFunction("sqrt_product"), 100.0, 100.0, 5.0) == 5.0

    def test_kind_values(self):
        assert ec.rate(RateFunction("sqrt_harmonic"), 1.0, 1.0) == pytest.approx(math.sqrt(0.5))
        assert ec.rate(RateFunction("min_energy_sqrt"), 4.0, 9.0) == 2.0
        assert ec.rate(RateFunction("min_energy"), 4.0, 9.0) == 4.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            ec.rate(RateFunction(), 0.0, 1.0)
        with pytest.raises(ValueError):
            ec.rate(RateFunction(), 1.0, -2.0)
        with pytest.raises(ValueError):
            RateFunction("nope")
        with pytest.raises(ValueError):
            RateFunction("constant", c=0.0)

    @given(kind=KINDS, e1=POS, e2=POS, bump=st.floats(min_value=1e-6, max_value=10.0))
    @settings(max_examples=80)
    def test_positive_capped_and_monotone(self, kind, e1, e2, bump):
        fn = RateFunction(kind)
        cap = 7.0
        v = ec.rate(fn, e1, e2, cap)
        assert 0.0 < v <= cap
        assert ec.rate(fn, e1 + bump, e2, cap) >= v
        assert ec.rate(fn, e1, e2 + bump, cap) >= v

    @given(kind=KINDS, e1=POS, e2=POS)
    @settings(max_examples=50)
    def test_partials_match_finite_differences(self, kind, e1, e2):
        fn = RateFunction(kind)
        if kind.startswith("min") and abs(e1 - e2) < 1e-3 * max(e1, e2):
            return  # kinked on the diagonal
        f, f1, f2 = fn.partials(e1, e2)
        h1, h2 = 1e-6 * max(1.0, e1), 1e-6 * max(1.0, e2)
        d1 = (fn.value(e1 + h1, e2) - fn.value(e1 - h1, e2)) / (2 * h1)
        d2 = (fn.value(e1, e2 + h2) - fn.value(e1, e2 - h2)) / (2 * h2)
        assert f == pytest.approx(fn.value(e1, e2))
        assert f1 == pytest.approx(d1, rel=1e-5, abs=1e-8)
        assert f2 == pytest.approx(d2, rel=1e-5, abs=1e-8)


class TestTotalRate:
    def test_three_bond_example(self):
        cfg = cfg_for("sqrt_product", n=2, tl=1.0, tr=1.0, cap=10.0)
        assert ec.total_rate(np.array([1.0, 4.0]), cfg) == pytest.approx(5.0)

    def test_constant_rates_sum(self):
        for n in (1, 4, 9):
            cfg = cfg_for("constant", n=n, tl=0.5, tr=2.0)
            state = np.linspace(0.7, 1.9, n)
            assert ec.total_rate(state, cfg) == pytest.approx(n + 1)

    @given(e=st.lists(POS, min_size=1, max_size=8))
    @settings(max_examples=60)
    def test_cap_bound(self, e):
        cfg = cfg_for("sqrt_product", n=len(e), cap=3.0)
        r = ec.total_rate(np.array(e), cfg)
        assert 0.0 < r <= (len(e) + 1) * 3.0


class TestSamplers:
    def test_beta_hand_values(self):
        assert ec.sample_beta(0.5, 2) == pytest.approx(0.5)
        assert ec.sample_beta(1e-12, 5) == pytest.approx(0.0, abs=1e-11)

    @given(u=OPEN01, m=st.integers(min_value=2, max_value=500))
    @settings(max_examples=80)
    def test_beta_is_inverse_cdf(self, u, m):
        b = ec.sample_beta(u, m)
        assert 0.0 < b < 1.0
        # CDF(quantile(u)) == u for F(x) = 1 - (1-x)^(m-1)
        assert -math.expm1((m - 1) * math.log1p(-b)) == pytest.approx(u, rel=1e-9, abs=1e-12)

    def test_beta_matches_scipy_quantiles(self):
        from scipy.stats import beta as sp_beta
        m = 17
        for u in (0.05, 0.3, 0.5, 0.9, 0.999):
            assert ec.sample_beta(u, m) == pytest.approx(sp_beta.ppf(u, 1, m - 1), rel=1e-10)

    def test_beta_mean_and_ks(self):
        from scipy.stats import beta as sp_beta, kstest
        m = 25
        rng = np.random.default_rng(7)
        samples = np.array([ec.sample_beta(u, m) for u in rng.random(20000)])
        assert samples.mean() == pytest.approx(1.0 / m, rel=0.05)
        assert kstest(samples, sp_beta(1, m - 1).cdf).pvalue > 1e-3

    def test_beta_domain(self):
        with pytest.raises(ValueError):
            ec.sample_beta(0.0, 5)
        with pytest.raises(ValueError):
            ec.sample_beta(1.0, 5)
        with pytest.raises(ValueError):
            ec.sample_beta(0.5, 1)

    def test_bath_hand_value(self):
        assert ec.sample_bath_energy(1.0 - math.exp(-1.0), 2.0) == pytest.approx(2.0)
        assert ec.sample_bath_energy(1e-14, 3.0) == pytest.approx(0.0, abs=1e-12)

    def test_bath_mean(self):
        rng = np.random.default_rng(3)
        xs = [ec.sample_bath_energy(u, 1.7) for u in rng.random(20000)]
        assert np.mean(xs) == pytest.approx(1.7, rel=0.05)

    def test_bath_domain(self):
        with pytest.raises(ValueError):
            ec.sample_bath_energy(1.0, 2.0)
        with pytest.raises(ValueError):
            ec.sample_bath_energy(0.5, 0.0)


class TestSelectClock:
    def test_equal_partition(self):
        cfg = cfg_for("constant", n=1)
        state = np.array([1.0])
        assert ec.select_clock(state, cfg, 0.25) == 0
        assert ec.select_clock(state, cfg, 0.75) == 1
        assert ec.select_clock(state, cfg, 1e-12) == 0

    def test_empirical_frequencies(self):
        from scipy.stats import chisquare
        cfg = cfg_for("sqrt_product", n=2, tl=1.0, tr=1.0, cap=10.0)
        state = np.array([1.0, 4.0])
        rates = cfg.bond_rates(state)
        probs = rates / rates.sum()
        rng = np.random.default_rng(11)
        n = 100_000
        counts = np.zeros(3)
        for u in rng.random(n):
            counts[ec.select_clock(state, cfg, u)] += 1
        se = np.sqrt(probs * (1 - probs) / n)
        assert np.all(np.abs(counts / n - probs) <= 3.5 * se)
        assert chisquare(counts, probs * n).pvalue > 1e-3

    @given(p1=OPEN01, e=st.lists(POS, min_size=1, max_size=6))
    @settings(max_examples=60)
    def test_in_range(self, p1, e):
        cfg = cfg_for("sqrt_harmonic", n=len(e))
        k = ec.select_clock(np.array(e), cfg, p1)
        assert 0 <= k <= len(e)


DRAWS = st.builds(
    ExchangeDraw,
    p1=OPEN01, p2=OPEN01, p3=OPEN01,
    b1=st.floats(min_value=1e-9, max_value=1 - 1e-9),
    b2=st.floats(min_value=1e-9, max_value=1 - 1e-9),
)


class TestApplyExchange:
    def test_hand_example(self):
        # pooled stake 2, everything returned to the left cell
        cfg = cfg_for(n=2, m=10)
        draw = ExchangeDraw(p1=0.5, p2=0.5, p3=1.0 - 1e-15, b1=0.5, b2=0.25)
        new, flux = ec.apply_exchange(np.array([2.0, 4.0]), cfg, 1, draw)
        assert flux == pytest.approx(-1.0)
        assert new == pytest.approx([3.0, 3.0])

    def test_exchange_returning_exact_stake_is_identity(self):
        # p3 * pool == b1 * e1 leaves both cells unchanged
        e = np.array([2.0, 4.0])
        b1, b2 = 0.5, 0.25
        pool = b1 * e[0] + b2 * e[1]
        p3 = b1 * e[0] / pool
        cfg = cfg_for(n=2, m=10)
        new, flux = ec.apply_exchange(e, cfg, 1, ExchangeDraw(0.5, 0.5, p3, b1, b2))
        assert flux == pytest.approx(0.0, abs=1e-15)
        assert new == pytest.approx(e)

    @given(e1=POS, e2=POS, draw=DRAWS)
    @settings(max_examples=120)
    def test_interior_conservation_and_positivity(self, e1, e2, draw):
        cfg = cfg_for(n=2, m=10)
        state = np.array([e1, e2])
        new, flux = ec.apply_exchange(state, cfg, 1, draw)
        scale = e1 + e2
        assert abs(new.sum() - scale) <= 4 * np.finfo(float).eps * scale
        assert np.all(new > 0.0)
        assert new[0] >= e1 * (1.0 - draw.b1) * (1.0 - 1e-12)
        assert new[1] >= e2 * (1.0 - draw.b2) * (1.0 - 1e-12)
        assert flux == pytest.approx(new[1] - e2, abs=1e-15 * scale)

    @given(e=st.lists(POS, min_size=2, max_size=5), draw=DRAWS)
    @settings(max_examples=60)
    def test_boundary_touches_one_cell(self, e, draw):
        cfg = cfg_for(n=len(e), m=4, tl=0.7, tr=1.3)
        state = np.array(e)
        left, jl = ec.apply_exchange(state, cfg, 0, draw)
        assert np.array_equal(left[1:], state[1:])
        assert left[0] == pytest.approx(state[0] + jl)
        right, jr = ec.apply_exchange(state, cfg, len(e), draw)
        assert np.array_equal(right[:-1], state[:-1])
        assert right[-1] == pytest.approx(state[-1] - jr)
        assert np.all(left > 0) and np.all(right > 0)

    def test_index_and_draw_validation(self):
        cfg = cfg_for(n=2, m=10)
        draw = ExchangeDraw(0.5, 0.5, 0.5, 0.1, 0.1)
        with pytest.raises(ValueError):
            ec.apply_exchange(np.array([1.0, 1.0]), cfg, 3, draw)
        with pytest.raises(ValueError):
            ec.apply_exchange(np.array([1.0, 1.0]), cfg, -1, draw)
        with pytest.raises(ValueError):
            ExchangeDraw(0.0, 0.5, 0.5, 0.1, 0.1)
        with pytest.raises(ValueError):
            ExchangeDraw(0.5, 0.5, 0.5, 1.0, 0.1)

    def test_state_validation(self):
        cfg = cfg_for(n=2, m=10)
        with pytest.raises(ValueError):
            ec.validate_state(np.array([1.0, 0.0]), 2)
        with pytest.raises(ValueError):
            ec.validate_state(np.array([1.0]), 2)
        with pytest.raises(ValueError):
            ec.validate_state(np.array([1.0, np.inf]), 2)


class TestChainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ChainConfig(0, 10, 1.0, 1.0)
        with pytest.raises(ValueError):
            ChainConfig(2, 1, 1.0, 1.0)
        with pytest.raises(ValueError):
            ChainConfig(2, 10, 0.0, 1.0)
        with pytest.raises(ValueError):
            ChainConfig(2, 10, 1.0, -1.0)
        with pytest.raises(ValueError):
            ChainConfig(2, 10, 1.0, 1.0, rate_cap=0.0)
        with pytest.raises(ValueError):
            ChainConfig(2, 10, 1.0, 1.0, master_seed=-1)

    def test_default_cap(self):
        cfg = ChainConfig(2, 10, 1.0, 4.0)
        assert cfg.rate_cap == pytest.approx(100.0 * 2.0)

    def test_slot_energies(self):
        cfg = cfg_for(n=2, tl=0.5, tr=2.5)
        slots = cfg.slot_energies(np.array([1.0, 2.0]))
        assert slots == pytest.approx([0.5, 1.0, 2.0, 2.5])


class TestOneEventDrift:
    def test_mean_increment_matches_drift_over_rate(self):
        # E[increment] per event must equal F(E) / (M R(E))
        state = np.array([1.0, 2.0, 0.7])
        cfg = cfg_for("sqrt_product", n=3, m=50, tl=0.9, tr=1.8, seed=5)
        oracle = ec.moments_oracle(state, cfg, m=50, n_samples=400_000, seed=17)
        predicted = ec.drift(state, cfg) / (50 * ec.total_rate(state, cfg))
        dev = np.abs(oracle.mean_increment - predicted)
        assert np.all(dev <= 3.5 * oracle.mean_increment_se)
