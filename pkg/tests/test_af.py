"""Analytic AF engine tests: gains, weights, recursion steps, closed forms."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopbc.af import (
    amplification_gains,
    campaign,
    initial_state,
    mi_conservation_check,
    mrc_weights_symmetric,
    ratio_form_snr,
    run_recursion,
    s1_vs_s2_numerator,
    s2_closed_form,
    step_asymmetric,
    step_symmetric,
)
from coopbc.channel import (
    Asymmetric,
    ChannelParams,
    CoopConfig,
    Protocol,
    Receiver,
    Regime,
    Strategy,
    Symmetric,
    plan_bandwidth,
    power_per_exchange,
)


def make_state(alpha_I=1.0, alpha_II=1.0, N_I=1.0, N_II=1.0, e=0.0, P=10.0, i=0):
    from coopbc.af import SnrState

    return SnrState(
        i=i, alpha_I=alpha_I, alpha_II=alpha_II, N_I=N_I, N_II=N_II, e=e,
        rho_I=alpha_I**2 * P / N_I, rho_II=alpha_II**2 * P / N_II,
        w1=1.0, w2=1.0, w12=0.0, w21=0.0, a12=0.0, a21=0.0,
    )


def _cfg(scheme, strategy=Strategy.S1, regime=Regime.H1, protocol=Protocol.AF):
    return CoopConfig(protocol, scheme, strategy, regime)


log_scale = st.floats(min_value=-2.0, max_value=2.0)


@st.composite
def channel_params(draw):
    return ChannelParams(
        P=10.0 ** draw(log_scale),
        n1=10.0 ** draw(log_scale),
        n2=10.0 ** draw(log_scale),
        n12=10.0 ** draw(log_scale),
        n21=10.0 ** draw(log_scale),
        P12=10.0 ** draw(log_scale),
        P21=10.0 ** draw(log_scale),
        B=10.0 ** draw(st.floats(min_value=-1.0, max_value=1.0)),
    )


any_config = st.builds(
    _cfg,
    scheme=st.one_of(
        st.builds(Symmetric, st.integers(1, 4)),
        st.builds(Asymmetric, st.integers(1, 4), starter=st.sampled_from(list(Receiver))),
    ),
    strategy=st.sampled_from(list(Strategy)),
    regime=st.sampled_from(list(Regime)),
)


class TestAmplificationGains:
    def test_unit_gain(self):
        st0 = make_state(N_I=1.0, P=10.0)
        a12, _ = amplification_gains(st0, (11.0, 0.0), P=10.0)
        assert a12 == pytest.approx(1.0)

    def test_zero_power_zero_gain(self):
        st0 = make_state()
        a12, a21 = amplification_gains(st0, (0.0, 0.0), P=10.0)
        assert a12 == 0.0 and a21 == 0.0

    def test_scaled_state(self):
        st0 = make_state(alpha_I=2.0, N_I=3.0, P=10.0)
        a12, _ = amplification_gains(st0, (86.0, 0.0), P=10.0)
        assert a12 == pytest.approx(math.sqrt(2.0))


class TestMrcWeights:
    def test_independent_branches(self):
        st0 = make_state(N_I=1.0, N_II=2.0, e=0.0)
        w12, w2, _, _ = mrc_weights_symmetric(st0, (1.0, 0.0), (1.0, 1.0))
        assert w12 == pytest.approx(2.0)
        assert w2 == pytest.approx(2.0)

    def test_zero_gain_keeps_direct_branch(self):
        st0 = make_state(alpha_II=3.0, e=0.4)
        w12, w2, _, _ = mrc_weights_symmetric(st0, (0.0, 1.0), (5.0, 1.0))
        assert w12 == 0.0
        assert w2 == pytest.approx(5.0 * 3.0)

    @given(
        alpha_I=st.floats(0.1, 10),
        alpha_II=st.floats(0.1, 10),
        N_I=st.floats(0.1, 10),
        N_II=st.floats(0.1, 10),
        ecorr=st.floats(-0.99, 0.99),
        a12=st.floats(0.01, 10),
        a21=st.floats(0.01, 10),
        N12=st.floats(0.1, 10),
        N21=st.floats(0.1, 10),
    )
    def test_matches_covariance_inverse(self, alpha_I, alpha_II, N_I, N_II, ecorr, a12, a21, N12, N21):
        # weights must equal det(R_zz) * R_zz^{-1} h for each receiver's
        # 2x2 branch noise covariance
        e = ecorr * math.sqrt(N_I * N_II)
        st0 = make_state(alpha_I, alpha_II, N_I, N_II, e)
        w12, w2, w21, w1 = mrc_weights_symmetric(st0, (a12, a21), (N12, N21))
        R2 = np.array([[a12**2 * N_I + N12, a12 * e], [a12 * e, N_II]])
        h2 = np.array([a12 * alpha_I, alpha_II])
        expect2 = np.linalg.det(R2) * np.linalg.solve(R2, h2)
        np.testing.assert_allclose([w12, w2], expect2, rtol=1e-8)
        R1 = np.array([[a21**2 * N_II + N21, a21 * e], [a21 * e, N_I]])
        h1 = np.array([a21 * alpha_II, alpha_I])
        expect1 = np.linalg.det(R1) * np.linalg.solve(R1, h1)
        np.testing.assert_allclose([w21, w1], expect1, rtol=1e-8)


TWO_BRANCH = ChannelParams(P=10.0, n1=1.0, n2=2.0, n12=1.0, n21=1.0, P12=100.0, P21=100.0, B=1.0)


class TestStepSymmetric:
    def test_zero_cooperation_is_identity(self):
        plan = plan_bandwidth(TWO_BRANCH, _cfg(Symmetric(1), regime=Regime.H2))
        st0 = initial_state(TWO_BRANCH, plan)
        st1 = step_symmetric(st0, TWO_BRANCH.P, plan, (0.0, 0.0))
        assert st1.i == 1
        for f in ("alpha_I", "alpha_II", "N_I", "N_II", "e", "rho_I", "rho_II"):
            assert getattr(st1, f) == getattr(st0, f)

    def test_strategies_coincide_on_first_round(self):
        # forwarding the latest output or the original signal is the same at i=1
        cfg1 = _cfg(Symmetric(1), Strategy.S1, Regime.H2)
        cfg2 = _cfg(Symmetric(1), Strategy.S2, Regime.H2)
        s1 = campaign(TWO_BRANCH, cfg1).trajectory.states[-1]
        s2 = campaign(TWO_BRANCH, cfg2).trajectory.states[-1]
        assert s1.rho_I == pytest.approx(s2.rho_I, rel=1e-12)
        assert s1.rho_II == pytest.approx(s2.rho_II, rel=1e-12)

    def test_two_branch_mrc_oracle(self):
        # independent branches at i=1: SNRs simply add
        cfg = _cfg(Symmetric(1), regime=Regime.H2)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st0 = initial_state(TWO_BRANCH, plan)
        st1 = step_symmetric(st0, TWO_BRANCH.P, plan, power_per_exchange(TWO_BRANCH, cfg, 1))
        a12sq = 100.0 / 11.0
        assert st1.rho_II == pytest.approx(5.0 + a12sq * 10.0 / (a12sq * 1.0 + 1.0), rel=1e-12)
        assert st1.rho_II == pytest.approx(5.0 + 1000.0 / 111.0, rel=1e-12)

    def test_simultaneous_update_uses_previous_partner_state(self):
        # receiver 1's round-2 branch must be formed from receiver 2's round-1
        # state, not its round-2 state
        cfg = _cfg(Symmetric(2), regime=Regime.H2)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        powers = power_per_exchange(TWO_BRANCH, cfg, 1)
        st1 = step_symmetric(initial_state(TWO_BRANCH, plan), TWO_BRANCH.P, plan, powers)
        st2 = step_symmetric(st1, TWO_BRANCH.P, plan, powers)
        # manual: recompute receiver I's update from the (i-1) quantities
        a21 = math.sqrt(powers[1] / (st1.alpha_II**2 * 10.0 + st1.N_II))
        w21 = a21 * st1.alpha_II * st1.N_I - a21 * st1.alpha_I * st1.e
        w1 = (a21**2 * st1.N_II + plan.N21) * st1.alpha_I - a21**2 * st1.alpha_II * st1.e
        alpha_I = w21 * a21 * st1.alpha_II + w1 * st1.alpha_I
        N_I = w1**2 * st1.N_I + w21**2 * (a21**2 * st1.N_II + plan.N21) + 2 * w1 * w21 * a21 * st1.e
        assert st2.rho_I == pytest.approx(alpha_I**2 * 10.0 / N_I, rel=1e-12)


class TestStepAsymmetric:
    def test_idle_receiver_unchanged(self):
        cfg = _cfg(Asymmetric(2), regime=Regime.H2)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st0 = initial_state(TWO_BRANCH, plan)
        st1 = step_asymmetric(st0, TWO_BRANCH.P, plan, power_per_exchange(TWO_BRANCH, cfg, 1), 1)
        assert st1.alpha_I == st0.alpha_I
        assert st1.N_I == st0.N_I
        assert st1.rho_I == st0.rho_I
        assert st1.rho_II > st0.rho_II

    def test_zero_power_leaves_state_unchanged(self):
        cfg = _cfg(Asymmetric(1), regime=Regime.H2)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st0 = initial_state(TWO_BRANCH, plan)
        st1 = step_asymmetric(st0, TWO_BRANCH.P, plan, (0.0, 0.0), 1)
        for f in ("alpha_I", "alpha_II", "N_I", "N_II", "e", "rho_I", "rho_II"):
            assert getattr(st1, f) == getattr(st0, f)

    def test_starter_mirror(self):
        cfg = _cfg(Asymmetric(1, starter=Receiver.R2), regime=Regime.H2)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st0 = initial_state(TWO_BRANCH, plan)
        st1 = step_asymmetric(
            st0, TWO_BRANCH.P, plan, power_per_exchange(TWO_BRANCH, cfg, 1), 1, starter=Receiver.R2
        )
        assert st1.rho_II == st0.rho_II
        assert st1.rho_I > st0.rho_I

    def test_cross_correlation_update(self):
        # e after a receiver-1 transmission: w2*e + w12*a12*N_I
        cfg = _cfg(Asymmetric(2), regime=Regime.H2)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st0 = initial_state(TWO_BRANCH, plan)
        st1 = step_asymmetric(st0, TWO_BRANCH.P, plan, power_per_exchange(TWO_BRANCH, cfg, 1), 1)
        assert st1.e == pytest.approx(st1.w2 * st0.e + st1.w12 * st1.a12 * st0.N_I, rel=1e-12)


class TestEngineMatchesScalarRecursion:
    @pytest.mark.parametrize("regime", list(Regime))
    def test_symmetric_forward_latest(self, regime):
        cfg = _cfg(Symmetric(3), Strategy.S1, regime)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st = initial_state(TWO_BRANCH, plan)
        for i in range(1, 4):
            st = step_symmetric(st, TWO_BRANCH.P, plan, power_per_exchange(TWO_BRANCH, cfg, i))
        eng = campaign(TWO_BRANCH, cfg, normalize=False).trajectory.states[-1]
        for f in ("alpha_I", "alpha_II", "N_I", "N_II", "e", "rho_I", "rho_II"):
            assert getattr(eng, f) == pytest.approx(getattr(st, f), rel=1e-9)

    @pytest.mark.parametrize("starter", list(Receiver))
    def test_asymmetric_forward_latest(self, starter):
        cfg = _cfg(Asymmetric(3, starter=starter), Strategy.S1, Regime.H1)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st = initial_state(TWO_BRANCH, plan)
        for i in range(1, 4):
            st = step_asymmetric(
                st, TWO_BRANCH.P, plan, power_per_exchange(TWO_BRANCH, cfg, i), i, starter=starter
            )
        eng = campaign(TWO_BRANCH, cfg, normalize=False).trajectory.states[-1]
        for f in ("alpha_I", "alpha_II", "N_I", "N_II", "e", "rho_I", "rho_II"):
            assert getattr(eng, f) == pytest.approx(getattr(st, f), rel=1e-9)

    def test_normalization_preserves_snrs(self):
        cfg = _cfg(Symmetric(4), Strategy.S1, Regime.H1)
        raw = campaign(TWO_BRANCH, cfg, normalize=False).trajectory.states
        normed = campaign(TWO_BRANCH, cfg, normalize=True).trajectory.states
        for s0, s1 in zip(raw, normed):
            assert s1.rho_I == pytest.approx(s0.rho_I, rel=1e-12)
            assert s1.rho_II == pytest.approx(s0.rho_II, rel=1e-12)
            if s1.i > 0:
                assert s1.alpha_I == pytest.approx(1.0)
                assert s1.alpha_II == pytest.approx(1.0)

    def test_normalized_engine_survives_large_counts(self):
        # the raw weight recursion overflows float64 long before K = 12
        cfg = _cfg(Symmetric(12), Strategy.S1, Regime.H2)
        final = campaign(TWO_BRANCH, cfg).trajectory.states[-1]
        assert math.isfinite(final.rho_I) and final.rho_I > 0
        assert math.isfinite(final.rho_II) and final.rho_II > 0

    @settings(deadline=None)
    @given(params=channel_params(), config=any_config, data=st.data())
    def test_audit_identities(self, params, config, data):
        camp = campaign(params, config, audit=True)
        for a in camp.audits:
            assert a.mi_combined == pytest.approx(a.mi_vector, rel=1e-9)
            assert a.rho_ratio_form == pytest.approx(a.rho_state, rel=1e-9)

    @settings(deadline=None)
    @given(params=channel_params(), config=any_config)
    def test_state_invariants(self, params, config):
        traj = campaign(params, config).trajectory
        for s in traj.states:
            assert s.rho_I > 0 and math.isfinite(s.rho_I)
            assert s.rho_II > 0 and math.isfinite(s.rho_II)
            assert abs(s.e) <= math.sqrt(s.N_I * s.N_II) * (1 + 1e-12)

    def test_snapshots_reproduce_state_moments(self):
        cfg = _cfg(Asymmetric(4), Strategy.S1, Regime.H1)
        camp = campaign(TWO_BRANCH, cfg)
        for snap, state in zip(camp.snapshots, camp.trajectory.states):
            N_I = float(np.dot(snap.coeffs_I**2, camp.noise_vars))
            N_II = float(np.dot(snap.coeffs_II**2, camp.noise_vars))
            e = float(np.dot(snap.coeffs_I * snap.coeffs_II, camp.noise_vars))
            assert N_I == pytest.approx(state.N_I, rel=1e-12)
            assert N_II == pytest.approx(state.N_II, rel=1e-12)
            assert e == pytest.approx(state.e, rel=1e-12, abs=1e-300)


class TestRunRecursion:
    def test_zero_exchanges(self):
        traj = run_recursion(TWO_BRANCH, _cfg(Symmetric(0)), 0)
        assert len(traj.states) == 1
        s = traj.states[0]
        assert s.rho_I == pytest.approx(10.0 / 1.0)
        assert s.rho_II == pytest.approx(10.0 / 2.0)
        assert (s.alpha_I, s.alpha_II, s.e) == (1.0, 1.0, 0.0)

    def test_length_and_determinism(self):
        cfg = _cfg(Symmetric(3), Strategy.S1, Regime.H1)
        t1 = run_recursion(TWO_BRANCH, cfg, 3)
        t2 = run_recursion(TWO_BRANCH, cfg, 3)
        assert len(t1.states) == 4
        assert t1.states == t2.states

    def test_forward_original_flat_under_fixed_downlink(self):
        cfg = _cfg(Symmetric(5), Strategy.S2, Regime.H2)
        traj = run_recursion(TWO_BRANCH, cfg, 5)
        rI, rII = s2_closed_form(TWO_BRANCH, traj.plan, 5)
        for s in traj.states[1:]:
            assert s.rho_I == pytest.approx(rI, rel=1e-12)
            assert s.rho_II == pytest.approx(rII, rel=1e-12)

    def test_forward_original_beats_forward_latest_two_exchanges(self):
        cfg1 = _cfg(Asymmetric(2), Strategy.S1, Regime.H2)
        cfg2 = _cfg(Asymmetric(2), Strategy.S2, Regime.H2)
        r1 = run_recursion(TWO_BRANCH, cfg1, 2).states[-1].rho_I
        r2 = run_recursion(TWO_BRANCH, cfg2, 2).states[-1].rho_I
        assert r1 <= r2 * (1 + 1e-12)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            run_recursion(TWO_BRANCH, _cfg(Symmetric(1)), -1)


FROZEN = ChannelParams(P=10.0, n1=1.0, n2=2.0, n12=1.0, n21=1.0, P12=0.0, P21=100.0, B=1.0)


class TestClosedForm:
    def test_frozen_value(self):
        plan = plan_bandwidth(FROZEN, _cfg(Symmetric(1), Strategy.S2, Regime.H2))
        rI, rII = s2_closed_form(FROZEN, plan, 1)
        assert rI == pytest.approx(10.0 + 1000.0 / 212.0, rel=1e-12)
        assert rI == pytest.approx(14.716981132075472, rel=1e-12)
        assert rII == pytest.approx(5.0)

    def test_zero_budgets(self):
        p = ChannelParams(P=10.0, n1=1.0, n2=2.0, n12=1.0, n21=1.0, P12=0.0, P21=0.0, B=1.0)
        plan = plan_bandwidth(p, _cfg(Symmetric(2), Strategy.S2, Regime.H2))
        assert s2_closed_form(p, plan, 2) == (10.0, 5.0)

    @settings(deadline=None)
    @given(params=channel_params(), Ks=st.integers(1, 4), regime=st.sampled_from(list(Regime)))
    def test_matches_recursion(self, params, Ks, regime):
        cfg = _cfg(Symmetric(Ks), Strategy.S2, regime)
        traj = run_recursion(params, cfg, Ks)
        rI, rII = s2_closed_form(params, traj.plan, Ks)
        assert traj.states[-1].rho_I == pytest.approx(rI, rel=1e-9)
        assert traj.states[-1].rho_II == pytest.approx(rII, rel=1e-9)

    @settings(deadline=None)
    @given(params=channel_params())
    def test_fixed_downlink_band_independent_of_count(self, params):
        values = set()
        for Ks in (1, 2, 5):
            plan = plan_bandwidth(params, _cfg(Symmetric(Ks), Strategy.S2, Regime.H2))
            rI, rII = s2_closed_form(params, plan, Ks)
            values.add((round(rI, 12), round(rII, 12)))
        assert len(values) == 1

    def test_symmetric_pair_equals_two_asymmetric_exchanges(self):
        for regime in Regime:
            sym = campaign(TWO_BRANCH, _cfg(Symmetric(1), Strategy.S2, regime)).trajectory.states[-1]
            asym = campaign(TWO_BRANCH, _cfg(Asymmetric(2), Strategy.S2, regime)).trajectory.states[-1]
            assert asym.rho_I == pytest.approx(sym.rho_I, rel=1e-12)
            assert asym.rho_II == pytest.approx(sym.rho_II, rel=1e-12)


class TestStrategyComparison:
    def test_zero_budget_vanishes(self):
        plan = plan_bandwidth(FROZEN, _cfg(Asymmetric(2), regime=Regime.H2))
        assert s1_vs_s2_numerator(FROZEN, plan) == 0.0  # P12 = 0
        p = ChannelParams(P=10.0, n1=1.0, n2=2.0, n12=1.0, n21=1.0, P12=5.0, P21=0.0, B=1.0)
        assert s1_vs_s2_numerator(p, plan_bandwidth(p, _cfg(Asymmetric(2), regime=Regime.H2))) == 0.0

    @settings(deadline=None)
    @given(params=channel_params())
    def test_nonnegative_and_sign_agrees_with_recursion(self, params):
        cfg1 = _cfg(Asymmetric(2), Strategy.S1, Regime.H2)
        cfg2 = _cfg(Asymmetric(2), Strategy.S2, Regime.H2)
        plan = plan_bandwidth(params, cfg1)
        num = s1_vs_s2_numerator(params, plan)
        assert num >= 0.0
        diff = (
            run_recursion(params, cfg2, 2).states[-1].rho_I
            - run_recursion(params, cfg1, 2).states[-1].rho_I
        )
        assert diff >= -1e-9 * abs(run_recursion(params, cfg1, 2).states[-1].rho_I)
        if num > 0:
            assert diff >= 0.0


class TestMiConservation:
    def test_first_exchange_independent_branches(self):
        cfg = _cfg(Symmetric(1), regime=Regime.H2)
        plan = plan_bandwidth(TWO_BRANCH, cfg)
        st0 = initial_state(TWO_BRANCH, plan)
        powers = power_per_exchange(TWO_BRANCH, cfg, 1)
        mi_c, mi_v = mi_conservation_check(st0, TWO_BRANCH.P, powers, (plan.N12, plan.N21))
        expect = math.log2(1.0 + 5.0 + 1000.0 / 111.0)
        assert mi_c == pytest.approx(expect, rel=1e-12)
        assert mi_v == pytest.approx(expect, rel=1e-12)

    def test_zero_gain_keeps_mi(self):
        plan = plan_bandwidth(TWO_BRANCH, _cfg(Symmetric(1), regime=Regime.H2))
        st0 = initial_state(TWO_BRANCH, plan)
        mi_c, mi_v = mi_conservation_check(st0, TWO_BRANCH.P, (0.0, 0.0), (plan.N12, plan.N21))
        assert mi_c == pytest.approx(math.log2(1.0 + st0.rho_II), rel=1e-12)
        assert mi_v == pytest.approx(mi_c, rel=1e-12)

    @settings(deadline=None)
    @given(params=channel_params(), K=st.integers(1, 3), receiver=st.sampled_from(list(Receiver)))
    def test_equality_on_evolved_states(self, params, K, receiver):
        cfg = _cfg(Symmetric(K), Strategy.S1, Regime.H1)
        state = campaign(params, cfg).trajectory.states[-1]
        powers = power_per_exchange(params, cfg, K)
        plan = plan_bandwidth(params, cfg)
        mi_c, mi_v = mi_conservation_check(state, params.P, powers, (plan.N12, plan.N21), receiver)
        assert mi_c == pytest.approx(mi_v, rel=1e-9)


class TestRatioForm:
    def test_independent_equal_branches(self):
        # two independent branches with SNR 5 each combine to SNR 10
        assert ratio_form_snr(10.0, 1.0, 10.0, 1.0, 5.0, 2.0, 0.0, 11.0) == pytest.approx(10.0)
