import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize, special

from qlbe import (
    ComFrame,
    DomainError,
    Masses,
    UnitSystem,
    com_momenta,
    delta_tau,
    delta_tau_prime,
    energy_balance_1d,
    intercollision_time,
    p_parallel_after,
)
from qlbe.errors import ContractViolationError

finite_momenta = st.floats(min_value=-5.0, max_value=5.0)
masses_st = st.builds(
    Masses,
    M=st.floats(min_value=0.1, max_value=20.0),
    m=st.floats(min_value=0.1, max_value=20.0),
)


def lab_energy_gap(k, P, Q, masses):
    """Laboratory-frame energy balance: molecule k -> k - Q, particle P -> P + Q."""
    k, P, Q = (np.atleast_1d(np.asarray(v, float)) for v in (k, P, Q))
    before = k @ k / (2 * masses.m) + P @ P / (2 * masses.M)
    after = (k - Q) @ (k - Q) / (2 * masses.m) + (P + Q) @ (P + Q) / (2 * masses.M)
    return before - after


class TestMasses:
    def test_derived_masses(self):
        m = Masses(M=2.0, m=1.0)
        assert m.M_star == 3.0
        assert m.m_star == pytest.approx(2.0 / 3.0, rel=1e-15)
        assert m.m_star < min(m.M, m.m)

    @pytest.mark.parametrize("bad", [dict(M=0.0, m=1.0), dict(M=1.0, m=-2.0)])
    def test_positivity(self, bad):
        with pytest.raises(DomainError):
            Masses(**bad)


class TestUnitSystem:
    def test_natural_units_enforced(self):
        with pytest.raises(DomainError):
            UnitSystem(hbar=2.0)

    def test_report_conversion(self):
        u = UnitSystem(report_conversions={"time": 2.5})
        assert u.to_report(2.0, "time") == 5.0
        assert u.to_report(2.0, "energy") == 2.0


class TestComMomenta:
    def test_symmetric_masses_equal_momenta(self):
        cf = com_momenta(1.3, 1.3, 0.7, Masses(M=1.0, m=1.0))
        assert cf.k_star_i == pytest.approx(0.0, abs=1e-15)

    def test_zero_transfer(self):
        cf = com_momenta(0.4, -0.2, 0.0, Masses(M=2.0, m=1.0))
        assert cf.k_star_f == cf.k_star_i
        assert cf.e_star_fi == 0.0

    def test_hand_case_with_lab_frame_oracle(self):
        # d=1, M=2, m=1, k=3, P=0, Q=1: k*_i = 2, k*_f = 1,
        # E*_fi = (4 - 1)/(2 * 2/3) = 2.25, cross-checked below.
        masses = Masses(M=2.0, m=1.0)
        cf = com_momenta(3.0, 0.0, 1.0, masses)
        assert cf.k_star_i == pytest.approx(2.0, rel=1e-15)
        assert cf.k_star_f == pytest.approx(1.0, rel=1e-15)
        assert cf.e_star_fi == pytest.approx(2.25, rel=1e-14)
        assert cf.e_star_fi == pytest.approx(lab_energy_gap(3.0, 0.0, 1.0, masses), rel=1e-14)

    def test_three_dimensional(self):
        masses = Masses(M=3.0, m=0.5)
        k = np.array([0.3, -1.2, 0.8])
        P = np.array([1.0, 0.2, -0.4])
        Q = np.array([-0.6, 0.1, 0.9])
        cf = com_momenta(k, P, Q, masses)
        np.testing.assert_allclose(cf.k_star_f, cf.k_star_i - Q, rtol=1e-15)
        assert cf.e_star_fi == pytest.approx(lab_energy_gap(k, P, Q, masses), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolationError):
            com_momenta(np.ones(3), np.ones(3), 1.0, Masses(M=1.0, m=1.0))
        with pytest.raises(ContractViolationError):
            com_momenta(np.ones(2), np.ones(2), np.ones(2), Masses(M=1.0, m=1.0))

    @settings(max_examples=50, deadline=None)
    @given(k=finite_momenta, P=finite_momenta, Q=finite_momenta, masses=masses_st)
    def test_energy_balance_matches_lab_frame(self, k, P, Q, masses):
        cf = com_momenta(k, P, Q, masses)
        assert cf.e_star_fi == pytest.approx(lab_energy_gap(k, P, Q, masses), abs=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(k=finite_momenta, P=finite_momenta, Q=finite_momenta, masses=masses_st)
    def test_vectorized_reduction_agrees(self, k, P, Q, masses):
        cf = com_momenta(k, P, Q, masses)
        assert energy_balance_1d(k, P, Q, masses) == pytest.approx(cf.e_star_fi, abs=1e-12)


class TestPParallelAfter:
    def test_equal_masses_identity(self):
        assert p_parallel_after(0.37, 1.1, Masses(M=1.0, m=1.0)) == pytest.approx(0.37)

    def test_fixed_point_at_half_transfer(self):
        for ratio in (0.2, 1.0, 7.5):
            masses = Masses(M=ratio, m=1.0)
            assert p_parallel_after(0.55, 1.1, masses) == pytest.approx(0.55, rel=1e-13)

    def test_nonpositive_transfer_rejected(self):
        with pytest.raises(DomainError):
            p_parallel_after(1.0, 0.0, Masses(M=1.0, m=1.0))

    @settings(max_examples=50, deadline=None)
    @given(
        k_par=finite_momenta,
        Q=st.floats(min_value=0.05, max_value=4.0),
        masses=masses_st,
    )
    def test_solves_energy_conservation(self, k_par, Q, masses):
        # oracle: root-find the lab-frame balance for the outgoing parallel
        # component instead of trusting the affine formula
        def residual(p_par):
            return (
                k_par**2 / (2 * masses.m)
                + (p_par - Q) ** 2 / (2 * masses.M)
                - (k_par - Q) ** 2 / (2 * masses.m)
                - p_par**2 / (2 * masses.M)
            )

        root = optimize.brentq(residual, -1e4, 1e4, xtol=1e-13)
        assert p_parallel_after(k_par, Q, masses) == pytest.approx(root, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(
        k_par=finite_momenta,
        Q=st.floats(min_value=0.05, max_value=4.0),
        masses=masses_st,
    )
    def test_residual_is_machine_zero(self, k_par, Q, masses):
        p_par = p_parallel_after(k_par, Q, masses)
        res = (
            k_par**2 / (2 * masses.m)
            + (p_par - Q) ** 2 / (2 * masses.M)
            - (k_par - Q) ** 2 / (2 * masses.m)
            - p_par**2 / (2 * masses.M)
        )
        assert abs(res) < 1e-11


def delta_tau_integral(tau, n_half_periods=200):
    """Windowed quadrature of delta_tau plus the exact sine-integral tail.

    The window ends at an integer number of half-periods X = n pi / a,
    a = tau/2; the remainder int_X^inf sin(aE)/(pi E) dE equals
    (pi/2 - Si(aX))/pi exactly, so the only error is the adaptive
    quadrature's own (far below the 1e-6 target).
    """
    a = tau / 2.0
    X = n_half_periods * np.pi / a
    bulk, _ = integrate.quad(lambda E: delta_tau(E, tau), 0.0, X,
                             limit=4 * n_half_periods)
    si, _ci = special.sici(a * X)
    tail = (np.pi / 2.0 - si) / np.pi
    return 2.0 * (bulk + tail)


class TestDeltaTau:
    def test_peak_value(self):
        assert delta_tau(0.0, 2 * np.pi) == pytest.approx(1.0, rel=1e-15)
        for tau in (0.5, 1.0, 10.0):
            assert delta_tau(0.0, tau) == pytest.approx(tau / (2 * np.pi), rel=1e-15)

    def test_first_zero(self):
        tau = 3.7
        assert delta_tau(2 * np.pi / tau, tau) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("tau", [0.5, 1.0, 10.0])
    def test_unit_integral(self, tau):
        assert delta_tau_integral(tau) == pytest.approx(1.0, abs=1e-6)

    def test_series_branch_is_smooth(self):
        # values straddling the series cutoff must agree to near machine
        tau = 1.0
        eps = 1e-4 / tau
        below = delta_tau(0.999999 * eps, tau)
        above = delta_tau(1.000001 * eps, tau)
        assert below == pytest.approx(above, rel=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(E=st.floats(min_value=-20, max_value=20), tau=st.floats(min_value=0.05, max_value=30))
    def test_even_in_energy(self, E, tau):
        assert delta_tau(-E, tau) == delta_tau(E, tau)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            delta_tau(1.0, 0.0)

    def test_array_input(self):
        right = np.array([0.1, 0.7, 1.3, 2.9])
        E = np.concatenate([-right[::-1], [0.0], right])
        out = delta_tau(E, 2.0)
        assert out.shape == E.shape
        np.testing.assert_allclose(out, out[::-1], rtol=0, atol=0)

    def test_weak_peak_ladder(self):
        # (2 pi / tau) delta_tau^2 is an approximate identity: against a fixed
        # smooth g the integral approaches g(0), with error ~ 1/tau.
        g = lambda E: np.exp(-((E - 0.3) ** 2) / 2.0)
        errs = []
        for tau in (4.0, 8.0, 16.0, 32.0):
            val, _ = integrate.quad(
                lambda E: g(E) * (2 * np.pi / tau) * delta_tau(E, tau) ** 2,
                -14.0, 14.0, limit=2000,
            )
            errs.append(abs(val - g(0.0)))
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 0.05


class TestDeltaTauPrime:
    def test_zero_at_origin(self):
        assert delta_tau_prime(0.0, 5.0) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(E=st.floats(min_value=-8, max_value=8), tau=st.floats(min_value=0.2, max_value=12))
    def test_antisymmetric(self, E, tau):
        assert delta_tau_prime(-E, tau) == pytest.approx(-delta_tau_prime(E, tau), abs=1e-18)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            E = rng.uniform(-4, 4)
            tau = rng.uniform(0.3, 9.0)
            h = 1e-6
            fd = (delta_tau(E + h, tau) - delta_tau(E - h, tau)) / (2 * h)
            assert delta_tau_prime(E, tau) == pytest.approx(fd, rel=1e-6, abs=1e-12)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            delta_tau_prime(1.0, -1.0)


class TestIntercollisionTime:
    def test_unit_case(self):
        assert intercollision_time(1.0, 1.0 / np.pi, 1.0, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_hand_case(self):
        # sqrt(pi * 2 * 2/pi) / (0.5 * 4) = 2/2 = 1
        assert intercollision_time(2.0, 2.0 / np.pi, 0.5, 4.0) == pytest.approx(1.0, rel=1e-15)

    def test_density_scaling(self):
        t1 = intercollision_time(1.3, 0.7, 2.0, 1.0)
        t2 = intercollision_time(1.3, 0.7, 2.0, 2.0)
        assert t2 == pytest.approx(t1 / 2.0, rel=1e-15)

    @pytest.mark.parametrize("args", [
        (0.0, 1.0, 1.0, 1.0), (1.0, -1.0, 1.0, 1.0),
        (1.0, 1.0, 0.0, 1.0), (1.0, 1.0, 1.0, 0.0),
    ])
    def test_domain_errors(self, args):
        with pytest.raises(DomainError):
            intercollision_time(*args)
