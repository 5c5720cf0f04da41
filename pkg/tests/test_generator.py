import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlbe import (
    DensityMatrix,
    DomainError,
    GasComponent,
    GasMixture,
    GeneratorConfig,
    LindbladChannel,
    Masses,
    MomentumGrid,
    ScatteringAmplitude,
    additivity_defect,
    apply_dissipator,
    apply_hamiltonian,
    build_channels,
    build_sqrt_variant_channels,
    classical_lbe_rates,
    delta_tau,
    on_shell_gas_momentum,
)
from qlbe.errors import ConfigurationError, ContractViolationError
from qlbe.generator import DissipatorOperator, hermitian_probe_basis


def make_cfg(tau=2.0, k_order=8, q_shifts=(1, -1, 2, -2), coupling=None,
             beta=1.0, n_g=1.0, M=1.0, m=1.0, f0=1.0):
    return GeneratorConfig(
        masses=Masses(M=M, m=m),
        gas=GasMixture.single(GasComponent(m=m, beta=beta, n_g=n_g)),
        amplitude=ScatteringAmplitude(model="constant", f0=f0),
        tau=tau,
        k_order=k_order,
        q_shifts=q_shifts,
        coupling=coupling,
    )


def random_density(grid, rng):
    a = rng.normal(size=(grid.n, grid.n)) + 1j * rng.normal(size=(grid.n, grid.n))
    rho = a @ a.conj().T
    return DensityMatrix(grid, rho / np.trace(rho).real)


def random_channels(grid, rng, count=6):
    chans = []
    for _ in range(count):
        q = int(rng.integers(1, grid.n // 2)) * int(rng.choice([-1, 1]))
        diag = rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)
        chans.append(LindbladChannel(grid=grid, q_index=q,
                                     weight=float(rng.uniform(0.01, 2.0)),
                                     diag=diag.astype(complex)))
    return chans


class TestMomentumGrid:
    def test_symmetric_values(self):
        g = MomentumGrid(n=8, dp=0.5)
        np.testing.assert_allclose(g.p_values + g.p_values[::-1], 0.0, atol=0)
        assert g.p_values[1] - g.p_values[0] == pytest.approx(0.5)

    def test_validation(self):
        with pytest.raises(DomainError):
            MomentumGrid(n=3, dp=0.5)
        with pytest.raises(DomainError):
            MomentumGrid(n=8, dp=0.0)


class TestDensityMatrix:
    def test_constructors(self):
        g = MomentumGrid(n=8, dp=0.5)
        for rho in (DensityMatrix.momentum_eigenstate(g, 3),
                    DensityMatrix.superposition(g, 2, 5),
                    DensityMatrix.maximally_mixed(g),
                    DensityMatrix.gaussian_mixed(g, width=0.8)):
            rho.validate()
            assert rho.trace() == pytest.approx(1.0, abs=1e-12)

    def test_observables(self):
        g = MomentumGrid(n=8, dp=0.5)
        rho = DensityMatrix.superposition(g, 2, 5)
        assert rho.coherence_l1() == pytest.approx(1.0, abs=1e-14)
        assert rho.mean_p() == pytest.approx(0.5 * (g.p_values[2] + g.p_values[5]))
        eig = DensityMatrix.momentum_eigenstate(g, 0)
        assert eig.edge_population() == pytest.approx(1.0)

    def test_validate_rejects_junk(self):
        g = MomentumGrid(n=4, dp=1.0)
        bad = DensityMatrix(g, np.eye(4, dtype=complex) * 0.5)
        with pytest.raises(ContractViolationError):
            bad.validate()


class TestBuildChannels:
    def test_channel_count(self):
        grid = MomentumGrid(n=16, dp=0.25)
        cfg = make_cfg(k_order=2, q_shifts=(1, -1, 2, -2))
        assert len(build_channels(cfg, grid)) == 8

    def test_zero_density_gas(self):
        grid = MomentumGrid(n=16, dp=0.25)
        cfg = make_cfg(n_g=0.0)
        assert build_channels(cfg, grid) == []

    def test_off_grid_shift_rejected(self):
        grid = MomentumGrid(n=8, dp=0.25)
        cfg = make_cfg(q_shifts=(9,))
        with pytest.raises(ConfigurationError):
            build_channels(cfg, grid)

    def test_diagonal_factor_peaks_on_shell(self):
        # masses (2, 1), beta = 1 puts the order-2 gas nodes at +-1; with
        # dP = 0.5 and q = 3 the on-shell momentum for the k = +1 node,
        # P = (M/m) k - (M/m) Q/2 - Q/2 = -0.25, lies on the N = 8 grid,
        # where delta_tau hits its peak tau/(2 pi).
        grid = MomentumGrid(n=8, dp=0.5)
        tau, f0 = 2.7, 1.3
        cfg = make_cfg(tau=tau, k_order=2, q_shifts=(3,), M=2.0, m=1.0, f0=f0)
        channels = [ch for ch in build_channels(cfg, grid) if ch.k > 0]
        assert len(channels) == 1
        i_on = int(np.argmin(np.abs(grid.p_values - (-0.25))))
        assert grid.p_values[i_on] == pytest.approx(-0.25, abs=1e-15)
        got = channels[0].diag[i_on]
        assert got.real == pytest.approx(f0 * tau / (2 * np.pi), rel=1e-10)
        assert got.imag == 0.0

    def test_weight_structure(self):
        grid = MomentumGrid(n=16, dp=0.25)
        cfg = make_cfg(k_order=2, q_shifts=(1,), coupling=3.0, n_g=0.7)
        chans = build_channels(cfg, grid)
        # coupling * n_g * w_k * dP with two equal half weights
        for ch in chans:
            assert ch.weight == pytest.approx(3.0 * 0.7 * 0.5 * 0.25, rel=1e-12)


class TestDissipatorAlgebra:
    def test_empty_channels(self):
        grid = MomentumGrid(n=8, dp=0.5)
        rho = DensityMatrix.maximally_mixed(grid)
        np.testing.assert_array_equal(apply_dissipator([], rho), np.zeros((8, 8)))

    def test_trace_and_hermiticity_physical(self):
        grid = MomentumGrid(n=32, dp=0.25)
        chans = build_channels(make_cfg(), grid)
        rng = np.random.default_rng(11)
        for _ in range(5):
            rho = random_density(grid, rng)
            out = apply_dissipator(chans, rho)
            assert abs(np.trace(out)) < 1e-12
            assert np.max(np.abs(out - out.conj().T)) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_trace_identity_random_channels(self, seed):
        # the trace identity is algebraic and must hold for arbitrary
        # channel data, including truncated shifts
        rng = np.random.default_rng(seed)
        grid = MomentumGrid(n=12, dp=0.4)
        chans = random_channels(grid, rng)
        rho = random_density(grid, rng)
        out = apply_dissipator(chans, rho)
        assert abs(np.trace(out)) < 1e-12
        assert np.max(np.abs(out - out.conj().T)) < 1e-12

    def test_linearity(self):
        grid = MomentumGrid(n=10, dp=0.3)
        rng = np.random.default_rng(3)
        chans = random_channels(grid, rng, count=4)
        r1 = random_density(grid, rng)
        r2 = random_density(grid, rng)
        mixed = DensityMatrix(grid, 0.25 * r1.elements + 0.75 * r2.elements)
        lhs = apply_dissipator(chans, mixed)
        rhs = 0.25 * apply_dissipator(chans, r1) + 0.75 * apply_dissipator(chans, r2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)
        split = apply_dissipator(chans[:2], r1) + apply_dissipator(chans[2:], r1)
        np.testing.assert_allclose(apply_dissipator(chans, r1), split, atol=1e-13)

    def test_grid_mismatch(self):
        chans = random_channels(MomentumGrid(n=8, dp=0.5), np.random.default_rng(0))
        rho = DensityMatrix.maximally_mixed(MomentumGrid(n=8, dp=0.25))
        with pytest.raises(ContractViolationError):
            apply_dissipator(chans, rho)

    def test_operator_matches_function(self):
        grid = MomentumGrid(n=16, dp=0.25)
        chans = build_channels(make_cfg(), grid)
        rng = np.random.default_rng(5)
        rho = random_density(grid, rng)
        op = DissipatorOperator(chans)
        np.testing.assert_array_equal(op(rho.elements), apply_dissipator(chans, rho))

    def test_explicit_channel_sum_oracle(self):
        # brute-force V rho V^dag - (1/2){V^dag V, rho} with dense matrices
        grid = MomentumGrid(n=10, dp=0.3)
        rng = np.random.default_rng(9)
        chans = random_channels(grid, rng, count=3)
        rho = random_density(grid, rng)
        expected = np.zeros((10, 10), dtype=complex)
        for ch in chans:
            shift = np.zeros((10, 10))
            for i in range(10):
                if 0 <= i + ch.q_index < 10:
                    shift[i + ch.q_index, i] = 1.0
            V = shift @ np.diag(ch.diag)
            VdV = V.conj().T @ V
            expected += ch.weight * (
                V @ rho.elements @ V.conj().T
                - 0.5 * (VdV @ rho.elements + rho.elements @ VdV)
            )
        np.testing.assert_allclose(apply_dissipator(chans, rho), expected, atol=1e-13)


class TestHamiltonian:
    def test_diagonal_state_stationary(self):
        grid = MomentumGrid(n=8, dp=0.5)
        rho = DensityMatrix.gaussian_mixed(grid, width=1.0)
        out = apply_hamiltonian(rho, Masses(M=1.0, m=1.0))
        np.testing.assert_allclose(out, 0.0, atol=1e-16)

    def test_opposite_momenta_degenerate(self):
        grid = MomentumGrid(n=8, dp=0.5)
        i = 1
        j = grid.n - 2  # P_j = -P_i on the symmetric grid
        rho = DensityMatrix.superposition(grid, i, j)
        out = apply_hamiltonian(rho, Masses(M=2.0, m=1.0))
        assert abs(out[i, j]) < 1e-16

    def test_pure_phase_rotation_rate(self):
        grid = MomentumGrid(n=8, dp=0.5)
        masses = Masses(M=3.0, m=1.0)
        rho = DensityMatrix.superposition(grid, 1, 4)
        out = apply_hamiltonian(rho, masses)
        p = grid.p_values
        expect = -1j * (p[1] ** 2 - p[4] ** 2) / (2 * masses.M) * rho.elements[1, 4]
        assert out[1, 4] == pytest.approx(expect, rel=1e-14)
        # diagonal untouched
        assert out[1, 1] == 0.0


class TestSqrtVariant:
    def test_one_channel_per_shift(self):
        grid = MomentumGrid(n=16, dp=0.25)
        cfg = make_cfg(q_shifts=(1, -1, 2, -2))
        chans = build_sqrt_variant_channels(cfg, grid)
        assert len(chans) == 4
        assert all(ch.k is None for ch in chans)

    def test_diagonal_rates_match_classical(self):
        # the probe is normalized so that population rates equal the
        # classical on-shell rates for every tau
        grid = MomentumGrid(n=16, dp=0.25)
        cfg = make_cfg(tau=2.0, q_shifts=(1, -1, 2), coupling=1.5)
        chans = build_sqrt_variant_channels(cfg, grid)
        table = classical_lbe_rates(grid, cfg)
        i = 7
        rho = DensityMatrix.momentum_eigenstate(grid, i)
        out = apply_dissipator(chans, rho)
        for q in cfg.q_shifts:
            assert out[i + q, i + q].real == pytest.approx(table.rate(q)[i], rel=1e-12)

    def test_same_temperature_split_is_additive(self):
        masses = Masses(M=1.0, m=1.0)
        gas = GasMixture((GasComponent(m=1.0, beta=1.0, n_g=0.5),
                          GasComponent(m=1.0, beta=1.0, n_g=0.5)))
        cfg = GeneratorConfig(masses=masses, gas=gas,
                              amplitude=ScatteringAmplitude(), tau=2.0,
                              k_order=6, q_shifts=(1, -1, 2, -2), coupling=1.0)
        assert additivity_defect(cfg, MomentumGrid(n=16, dp=0.25), "sqrt") < 1e-12

    def test_two_temperature_mixture_not_additive(self):
        masses = Masses(M=1.0, m=1.0)
        gas = GasMixture((GasComponent(m=1.0, beta=1.0, n_g=0.5),
                          GasComponent(m=1.0, beta=4.0, n_g=0.5)))
        cfg = GeneratorConfig(masses=masses, gas=gas,
                              amplitude=ScatteringAmplitude(), tau=2.0,
                              k_order=8, q_shifts=(1, -1, 2, -2), coupling=1.0)
        grid = MomentumGrid(n=16, dp=0.25)
        defect = additivity_defect(cfg, grid, "sqrt")
        assert defect > 1e-3
        # the defect is a coherence-sector effect: population columns agree
        chans_mix = build_sqrt_variant_channels(cfg, grid)
        out_mix = apply_dissipator(chans_mix, DensityMatrix.momentum_eigenstate(grid, 7))
        parts = []
        for comp in gas.components:
            sub = GeneratorConfig(masses=masses, gas=GasMixture.single(comp),
                                  amplitude=ScatteringAmplitude(), tau=2.0,
                                  k_order=8, q_shifts=(1, -1, 2, -2), coupling=1.0)
            parts.append(apply_dissipator(build_sqrt_variant_channels(sub, grid),
                                          DensityMatrix.momentum_eigenstate(grid, 7)))
        np.testing.assert_allclose(np.diag(out_mix), np.diag(parts[0] + parts[1]), atol=1e-13)


class TestAdditivityDefect:
    def setup_method(self):
        self.masses = Masses(M=1.0, m=1.0)
        self.gas = GasMixture((GasComponent(m=1.0, beta=1.0, n_g=0.5),
                               GasComponent(m=1.0, beta=4.0, n_g=0.5)))
        self.grid = MomentumGrid(n=16, dp=0.25)

    def cfg(self, **kw):
        base = dict(masses=self.masses, gas=self.gas,
                    amplitude=ScatteringAmplitude(), tau=2.0, k_order=8,
                    q_shifts=(1, -1, 2, -2), coupling=1.0)
        base.update(kw)
        return GeneratorConfig(**base)

    def test_linear_additive(self):
        assert additivity_defect(self.cfg(), self.grid, "linear") <= 1e-12

    def test_gas_linearity_bitwise(self):
        # mixture channels are the literal concatenation of per-component ones
        cfg = self.cfg()
        mix = build_channels(cfg, self.grid)
        per = []
        for comp in self.gas.components:
            sub = self.cfg(gas=GasMixture.single(comp))
            per.extend(build_channels(sub, self.grid))
        assert len(mix) == len(per)
        for a, b in zip(mix, per):
            assert a.q_index == b.q_index and a.weight == b.weight and a.k == b.k
            np.testing.assert_array_equal(a.diag, b.diag)

    def test_sqrt_defect_positive(self):
        assert additivity_defect(self.cfg(), self.grid, "sqrt") > 1e-3

    def test_component_count_enforced(self):
        single = self.cfg(gas=GasMixture.single(self.gas.components[0]))
        with pytest.raises(DomainError):
            additivity_defect(single, self.grid, "linear")

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            additivity_defect(self.cfg(), self.grid, "cubic")

    def test_probe_basis_spans(self):
        probes = list(hermitian_probe_basis(4))
        assert len(probes) == 16
        flat = np.array([p.ravel() for p in probes])
        assert np.linalg.matrix_rank(flat) == 16


class TestMonotoneDecoherence:
    def test_offdiagonal_decay_rate_ladder(self):
        # instantaneous decay rate of an on-shell-centered two-momentum
        # coherence is nonnegative and grows along a tau ladder at fixed
        # coupling: sharper energy resolution distinguishes the momenta better
        grid = MomentumGrid(n=32, dp=0.25)
        i, j = 11, 20  # P = -+1.125
        rho = DensityMatrix.superposition(grid, i, j)
        rates = []
        for tau in (1.0, 2.0, 4.0, 8.0):
            cfg = make_cfg(tau=tau, k_order=24, coupling=1.0)
            out = apply_dissipator(build_channels(cfg, grid), rho)
            rate = -np.real(out[i, j] / rho.elements[i, j])
            rates.append(rate)
        assert all(r >= 0 for r in rates)
        assert all(b > a for a, b in zip(rates, rates[1:]))


class TestOnShellMomentum:
    def test_closed_form(self):
        masses = Masses(M=2.0, m=1.0)
        p, q = 0.6, 0.5
        k = on_shell_gas_momentum(p, q, masses)
        assert k == pytest.approx((3.0 / 4.0) * q + 0.5 * p, rel=1e-15)
        # the root indeed nulls the energy balance
        from qlbe import energy_balance_1d
        assert energy_balance_1d(k, p, q, masses) == pytest.approx(0.0, abs=1e-15)
