import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdg import (
    BdGState,
    GridSpec,
    IntegrationBlowup,
    PhysicalParams,
    SpectralScalars,
    StepperConfig,
    SystemKind,
    dispersion,
    evolve,
    gamma_from_alpha,
    kinetic_flow,
    reference_evolve,
    rhs_full,
    rhs_linear,
    rhs_reduced,
    strang_step,
)
from bdg.dynamics import Propagator, _Folding
from bdg.equilibrium import custom_setup

TINY_P = PhysicalParams(h=0.25)
TINY_G = GridSpec(n_period=2, m_density=16, h=0.25)  # K = 128


def random_state(grid, params, seed):
    """Admissible state with a generic spread of radicands."""
    rng = np.random.default_rng(seed)
    K = grid.K
    r = rng.uniform(0.05, 0.5, K)
    theta = rng.uniform(0, np.pi, K)
    phi = rng.uniform(0, 2 * np.pi, K)
    gamma = 0.5 + r * np.cos(theta)
    alpha = r * np.sin(theta) * np.exp(1j * phi)
    state = BdGState(gamma, alpha)
    eps = dispersion(grid, params)
    scalars = SpectralScalars(eps=eps, h_aux=state.radicand(), branch=np.sign(gamma - 0.5))
    return state, scalars


@pytest.fixture(scope="module")
def tiny_setup():
    from bdg import standard_setup

    return standard_setup(TINY_P, TINY_G)


class TestSystemKind:
    def test_values(self):
        assert SystemKind("full") is SystemKind.FULL
        assert SystemKind.REDUCED.label == "ReducedAlpha"
        with pytest.raises(ValueError):
            SystemKind("quadratic")


class TestRhsFull:
    def test_normal_state_stationary(self):
        state = BdGState(np.full(TINY_G.K, 0.3), np.zeros(TINY_G.K))
        dg, da = rhs_full(state, TINY_P, TINY_G)
        assert np.all(dg == 0) and np.all(da == 0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_occupation_sum_conserved(self, seed):
        state, _ = random_state(TINY_G, TINY_P, seed)
        dg, _ = rhs_full(state, TINY_P, TINY_G)
        assert dg.dtype == np.float64
        assert abs(dg.sum()) <= 1e-12

    def test_radicand_conserved(self):
        state, _ = random_state(TINY_G, TINY_P, 3)
        dg, da = rhs_full(state, TINY_P, TINY_G)
        d_rad = 2 * (state.gamma - 0.5) * dg + 2 * (state.alpha.conj() * da).real
        assert np.max(np.abs(d_rad)) <= 1e-14

    def test_bcs_equilibrium_stationary(self):
        # below T_c the BCS state solving the gap equation does not move
        from bdg import solve_critical_temperature, solve_gap
        from bdg.equilibrium import build_initial_state
        from bdg.model_core import contact_convolution

        grid = GridSpec(4, 32, 0.25)
        t = solve_critical_temperature(TINY_P, grid) - 0.0625
        delta = solve_gap(t, TINY_P, grid).delta
        state, _ = build_initial_state(delta, t, TINY_P, grid)
        # self-consistency: the gap is -2 x convolution
        assert -2 * contact_convolution(state.alpha, TINY_P, grid) == pytest.approx(delta, rel=1e-8)
        dg, da = rhs_full(state, TINY_P, grid)
        assert np.max(np.abs(da)) <= 1e-9 and np.max(np.abs(dg)) <= 1e-12


class TestGammaFromAlpha:
    def test_round_trip_initial(self, tiny_setup):
        g = gamma_from_alpha(tiny_setup.alpha0, tiny_setup.scalars)
        nd = ~tiny_setup.scalars.degenerate
        assert np.max(np.abs(g[nd] - tiny_setup.gamma0[nd])) <= 1e-15
        assert np.all(g[~nd] == 0.5)

    def test_zero_alpha(self, tiny_setup):
        sc = tiny_setup.scalars
        g = gamma_from_alpha(np.zeros(TINY_G.K), sc)
        assert np.allclose(g, 0.5 + sc.branch * np.sqrt(sc.h_aux))

    def test_degenerate_override(self, tiny_setup):
        sc = tiny_setup.scalars
        n = int(sc.degenerate.sum())
        g = gamma_from_alpha(tiny_setup.alpha0, sc, gamma_degenerate=np.full(n, 0.4))
        assert np.all(g[sc.degenerate] == 0.4)

    def test_blowup(self, tiny_setup):
        bad = tiny_setup.alpha0.copy()
        bad[5] = 1.0
        with pytest.raises(IntegrationBlowup) as info:
            gamma_from_alpha(bad, tiny_setup.scalars)
        assert info.value.mode == 5

    def test_clamp(self, tiny_setup):
        a = tiny_setup.alpha0.copy()
        sc = tiny_setup.scalars
        i = 3
        a[i] = math.sqrt(sc.h_aux[i] + 1e-13)
        g, excess = gamma_from_alpha(a, sc, return_excess=True)
        assert g[i] == 0.5 and 0 < excess < 1e-12


class TestRhsReducedAndLinear:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_reduced_matches_full(self, seed):
        state, sc = random_state(TINY_G, TINY_P, seed)
        _, da = rhs_full(state, TINY_P, TINY_G)
        # recovering gamma near 1/2 loses digits: sqrt(h_aux - |alpha|^2) is ill-conditioned there
        assert np.allclose(rhs_reduced(state.alpha, sc, TINY_P, TINY_G), da, rtol=0, atol=1e-10)

    def test_reduced_zero(self):
        eq = custom_setup(0.0, 0.3, TINY_P, TINY_G)
        assert np.all(rhs_reduced(eq.alpha0, eq.scalars, TINY_P, TINY_G) == 0)

    def test_linear_matches_full_initially(self, tiny_setup):
        _, da = rhs_full(tiny_setup.initial_state, TINY_P, TINY_G)
        assert np.array_equal(rhs_linear(tiny_setup.alpha0, tiny_setup.gamma0, TINY_P, TINY_G), da)

    def test_linearity(self, tiny_setup):
        rng = np.random.default_rng(4)
        u = rng.normal(size=TINY_G.K) + 1j * rng.normal(size=TINY_G.K)
        v = rng.normal(size=TINY_G.K) + 1j * rng.normal(size=TINY_G.K)
        x, y = 0.7 - 0.2j, -1.3
        g0 = tiny_setup.gamma0
        lhs = rhs_linear(x * u + y * v, g0, TINY_P, TINY_G)
        rhs = x * rhs_linear(u, g0, TINY_P, TINY_G) + y * rhs_linear(v, g0, TINY_P, TINY_G)
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)


class TestKineticFlow:
    def test_identity(self, tiny_setup):
        assert np.array_equal(kinetic_flow(tiny_setup.alpha0, 0.0, TINY_G, TINY_P), tiny_setup.alpha0)

    def test_modulus_and_reversal(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=TINY_G.K) + 1j * rng.normal(size=TINY_G.K)
        b = kinetic_flow(a, 0.37, TINY_G, TINY_P)
        assert np.allclose(np.abs(b), np.abs(a), rtol=1e-15)
        assert np.allclose(kinetic_flow(b, -0.37, TINY_G, TINY_P), a, rtol=0, atol=1e-14)


class TestStrangStep:
    def test_free_dynamics_exact(self):
        p = PhysicalParams(a=0.0, h=0.25)
        eq = custom_setup(0.29, 0.25, p, TINY_G)
        s = strang_step(eq.initial_state, 0.5, "full", p, TINY_G)
        assert np.allclose(s.alpha, kinetic_flow(eq.alpha0, 0.5, TINY_G, p), rtol=0, atol=1e-15)
        assert np.array_equal(s.gamma, eq.gamma0)

    def test_real_occupations(self, tiny_setup):
        s = strang_step(tiny_setup.initial_state, 0.1 / TINY_G.K, "full", TINY_P, TINY_G)
        assert s.gamma.dtype == np.float64 and s.t == pytest.approx(0.1 / TINY_G.K)

    def test_requires_aux(self, tiny_setup):
        with pytest.raises(ValueError):
            strang_step(tiny_setup.initial_state, 0.01, "reduced", TINY_P, TINY_G)
        with pytest.raises(ValueError):
            strang_step(tiny_setup.initial_state, 0.01, "linear", TINY_P, TINY_G)

    @pytest.mark.parametrize("kind", ["full", "reduced", "linear"])
    def test_second_order(self, tiny_setup, kind):
        t_end = 0.5
        ref = reference_evolve(tiny_setup, kind, t_end, tau_ref=0.002 / TINY_G.K)
        errs = []
        for tau in (0.4 / TINY_G.K, 0.2 / TINY_G.K, 0.1 / TINY_G.K):
            s = tiny_setup.initial_state
            for _ in range(int(round(t_end / tau))):
                s = strang_step(s, tau, kind, TINY_P, TINY_G, scalars=tiny_setup.scalars,
                                gamma0=tiny_setup.gamma0)
            errs.append(np.max(np.abs(s.alpha - ref.alpha)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all((orders > 1.8) & (orders < 2.2)), orders


class TestPropagator:
    @pytest.mark.parametrize("kind", ["full", "reduced", "linear"])
    def test_matches_numpy_stepper(self, tiny_setup, kind):
        tau = 0.1 / TINY_G.K
        s = tiny_setup.initial_state
        for _ in range(50):
            s = strang_step(s, tau, kind, TINY_P, TINY_G, scalars=tiny_setup.scalars, gamma0=tiny_setup.gamma0)
        prop = Propagator(tiny_setup, kind, tau)
        prop.advance(20)
        prop.advance(30)
        out = prop.state()
        assert out.t == pytest.approx(s.t)
        assert np.max(np.abs(out.alpha - s.alpha)) <= 1e-13
        assert np.max(np.abs(out.gamma - s.gamma)) <= 1e-12

    def test_folding_agrees(self, tiny_setup):
        tau = 0.1 / TINY_G.K
        a = Propagator(tiny_setup, "full", tau, fold=True)
        b = Propagator(tiny_setup, "full", tau, fold=False)
        a.advance(200)
        b.advance(200)
        assert np.max(np.abs(a.state().alpha - b.state().alpha)) <= 1e-14

    def test_folding_round_trip(self):
        f = _Folding(16, True)
        x = np.arange(16, dtype=float)
        x = x + x[::-1].copy()  # not symmetric in k -> -k in general
        sym = np.concatenate([[5.0], np.arange(1, 16)[::-1] * 0 + np.arange(1, 16)])
        assert f.fold(f.unfold(f.fold(sym))).shape == f.fold(sym).shape


class TestEvolve:
    def test_normal_state_constant(self):
        eq = custom_setup(0.0, 0.3, TINY_P, TINY_G)
        for kind in ("full", "reduced", "linear"):
            s = evolve(eq, kind, StepperConfig(tau=0.01, t_end=1.0, sample_stride=10))
            assert np.all(s.norm_scaled == 0) and np.all(s.psi == 0)
            assert np.all(s.delta_f <= 1e-15)

    def test_free_dynamics(self):
        p = PhysicalParams(a=0.0, h=0.25)
        eq = custom_setup(0.29, 0.25, p, TINY_G)
        states = []
        evolve(eq, "full", StepperConfig(tau=0.01, t_end=1.0, sample_stride=100),
               sink=lambda t, s: states.append(s))
        assert np.allclose(states[-1].alpha, kinetic_flow(eq.alpha0, 1.0, TINY_G, p), rtol=0, atol=1e-13)

    def test_samples(self, tiny_setup):
        cfg = StepperConfig(tau=0.1 / TINY_G.K, t_end=0.5, sample_stride=64)
        s = evolve(tiny_setup, "linear", cfg)
        s.check()
        assert s.t[-1] == pytest.approx(0.5) and len(s) == len(cfg.sample_steps())
        assert s.metadata["kind"] == "linear"

    def test_reduced_matches_full(self, tiny_setup):
        cfg = StepperConfig(tau=0.1 / TINY_G.K, t_end=1.0, sample_stride=1280)
        out = {}
        for kind in ("full", "reduced"):
            got = []
            evolve(tiny_setup, kind, cfg, sink=lambda t, s: got.append(s))
            out[kind] = got[-1]
        assert np.max(np.abs(out["full"].alpha - out["reduced"].alpha)) <= 1e-10
        assert np.max(np.abs(out["full"].gamma - out["reduced"].gamma)) <= 1e-10

    def test_blowup_partial_series(self, tiny_setup):
        # a grossly oversized step drives the reduced radicand negative
        cfg = StepperConfig(tau=2.0, t_end=400.0, sample_stride=1)
        with pytest.raises(IntegrationBlowup) as info:
            evolve(tiny_setup, "reduced", cfg)
        series = info.value.series
        assert series is not None and len(series) >= 1 and series.t[0] == 0.0


class TestStepperConfig:
    def test_production(self):
        g = GridSpec(8, 256, 0.25)
        c = StepperConfig.production(g)
        assert c.tau == 0.1 / 8192 and c.t_end == 16.0
        assert c.n_steps == 1310720
        steps = c.sample_steps()
        assert steps[0] == 0 and steps[-1] == c.n_steps
        assert 2000 <= len(steps) <= 2001

    def test_invalid(self):
        with pytest.raises(ValueError):
            StepperConfig(tau=0.0, t_end=1.0)
        with pytest.raises(ValueError):
            StepperConfig(tau=0.1, t_end=-1.0)
        with pytest.raises(ValueError):
            StepperConfig(tau=0.1, t_end=1.0, sample_stride=0)

    def test_final_step_always_sampled(self):
        c = StepperConfig(tau=0.1, t_end=1.05, sample_stride=4)
        assert c.sample_steps()[-1] == 10 or c.sample_steps()[-1] == c.n_steps
