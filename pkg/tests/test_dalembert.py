import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ReflectionOracle
from wavectl.dalembert import (
    BoundaryLaw,
    DirichletControl,
    NeumannControl,
    NeumannFeedback,
    SingularClosureError,
    cell_energy,
    decompose,
    eval_free,
    lattice_steps,
    simulate_linear,
)
from wavectl.optctrl import dirichlet_exact_control, terminal_state
from wavectl.wavecore import ControlSignal, GridFunction, l2_norm

N = 100
FREE = BoundaryLaw(NeumannFeedback(0.0))


def gf(fn, n=N):
    return GridFunction.from_function(fn, n)


def hat(c=0.5, w=0.2, n=N):
    return gf(lambda x: np.maximum(0.0, 1 - np.abs(x - c) / w), n)


class TestDecompose:
    def test_sine_example(self):
        fld = decompose(gf(lambda x: 4 * np.sin(np.pi * x / 2)), GridFunction.zeros(N))
        x = np.linspace(0, 1, N + 1)
        np.testing.assert_allclose(fld.alpha_values, 2 * np.sin(np.pi * x / 2), atol=1e-14)
        np.testing.assert_allclose(fld.beta_values, 2 * np.sin(np.pi * x / 2), atol=1e-14)

    def test_unit_velocity(self):
        fld = decompose(GridFunction.zeros(N), GridFunction(np.ones(N + 1)))
        x = np.linspace(0, 1, N + 1)
        np.testing.assert_allclose(fld.alpha_values, x / 2, atol=1e-14)
        np.testing.assert_allclose(fld.beta_values, -x / 2, atol=1e-14)

    def test_zero(self):
        fld = decompose(GridFunction.zeros(8), GridFunction.zeros(8))
        assert not np.any(fld.alpha_values) and not np.any(fld.beta_values)

    def test_mismatched(self):
        with pytest.raises(ValueError, match="mismatched"):
            decompose(GridFunction.zeros(8), GridFunction.zeros(9))

    @settings(max_examples=30)
    @given(st.lists(st.floats(-5, 5), min_size=11, max_size=11), st.lists(st.floats(-5, 5), min_size=11, max_size=11))
    def test_reconstruction(self, a, b):
        y0, y1 = GridFunction(a), GridFunction(b)
        fld = decompose(y0, y1)
        np.testing.assert_allclose(fld.alpha_values + fld.beta_values, y0.values, atol=1e-12)
        # alpha' - beta' is the cell average of y1
        np.testing.assert_allclose(fld.alpha_slopes - fld.beta_slopes, 0.5 * (y1.values[1:] + y1.values[:-1]), atol=1e-10)


class TestEvalFree:
    def test_initial_and_zero(self):
        y0 = gf(lambda x: x * (1 - x))
        fld = decompose(y0, GridFunction.zeros(N))
        assert eval_free(fld, 0.0, 0.3) == pytest.approx(0.21, abs=1e-4)
        z = decompose(GridFunction.zeros(N), GridFunction.zeros(N))
        assert eval_free(z, 0.2, 0.5) == 0.0

    def test_outside_extension(self):
        fld = decompose(GridFunction.zeros(N), GridFunction.zeros(N))
        with pytest.raises(ValueError):
            eval_free(fld, 0.6, 0.2)

    def test_standing_wave_identity(self):
        # sin(pi x) extended oddly gives cos(pi t) sin(pi x); at t = x = 1/2 that is 0
        y0 = gf(lambda x: np.sin(np.pi * x))
        law = BoundaryLaw(DirichletControl(ControlSignal.zeros(1.0, N)))
        traj = simulate_linear(y0, GridFunction.zeros(N), law, 0.5)
        assert abs(traj.y[-1, N // 2]) < 1e-12


class TestClosures:
    def test_singular_feedback(self):
        with pytest.raises(SingularClosureError, match="singular feedback closure"):
            NeumannFeedback(-1.0)

    def test_lattice_alignment(self):
        with pytest.raises(ValueError):
            lattice_steps(0.333, 10)
        with pytest.raises(ValueError):
            simulate_linear(GridFunction.zeros(10), GridFunction.zeros(10), FREE, 0.05)

    @pytest.mark.parametrize("f", [0.25, 0.5, 2.0, 4.0])
    def test_reflection_coefficient(self, f):
        # at t = 1 the field is the reflected wave plus the part already
        # reflected at x = 0; the f = 1 run carries only the latter
        y0 = hat()
        fld = decompose(y0, GridFunction.zeros(N))
        run = lambda g: simulate_linear(y0, GridFunction.zeros(N), BoundaryLaw(NeumannFeedback(g)), 1.0)
        outgoing = run(f).cell_y_x[-1] - run(1.0).cell_y_x[-1]
        np.testing.assert_allclose(outgoing[::-1], (f - 1) / (f + 1) * fld.beta_slopes, atol=1e-12)

    def test_oracle_piecewise_linear_feedback(self):
        # exact data on the lattice; the oracle is exact too
        y0 = hat(0.4, 0.3)
        dy0 = lambda x: (1 / 0.3) * (1.0 if 0.1 < x < 0.4 else (-1.0 if 0.4 < x < 0.7 else 0.0))
        oracle = ReflectionOracle(lambda x: max(0.0, 1 - abs(x - 0.4) / 0.3), dy0, lambda x: 0.0, kind="neumann", f=0.5, breakpoints=(0.1, 0.4, 0.7))
        traj = simulate_linear(y0, GridFunction.zeros(N), BoundaryLaw(NeumannFeedback(0.5)), 2.5, record_every=50)
        for k, t in enumerate(traj.times):
            ref = np.array([oracle.y(t, x) for x in traj.x])
            np.testing.assert_allclose(traj.y[k], ref, atol=1e-12)

    def test_oracle_smooth_dirichlet_control(self):
        y0 = gf(lambda x: np.sin(3 * x), 400)
        y1 = gf(lambda x: x**2, 400)
        c = lambda t: np.sin(3.0) + 0.5 * t
        u = ControlSignal.interpolate(c, 3.0, 1200)
        oracle = ReflectionOracle(
            lambda x: np.sin(3 * x), lambda x: 3 * np.cos(3 * x), lambda x: x**2, right=c, dright=lambda t: 0.5
        )
        traj = simulate_linear(y0, y1, BoundaryLaw(DirichletControl(u)), 2.7, record_every=1080)
        ref = np.array([oracle.y(2.7, x) for x in traj.x])
        np.testing.assert_allclose(traj.y[-1], ref, atol=1e-5)

    def test_neumann_control_matches_feedback_with_zero_gain(self):
        u = ControlSignal.interpolate(np.sin, 2.0, 2 * N)
        y0 = gf(lambda x: x)
        a = simulate_linear(y0, GridFunction.zeros(N), BoundaryLaw(NeumannControl(u)), 2.0)
        b = simulate_linear(y0, GridFunction.zeros(N), BoundaryLaw(NeumannFeedback(0.0, u)), 2.0)
        np.testing.assert_array_equal(a.y, b.y)


class TestInvariants:
    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=20, max_size=20), st.lists(st.floats(-3, 3), min_size=21, max_size=21))
    def test_extinction_at_f1(self, a, b):
        y0 = GridFunction(np.r_[0.0, a])
        y1 = GridFunction(b)
        traj = simulate_linear(y0, y1, BoundaryLaw(NeumannFeedback(1.0)), 2.0)
        assert np.max(np.abs(traj.y[-1])) <= 1e-12 * (1 + np.max(np.abs(a)) + np.max(np.abs(b)))
        assert np.max(np.abs(traj.y_t[-1])) <= 1e-11 * (1 + np.max(np.abs(a)) + np.max(np.abs(b)))

    @pytest.mark.parametrize("f", [0.1, 0.5, 1.0, 3.0])
    def test_dissipative(self, f):
        y0 = gf(lambda x: np.sin(2 * x) + x**2)
        traj = simulate_linear(y0, gf(np.cos), BoundaryLaw(NeumannFeedback(f)), 6.0)
        E = cell_energy(traj)
        assert np.all(np.diff(E) <= 1e-12 * E[0])

    def test_conservation(self):
        y0 = gf(lambda x: 4 * np.sin(np.pi * x / 2), 20)
        traj = simulate_linear(y0, GridFunction.zeros(20), FREE, 200.0, record_every=7)
        E = cell_energy(traj)
        assert np.max(np.abs(E - E[0])) <= 1e-10 * E[0]

    def test_reversibility(self):
        y0 = gf(lambda x: x * np.exp(x))
        y1 = gf(lambda x: np.sin(4 * x))
        for T in (2.0, 4.0):
            fwd = simulate_linear(y0, y1, FREE, T)
            y, yt, _ = fwd.state(T)
            back = simulate_linear(y, -1 * yt, FREE, T)
            np.testing.assert_allclose(back.y[-1], y0.values, atol=1e-10)
            # nodal velocities average neighbouring cells, so compare in the interior at O(h^2)
            np.testing.assert_allclose(back.y_t[-1, 1:-1], -y1.values[1:-1], atol=5e-3)

    def test_refinement_exact(self):
        coarse = hat(0.35, 0.25, 20)
        fine = GridFunction(np.interp(np.linspace(0, 1, 41), coarse.x, coarse.values))
        law = BoundaryLaw(NeumannFeedback(0.5))
        a = simulate_linear(coarse, GridFunction.zeros(20), law, 3.0)
        b = simulate_linear(fine, GridFunction.zeros(40), law, 3.0)
        np.testing.assert_allclose(b.y[::2, ::2], a.y, atol=1e-12)

    def test_decomposition_constant_irrelevant(self):
        y0, y1 = gf(lambda x: x**3), gf(np.sin)
        law = BoundaryLaw(NeumannFeedback(0.3))
        a = simulate_linear(y0, y1, law, 2.5)
        b = simulate_linear(y0, y1, law, 2.5, C=0.7)
        np.testing.assert_allclose(a.y, b.y, atol=1e-12)
        np.testing.assert_allclose(a.cell_y_t, b.cell_y_t, atol=1e-11)

    def test_dirichlet_exact_steering(self):
        y0, y1 = gf(lambda x: x), GridFunction.zeros(N)
        u = dirichlet_exact_control(y0, y1, 2.0)
        traj = simulate_linear(y0, y1, BoundaryLaw(DirichletControl(u)), 2.0)
        y, Y = terminal_state(traj)
        assert l2_norm(y) <= 1e-10 and l2_norm(Y) <= 1e-10

    def test_trace_matches_control(self):
        y0, y1 = gf(lambda x: x), GridFunction.zeros(N)
        u = dirichlet_exact_control(y0, y1, 4.0)
        traj = simulate_linear(y0, y1, BoundaryLaw(DirichletControl(u)), 4.0)
        np.testing.assert_allclose(traj.trace["y"], u.values, atol=1e-13)
