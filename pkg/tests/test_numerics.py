import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqbloch.errors import DegenerateFitError, StiffnessError
from sqbloch.numerics import (
    eigh,
    fit_least_squares,
    hermitian_defect,
    integrate_ode,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


class TestEigh:
    def test_scalar(self):
        dec = eigh(np.array([[3.5]]))
        assert dec.eigenvalues == pytest.approx([3.5])
        assert dec.eigenvectors[0, 0] == pytest.approx(1.0)

    def test_pauli_x(self):
        dec = eigh(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert dec.eigenvalues == pytest.approx([-1.0, 1.0])
        s = 1.0 / np.sqrt(2.0)
        assert dec.eigenvectors[:, 0] == pytest.approx([s, -s])
        assert dec.eigenvectors[:, 1] == pytest.approx([s, s])

    def test_reconstruction_4x4(self):
        rng = np.random.default_rng(7)
        h = random_hermitian(rng, 4)
        dec = eigh(h)
        rebuilt = dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.conj().T
        assert np.abs(rebuilt - h).max() <= 1e-9 * np.linalg.norm(h)

    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=12))
    @settings(max_examples=40, deadline=None)
    def test_reconstruction_and_unitarity(self, seed, n):
        rng = np.random.default_rng(seed)
        h = random_hermitian(rng, n)
        dec = eigh(h)
        v = dec.eigenvectors
        norm = np.linalg.norm(h)
        assert np.abs(v.conj().T @ v - np.eye(n)).max() <= 1e-9
        for k in range(n):
            resid = h @ v[:, k] - dec.eigenvalues[k] * v[:, k]
            assert np.linalg.norm(resid) <= 1e-9 * max(norm, 1.0)
        assert np.all(np.diff(dec.eigenvalues) >= -1e-12 * max(norm, 1.0))
        assert abs(dec.eigenvalues.sum() - np.trace(h).real) <= 1e-9 * max(norm, 1.0)

    def test_degenerate_ordering_deterministic(self):
        h = np.diag([2.0, 2.0, 1.0]).astype(complex)
        dec = eigh(h)
        assert dec.eigenvalues == pytest.approx([1.0, 2.0, 2.0])
        # Degenerate pair ordered by row index of the dominant component.
        assert abs(dec.eigenvectors[0, 1]) == pytest.approx(1.0)
        assert abs(dec.eigenvectors[1, 2]) == pytest.approx(1.0)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            eigh(np.zeros((2, 3)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_hermitian_defect(self):
        assert hermitian_defect(np.zeros((2, 2))) == 0.0
        assert hermitian_defect(np.array([[0.0, 1.0], [0.0, 0.0]])) == 1.0


class TestIntegrateOde:
    def test_scalar_exponential(self):
        sol = integrate_ode(lambda t, y: -y, [1.0], (0.0, 1.0), tol=1e-10, t_eval=[1.0])
        assert sol.y[-1][0] == pytest.approx(np.exp(-1.0), abs=1e-9)

    def test_null_dynamics(self):
        sol = integrate_ode(
            lambda t, y: np.zeros_like(y), [2.0, -1.0], (0.0, 3.0), tol=1e-9,
            t_eval=np.linspace(0, 3, 7),
        )
        assert np.all(sol.y == np.array([2.0, -1.0]))

    def test_linear_system_matches_matrix_exponential(self):
        # 2x2 block with distinct decay rates plus rotation; closed form from
        # the eigendecomposition of the generator.
        a = np.array([[-0.3, 1.7], [-1.7, -1.1]])
        tol = 1e-9
        t_eval = np.linspace(0.0, 4.0, 33)
        sol = integrate_ode(lambda t, y: a @ y, [1.0, 0.5], (0.0, 4.0), tol=tol, t_eval=t_eval)
        evals, vecs = np.linalg.eig(a)
        c = np.linalg.solve(vecs, np.array([1.0, 0.5], dtype=complex))
        for tk, yk in zip(sol.t, sol.y):
            exact = (vecs @ (c * np.exp(evals * tk))).real
            assert np.abs(yk - exact).max() <= 10 * tol

    def test_complex_state(self):
        w = 2.0 * np.pi * 3.0
        sol = integrate_ode(
            lambda t, y: 1j * w * y, [1.0 + 0.0j], (0.0, 1.0), tol=1e-10, t_eval=[0.5, 1.0]
        )
        assert sol.y[0][0] == pytest.approx(np.exp(1j * w * 0.5), abs=1e-8)
        assert sol.y[1][0] == pytest.approx(np.exp(1j * w), abs=1e-8)

    def test_dense_output_accuracy(self):
        tol = 1e-9
        t_eval = np.linspace(0.0, 2.0, 101)
        sol = integrate_ode(lambda t, y: -y, [1.0], (0.0, 2.0), tol=tol, t_eval=t_eval)
        assert np.abs(sol.y[:, 0] - np.exp(-t_eval)).max() <= 10 * tol

    def test_accepted_steps_without_t_eval(self):
        sol = integrate_ode(lambda t, y: -y, [1.0], (0.0, 2.0), tol=1e-9)
        assert sol.t[0] == 0.0 and sol.t[-1] == pytest.approx(2.0)
        assert np.all(np.diff(sol.t) > 0.0)
        assert np.abs(sol.y[:, 0] - np.exp(-sol.t)).max() <= 1e-7

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            integrate_ode(lambda t, y: -y, [1.0], (0.0, 1.0), tol=0.0)
        with pytest.raises(ValueError):
            integrate_ode(lambda t, y: -y, [1.0], (1.0, 1.0))

    def test_stiffness_error(self):
        # Derivative blows up at t -> 1; the step size collapses.
        def f(t, y):
            return y / (1.0 - t)

        with pytest.raises((StiffnessError, OverflowError, FloatingPointError)):
            with np.errstate(over="raise", invalid="raise"):
                integrate_ode(f, [1.0], (0.0, 1.0), tol=1e-9)


def _exp_model(t, p):
    return p[0] * np.exp(-t / p[1])


def _exp_offset_model(t, p):
    return p[0] * np.exp(-t / p[1]) + p[2]


def _damped_sine_model(t, p):
    return p[0] * np.exp(-t / p[1]) * np.sin(p[2] * t + p[3]) + p[4]


class TestFitLeastSquares:
    def test_exact_exponential_recovery(self):
        t = np.linspace(0.0, 5.0, 50)
        y = _exp_model(t, [2.0, 1.5])
        res = fit_least_squares(_exp_model, t, y, [1.0, 1.0])
        assert res.converged
        assert res.params == pytest.approx([2.0, 1.5], rel=1e-6)
        assert res.residual_norm <= 1e-8

    def test_constant_data_degenerate_amplitude(self):
        t = np.linspace(0.0, 5.0, 40)
        y = np.full_like(t, 0.5)
        res = fit_least_squares(_exp_offset_model, t, y, [0.3, 1.0, 0.0])
        assert abs(res.params[0]) <= 1e-6
        assert res.params[2] == pytest.approx(0.5, abs=1e-6)

    def test_damped_sinusoid_recovery(self):
        true = np.array([0.8, 1.3, 2.0 * np.pi * 5.0, 0.7, 0.1])
        t = np.linspace(0.0, 3.0, 200)
        y = _damped_sine_model(t, true)
        res = fit_least_squares(_damped_sine_model, t, y, true * 1.05)
        assert res.converged
        assert res.params == pytest.approx(true, rel=1e-6)

    @given(
        st.floats(min_value=0.3, max_value=3.0),
        st.floats(min_value=0.4, max_value=4.0),
        st.floats(min_value=-0.5, max_value=0.5),
    )
    @settings(max_examples=25, deadline=None)
    def test_roundtrip_exponential_with_offset(self, a, tau, c):
        t = np.linspace(0.0, 3.0 * tau, 60)
        y = _exp_offset_model(t, [a, tau, c])
        res = fit_least_squares(
            _exp_offset_model, t, y, [a * 1.2, tau * 0.8, c + 0.05]
        )
        assert res.converged
        assert res.params[0] == pytest.approx(a, rel=1e-6, abs=1e-7)
        assert res.params[1] == pytest.approx(tau, rel=1e-6)
        assert res.params[2] == pytest.approx(c, rel=1e-6, abs=1e-7)

    def test_deterministic(self):
        t = np.linspace(0.0, 5.0, 50)
        y = _exp_model(t, [2.0, 1.5]) + 0.01 * np.sin(17.0 * t)
        r1 = fit_least_squares(_exp_model, t, y, [1.0, 1.0])
        r2 = fit_least_squares(_exp_model, t, y, [1.0, 1.0])
        assert np.array_equal(r1.params, r2.params)
        assert r1.iterations == r2.iterations

    def test_underdetermined_rejected(self):
        with pytest.raises(ValueError):
            fit_least_squares(_exp_model, [0.0], [1.0], [1.0, 1.0])

    def test_non_finite_guess_rejected(self):
        with pytest.raises(ValueError):
            fit_least_squares(_exp_model, [0.0, 1.0], [1.0, 0.5], [np.nan, 1.0])

    def test_degenerate_model_raises(self):
        # Model ignores its parameters entirely and cannot match the data:
        # zero Jacobian with a non-vanishing gradient... the gradient is zero
        # too, so instead use a model whose residuals are non-finite away
        # from the start to exercise the damping-recovery failure path.
        def bad(t, p):
            return np.where(t > 0, np.nan, 1.0) * p[0]

        with pytest.raises(DegenerateFitError):
            fit_least_squares(bad, np.linspace(0, 1, 10), np.ones(10), [1.0])

    def test_covariance_shape(self):
        t = np.linspace(0.0, 5.0, 50)
        y = _exp_model(t, [2.0, 1.5])
        res = fit_least_squares(_exp_model, t, y, [1.0, 1.0])
        assert res.covariance is not None
        assert res.covariance.shape == (2, 2)
