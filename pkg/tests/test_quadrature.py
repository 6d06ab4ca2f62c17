import numpy as np
import pytest

from beamflat.quadrature import integrate_intervals, simpson_uniform


def test_polynomial_exact_per_interval():
    edges = np.array([0.0, 0.3, 1.0, 2.5])
    pieces = integrate_intervals(lambda x: x**5 - 2 * x, edges)
    exact = np.diff(edges**6 / 6 - edges**2)
    np.testing.assert_allclose(pieces, exact, rtol=1e-14)


def test_oscillatory_needs_refinement():
    pieces = integrate_intervals(lambda x: np.cos(200 * x), np.array([0.0, 1.0]), order=8)
    assert pieces[0] == pytest.approx(np.sin(200.0) / 200.0, rel=1e-11)


def test_vector_valued_integrand():
    edges = np.linspace(0, np.pi, 5)
    pieces = integrate_intervals(lambda x: np.stack([np.sin(x), x * np.sin(x)]), edges)
    assert pieces.shape == (2, 4)
    np.testing.assert_allclose(pieces.sum(axis=1), [2.0, np.pi], rtol=1e-13)


def test_non_convergence_raises():
    with pytest.raises(RuntimeError):
        integrate_intervals(lambda x: np.sign(np.sin(1e4 * x)), np.array([0.0, 1.0]), max_depth=2)


def test_simpson_cubic_exact():
    x = np.linspace(0, 1, 11)
    assert simpson_uniform(x**3, x) == pytest.approx(0.25, rel=1e-14)
