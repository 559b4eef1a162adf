import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lbdinv.exceptions import ParameterError, ShapeError
from lbdinv.proxops import (
    ValidityDomain, prox_f1_star, prox_f2_star, prox_g, project_box, project_mean, project_validity,
)
from oracles import grid_prox

fields = arrays(np.float64, (4, 4), elements=st.floats(-3, 3))


class TestProxF1Star:
    def test_examples(self):
        assert prox_f1_star(np.array([0.5]), 1.0, 0.1, np.array([1.0]))[0] == pytest.approx(-0.1)
        assert prox_f1_star(np.array([1.05]), 1.0, 0.1, np.array([1.0]))[0] == pytest.approx(0.05)

    def test_grid_oracle(self, rng):
        for _ in range(200):
            r, pbar = rng.uniform(-2, 2, 2)
            sigma, lam = rng.uniform(0.1, 2), rng.uniform(0.05, 1)
            z = grid_prox(lambda z: sigma * z * pbar + 0.5 * (z - r) ** 2, -lam, lam)
            assert abs(prox_f1_star(np.array([r]), sigma, lam, np.array([pbar]))[0] - z) <= 2e-5

    def test_errors(self):
        with pytest.raises(ParameterError):
            prox_f1_star(np.zeros(2), 0.0, 0.1, np.zeros(2))
        with pytest.raises(ShapeError):
            prox_f1_star(np.zeros(2), 1.0, 0.1, np.zeros(3))


class TestProxF2Star:
    def test_examples(self):
        assert prox_f2_star(np.array([2.0, -0.5, -3])).tolist() == [1, -0.5, -1]
        s = np.array([0.2, -1.0, 0.99])
        assert np.array_equal(prox_f2_star(s), s)

    def test_grid_oracle(self, rng):
        for s in rng.uniform(-3, 3, 200):
            z = grid_prox(lambda z: 0.5 * (z - s) ** 2, -1.0, 1.0)
            assert abs(prox_f2_star(np.array([s]))[0] - z) <= 2e-5


class TestProjections:
    def test_box(self):
        assert project_box(np.array([-0.2, 0.5, 1.3])).tolist() == [0, 0.5, 1]

    def test_mean(self):
        np.testing.assert_allclose(project_mean(np.zeros(4)), 0.5)
        x = np.array([0.1, 0.9, 0.4, 0.6])
        np.testing.assert_allclose(project_mean(x), x)

    def test_mean_against_kkt(self, rng):
        # minimize ||y - x||^2 s.t. sum(y) = 6 * 0.5: solve the KKT system directly
        for _ in range(50):
            x = rng.uniform(-2, 2, 6)
            kkt = np.zeros((7, 7))
            kkt[:6, :6] = 2 * np.eye(6)
            kkt[:6, 6] = kkt[6, :6] = 1.0
            sol = np.linalg.solve(kkt, np.concatenate([2 * x, [3.0]]))
            np.testing.assert_allclose(project_mean(x), sol[:6], atol=1e-12)

    def test_validity_examples(self):
        np.testing.assert_allclose(project_validity(np.full((2, 2), 0.8)), 0.5)
        assert project_validity(np.array([-1.0, 2.0])).tolist() == [0.0, 1.0]
        x = np.array([[0.2, 0.8], [0.4, 0.6]])
        np.testing.assert_allclose(project_validity(x), x)

    def test_domain_validated(self):
        with pytest.raises(ParameterError):
            ValidityDomain(h_pix=1.0, target_mean=1.0)

    @given(fields)
    def test_idempotent(self, x):
        for proj in (project_box, project_mean, prox_f2_star):
            once = proj(x)
            np.testing.assert_allclose(proj(once), once, atol=1e-12)
        v = project_validity(x)
        assert v.min() >= 0 and v.max() <= 1

    @given(fields)
    def test_mean_shift_is_constant(self, x):
        d = project_mean(x) - x
        assert np.ptp(d) < 1e-12

    def test_nonexpansive(self, rng):
        for _ in range(1000):
            a, b = rng.uniform(-3, 3, (2, 16))
            p = rng.uniform(-1, 1, 16)
            for f in (lambda v: prox_f1_star(v, 0.7, 0.3, p), prox_f2_star, project_box,
                      project_mean, project_validity):
                assert np.linalg.norm(f(a) - f(b)) <= np.linalg.norm(a - b) + 1e-12
            assert np.abs(prox_f1_star(a, 0.7, 0.3, p)).max() <= 0.3
            assert np.abs(prox_f2_star(a)).max() <= 1.0


class TestProxG:
    def test_fixed_point(self):
        w = np.array([[0.2, 0.8], [0.4, 0.6]])
        y, z = prox_g(w, w)
        np.testing.assert_allclose(y, w)
        y, z = prox_g(2 * w, np.zeros_like(w))
        np.testing.assert_allclose(y, w)
        np.testing.assert_array_equal(y, z)

    @given(fields, fields)
    def test_components_identical(self, a, b):
        y, z = prox_g(a, b)
        assert np.array_equal(y, z)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            prox_g(np.zeros(3), np.zeros(4))
