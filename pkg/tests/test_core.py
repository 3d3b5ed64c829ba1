import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import energy_loops, tv_loops
from tvdehaze.core import (
    BoxBound,
    DualField,
    as_plane,
    divergence,
    energy_total,
    grad,
    project_ball,
    project_box,
    tv,
)
from tvdehaze.exceptions import ShapeError


def plane_strategy(max_side=6, lo=-5.0, hi=5.0):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shapes.flatmap(
        lambda s: arrays(np.float64, s, elements=st.floats(lo, hi, allow_nan=False))
    )


def random_dual(rng, m, n, scale=1.0):
    return DualField(rng.normal(0, scale, (m - 1, n)), rng.normal(0, scale, (m, n - 1)))


def in_ball(d, tol=1e-12):
    pi, qi = d.p[:, :-1], d.q[:-1, :]
    return (
        np.all(pi**2 + qi**2 <= 1 + tol)
        and np.all(np.abs(d.p[:, -1:]) <= 1 + tol)
        and np.all(np.abs(d.q[-1:, :]) <= 1 + tol)
    )


class TestGrad:
    def test_two_by_two(self):
        p, q = grad([[1, 2], [3, 4]])
        np.testing.assert_array_equal(p, [[-2, -2]])
        np.testing.assert_array_equal(q, [[-1], [-1]])

    def test_constant_plane(self):
        p, q = grad(np.full((4, 3), 7.5))
        assert p.shape == (3, 3) and q.shape == (4, 2)
        assert not p.any() and not q.any()

    def test_single_pixel(self):
        p, q = grad([[5.0]])
        assert p.size == 0 and q.size == 0

    @pytest.mark.parametrize("shape", [(1, 4), (4, 1)])
    def test_degenerate_rows_and_columns(self, shape):
        r = np.arange(4.0).reshape(shape)
        p, q = grad(r)
        assert p.shape == (shape[0] - 1, shape[1])
        assert q.shape == (shape[0], shape[1] - 1)


class TestDivergence:
    def test_zero_field(self):
        assert not divergence(DualField.zeros((3, 4))).any()

    def test_stencil(self):
        d = DualField(np.array([[1.0, 0.0]]), np.array([[0.0], [0.0]]))
        np.testing.assert_array_equal(divergence(d), [[1, 0], [-1, 0]])

    def test_empty_components_give_zero_plane(self):
        out = divergence(DualField(np.zeros((0, 1)), np.zeros((1, 0))))
        np.testing.assert_array_equal(out, [[0.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            divergence(DualField(np.zeros((2, 3)), np.zeros((3, 3))))

    def test_adjoint_random_4x5(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(4, 5))
        d = random_dual(rng, 4, 5)
        assert abs(np.sum(divergence(d) * x) - d.dot(grad(x))) <= 1e-10

    @pytest.mark.parametrize("m,n", list(itertools.product(range(1, 7), repeat=2)))
    def test_adjoint_all_small_shapes(self, m, n):
        rng = np.random.default_rng(100 * m + n)
        x = rng.normal(size=(m, n))
        d = random_dual(rng, m, n)
        rhs = d.dot(grad(x))
        assert abs(np.sum(divergence(d) * x) - rhs) <= 1e-10 * (1 + abs(rhs))


class TestProjectBox:
    @pytest.mark.parametrize("r,expected", [(-3.0, -2.0), (0.5, 0.0), (-1.0, -1.0)])
    def test_scalar_cases(self, r, expected):
        bound = BoxBound(np.array([[-2.0]]))
        assert project_box([[r]], bound)[0, 0] == expected

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            project_box(np.zeros((2, 2)), BoxBound(np.zeros((2, 3))))

    def test_positive_lower_rejected(self):
        with pytest.raises(ValueError):
            BoxBound(np.array([[0.1]]))

    @settings(max_examples=60, deadline=None)
    @given(plane_strategy(), st.integers(0, 2**32 - 1))
    def test_feasible_and_idempotent(self, r, seed):
        lower = -np.random.default_rng(seed).uniform(0, 3, r.shape)
        bound = BoxBound(lower)
        out = project_box(r, bound)
        assert np.all(out >= lower) and np.all(out <= 0)
        np.testing.assert_array_equal(project_box(out, bound), out)


class TestProjectBall:
    def test_origin_fixed(self):
        d = DualField.zeros((3, 3))
        out = project_ball(d)
        assert not out.p.any() and not out.q.any()

    def test_coupled_pair_scaled_to_circle(self):
        d = DualField(np.array([[3.0, 0.0]]), np.array([[4.0], [0.0]]))
        out = project_ball(d)
        assert out.p[0, 0] == pytest.approx(0.6) and out.q[0, 0] == pytest.approx(0.8)

    def test_boundary_entries_clipped(self):
        d = DualField(np.array([[0.0, -1.5], [0.0, 0.7]]), np.zeros((3, 1)))
        out = project_ball(d)
        assert out.p[0, 1] == -1.0 and out.p[1, 1] == 0.7

    def test_input_not_modified(self):
        d = DualField(np.array([[3.0, 2.0]]), np.array([[4.0], [5.0]]))
        project_ball(d)
        assert d.p[0, 0] == 3.0 and d.q[1, 0] == 5.0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_member_and_idempotent(self, m, n, seed):
        d = random_dual(np.random.default_rng(seed), m, n, scale=2.0)
        out = project_ball(d)
        assert in_ball(out)
        again = project_ball(out)
        np.testing.assert_allclose(again.p, out.p, atol=1e-12)
        np.testing.assert_allclose(again.q, out.q, atol=1e-12)

    def test_points_inside_unchanged(self):
        rng = np.random.default_rng(3)
        d = random_dual(rng, 4, 4, scale=0.2)
        assert in_ball(d)
        out = project_ball(d)
        np.testing.assert_array_equal(out.p, d.p)
        np.testing.assert_array_equal(out.q, d.q)

    @pytest.mark.parametrize("seed", range(5))
    def test_nearest_point_against_sampled_candidates(self, seed):
        # 2x2 plane: one coupled pair (p00, q00), boundary p01 and q10
        rng = np.random.default_rng(seed)
        d = random_dual(rng, 2, 2, scale=1.5)
        out = project_ball(d)
        dist = np.sqrt(np.sum((out.p - d.p) ** 2) + np.sum((out.q - d.q) ** 2))

        g = np.linspace(-1, 1, 41)
        a, b = np.meshgrid(g, g, indexing="ij")
        disk = (a**2 + b**2) <= 1
        pa, qb = a[disk], b[disk]
        c00 = (pa - d.p[0, 0]) ** 2 + (qb - d.q[0, 0]) ** 2
        c01 = (g - d.p[0, 1]) ** 2
        c10 = (g - d.q[1, 0]) ** 2
        best = np.sqrt(c00[:, None, None] + c01[None, :, None] + c10[None, None, :]).min()
        assert dist <= best + 1e-12


class TestTV:
    def test_constant(self):
        assert tv(np.full((5, 4), -2.0)) == 0.0

    def test_two_by_two(self):
        assert tv([[0, 0], [1, 1]]) == pytest.approx(2.0)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(5)
        for shape in [(1, 1), (1, 7), (7, 1), (5, 6), (9, 4)]:
            r = rng.normal(size=shape)
            assert tv(r) == pytest.approx(tv_loops(r), rel=1e-12, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(plane_strategy(), st.floats(-10, 10))
    def test_shift_invariant(self, r, c):
        assert tv(r + c) == pytest.approx(tv(r), rel=1e-9, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_convex(self, m, n, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=(2, m, n))
        assert tv(0.5 * (a + b)) <= 0.5 * tv(a) + 0.5 * tv(b) + 1e-10

    def test_positive_for_nonconstant_plane(self):
        rng = np.random.default_rng(9)
        r = rng.normal(size=(4, 4))
        assert tv(r) > 0


class TestEnergy:
    def test_all_zero(self):
        z = np.zeros((3, 3))
        assert energy_total(z, z, z, 100, 0.1) == 0.0

    def test_eta_equals_data(self):
        i = np.array([[-1.0, -0.2], [-0.5, -3.0]])
        assert energy_total(i, np.zeros_like(i), i, 100, 0.1) == pytest.approx(100 * tv(i))

    @pytest.mark.parametrize("lam", [0.0, 0.25])
    def test_matches_loop_oracle(self, lam):
        rng = np.random.default_rng(21)
        i = -rng.uniform(0, 3, (5, 7))
        eta = np.maximum(i, -rng.uniform(0, 3, i.shape))
        gamma = np.maximum(i, -rng.uniform(0, 3, i.shape))
        got = energy_total(eta, gamma, i, 3.0, 0.7, lam)
        assert got == pytest.approx(energy_loops(eta, gamma, i, 3.0, 0.7, lam), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            energy_total(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)), 1, 1)


def test_as_plane_rejects_bad_input():
    with pytest.raises(ShapeError):
        as_plane(np.zeros(4))
    with pytest.raises(ValueError):
        as_plane([[np.nan]])
