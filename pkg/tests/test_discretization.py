import math

import numpy as np
import pytest

from oracles import ellipse_mask_loop, scheme_matrix_literal
from rsfde import (
    DomainMask,
    FractionalParams,
    GridSpec,
    ParameterError,
    PenalizedOperator,
    SizeCapError,
    SizeError,
    apply_M,
    build_mask,
    dense_M,
    example1_problem,
)
from rsfde.discretization import riesz_constant, unvec, vec


def _ellipse_operator(n, alpha1=1.4, alpha2=1.7, kx=1.0, ky=1.0, eta=1e-3, m=None):
    prob = example1_problem()
    grid = prob.grid(n, n, m or n, 1.0)
    fp = FractionalParams(alpha1, alpha2, kx, ky).for_grid(grid)
    mask = build_mask(grid, prob.region, eta)
    return grid, fp, PenalizedOperator.build(grid, fp, mask)


class TestGrid:
    def test_spacing_and_nodes(self):
        g = GridSpec(0.0, 4.0, 0.0, 2.0, n1=3, n2=1, m=4, T=1.0)
        assert g.hx == 1.0 and g.hy == 1.0 and g.dt == 0.25
        np.testing.assert_allclose(g.x(), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(g.y(), [1.0])
        X, Y = g.mesh()
        assert X.shape == (3, 1) and X[2, 0] == 3.0 and Y[0, 0] == 1.0

    @pytest.mark.parametrize(
        "kwargs",
        [dict(a=1.0, b=0.0), dict(n1=0), dict(m=0), dict(T=0.0)],
    )
    def test_invalid(self, kwargs):
        base = dict(a=0.0, b=1.0, c=0.0, d=1.0, n1=2, n2=2, m=2, T=1.0)
        base.update(kwargs)
        with pytest.raises(ParameterError):
            GridSpec(**base)

    def test_riesz_constant(self):
        assert riesz_constant(1.5) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-14)
        with pytest.raises(ParameterError):
            riesz_constant(2.0)

    def test_step_constants(self):
        g = GridSpec(0.0, 4.0, 0.0, 2.0, n1=3, n2=3, m=10, T=1.0)
        fp = FractionalParams(1.5, 1.5, 2.0, 1.0).for_grid(g)
        assert fp.cx == pytest.approx(0.1 * 2.0 * riesz_constant(1.5) / 1.0**1.5)
        assert fp.cy == pytest.approx(0.1 * riesz_constant(1.5) / 0.5**1.5)


class TestMask:
    def test_ellipse_matches_pointwise_loop(self):
        prob = example1_problem()
        grid = prob.grid(8, 8, 8, 1.0)
        mask = build_mask(grid, prob.region, 1e-3)
        np.testing.assert_array_equal(mask.inside, ellipse_mask_loop(8, 8, 2.0, 1.0))

    def test_all_inside_means_no_penalty(self):
        g = GridSpec(0, 1, 0, 1, 4, 3, 5, 1.0)
        mask = build_mask(g, lambda X, Y: np.ones_like(X, dtype=bool), 1e-4)
        np.testing.assert_array_equal(mask.diagonal(), 0.0)

    def test_empty_mask_penalizes_everything(self):
        g = GridSpec(0, 1, 0, 1, 4, 3, 5, 1.0)
        mask = build_mask(g, lambda X, Y: np.zeros_like(X, dtype=bool), 1e-4)
        np.testing.assert_allclose(mask.diagonal(), 0.2 / 1e-4)

    @pytest.mark.parametrize("eta", [0.0, -1e-5])
    def test_nonpositive_eta(self, eta):
        g = GridSpec(0, 1, 0, 1, 2, 2, 2, 1.0)
        with pytest.raises(ParameterError):
            build_mask(g, lambda X, Y: X > 0, eta)
        with pytest.raises(ParameterError):
            DomainMask(np.ones((2, 2), bool), eta, 0.5)

    def test_vec_is_x_fastest(self):
        U = np.arange(6).reshape(2, 3)
        np.testing.assert_array_equal(vec(U), [0, 3, 1, 4, 2, 5])
        np.testing.assert_array_equal(unvec(vec(U), (2, 3)), U)


class TestOperator:
    @pytest.mark.parametrize("alphas", [(1.4, 1.7), (1.1, 1.9), (1.5, 1.5)])
    def test_matches_literal_scheme(self, rng, alphas):
        grid, fp, op = _ellipse_operator(8, *alphas)
        d = op.mask.penalty * op.mask.phi
        M = scheme_matrix_literal(alphas[0], alphas[1], fp.cx, fp.cy, d)
        for _ in range(3):
            v = rng.standard_normal(op.N)
            ref = M @ v
            assert np.linalg.norm(apply_M(op, v) - ref) <= 1e-12 * np.linalg.norm(ref)
        np.testing.assert_allclose(dense_M(op), M, rtol=1e-12, atol=1e-12 * np.abs(M).max())

    def test_rectangular_grid_matches_literal(self, rng):
        g = GridSpec(0, 3, 0, 1, 5, 3, 4, 1.0)
        fp = FractionalParams(1.3, 1.8, 0.5, 2.0).for_grid(g)
        mask = build_mask(g, lambda X, Y: X + Y < 2.5, 1e-2)
        op = PenalizedOperator.build(g, fp, mask)
        M = scheme_matrix_literal(1.3, 1.8, fp.cx, fp.cy, mask.penalty * mask.phi)
        v = rng.standard_normal(op.N)
        np.testing.assert_allclose(op(v), M @ v, rtol=1e-12, atol=1e-12)

    def test_symmetric(self, rng):
        _, _, op = _ellipse_operator(8)
        u, w = rng.standard_normal((2, op.N))
        assert abs(u @ op(w) - w @ op(u)) <= 1e-12 * np.linalg.norm(u) * np.linalg.norm(op(w))

    def test_without_fractional_part(self, rng):
        g = GridSpec(0, 1, 0, 1, 4, 4, 10, 1.0)
        mask = DomainMask(np.zeros((4, 4), bool), 1e-3, g.dt)
        from rsfde import SymmetricToeplitz

        zero = SymmetricToeplitz(np.zeros(4))
        op = PenalizedOperator(zero, zero, mask)
        v = rng.standard_normal(16)
        np.testing.assert_allclose(op(v), (1 + g.dt / 1e-3) * v, rtol=1e-15)

    def test_single_unknown(self):
        g = GridSpec(0, 1, 0, 1, 1, 1, 1, 1.0)
        fp = FractionalParams(1.5, 1.5, 1.0, 1.0).for_grid(g)
        mask = build_mask(g, lambda X, Y: X > 0, 1.0)
        M = dense_M(PenalizedOperator.build(g, fp, mask))
        assert M.shape == (1, 1)
        assert M[0, 0] == pytest.approx(1.0 + 3.0 * (fp.cx + fp.cy))

    def test_dense_by_basis_probing(self):
        _, _, op = _ellipse_operator(4)
        probed = np.column_stack([op(e) for e in np.eye(op.N)])
        np.testing.assert_allclose(dense_M(op), probed, atol=1e-12)

    def test_dense_cap(self):
        _, _, op = _ellipse_operator(8)
        with pytest.raises(SizeCapError):
            dense_M(op, cap=63)
        with pytest.raises(SizeError):
            op(np.ones(5))

    @pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
    def test_rows_strictly_diagonally_dominant(self, alpha):
        _, _, op = _ellipse_operator(16, alpha, alpha)
        for T in (op.Ax, op.Ay):
            G = T.to_dense()
            off = np.abs(G).sum(axis=1) - np.abs(np.diag(G))
            assert np.all(np.abs(np.diag(G)) - off > 1e-12 * np.abs(np.diag(G)))
            assert np.all(np.diag(G) < 0)

    def test_spectral_bounds(self):
        _, _, op = _ellipse_operator(8)
        A = op.dense_A()
        assert np.linalg.eigvalsh(A).max() < 0
        M = dense_M(op)
        np.testing.assert_allclose(M, M.T, atol=1e-13)
        assert np.linalg.eigvalsh(M).min() > 1.0
