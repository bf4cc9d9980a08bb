import numpy as np
import pytest

import oracles
from pxeigen import (GriddedDomain, ScalarField, SolverOptions, StencilError, VariableExponent,
                     distance_function, gradient, infinity_x_laplacian, limit_equation_residual,
                     minimize_rayleigh, rayleigh_quotient, sweep_to_infinity)
from pxeigen.limit import infinity_x_laplacian_field, row_norm

SQUARE = ((0.0, 1.0), (0.0, 1.0))
DOM = GriddedDomain.interval(0.0, 1.0, 256)
P2 = VariableExponent.constant(2.0)
P2X = VariableExponent.affine([2.0, 1.0])


@pytest.fixture(scope="module")
def sweep_2x():
    return sweep_to_infinity(DOM, P2X, [1, 2, 4, 8, 16, 32, 64, 128, 256])


def test_sweep_rows(sweep_2x):
    js = [r.j for r in sweep_2x.rows]
    assert js == sorted(js)
    assert sweep_2x.all_converged()
    for r in sweep_2x.rows:
        assert row_norm(r, P2X) == pytest.approx(1.0, abs=1e-8)
        pj = P2X.scaled(r.j)
        assert r.lambda_ <= rayleigh_quotient(distance_function(DOM), pj)
        assert oracles.within_S_bounds(r.S, pj)


def test_sweep_approaches_inradius_value(sweep_2x):
    lam = sweep_2x.lambdas()
    assert sweep_2x.lambda_infinity_geometric == 2.0
    assert np.all(np.diff(lam) < 0)
    gaps = sweep_2x.gaps()
    # j_max against j_max / 4
    assert gaps[-1] < gaps[-3]
    assert abs(sweep_2x.rows[6].lambda_ - 2.0) / 2.0 < 0.05


def test_limit_field_sup_tends_to_one(sweep_2x):
    sups = np.array([r.u.values.max() for r in sweep_2x.rows])
    assert np.all(np.diff(sups) < 0)
    for r, s in zip(sweep_2x.rows, sups):
        if r.j >= 128:
            assert abs(s - 1.0) < 0.05


def test_limit_field_matches_delta(sweep_2x):
    err = np.max(np.abs(sweep_2x.normalized_limit().values - distance_function(DOM).values))
    assert err < 0.05


def test_sweep_p2_first_and_last_rows():
    res = sweep_to_infinity(DOM, P2, [1, 4, 16, 64])
    assert res.rows[0].lambda_ == pytest.approx(np.pi, rel=0.01)
    assert res.rows[-1].lambda_ == pytest.approx(2.0, rel=0.05)


def test_single_row_sweep_equals_plain_solve():
    res = sweep_to_infinity(DOM, P2X, [1])
    sol = minimize_rayleigh(DOM, P2X)
    assert len(res.rows) == 1
    assert res.rows[0].lambda_ == sol.lambda_
    assert np.array_equal(res.limit_field.values, sol.u.values)


def test_cold_start_rows_are_independent():
    cold = sweep_to_infinity(DOM, P2X, [2, 8], warm_start=False)
    alone = minimize_rayleigh(DOM, P2X.scaled(8))
    assert cold.rows[1].lambda_ == alone.lambda_


def test_non_converged_rows_are_flagged():
    res = sweep_to_infinity(DOM, P2X, [1, 2], SolverOptions(max_iterations=1))
    assert len(res.rows) == 2
    assert not any(r.converged for r in res.rows)


@pytest.mark.parametrize("js", [[], [4, 2], [2, 2]])
def test_sweep_rejects_bad_lists(js):
    with pytest.raises(ValueError):
        sweep_to_infinity(DOM, P2X, js)


def test_infinity_laplacian_constant_p_is_plain():
    dom = GriddedDomain.rectangle(SQUARE, 32)
    x, y = dom.points[..., 0], dom.points[..., 1]
    v = ScalarField(dom, x**2 + x * y)
    got = infinity_x_laplacian_field(v, VariableExponent.constant(3.0, SQUARE))
    # exact for quadratics: <D^2 v grad v, grad v>
    gx, gy = 2 * x + y, x
    expect = gx * gx * 2 + 2 * gx * gy * 1
    inner = dom.interior
    assert np.allclose(got[inner], expect[inner], atol=1e-9)


def test_infinity_laplacian_unit_slope_vanishes():
    dom = GriddedDomain.rectangle(SQUARE, 16)
    v = ScalarField(dom, dom.points[..., 0])
    p = VariableExponent.affine([3.0, 0.5, 0.25], SQUARE)
    assert infinity_x_laplacian(v, p, (5, 7)) == pytest.approx(0.0, abs=1e-12)


def test_infinity_laplacian_log_term():
    dom = GriddedDomain.rectangle(SQUARE, 16)
    v = ScalarField(dom, 2 * dom.points[..., 0])
    p = VariableExponent.affine([3.0, 0.5, 0.0], SQUARE)
    node = (5, 5)
    c = 0.5 / p(dom.points[node])
    assert infinity_x_laplacian(v, p, node) == pytest.approx(8 * c * np.log(2), rel=1e-12)


def test_infinity_laplacian_zero_gradient_has_no_log_term():
    dom = GriddedDomain.interval(0, 1, 20)
    v = ScalarField(dom, np.full(dom.shape, 3.0))
    assert infinity_x_laplacian(v, P2X, 10) == 0.0


@pytest.mark.parametrize("node", [0, 20])
def test_infinity_laplacian_stencil_error(node):
    dom = GriddedDomain.interval(0, 1, 20)
    with pytest.raises(StencilError):
        infinity_x_laplacian(dom.zeros(), P2X, node)


def test_infinity_laplacian_masked_stencil_error():
    xs = np.linspace(-1, 1, 21)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    from pxeigen import GriddedDomain as G
    dom = G.from_mask(X**2 + Y**2 <= 1, ((-1, 1), (-1, 1)))
    bnode = tuple(int(i) for i in np.argwhere(dom.boundary)[0])
    with pytest.raises(StencilError):
        infinity_x_laplacian(dom.zeros(), VariableExponent.constant(2.0, ((-1, 1), (-1, 1))), bnode)


def test_limit_residual_delta_interval():
    r = limit_equation_residual(distance_function(DOM), P2, 2.0)
    assert r.counted.sum() > 0.9 * DOM.n_interior
    assert r.max_abs < 10 * DOM.h


def test_limit_residual_delta_square(unit_square, p2_square):
    r = limit_equation_residual(distance_function(unit_square), p2_square, 2.0)
    assert r.counted.sum() > 0.5 * unit_square.n_interior
    assert r.max_abs < 10 * unit_square.h


def test_limit_residual_constant_field():
    u = ScalarField(DOM, np.ones(DOM.shape))
    r = limit_equation_residual(u, P2, 2.0)
    assert np.all(r.values.values[r.evaluated] == 2.0)
    assert r.max_abs == 2.0


def test_limit_residual_zero_nodes_use_multiplied_form():
    u = distance_function(DOM)
    u.values[100] = 0.0
    r = limit_equation_residual(u, P2, 2.0)
    s = np.abs(gradient(u)[100, 0])
    assert r.values.values[100] >= -s


def test_limit_residual_rejects_negative():
    u = distance_function(DOM)
    u.values[10] = -1e-3
    with pytest.raises(ValueError):
        limit_equation_residual(u, P2, 2.0)
