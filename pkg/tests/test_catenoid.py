import math

import numpy as np
import pytest
import sympy as sp

from threecircles.catenoid import (
    SOLUTIONS,
    closed_form_field,
    closed_form_poincare,
    eigenfunction_residual,
    growing_coefficient,
    spectrum_scan,
    write_scan_csv,
)
from threecircles.poincare import compute_map
from threecircles.potentials import build_preset

t = sp.symbols("t", real=True)
SYMBOLIC = {
    "tanh": (sp.tanh(t), 0),
    "sech": (sp.sech(t), 1),
    "k0_growing": (1 - t * sp.tanh(t), 0),
    "k1_growing": ((sp.sinh(2 * t) + 2 * t) * sp.sech(t), 1),
}


@pytest.mark.parametrize("name", list(SYMBOLIC))
def test_closed_forms_solve_the_mode_equation(name):
    w, k = SYMBOLIC[name]
    expr = sp.diff(w, t, 2) - (k**2 - 2 * sp.sech(t) ** 2) * w
    assert sp.simplify(expr.rewrite(sp.exp)) == 0


def test_symbolic_poincare_columns():
    u = 1 - t * sp.tanh(t)
    v = sp.tanh(t)
    assert (u.subs(t, 0), sp.diff(u, t).subs(t, 0)) == (1, 0)
    assert (v.subs(t, 0), sp.diff(v, t).subs(t, 0)) == (0, 1)
    P = closed_form_poincare(1.3).matrix
    vals = [u, v, sp.diff(u, t), sp.diff(v, t)]
    ref = [float(e.subs(t, 1.3)) for e in vals]
    np.testing.assert_allclose(P.ravel(), ref, atol=1e-14)


@pytest.mark.parametrize("label", list(SOLUTIONS))
def test_kernel_residual_and_derivatives(label):
    sol = SOLUTIONS[label]
    tt = np.linspace(-2, 3, 101)
    assert sol.kernel_residual(tt).max() < 1e-11
    w, dw, _ = sol.coefficient(tt)
    fd = np.gradient(w, tt, edge_order=2)
    np.testing.assert_allclose(dw[1:-1], fd[1:-1], atol=5e-3 * max(1, np.abs(dw).max()))


def test_field_evaluation_matches_coefficients():
    f = closed_form_field("N2", T=1.0, h=0.1)
    theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    u = SOLUTIONS["N2"].evaluate(theta, f.t)
    np.testing.assert_allclose(u, -np.outer(1 / np.cosh(f.t), np.cos(theta)), atol=1e-14)


def test_closed_form_map_matches_numerics():
    V = build_preset("catenoid", {"T": 3.0})
    for x in (0.5, 1.0, 2.0, 3.0):
        np.testing.assert_allclose(compute_map(0.0, V, 0.0, x).matrix, closed_form_poincare(x).matrix, atol=1e-8)


def test_growing_coefficient_exact():
    # the solution decaying at -infinity is e^{kt}(k - tanh t); its growing coefficient is (k-1)/(k+1)
    for lam, k in ((-0.5, 0), (-0.3, 1), (0.4, 1)):
        kap = math.sqrt(k * k - lam)
        assert growing_coefficient(lam, k) == pytest.approx((kap - 1) / (kap + 1), abs=1e-6)


def test_bound_state_at_minus_one():
    assert abs(growing_coefficient(-1.0, 0)) < 1e-6
    assert eigenfunction_residual() < 1e-8


def test_scan_and_csv(tmp_path):
    rep = spectrum_scan(np.linspace(-0.9, -0.1, 5), 0)
    assert rep.bound_state_free and rep.sign_changes == 0
    p = tmp_path / "s.csv"
    write_scan_csv(rep, p)
    assert len(p.read_text().splitlines()) == 6
    with pytest.raises(ValueError):
        spectrum_scan([-0.99], 0)
