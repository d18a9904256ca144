import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threecircles import fourier
from threecircles.potentials import (
    PRESETS,
    Potential,
    build_preset,
    conformal_transform,
    load_config,
    multiplication_matrices,
    polar_lift,
    potential_from_config,
    product_norms,
    project_product,
    random_band_potential,
)

NQ = 512
THETA = np.linspace(0, 2 * np.pi, NQ, endpoint=False)
W = 2 * np.pi / NQ


def basis_on_grid(k_max):
    """Rows phi_j(theta) for the real circle basis, by direct formula."""
    rows = [np.full(NQ, 1 / math.sqrt(2 * math.pi))]
    for k in range(1, k_max + 1):
        rows.append(np.sin(k * THETA) / math.sqrt(math.pi))
        rows.append(np.cos(k * THETA) / math.sqrt(math.pi))
    return np.array(rows)


def test_real_complex_round_trip(rng):
    a = rng.normal(size=(3, 9))
    c = fourier.real_to_complex(a)
    np.testing.assert_allclose(fourier.complex_to_real(c, 4), a, atol=1e-14)
    np.testing.assert_allclose((np.abs(c) ** 2).sum(-1), (a**2).sum(-1), rtol=1e-13)


def test_synthesize_matches_basis(rng):
    a = rng.normal(size=7)
    np.testing.assert_allclose(fourier.synthesize(a, THETA), a @ basis_on_grid(3), atol=1e-13)


def test_galerkin_matrix_matches_quadrature():
    V = random_band_potential(3, K=3, sup=1.0, T=1.0)
    t = np.array([0.1, 0.7])
    M = multiplication_matrices(V, t, 4)
    phi = basis_on_grid(4)
    vals = V.evaluate(THETA, t)
    for i in range(t.size):
        ref = (phi * vals[i]) @ phi.T * W
        np.testing.assert_allclose(M[i], ref, atol=1e-12)


def test_project_product_and_dropped_mass(rng):
    V = random_band_potential(5, K=2, sup=1.0, T=1.0)
    a = rng.normal(size=7)
    kept, dropped = project_product(V, a, 0.4)
    u = a @ basis_on_grid(3)
    vu = V.evaluate(THETA, [0.4])[0] * u
    ref = basis_on_grid(3) @ vu * W
    np.testing.assert_allclose(kept, ref, atol=1e-12)
    total = (vu**2).sum() * W
    assert dropped == pytest.approx(total - (ref**2).sum(), rel=1e-10)


def test_product_norms_match_quadrature(rng):
    V = random_band_potential(7, K=2, sup=0.8, T=1.0)
    t = np.array([0.2, 0.5])
    a = rng.normal(size=(2, 7))
    b = rng.normal(size=(2, 7))
    pn = product_norms(V, a, b, t)
    phi = basis_on_grid(3)
    dphi = np.array([np.zeros(NQ)] + [r for kk in range(1, 4) for r in (kk * np.cos(kk * THETA), -kk * np.sin(kk * THETA))]) / math.sqrt(math.pi)
    C, S = V.modes(t)
    Ct, St = V.mode_derivatives(t)
    kk = np.arange(V.K + 1)[:, None]
    for i in range(2):
        v = V.evaluate(THETA, [t[i]])[0]
        vth = (-C[:, i, None] * kk * np.sin(kk * THETA) + S[:, i, None] * kk * np.cos(kk * THETA)).sum(0)
        vt = (Ct[:, i, None] * np.cos(kk * THETA) + St[:, i, None] * np.sin(kk * THETA)).sum(0)
        u = a[i] @ phi
        ut = b[i] @ phi
        uth = a[i] @ dphi
        assert pn["vu2"][i] == pytest.approx(((v * u) ** 2).sum() * W, rel=1e-10)
        assert pn["grad_n"][i] == pytest.approx(((vth * u + v * uth) ** 2).sum() * W, rel=1e-10)
        assert pn["dt2"][i] == pytest.approx(((vt * u + v * ut) ** 2).sum() * W, rel=1e-10)


def test_symmetric_potential_matrices_are_diagonal():
    V = build_preset("catenoid", {"T": 1})
    M = multiplication_matrices(V, [0.0], 2)
    np.testing.assert_allclose(M[0], 2.0 * np.eye(5))


def test_catenoid_norms():
    V = build_preset("catenoid", {"t_min": -3, "T": 3, "h": 0.01})
    assert V.sup_norm == pytest.approx(2.0)
    # max |d/dt 2 sech^2| = 8 / (3 sqrt 3) at tanh^2 = 1/3
    assert V.gradient_sup == pytest.approx(8 / (3 * math.sqrt(3)), rel=1e-4)
    assert V.lip_estimate == pytest.approx(8 / (3 * math.sqrt(3)), rel=1e-3)


@pytest.mark.parametrize("name", PRESETS)
def test_presets_build(name, tmp_path):
    params = {"T": 1.0, "c": 0.3, "eps": 0.5, "amplitude": 0.2, "seed": 1}
    if name == "tabulated":
        t = np.linspace(0, 1, 21)
        p = tmp_path / "v.csv"
        p.write_text("t,v\n" + "".join(f"{x},{x * x}\n" for x in t))
        params = {"cos0": str(p)}
    V = build_preset(name, params)
    vals = V.evaluate(THETA[:8], V.t_grid)
    assert np.all(np.isfinite(vals))


def test_unknown_preset():
    with pytest.raises(KeyError):
        build_preset("nope")
    with pytest.raises(KeyError):
        build_preset("constant", {})


def test_tabulated_spline_reproduces_smooth_profile(tmp_path):
    t = np.linspace(0, 1, 101)
    p = tmp_path / "v.csv"
    p.write_text("".join(f"{x},{math.sin(3 * x)}\n" for x in t))
    V = build_preset("tabulated", {"cos0": str(p)})
    tt = np.linspace(0, 1, 37)
    np.testing.assert_allclose(V.symmetric_profile(tt), np.sin(3 * tt), atol=1e-6)
    with pytest.raises(ValueError):
        V.check_domain(0.0, 1.5)


def test_config_round_trip(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[potential]\npreset = constant\nc = 1.5\nT = 2\n")
    sec = load_config(cfg)["potential"]
    V = potential_from_config(sec, tmp_path)
    assert V.sup_norm == pytest.approx(1.5)
    assert V.t_max == 2.0


def test_conformal_transform():
    V = build_preset("constant", {"c": 2.0, "T": 1})
    W2 = conformal_transform(V, lambda t: 0.5 * np.asarray(t), lambda t: 0.5 * np.ones_like(t))
    t = np.array([0.0, 0.4, 1.0])
    np.testing.assert_allclose(W2.symmetric_profile(t), 2.0 * np.exp(-t))
    np.testing.assert_allclose(W2.cos_derivs[0](t), -2.0 * np.exp(-t))


def test_polar_lift_bounded_by_decay_constant():
    C0 = 3.0
    V = polar_lift(C0, lambda x: C0 / (1.0 + (x**2).sum(-1)), T=2.0, h=0.05)
    vals = V.evaluate(THETA[::16], V.t_grid)
    assert np.max(np.abs(vals)) <= C0
    # radial input gives a theta-independent lift e^{2t} C0 / (1 + e^{2t})
    np.testing.assert_allclose(vals[:, 0], C0 * np.exp(2 * V.t_grid) / (1 + np.exp(2 * V.t_grid)), rtol=1e-6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), sup=st.floats(0.05, 3.0))
def test_random_band_sup_is_scaled(seed, sup):
    V = random_band_potential(seed, K=2, sup=sup, T=1.0)
    assert V.sup_norm == pytest.approx(sup, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_galerkin_matrix_symmetric_and_bounded(seed):
    V = random_band_potential(seed, K=2, sup=1.0, T=1.0)
    M = multiplication_matrices(V, [0.3], 5)[0]
    np.testing.assert_allclose(M, M.T, atol=1e-13)
    assert np.max(np.abs(np.linalg.eigvalsh(M))) <= V.sup_norm + 1e-9


def test_from_samples_needs_finite():
    with pytest.raises(ValueError):
        Potential.from_samples(np.linspace(0, 1, 5), np.array([[0, 1, np.nan, 1, 0]]))
