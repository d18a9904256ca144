"""End-to-end acceptance checks, one test per criterion at the stated tolerances."""

import math
import time

import numpy as np
import pytest

from conftest import random_field, separable_field
from threecircles.catenoid import SOLUTIONS, closed_form_field, closed_form_poincare, eigenfunction_residual, spectrum_scan
from threecircles.cli import run
from threecircles.errors import DichotomyViolated
from threecircles.field_solver import frequency_profile
from threecircles.mode_dynamics import circle_dim_cap, classify_growth, dim_bound, integrate_mode
from threecircles.poincare import compute_map, hyperbolize, perturbation_derivative, periodic_mode_decay, shifted
from threecircles.potentials import build_preset, random_band_potential
from threecircles.spectral_basis import choose_alpha_bar, circle_basis
from threecircles.verifier import (
    EVOLVED_IDENTITY_TOL,
    IDENTITY_TOL,
    check_identities,
    run_all,
)

CLOSED_FORMS = ["N1", "N2", "N3", "k0_growing", "k1_growing", "k1_decaying"]


def symmetric_potential(rng, T):
    kind = rng.integers(0, 4)
    if kind == 0:
        return build_preset("catenoid", {"T": T})
    if kind == 1:
        return random_band_potential(int(rng.integers(0, 10**6)), K=0, sup=float(rng.uniform(0.1, 2.0)), T=T)
    if kind == 2:
        return build_preset("compact_bump", {"T": T, "amplitude": float(rng.uniform(-2, 2)), "width": T / 3})
    return build_preset("periodic_cos", {"T": T, "amplitude": float(rng.uniform(-2, 2)), "offset": 0.5})


def test_criterion_01_catenoid_poincare_matrix():
    start = time.perf_counter()
    V = build_preset("catenoid", {"T": 3.0, "h": 0.01})
    for t in (0.5, 1.0, 2.0, 3.0):
        P = compute_map(0.0, V, 0.0, t).matrix
        np.testing.assert_allclose(P, closed_form_poincare(t).matrix, rtol=0, atol=1e-6)
    assert time.perf_counter() - start < 1.0


def test_criterion_02_symplecticity_battery():
    rng = np.random.default_rng(2)
    for _ in range(200):
        V = symmetric_potential(rng, 3.0)
        lam = float(rng.uniform(-5, 5))
        t1 = float(rng.uniform(0, 1))
        t2 = t1 + float(rng.uniform(0.05, 1))
        t3 = t2 + float(rng.uniform(0.05, 1))
        P12 = compute_map(lam, V, t1, t2)
        P23 = compute_map(lam, V, t2, t3)
        P13 = compute_map(lam, V, t1, t3)
        for P in (P12, P23, P13):
            assert P.det_residual <= 1e-8
        scale = max(1.0, float(np.abs(P13.matrix).max()))
        assert np.abs(P23.matrix @ P12.matrix - P13.matrix).max() <= 1e-7 * scale


def test_criterion_03_perturbation_derivative():
    rng = np.random.default_rng(3)
    eps = 1e-4
    for _ in range(20):
        ell = float(rng.uniform(0.5, 2.0))
        V = symmetric_potential(rng, 2.0)
        lam = float(rng.uniform(-3, 3))
        c = rng.normal(size=3)

        def f(t, c=c, ell=ell):
            t = np.asarray(t, dtype=float)
            return np.sin(np.pi * t / ell) * (c[0] + c[1] * t + c[2] * t * t)

        pd = perturbation_derivative(V, f, lam, ell)
        Pp = compute_map(lam, shifted(V, f, eps), 0.0, ell).matrix
        Pm = compute_map(lam, shifted(V, f, -eps), 0.0, ell).matrix
        fd = (Pp - Pm) / (2 * eps)
        assert np.abs(pd.dP - fd).max() <= 1e-4 * np.abs(fd).max()
        assert pd.trace_residual <= 1e-8


def test_criterion_04_identity_residuals():
    for label in CLOSED_FORMS:
        rep = check_identities(closed_form_field(label, 0.0, 2.0, 0.01))
        assert rep.holds and -rep.worst_margin <= IDENTITY_TOL, (label, rep.details)
    for seed in range(50):
        rep = check_identities(random_field(seed), tol=EVOLVED_IDENTITY_TOL)
        assert rep.holds, (seed, rep.details)
    for label in ("N1", "k1_growing", "k0_growing"):
        coarse = check_identities(closed_form_field(label, 0.0, 2.0, 0.1)).details
        fine = check_identities(closed_form_field(label, 0.0, 2.0, 0.05)).details
        for key in ("energy_first_derivative", "energy_second_derivative", "flux"):
            ratio = coarse[key]["residual"] / fine[key]["residual"]
            assert 12 <= ratio <= 21, (label, key, ratio)


def _assert_all_hold(reports, tag):
    for rep in reports:
        assert rep.holds, (tag, rep.name, rep.worst_margin, rep.details)


def test_criterion_05_inequality_suite():
    start = time.perf_counter()
    exercised_gap = 0
    for label in CLOSED_FORMS:
        f = closed_form_field(label, 0.0, 2.0, 0.01, k_max=4)
        _assert_all_hold(run_all(f, 3), label)
    for k in (1, 2, 3):
        for sign in (1, -1):
            f = separable_field(k, sign=sign, k_max=5)
            reps = run_all(f, 7)
            _assert_all_hold(reps, f.label)
            exercised_gap += not reps[1].details["gap_convexity"]["skipped"]
    for seed in range(50):
        f = random_field(seed)
        _assert_all_hold(run_all(f, "auto", identity_tol=EVOLVED_IDENTITY_TOL), f.label)
    for seed in range(3):
        f = random_field(seed, k_max=12)
        reps = run_all(f, "auto", identity_tol=EVOLVED_IDENTITY_TOL)
        _assert_all_hold(reps, f.label)
        exercised_gap += not reps[1].details["gap_convexity"]["skipped"]
    assert exercised_gap >= 6
    assert time.perf_counter() - start < 60.0


def test_criterion_06_dimension_bound():
    assert dim_bound(circle_basis(4), 2.0) == 6
    assert dim_bound(circle_basis(4), -0.5) == 0 and circle_dim_cap(-0.5) == 0.0
    tt = np.linspace(0.0, 8.0, 801)
    theta = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    samples = []
    for label in ("N1", "N2"):
        sol = SOLUTIONS[label]
        assert sol.kernel_residual(tt).max() < 1e-10
        w = sol.coefficient(tt)[0]
        assert abs(w[-1]) < 1e-3 * abs(w).max()  # decays along the end
        samples.append(sol.evaluate(theta, [1.0]).ravel())
    assert np.linalg.matrix_rank(np.array(samples), tol=1e-8) == 2
    assert 2 <= dim_bound(circle_basis(4), 2.0)


def test_criterion_07_growth_decay_dichotomy():
    rng = np.random.default_rng(7)
    T = 4.0
    violations = 0
    for i in range(100):
        V = symmetric_potential(rng, T)
        S = float(np.max(V.symmetric_profile(V.t_grid)))
        lam = S + 0.5 + float(rng.uniform(0, 5))
        k = math.sqrt(lam - S)
        if i % 2 == 0:
            tr = integrate_mode(lam, V, (0.0, T), (1.0, float(rng.uniform(-0.5, 1.0)) * k))
        else:
            q_end = lam - float(V.symmetric_profile(np.array([T]))[0])
            tr = integrate_mode(lam, V, (T, 0.0), (1.0, -math.sqrt(q_end)))
        try:
            g = classify_growth(lam, V, tr)
        except DichotomyViolated:
            violations += 1
            continue
        if g.kind == "growing":
            assert g.rate >= k - 0.05
        else:
            assert g.rate <= -k + 0.05
    assert violations == 0


def test_criterion_08_spectrum_scan():
    assert eigenfunction_residual() <= 1e-8
    lams = np.linspace(-0.9, -0.1, 17)
    for k in (0, 1):
        rep = spectrum_scan(lams, k)
        assert rep.bound_state_free, (k, rep.coefficients)


def test_criterion_09_frequency():
    for k in (1, 2, 3, 4):
        fp = frequency_profile(separable_field(k))
        assert np.abs(fp.U - 2 * k).max() <= 1e-10
    fields = [random_field(seed) for seed in range(20)]
    fields += [closed_form_field(label, 0.0, 2.0, 0.01) for label in ("N1", "N2", "k0_growing")]
    for f in fields:
        fp = frequency_profile(f)
        assert fp.min_drift() >= -1e-6, f.label


def test_criterion_10_alpha_bar_selection():
    m, ab = choose_alpha_bar(1, 0.0, 1.0)
    assert m == 4
    assert ab == pytest.approx(2 * math.sqrt(10) + 1, abs=1e-12)
    b_prev, b_m = (m - 1) ** 2, m**2
    assert 2 * math.sqrt(b_prev + 1) + 1 <= ab + 1e-12 and ab >= max(0.0, 1.0)
    assert ab * ab + ab <= 4 * b_m - 1.0


def test_criterion_11_hyperbolization():
    V = build_preset("zero", {"T": 3.0})
    assert compute_map(0.0, V, 0.0, 1.0).classification.kind == "parabolic"
    res = hyperbolize(V, 0.0, 1.0)
    assert res.s <= 1.0
    assert abs(res.new_trace) >= 2.001
    W = shifted(V, res.f, res.s)
    (md,) = periodic_mode_decay(W, [0.0], 1.0, periods=3)
    assert md.generic and md.contraction_ok


def test_criterion_12_end_to_end_determinism(tmp_path):
    argv = ["verify", "--preset", "catenoid", "--field", "N1", "--m", "auto", "--T", "2"]
    assert run(argv + ["--out", str(tmp_path / "a")]) == 0
    assert run(argv + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "verify.json").read_bytes() == (tmp_path / "b" / "verify.json").read_bytes()
