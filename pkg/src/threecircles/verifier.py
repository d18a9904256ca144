"""Pointwise verification of the energy identities and inequalities along a field trajectory.

Every check compares a left side with a right side at grid nodes and reports a
normalised margin (lhs - rhs) / scale, where scale is the sum of the magnitudes
of the terms involved plus a tiny absolute floor.  A check holds when every
margin is >= -tol.

Constants are explicit (ConstantLedger) so that each bound is a concrete
inequality between computed numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from . import fourier
from .errors import ConstraintError, HypothesisViolated, NodalSliceError
from .field_solver import FieldTrajectory, energy_profile, frequency_profile, mode_energies
from .potentials import Potential, product_norms
from .spectral_basis import (
    CIRCLE,
    alpha_bar_constraints,
    choose_alpha_bar,
    cluster_multiplicity,
    cluster_value,
    first_gap_cluster,
)

CHECK_TOL = 1e-6
IDENTITY_TOL = 1e-6
EVOLVED_IDENTITY_TOL = 1e-4  # fields from the RK4 solver carry its discretisation error
FLOOR = 1e-12
THETA_QUADRATURE = 256
KAPPA_DOUBLINGS = 60


# ---------------------------------------------------------------- ledger and reports


@dataclass(frozen=True)
class ConstantLedger:
    sup_v: float
    lip_v: float
    c_vu: float  # int (Vu)^2 + |grad(Vu)|^2 <= c_vu * I
    c_corr: float  # constant of the H/L corrected inequalities
    kappa: float  # spectral gap needed for the H - L convexity
    c_l2: float  # constant of the L^2 corrected inequality (bounded V only)
    c_q: float  # constant of the low-mode derivative bound

    def to_dict(self) -> dict:
        return {
            "sup_V": self.sup_v,
            "lip_V": self.lip_v,
            "c_vu": self.c_vu,
            "C_corr": self.c_corr,
            "kappa": self.kappa,
            "C_l2": self.c_l2,
            "C_Q": self.c_q,
        }


def build_ledger(V: Potential) -> ConstantLedger:
    """Explicit constants from sup|V| and a Lipschitz bound.

    |grad(Vu)|^2 <= 2 Lip^2 u^2 + 2 S^2 |grad u|^2 and (Vu)^2 <= S^2 u^2, so
    c_vu = 3 S^2 + 2 Lip^2 bounds the product terms by the slice W^{1,2} norm.
    """
    S = V.sup_norm
    lip = max(V.lip_estimate, V.gradient_sup)
    c_vu = 3.0 * S * S + 2.0 * lip * lip
    c_corr = 6.0 + 5.0 * c_vu
    return ConstantLedger(
        sup_v=S,
        lip_v=lip,
        c_vu=c_vu,
        c_corr=c_corr,
        kappa=c_corr,
        c_l2=max(1.0 + S * S, 2.0 * (S + S * S)),
        c_q=2.0 * S,
    )


@dataclass(frozen=True)
class CheckReport:
    name: str
    holds: bool
    worst_margin: float
    worst_t: float
    constants: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    notices: tuple = ()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": self.holds,
            "worst_margin": self.worst_margin,
            "worst_t": self.worst_t,
            "constants": dict(self.constants),
            "details": dict(self.details),
            "notices": list(self.notices),
        }


@dataclass(frozen=True)
class Clause:
    name: str
    margin: float
    t: float
    holds: bool
    skipped: bool = False


def _clause(name: str, t: np.ndarray, diff: np.ndarray, scale: np.ndarray, tol: float) -> Clause:
    rel = diff / scale
    i = int(np.argmin(rel))
    return Clause(name, float(rel[i]), float(t[i]), bool(rel[i] >= -tol))


def _combine(name: str, clauses: list, constants: dict, details: dict, notices: list) -> CheckReport:
    active = [c for c in clauses if not c.skipped]
    for c in clauses:
        details[c.name] = {"margin": c.margin, "t": c.t, "holds": c.holds, "skipped": c.skipped}
    if not active:
        return CheckReport(name, True, math.inf, math.nan, constants, details, tuple(notices))
    worst = min(active, key=lambda c: c.margin)
    return CheckReport(
        name,
        all(c.holds for c in active),
        worst.margin,
        worst.t,
        constants,
        details,
        tuple(notices),
    )


# ---------------------------------------------------------------- helpers


def _interior(n: int) -> slice:
    return slice(2, n - 2)


def fd_first(x: np.ndarray, h: float) -> np.ndarray:
    """5-point central first derivative at interior nodes 2..n-3 along axis 0."""
    return (-x[4:] + 8 * x[3:-1] - 8 * x[1:-3] + x[:-4]) / (12 * h)


def fd_second(x: np.ndarray, h: float) -> np.ndarray:
    return (-x[4:] + 16 * x[3:-1] - 30 * x[2:-2] + 16 * x[1:-3] - x[:-4]) / (12 * h * h)


def _require_grid(field: FieldTrajectory) -> None:
    if field.t.size < 7:
        raise ValueError("need at least 7 grid nodes for the 5-point stencils")


def product_integrals(field: FieldTrajectory) -> dict:
    """Untruncated slice integrals of Vu: 'vu2' = int (Vu)^2, 'grad' = int |grad (Vu)|^2."""
    V = field.potential
    if field.basis.cross_section == CIRCLE:
        pn = product_norms(V, field.a, field.b, field.t)
        return {"vu2": pn["vu2"], "grad": pn["grad_n"] + pn["dt2"]}
    lam = field.basis.eigenvalues
    v = V.symmetric_profile(field.t)
    vt = V.cos_derivs[0](field.t) * np.ones_like(field.t)
    J = (field.a**2).sum(axis=1)
    grad_n = v**2 * (lam * field.a**2).sum(axis=1)
    dt2 = ((vt[:, None] * field.a + v[:, None] * field.b) ** 2).sum(axis=1)
    return {"vu2": v**2 * J, "grad": grad_n + dt2}


def weighted_potential_mass(field: FieldTrajectory) -> np.ndarray:
    """Slice integral of (V^2 + |V|) u^2 by uniform theta quadrature."""
    V = field.potential
    if field.basis.cross_section != CIRCLE:
        v = V.symmetric_profile(field.t)
        return (v**2 + np.abs(v)) * (field.a**2).sum(axis=1)
    n = max(THETA_QUADRATURE, 8 * (field.k_max + V.K + 1))
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    u = fourier.synthesize(field.a, theta)
    vv = V.evaluate(theta, field.t)
    return ((vv**2 + np.abs(vv)) * u**2).sum(axis=1) * (2 * np.pi / n)


def _cluster_start(field: FieldTrajectory, cluster: int) -> int:
    """Mode index of the first eigenvalue of a cluster in the untruncated spectrum."""
    n = field.basis.dimension
    return int(sum(cluster_multiplicity(n, c) for c in range(cluster)))


def _cut_eigs(field: FieldTrajectory, m: int) -> tuple[float, float]:
    lam = field.basis.eigenvalues
    if not 1 <= m < lam.size:
        raise ValueError(f"cut m={m} must satisfy 1 <= m < {lam.size}")
    return float(lam[m]), float(lam[m - 1])


# ---------------------------------------------------------------- identities


def check_identities(field: FieldTrajectory, seed: int = 0, n_pairs: int = 20, tol: float = IDENTITY_TOL) -> CheckReport:
    """Per-mode energy derivative identities and the flux identity.

    (a) d/dt E_j = (4 lam_j + 2) a_j b_j - 2 b_j g_j
    (b) d^2/dt^2 E_j = (4 lam_j + 2)(E_j - a_j^2) - (6 lam_j + 2) a_j g_j + 2 g_j^2 - 2 b_j g_j'
    (c) (b_j^2 - lam_j a_j^2)|_{t1}^{t2} = -2 int_{t1}^{t2} g_j b_j
    with E_j = b_j^2 + (1 + lam_j) a_j^2, g = [Vu], g' = [d_t(Vu)].
    Residuals are normalised by the slice total of the term magnitudes plus
    the slice energy sum (lambda_j + 1) E_j.
    """
    _require_grid(field)
    h = field.h
    lam = field.basis.eigenvalues
    a, b = field.a, field.b
    g = field.galerkin()
    gt = field.galerkin_dt()
    E = mode_energies(field)
    inner = _interior(field.t.size)
    ti = field.t[inner]

    dE = fd_first(E, h)
    t1 = (4 * lam + 2) * a * b
    t2 = 2 * b * g
    res_a = np.abs(dE - (t1 - t2)[inner]).max(axis=1)
    sc_a = (np.abs(dE) + np.abs(t1[inner]) + np.abs(t2[inner])).sum(axis=1)

    ddE = fd_second(E, h)
    terms = [
        (4 * lam + 2) * E,
        -(4 * lam + 2) * a**2,
        -(6 * lam + 2) * a * g,
        2 * g**2,
        -2 * b * gt,
    ]
    rhs = sum(terms)
    res_b = np.abs(ddE - rhs[inner]).max(axis=1)
    sc_b = np.abs(ddE).sum(axis=1) + sum(np.abs(x[inner]) for x in terms).sum(axis=1)

    # the slice energy keeps the normaliser away from zero where a mode passes through a node
    energy = ((lam + 1.0) * E).sum(axis=1)[inner] + 1e-300
    ra = res_a / (sc_a + energy)
    rb = res_b / (sc_b + energy)

    rng = np.random.default_rng(seed)
    n = field.t.size
    F = b**2 - lam * a**2
    flux = g * b
    rc = []
    pair_t = []
    for _ in range(n_pairs):
        i1 = int(rng.integers(0, n - 2))
        span = int(rng.integers(1, (n - 1 - i1) // 2 + 1)) * 2
        i2 = min(i1 + span, n - 1)
        if (i2 - i1) % 2:
            i2 -= 1
        if i2 <= i1:
            continue
        lhs = F[i2] - F[i1]
        rhs_c = -2.0 * simpson(flux[i1 : i2 + 1], x=field.t[i1 : i2 + 1], axis=0)
        mag = np.abs(F[i2]) + np.abs(F[i1]) + 2.0 * simpson(np.abs(flux[i1 : i2 + 1]), x=field.t[i1 : i2 + 1], axis=0)
        res = np.abs(lhs - rhs_c).max()
        rc.append(res / (mag.sum() + ((lam + 1.0) * E[[i1, i2]]).sum() + 1e-300))
        pair_t.append(float(field.t[i2]))
    rc = np.array(rc) if rc else np.zeros(1)

    worst = {
        "energy_first_derivative": (float(ra.max()), float(ti[int(ra.argmax())])),
        "energy_second_derivative": (float(rb.max()), float(ti[int(rb.argmax())])),
        "flux": (float(rc.max()), pair_t[int(rc.argmax())] if pair_t else math.nan),
    }
    details = {k: {"residual": v[0], "t": v[1]} for k, v in worst.items()}
    key = max(worst, key=lambda k: worst[k][0])
    r, tw = worst[key]
    return CheckReport("identities", r <= tol, -r, tw, {"tol": tol}, details, ())


# ---------------------------------------------------------------- W^{1,2} inequalities


def check_sobolev_inequalities(
    field: FieldTrajectory, m: int, ledger: ConstantLedger, tol: float = CHECK_TOL
) -> CheckReport:
    """Second-derivative inequalities for the high/low splits H_m, L_m of the W^{1,2} slice energy."""
    _require_grid(field)
    lam_m, lam_prev = _cut_eigs(field, m)
    prof = energy_profile(field, m)
    h = field.h
    inner = _interior(field.t.size)
    t = field.t[inner]
    H, L, I = prof.H[inner], prof.L[inner], prof.I[inner]
    Hpp = fd_second(prof.H, h)
    Lpp = fd_second(prof.L, h)
    pi = product_integrals(field)
    E = (pi["vu2"] + pi["grad"])[inner]
    C = ledger.c_corr
    kappa = ledger.kappa
    lam_max = float(field.basis.eigenvalues.max())
    floor = FLOOR * (4 * lam_max + 6 + C) * I + 1e-300
    clauses = []
    notices = []

    clauses.append(_clause("vu_terms_bound", t, ledger.c_vu * I - E, ledger.c_vu * I + E + floor, tol))
    a1 = (4 * lam_m - 6) * H
    clauses.append(_clause("high_second_derivative", t, Hpp - a1 + 3 * E, np.abs(Hpp) + np.abs(a1) + 3 * E + floor, tol))
    a2 = (4 * lam_prev + 6) * L
    clauses.append(_clause("low_second_derivative", t, a2 + 5 * E - Lpp, np.abs(a2) + 5 * E + np.abs(Lpp) + floor, tol))
    b1 = (4 * lam_m - C) * H
    clauses.append(
        _clause("high_corrected", t, Hpp - b1 + C * L, np.abs(Hpp) + np.abs(b1) + C * L + floor, tol)
    )
    b2 = (4 * lam_prev + C) * L
    clauses.append(_clause("low_corrected", t, b2 + C * H - Lpp, np.abs(b2) + C * H + np.abs(Lpp) + floor, tol))

    gap = lam_m - lam_prev
    if gap >= kappa:
        D = H - L
        Dpp = Hpp - Lpp
        c = (4 * lam_prev + 2 * kappa) * D
        clauses.append(_clause("gap_convexity", t, Dpp - c, np.abs(Hpp) + np.abs(Lpp) + np.abs(c) + floor, tol))
    else:
        clauses.append(Clause("gap_convexity", math.nan, math.nan, True, skipped=True))
        notices.append(f"gap condition unmet at m={m}: lambda_m - lambda_(m-1) = {gap:g} < kappa = {kappa:.6g}; clause skipped")

    constants = ledger.to_dict() | {"m": m, "lambda_m": lam_m, "lambda_m_minus_1": lam_prev}
    return _combine("sobolev_inequalities", clauses, constants, {}, notices)


# ---------------------------------------------------------------- three circles


def three_circles_report(
    field: FieldTrajectory,
    alpha: Union[float, str] = "auto",
    ledger: Optional[ConstantLedger] = None,
    tol: float = CHECK_TOL,
) -> CheckReport:
    """log I(t) <= C + (c3 + C + |alpha|) t + log I(0) with the constants assembled explicitly.

    The cut is the first cluster of the untruncated spectrum with gap >= kappa
    and 2 sqrt(lambda_{m-1}) > |alpha|; modes above the truncation vanish, so
    the chain of bounds applies verbatim.
    """
    ledger = ledger or build_ledger(field.potential)
    prof = energy_profile(field, 0)
    I = prof.I
    if I[0] <= 0:
        raise HypothesisViolated("three circles bound needs I(0) > 0")
    s = field.t - field.t[0]
    T = float(s[-1])
    alpha_min = math.log(I[-1] / I[0]) / T
    if alpha == "auto":
        alpha = alpha_min
    else:
        alpha = float(alpha)
        if alpha < alpha_min - 1e-12:
            raise ConstraintError(f"alpha={alpha:g} is below (1/T) log(I(T)/I(0)) = {alpha_min:g}")
    C = ledger.c_corr
    n = field.basis.dimension
    cl = first_gap_cluster(n, ledger.kappa, alpha)
    lam_prev = cluster_value(n, cl - 1)
    m = _cluster_start(field, cl)
    c3 = 2.0 * math.sqrt(lam_prev) - abs(alpha)
    c1 = 2.0 * (math.sqrt(lam_prev) + C)
    c2 = 1.0 + C / (c1 - abs(alpha))
    C_thm = max(math.log(2 * c2 + 1), 2 * C)
    logI = np.log(I)
    log0 = logI[0]

    bound = C_thm + (c3 + C_thm + abs(alpha)) * s + log0
    clauses = [_clause("three_circles", field.t, bound - logI, np.ones_like(s), tol)]
    growth = math.log(2 * c2 + 1) + c1 * s + log0
    clauses.append(_clause("energy_growth", field.t, growth - logI, np.ones_like(s), tol))
    notices = []
    if alpha >= 0:
        convex = C_thm + (c3 + C_thm) * s + (s / T) * logI[-1] + ((T - s) / T) * log0
        clauses.append(_clause("convex_form", field.t, convex - logI, np.ones_like(s), tol))
    else:
        notices.append("alpha < 0: convex-combination form not applicable")
    mid = len(s) // 2
    details = {"midpoint_slack": float(bound[mid] - logI[mid])}
    constants = ledger.to_dict() | {
        "alpha": alpha,
        "m": m,
        "cluster": cl,
        "lambda_m_minus_1": lam_prev,
        "c1": c1,
        "c2": c2,
        "c3": c3,
        "C": C_thm,
    }
    return _combine("three_circles", clauses, constants, details, notices)


# ---------------------------------------------------------------- L^2 machinery


@dataclass(frozen=True)
class WeightedChain:
    """Explicit constants closing the weighted sup-norm argument at (alpha_bar, cluster)."""

    closes: bool
    C: float
    reason: str = ""
    parts: dict = field(default_factory=dict)


def weighted_chain(sup_v: float, alpha_bar: float, lam_m: float, lam_prev: float) -> WeightedChain:
    """Bound J(t) <= C I(0) e^{alpha_bar t} assembled from the weighted maximum-principle steps.

    With D = alpha_bar - 2 sqrt(lam_prev + 1), q = (2 S / D)^2, r = 4 / alpha_bar^2:
      lbar <= r l + I0,  l <= q (hbar + lbar)  (or the endpoint value I0)
      => l <= a_l hbar + b_l I0,  lbar <= a_b hbar + b_b I0
      (g - P (1 + a_b) - a_l) hbar <= (P b_b + b_l + 3) I0
    with P = 1 + S^2 + 2 (S + S^2) / alpha_bar and g = 4 lam_m - alpha_bar^2 - alpha_bar.
    """
    S = sup_v
    A = alpha_bar
    D = A - 2.0 * math.sqrt(lam_prev + 1.0)
    if D <= 0:
        return WeightedChain(False, math.inf, "alpha_bar <= 2 sqrt(lambda_(m-1) + 1)")
    q = 4.0 * S * S / (D * D)
    r = 4.0 / (A * A)
    if q * r >= 1.0:
        return WeightedChain(False, math.inf, f"q r = {q * r:.4g} >= 1: low-mode bounds do not absorb", {"q": q, "r": r})
    a_l = q / (1.0 - q * r)
    b_l = max(a_l, 1.0)
    a_b = r * a_l
    b_b = r * b_l + 1.0
    P = 1.0 + S * S + 2.0 * (S + S * S) / A
    g = 4.0 * lam_m - A * A - A
    delta = g - P * (1.0 + a_b) - a_l
    parts = {"q": q, "r": r, "a_l": a_l, "b_l": b_l, "a_b": a_b, "b_b": b_b, "P": P, "g": g, "Delta": delta}
    if delta <= 0:
        return WeightedChain(False, math.inf, f"Delta = {delta:.4g} <= 0: high-mode bound does not absorb", parts)
    c_h = max(1.0, (P * b_b + b_l + 3.0) / delta)
    parts["c_h"] = c_h
    return WeightedChain(True, (1.0 + a_b) * c_h + b_b, "", parts)


def smallest_weighted_constant(field: FieldTrajectory, alpha_bar: float) -> float:
    """max_t J(t) e^{-alpha_bar t} / I(0)."""
    prof = energy_profile(field, 0)
    s = field.t - field.t[0]
    return float(np.max(prof.J * np.exp(-alpha_bar * s)) / prof.I[0])


def weighted_norms(prof, alpha: float, s: np.ndarray) -> dict:
    w = np.exp(-alpha * s)
    return {
        "hbar": float(np.max(prof.Hbar * w)),
        "lbar": float(np.max(prof.Lbar * w)),
        "l": float(np.max(prof.L * w)),
    }


def _cluster_eigs(n: int, cl: int) -> tuple[float, float]:
    return cluster_value(n, cl), cluster_value(n, cl - 1)


def check_l2_inequalities(
    field: FieldTrajectory,
    m: int,
    alpha_bar: Union[float, str] = "auto",
    ledger: Optional[ConstantLedger] = None,
    tol: float = CHECK_TOL,
) -> CheckReport:
    """L^2-split inequalities at cut m plus the weighted bound J(t) <= C I(0) e^{alpha_bar t}.

    The base point t0 is the start of the span.  With alpha_bar = "auto" the
    gap constant kappa starts at 1 and doubles until the explicit chain closes;
    a supplied alpha_bar is validated against its two admissibility constraints
    at the cluster containing m.
    """
    _require_grid(field)
    ledger = ledger or build_ledger(field.potential)
    lam_m, lam_prev = _cut_eigs(field, m)
    lam = field.basis.eigenvalues
    S = ledger.sup_v
    prof = energy_profile(field, m)
    s = field.t - field.t[0]
    T = float(s[-1])
    I0 = prof.I[0]
    if I0 <= 0:
        raise HypothesisViolated("weighted bound needs I(0) > 0")
    a, b = field.a, field.b
    g = field.galerkin()
    hi = slice(m, None)
    lo = slice(0, m)
    Hb, Lb, L, J, dJ = prof.Hbar, prof.Lbar, prof.L, prof.J, prof.dJ
    Hbpp = 2.0 * (b[:, hi] ** 2 + lam[hi] * a[:, hi] ** 2 - a[:, hi] * g[:, hi]).sum(axis=1)
    Hbp = 2.0 * (a[:, hi] * b[:, hi]).sum(axis=1)
    Lp = ((4 * lam[lo] + 2) * a[:, lo] * b[:, lo] - 2 * b[:, lo] * g[:, lo]).sum(axis=1)
    pi = product_integrals(field)
    vu2 = pi["vu2"]
    grad0 = float((b[0] ** 2 + lam * a[0] ** 2).sum())
    mass = cumulative_simpson(weighted_potential_mass(field), x=field.t, initial=0.0)
    Jint = cumulative_simpson(J, x=field.t, initial=0.0)
    floor = FLOOR * (4 * lam.max() + 6) * (prof.I + I0) + 1e-300
    clauses = []
    notices = []

    # bounded-potential second-derivative inequality, anchored at t0
    main = (4 * lam_m - 1) * Hb
    rest = [vu2, 2 * grad0 * np.ones_like(s), dJ, -dJ[0] * np.ones_like(s), 2 * mass]
    rhs = main - vu2 - 2 * grad0 - dJ + dJ[0] - 2 * mass
    clauses.append(
        _clause("l2_second_derivative", field.t, Hbpp - rhs, np.abs(Hbpp) + np.abs(main) + sum(np.abs(x) for x in rest) + floor, tol)
    )
    # corrected form with the explicit constant
    C = ledger.c_l2
    I_t0 = prof.I[0]
    sq = 2.0 * np.sqrt(Lb * L)
    corr_terms = [(4 * lam_m - C) * Hb, -Hbp, -3 * I_t0 * np.ones_like(s), -C * Lb, -sq, -C * Jint]
    rhs2 = sum(corr_terms)
    clauses.append(
        _clause("l2_corrected", field.t, Hbpp - rhs2, np.abs(Hbpp) + sum(np.abs(x) for x in corr_terms) + floor, tol)
    )
    # low-mode derivative bound
    q1 = 2.0 * math.sqrt(lam_prev + 1.0) * L
    q2 = ledger.c_q * np.sqrt(J) * np.sqrt(L)
    clauses.append(_clause("low_derivative", field.t, q1 + q2 - np.abs(Lp), q1 + q2 + np.abs(Lp) + floor, tol))

    # weighted bound
    alpha = math.log(prof.I[-1] / I0) / T
    n = field.basis.dimension
    if alpha_bar == "auto":
        kappa = 1.0
        for _ in range(KAPPA_DOUBLINGS):
            cl, ab = choose_alpha_bar(n, alpha, kappa)
            chain = weighted_chain(S, ab, *_cluster_eigs(n, cl))
            if chain.closes:
                break
            kappa *= 2.0
        else:
            raise ConstraintError("weighted chain did not close for any kappa tried")
    else:
        ab = float(alpha_bar)
        cl = int(field.basis.cluster_index[m])
        if field.basis.cluster_start(cl) != m:
            raise ConstraintError(f"m={m} is not the first mode of its cluster")
        kappa = 1.0
        if ab < 1.0:
            raise ConstraintError(f"alpha_bar={ab:g} < 1")
        if alpha > ab + 1e-12:
            raise ConstraintError(f"defalpha violated: alpha={alpha:g} > alpha_bar={ab:g}")
        lower_ok, quad_ok = alpha_bar_constraints(n, cl, alpha, kappa, ab)
        if not lower_ok:
            raise ConstraintError(f"chom1 violated at cluster {cl}: 2 sqrt(b_(m-1) + 1) + 1 > alpha_bar={ab:g}")
        if not quad_ok:
            raise ConstraintError(f"chom2 violated at cluster {cl}: alpha_bar^2 + alpha_bar > 4 b_m - kappa")
        chain = weighted_chain(S, ab, *_cluster_eigs(n, cl))

    observed = smallest_weighted_constant(field, ab)
    m_w = _cluster_start(field, cl)
    prof_w = energy_profile(field, min(m_w, field.basis.size))
    norms = weighted_norms(prof_w, ab, s)
    if chain.closes:
        clauses.append(Clause("weighted_bound", (chain.C - observed) / (chain.C + observed), 0.0, observed <= chain.C * (1 + tol)))
    else:
        clauses.append(Clause("weighted_bound", math.nan, math.nan, True, skipped=True))
        notices.append(f"weighted chain does not close at alpha_bar={ab:.6g}: {chain.reason}; clause skipped")

    constants = ledger.to_dict() | {
        "m": m,
        "alpha": alpha,
        "alpha_bar": ab,
        "kappa_l2": kappa,
        "cluster": cl,
        "C_weighted": chain.C,
        "C_observed": observed,
    }
    details = {"weighted_norms": norms, "chain": chain.parts}
    return _combine("l2_inequalities", clauses, constants, details, notices)


# ---------------------------------------------------------------- unique continuation threshold


def uc_decay_scan(field: FieldTrajectory, m: int) -> CheckReport:
    """log(I(T)/I(0)) / T must stay above -4 sqrt(lambda_{m-1}) for a nonzero solution."""
    _, lam_prev = _cut_eigs(field, m)
    prof = energy_profile(field, m)
    if prof.I[0] <= 0:
        raise HypothesisViolated("unique-continuation scan needs I(0) > 0 to normalise")
    T = float(field.t[-1] - field.t[0])
    rate = math.log(prof.I[-1] / prof.I[0]) / T
    threshold = -4.0 * math.sqrt(lam_prev)
    margin = rate - threshold
    return CheckReport(
        "uc_threshold",
        margin > 0,
        margin,
        float(field.t[-1]),
        {"m": m, "threshold": threshold},
        {"rate": rate},
    )


# ---------------------------------------------------------------- frequency


def check_frequency(field: FieldTrajectory, ledger: Optional[ConstantLedger] = None, tol: float = CHECK_TOL) -> CheckReport:
    """U' >= -2 sup|V| where sum lambda a^2 >= sum b^2, and U' >= 2 D / J - 2 sup|V| everywhere."""
    ledger = ledger or build_ledger(field.potential)
    fp = frequency_profile(field, 2.0)
    scale = np.abs(fp.dU) + 2 * ledger.sup_v + np.abs(2 * fp.equipartition / fp.J) + 1.0
    clauses = [_clause("frequency_general", field.t, fp.general_margin, scale, tol)]
    mask = fp.equipartition >= 0
    notices = []
    if np.any(mask):
        d = fp.dU + 2 * ledger.sup_v
        clauses.append(_clause("frequency_drift", field.t[mask], d[mask], scale[mask], tol))
    else:
        clauses.append(Clause("frequency_drift", math.nan, math.nan, True, skipped=True))
        notices.append("no slice with sum lambda a^2 >= sum b^2; drift clause skipped")
    details = {"min_drift": fp.min_drift(), "U_range": [float(fp.U.min()), float(fp.U.max())]}
    return _combine("frequency", clauses, {"C": 2.0, "sup_V": ledger.sup_v}, details, notices)


# ---------------------------------------------------------------- batch


def run_all(
    field: FieldTrajectory,
    m: Union[int, str] = "auto",
    alpha: Union[float, str] = "auto",
    alpha_bar: Union[float, str] = "auto",
    ledger: Optional[ConstantLedger] = None,
    identity_tol: float = IDENTITY_TOL,
) -> list:
    ledger = ledger or build_ledger(field.potential)
    if m == "auto":
        m = auto_cut(field, ledger)
    reports = [
        check_identities(field, tol=identity_tol),
        check_sobolev_inequalities(field, m, ledger),
        three_circles_report(field, alpha, ledger),
        check_l2_inequalities(field, m, alpha_bar, ledger),
    ]
    try:
        reports.append(check_frequency(field, ledger))
    except NodalSliceError as exc:
        reports.append(CheckReport("frequency", True, math.inf, math.nan, {}, {}, (f"skipped: {exc}",)))
    if energy_profile(field, 0).I[0] > 0:
        reports.append(uc_decay_scan(field, m))
    return reports


def auto_cut(field: FieldTrajectory, ledger: ConstantLedger) -> int:
    """First mode index whose gap reaches kappa, or the last cluster start inside the truncation."""
    lam = field.basis.eigenvalues
    gaps = np.diff(lam)
    hits = np.nonzero(gaps >= ledger.kappa)[0]
    if hits.size:
        return int(hits[0]) + 1
    starts = np.nonzero(gaps > 0)[0]
    return int(starts[-1]) + 1
