"""Per-mode Poincare (monodromy) maps in SL(2, R).

P_{t1,t2} sends Cauchy data (w, w')(t1) of w'' = (lambda - V) w to (w, w')(t2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import NotSymplecticError
from .mode_dynamics import integrate_mode
from .potentials import Potential

PARABOLIC_BAND = 1e-3
SYMPLECTIC_TOL = 1e-6
HYPERBOLIZE_TARGET = 2.0 + 1e-3
SWEEP_CAP = 40


@dataclass(frozen=True)
class Classification:
    kind: str  # hyperbolic | elliptic | parabolic
    c: Optional[float] = None  # hyperbolic eigenvalue with |c| > 1
    phi: Optional[float] = None  # elliptic rotation angle in (0, pi)
    sign: Optional[int] = None  # parabolic branch, trace ~ 2 sign
    eigenvectors: Optional[np.ndarray] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.c is not None:
            out["c"] = self.c
        if self.phi is not None:
            out["phi"] = self.phi
        if self.sign is not None:
            out["sign"] = self.sign
        return out


@dataclass(frozen=True)
class PoincareMap:
    matrix: np.ndarray
    lam: float
    span: tuple
    det_residual: float
    classification: Classification

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "span": list(self.span),
            "matrix": [float(x) for x in self.matrix.ravel()],
            "det_residual": self.det_residual,
            "classification": self.classification.to_dict(),
        }


def classify_matrix(P: np.ndarray, band: float = PARABOLIC_BAND) -> Classification:
    P = np.asarray(P, dtype=float)
    det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
    if abs(det - 1.0) > SYMPLECTIC_TOL:
        raise NotSymplecticError(f"not symplectic: |det - 1| = {abs(det - 1.0):.3g}")
    tr = P[0, 0] + P[1, 1]
    if abs(abs(tr) - 2.0) <= band:
        return Classification("parabolic", sign=1 if tr > 0 else -1)
    if abs(tr) > 2.0:
        disc = math.sqrt(0.25 * tr * tr - 1.0)
        c = 0.5 * tr + math.copysign(disc, tr)
        vals, vecs = np.linalg.eig(P)
        order = np.argsort(-np.abs(vals))
        vecs = np.real(vecs[:, order])
        return Classification("hyperbolic", c=float(c), eigenvectors=vecs)
    return Classification("elliptic", phi=float(math.acos(0.5 * tr)))


def make_map(P: np.ndarray, lam: float, span) -> PoincareMap:
    det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
    res = float(abs(det - 1.0))
    try:
        cls = classify_matrix(P)
    except NotSymplecticError:
        cls = Classification("unclassified")
    return PoincareMap(P, float(lam), (float(span[0]), float(span[1])), res, cls)


def classify_map(P: PoincareMap) -> Classification:
    if P.det_residual > SYMPLECTIC_TOL:
        raise NotSymplecticError(f"not symplectic: det residual {P.det_residual:.3g}")
    return classify_matrix(P.matrix)


def _columns(lam, V, t1, t2, h):
    u = integrate_mode(lam, V, (t1, t2), (1.0, 0.0), h)
    v = integrate_mode(lam, V, (t1, t2), (0.0, 1.0), h)
    return u, v


def compute_map(lam: float, V: Potential, t1: float, t2: float, h: Optional[float] = None) -> PoincareMap:
    if t2 < t1:
        raise ValueError("need t1 <= t2")
    if t2 == t1:
        return make_map(np.eye(2), lam, (t1, t2))
    u, v = _columns(lam, V, t1, t2, h)
    P = np.array([[u.w[-1], v.w[-1]], [u.w_prime[-1], v.w_prime[-1]]])
    return make_map(P, lam, (t1, t2))


def shifted(V: Potential, f: Callable, s: float) -> Potential:
    """The rotationally symmetric potential V + s f."""
    base = V.cos_profiles[0]
    dbase = V.cos_derivs[0]

    def prof(t):
        return base(t) + s * np.asarray(f(t), dtype=float)

    return Potential.from_modes([prof], cos_derivs=[None] if s else [dbase], t_min=V.t_min, t_max=V.t_max, h=V.h)


# ---------------------------------------------------------------- perturbation derivative


def _response_integrals(lam, V, f, ell, h):
    u, v = _columns(lam, V, 0.0, ell, h)
    t = u.t
    fv = np.asarray(f(t), dtype=float) * np.ones_like(t)
    x = simpson(fv * u.w * v.w, x=t)
    y = simpson(fv * v.w**2, x=t)
    z = simpson(fv * u.w**2, x=t)
    P = np.array([[u.w[-1], v.w[-1]], [u.w_prime[-1], v.w_prime[-1]]])
    return P, np.array([x, y, z])


def log_derivative(x: float, y: float, z: float) -> np.ndarray:
    """P^{-1} dP/ds for the perturbation V -> V + s f, from x = int f u v, y = int f v^2, z = int f u^2."""
    return np.array([[x, y], [-z, -x]])


@dataclass(frozen=True)
class PerturbationDerivative:
    dP: np.ndarray
    log_derivative: np.ndarray
    P: np.ndarray
    integrals: np.ndarray  # (int f u v, int f v^2, int f u^2)
    trace_residual: float
    quadrature_gap: float


def perturbation_derivative(
    V: Potential,
    f: Callable,
    lam: float,
    ell: float,
    h: Optional[float] = None,
    check_tol: float = 1e-4,
) -> PerturbationDerivative:
    """dP_{0,ell}/ds at s = 0 for w'' = (lambda - V - s f) w.

    u, v are the solutions with Cauchy data (1, 0) and (0, 1) at t = 0.
    """
    ends = np.abs(np.asarray(f(np.array([0.0, ell])), dtype=float))
    if np.any(ends > 1e-10):
        raise ValueError(f"perturbation must vanish at both ends, got |f| = {ends.max():.3g}")
    h = V.h if h is None else h
    P, ints = _response_integrals(lam, V, f, ell, h)
    _, ints_fine = _response_integrals(lam, V, f, ell, 0.5 * h)
    scale = max(1.0, float(np.max(np.abs(ints_fine))))
    gap = float(np.max(np.abs(ints - ints_fine)) / scale)
    if gap > check_tol:
        raise ArithmeticError(f"quadrature inconsistency between h and h/2: {gap:.3g}")
    B = log_derivative(*ints_fine)
    tr = float(abs(B[0, 0] + B[1, 1]))
    if tr > 1e-8:
        raise ArithmeticError(f"trace of P^-1 dP/ds is {tr:.3g}, expected 0")
    return PerturbationDerivative(P @ B, B, P, ints_fine, tr, gap)


# ---------------------------------------------------------------- hyperbolization


@dataclass(frozen=True)
class HyperbolizeResult:
    f: Optional[Callable]
    s: float
    new_trace: float
    old_trace: float
    direction: str
    notices: tuple = ()
    sweep: tuple = ()


def _directions(lam, V, ell, h):
    """Splined directions sin(pi t / ell) * {u^2, v^2, uv} and the weights (uv, v^2, u^2)."""
    u, v = _columns(lam, V, 0.0, ell, h)
    t = u.t
    uu, vv, uv = u.w**2, v.w**2, u.w * v.w
    bump = np.sin(np.pi * t / ell)
    fns = {name: CubicSpline(t, bump * prof) for name, prof in (("u2", uu), ("v2", vv), ("uv", uv))}
    return t, fns, (uv, vv, uu)


def hyperbolize(
    V: Potential,
    lam: float,
    ell: float,
    h: Optional[float] = None,
    target: float = HYPERBOLIZE_TARGET,
    cap: int = SWEEP_CAP,
) -> HyperbolizeResult:
    """Perturb a parabolic period map along u^2, v^2, uv responses until |trace| >= target."""
    h = V.h if h is None else h
    P0 = compute_map(lam, V, 0.0, ell, h)
    if P0.classification.kind != "parabolic":
        return HyperbolizeResult(None, 0.0, P0.trace, P0.trace, "none", ("period map is not parabolic; unchanged",))
    t, fns, weights = _directions(lam, V, ell, h)
    names = list(fns)
    B = []
    grads = []
    P = P0.matrix
    for name in names:
        x, y, z = (simpson(fns[name](t) * w, x=t) for w in weights)
        B.append((x, y, z))
        grads.append((P[0, 0] - P[1, 1]) * x + P[1, 0] * y - P[0, 1] * z)
    grads = np.array(grads)
    sgn = 1.0 if P0.trace >= 0 else -1.0
    scale = max(1.0, float(np.max(np.abs(B))))
    if np.max(np.abs(grads)) > 1e-6 * scale:
        coef = sgn * grads / np.linalg.norm(grads)
        label = "trace-gradient"
    else:
        # P = +-I: first order vanishes; the trace moves at second order by -det(P^-1 dP/ds)
        disc = [x * x - y * z for x, y, z in B]
        k = int(np.argmax(disc))
        coef = np.zeros(len(names))
        coef[k] = 1.0
        label = names[k]

    tt = np.linspace(0.0, ell, 1001)
    raw = sum(c * fns[n](tt) for c, n in zip(coef, names))
    norm = float(np.max(np.abs(raw))) or 1.0

    def f(tv):
        tv = np.asarray(tv, dtype=float)
        inside = (tv >= 0) & (tv <= ell)
        val = sum(c * fns[n](np.clip(tv, 0.0, ell)) for c, n in zip(coef, names)) / norm
        return np.where(inside, val, 0.0)

    sweep = []
    for i in range(cap):
        s = 1e-3 * 2.0**i
        for sign in (1.0, -1.0):
            Ps = compute_map(lam, shifted(V, f, sign * s), 0.0, ell, h)
            sweep.append((sign * s, Ps.trace))
            if abs(Ps.trace) >= target:
                return HyperbolizeResult(
                    lambda tv, _s=sign: _s * f(tv), s, Ps.trace, P0.trace, label, (), tuple(sweep)
                )
    raise RuntimeError(f"hyperbolize sweep cap reached; trace curve {sweep}")


# ---------------------------------------------------------------- periodic decay


@dataclass(frozen=True)
class ModeDecay:
    lam: float
    generic: bool
    c: Optional[float] = None
    rate: Optional[float] = None
    eigenvector: Optional[np.ndarray] = None
    contraction_error: Optional[float] = None
    notice: str = ""

    @property
    def contraction_ok(self) -> bool:
        return self.contraction_error is not None and self.contraction_error <= 0.05


def periodic_mode_decay(V: Potential, lambdas, ell: float, T: float = 0.0, h: Optional[float] = None, periods: int = 3):
    """Decaying direction of each hyperbolic period map P_{T,T+ell}, checked by integrating `periods` periods."""
    out = []
    for lam in lambdas:
        P = compute_map(lam, V, T, T + ell, h)
        cls = P.classification
        if cls.kind != "hyperbolic":
            out.append(ModeDecay(float(lam), False, notice=f"non-generic: period map is {cls.kind}"))
            continue
        c = cls.c
        v2 = cls.eigenvectors[:, 1]
        v2 = v2 / np.linalg.norm(v2)
        if v2[0] < 0:
            v2 = -v2
        tr = integrate_mode(lam, V, (T, T + periods * ell), tuple(v2), h)
        ratio = float(np.hypot(tr.w[-1], tr.w_prime[-1]))
        err = abs(ratio * abs(c) ** periods - 1.0)
        out.append(ModeDecay(float(lam), True, float(c), math.log(abs(c)) / ell, v2, err))
    return out
