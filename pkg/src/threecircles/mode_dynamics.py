"""Single Fourier mode w'' = (lambda - V(t)) w for rotationally symmetric potentials."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DichotomyViolated, DynamicRangeError, HypothesisViolated
from .potentials import Potential
from .spectral_basis import CIRCLE, SpectralBasis

OVERFLOW_LIMIT = 1e300
GROWTH_TOL = 0.05
TAIL_FRACTION = 0.25


@dataclass(frozen=True)
class ModeTrajectory:
    lam: float
    t: np.ndarray
    w: np.ndarray
    w_prime: np.ndarray
    h: float
    order: int = 4
    potential: Optional[Potential] = field(default=None, repr=False, compare=False)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def endpoint(self) -> np.ndarray:
        return np.array([self.w[-1], self.w_prime[-1]])

    def residual(self) -> np.ndarray:
        """|w'' - (lambda - V) w| at interior nodes, w'' by central differences of w'."""
        wpp = np.gradient(self.w_prime, self.t, edge_order=2)
        q = self.lam - self.potential.symmetric_profile(self.t)
        return np.abs(wpp - q * self.w)[1:-1]


def step_count(t0: float, t1: float, h: float) -> int:
    if h <= 0:
        raise ValueError(f"step must be positive, got h={h}")
    return max(1, int(math.ceil(abs(t1 - t0) / h - 1e-9)))


def rk4_linear(q_nodes: np.ndarray, q_half: np.ndarray, h: float, w0: float, p0: float, t: np.ndarray):
    """Classic RK4 for w' = p, p' = q(t) w with q sampled at nodes and half steps.

    Plain-float loop: this is the inner kernel of every 2x2 problem.
    """
    n = q_half.size
    w = np.empty(n + 1)
    p = np.empty(n + 1)
    w[0], p[0] = w0, p0
    qn = q_nodes.tolist()
    qh = q_half.tolist()
    a, b = float(w0), float(p0)
    hh = 0.5 * h
    for i in range(n):
        q0, qm, q1 = qn[i], qh[i], qn[i + 1]
        k1w, k1p = b, q0 * a
        k2w = b + hh * k1p
        k2p = qm * (a + hh * k1w)
        k3w = b + hh * k2p
        k3p = qm * (a + hh * k2w)
        k4w = b + h * k3p
        k4p = q1 * (a + h * k3w)
        a += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        b += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if not (abs(a) < OVERFLOW_LIMIT and abs(b) < OVERFLOW_LIMIT):
            raise DynamicRangeError(f"dynamic range exceeded at t={t[i + 1]:.6g}")
        w[i + 1] = a
        p[i + 1] = b
    return w, p


def integrate_mode(
    lam: float,
    V: Potential,
    span: tuple[float, float],
    init: tuple[float, float],
    h: Optional[float] = None,
) -> ModeTrajectory:
    """Fixed-step RK4 for the mode equation; the step is h (default V.h) shrunk to divide the span."""
    t0, t1 = float(span[0]), float(span[1])
    V.check_domain(t0, t1)
    n = step_count(t0, t1, V.h if h is None else h)
    t = np.linspace(t0, t1, n + 1)
    hs = (t1 - t0) / n
    q_nodes = lam - V.symmetric_profile(t)
    q_half = lam - V.symmetric_profile(t[:-1] + 0.5 * hs)
    w, p = rk4_linear(q_nodes, q_half, hs, float(init[0]), float(init[1]), t)
    return ModeTrajectory(float(lam), t, w, p, abs(hs), 4, V)


# ---------------------------------------------------------------- comparison


@dataclass(frozen=True)
class ComparisonReport:
    holds: bool
    worst_margin: float
    worst_t: float
    claims: tuple
    notices: tuple = ()


def comparison_check(traj: ModeTrajectory, K: float, tol: float = 1e-6) -> ComparisonReport:
    """Cosh lower bounds for a trajectory obeying w'' >= K^2 w.

    The hypothesis is checked as (lambda - V - K^2) w >= 0 on the grid.
    Claim 1 (w'(0) >= 0) and claim 3 (-K w(0) < w'(0) < 0) compare on t >= t0;
    claim 2 (w'(0) <= 0) is the reflected statement and compares on t <= t0,
    which applies to trajectories integrated backwards.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    t, w, p = traj.t, traj.w, traj.w_prime
    if w[0] <= 0:
        raise HypothesisViolated("comparison needs w(t0) > 0")
    q = traj.lam - traj.potential.symmetric_profile(t) - K * K
    hyp = q * w
    bad = np.nonzero(hyp < -tol * (1.0 + np.abs(traj.lam * w)))[0]
    if bad.size:
        raise HypothesisViolated(f"hypothesis violated at t={t[bad[0]]:.6g}: w'' < K^2 w")
    s = t - t[0]
    w0, p0 = w[0], p[0]
    forward = t[-1] >= t[0]
    claims = []
    bounds = []
    if forward and p0 >= 0:
        claims.append(1)
        bounds.append(w0 * np.cosh(K * s))
    if not forward and p0 <= 0:
        claims.append(2)
        bounds.append(w0 * np.cosh(K * s))
    if forward and -K * w0 < p0 < 0:
        claims.append(3)
        bounds.append((K * w0 + p0) / (2 * K) * np.exp(K * s) + (K * w0 - p0) / (2 * K) * np.exp(-K * s))
    if not claims:
        return ComparisonReport(True, math.inf, float(t[0]), (), ("no claim applies to this initial slope",))
    margins = np.min([w - b for b in bounds], axis=0)
    scale = np.max([np.abs(b) for b in bounds], axis=0) + np.abs(w)
    i = int(np.argmin(margins / scale))
    holds = bool(np.all(margins >= -tol * scale))
    return ComparisonReport(holds, float(margins[i]), float(t[i]), tuple(claims))


# ---------------------------------------------------------------- growth / decay


@dataclass(frozen=True)
class GrowthClass:
    kind: str  # "growing" or "decaying"
    rate: float
    bound: float


def fit_tail_rate(traj: ModeTrajectory, fraction: float = TAIL_FRACTION) -> float:
    """Least-squares slope of log(|w| + |w'|) over the last fraction of the span."""
    mag = np.abs(traj.w) + np.abs(traj.w_prime)
    if not np.any(mag > 0):
        raise ValueError("trivial solution: trajectory is identically zero")
    n = traj.t.size
    start = min(n - 2, int(math.floor((1.0 - fraction) * (n - 1))))
    tt = traj.t[start:]
    ll = np.log(np.maximum(mag[start:], np.finfo(float).tiny))
    slope = np.polyfit(tt, ll, 1)[0]
    return float(slope)


def classify_growth(lam: float, V: Potential, traj: ModeTrajectory, tol: float = GROWTH_TOL) -> GrowthClass:
    sup_v = float(max(np.max(V.symmetric_profile(V.t_grid)), np.max(V.symmetric_profile(traj.t))))
    if lam <= sup_v:
        raise HypothesisViolated(f"dichotomy needs lambda > sup V ({lam} <= {sup_v})")
    k = math.sqrt(lam - sup_v)
    rate = fit_tail_rate(traj)
    if rate >= k - tol:
        return GrowthClass("growing", rate, k)
    if rate <= -k + tol:
        return GrowthClass("decaying", rate, k)
    raise DichotomyViolated(f"dichotomy violated: fitted rate {rate:.6g} inside (-{k:.6g}, {k:.6g})")


# ---------------------------------------------------------------- dimension bound


def dim_bound(basis: SpectralBasis, sup_v: float) -> int:
    """2 * #{j : lambda_j <= sup V}."""
    lam = basis.eigenvalues
    if lam[-1] <= sup_v:
        raise ValueError(f"truncation too small: lambda_max={lam[-1]:g} <= sup V={sup_v:g}")
    return 2 * int(np.count_nonzero(lam <= sup_v))


def circle_dim_cap(sup_v: float) -> float:
    """Closed-form circle bound 4 sqrt(sup V) + 2, or 0 when sup V < 0."""
    if sup_v < 0:
        return 0.0
    return 4.0 * math.sqrt(sup_v) + 2.0


def dimension_report(basis: SpectralBasis, sup_v: float) -> dict:
    out = {"bound": dim_bound(basis, sup_v)}
    if basis.cross_section == CIRCLE:
        out["circle_cap"] = circle_dim_cap(sup_v)
    return out


def write_csv(traj: ModeTrajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "w", "w_prime"])
        for row in zip(traj.t, traj.w, traj.w_prime):
            wr.writerow([f"{x:.12g}" for x in row])
