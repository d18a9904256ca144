"""Closed-form solutions for the potential V(t) = 2 sech^2 t and its bound-state scan."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .field_solver import FieldTrajectory
from .mode_dynamics import integrate_mode
from .poincare import PoincareMap, make_map
from .potentials import Potential, build_preset
from .spectral_basis import circle_basis

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2 * math.pi)


def _sech(t):
    return 1.0 / np.cosh(t)


# profile, first and second derivative for each radial solution
def _tanh3(t):
    th, s2 = np.tanh(t), _sech(t) ** 2
    return th, s2, -2.0 * s2 * th


def _sech3(t):
    s, th = _sech(t), np.tanh(t)
    return s, -s * th, s * th * th - s**3


def _k0_growing3(t):
    th, s2 = np.tanh(t), _sech(t) ** 2
    return 1.0 - t * th, -th - t * s2, -2.0 * s2 + 2.0 * t * s2 * th


def _k1_growing3(t):
    # (sinh 2t + 2t) sech t
    g = np.sinh(2 * t) + 2 * t
    dg = 2 * np.cosh(2 * t) + 2
    ddg = 4 * np.sinh(2 * t)
    s, th = _sech(t), np.tanh(t)
    ds = -s * th
    dds = s * th * th - s**3
    return g * s, dg * s + g * ds, ddg * s + 2 * dg * ds + g * dds


@dataclass(frozen=True)
class ClosedFormSolution:
    label: str
    mode: int  # slot in the circle basis: 0 const, 1 sin, 2 cos
    wave_number: int
    amplitude: float  # coefficient scale so that [u]_mode = amplitude * profile
    radial: Callable
    growth: str

    def coefficient(self, t):
        w, dw, ddw = self.radial(np.asarray(t, dtype=float))
        return self.amplitude * w, self.amplitude * dw, self.amplitude * ddw

    def evaluate(self, theta, t) -> np.ndarray:
        """u(theta, t) on the tensor grid, shape (len(t), len(theta))."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        w = self.radial(np.atleast_1d(np.asarray(t, dtype=float)))[0]
        if self.mode == 0:
            ang = np.ones_like(theta) / SQRT_2PI
        elif self.mode == 1:
            ang = np.sin(theta) / SQRT_PI
        else:
            ang = np.cos(theta) / SQRT_PI
        return self.amplitude * np.outer(w, ang)

    def kernel_residual(self, t) -> np.ndarray:
        """|w'' - (k^2 - 2 sech^2) w| from the analytic derivatives."""
        w, _, ddw = self.radial(np.asarray(t, dtype=float))
        return np.abs(ddw - (self.wave_number**2 - 2.0 * _sech(t) ** 2) * w)


SOLUTIONS = {
    "N1": ClosedFormSolution("N1", 1, 1, SQRT_PI, _sech3, "decaying"),
    "N2": ClosedFormSolution("N2", 2, 1, -SQRT_PI, _sech3, "decaying"),
    "N3": ClosedFormSolution("N3", 0, 0, SQRT_2PI, _tanh3, "bounded"),
    "k0_growing": ClosedFormSolution("k0_growing", 0, 0, SQRT_2PI, _k0_growing3, "linear"),
    "k1_growing": ClosedFormSolution("k1_growing", 1, 1, SQRT_PI, _k1_growing3, "growing"),
    "k1_decaying": ClosedFormSolution("k1_decaying", 1, 1, SQRT_PI, _sech3, "decaying"),
}


def catenoid_potential(t_min: float = 0.0, T: float = 2.0, h: float = 0.01) -> Potential:
    return build_preset("catenoid", {"t_min": t_min, "T": T, "h": h})


def closed_form_field(
    label: str,
    t_min: float = 0.0,
    T: float = 2.0,
    h: float = 0.01,
    k_max: int = 2,
) -> FieldTrajectory:
    """Field with analytic coefficients and derivatives on a uniform grid."""
    if label not in SOLUTIONS:
        raise KeyError(f"unknown closed form '{label}'; choose from {', '.join(SOLUTIONS)}")
    sol = SOLUTIONS[label]
    basis = circle_basis(k_max)
    n = max(1, int(round((T - t_min) / h)))
    t = np.linspace(t_min, T, n + 1)
    a = np.zeros((t.size, basis.size))
    b = np.zeros_like(a)
    w, dw, _ = sol.coefficient(t)
    a[:, sol.mode] = w
    b[:, sol.mode] = dw
    V = catenoid_potential(t_min, T, h)
    return FieldTrajectory(basis, t, a, b, V, label)


def closed_form_poincare(t: float) -> PoincareMap:
    if t < 0:
        raise ValueError("closed form is stated for t >= 0")
    th = math.tanh(t)
    s2 = 1.0 / math.cosh(t) ** 2
    P = np.array([[1.0 - t * th, th], [-th - t * s2, s2]])
    return make_map(P, 0.0, (0.0, t))


# ---------------------------------------------------------------- spectrum scan


@dataclass(frozen=True)
class ScanReport:
    k: int
    lambdas: np.ndarray
    coefficients: np.ndarray
    eigenfunction_residual: float
    min_abs: float
    sign_changes: int
    bound_state_free: bool


def growing_coefficient(lam: float, k: int, T: float = 8.0, h: float = 0.01) -> float:
    """Normalised coefficient of the growing exponential at +T for the solution decaying at -infinity.

    Solves w'' + 2 sech^2(t) w = (k^2 - lambda) w, seeded at -T with the
    constant-coefficient decaying data (1, sqrt(q)), q = k^2 - lambda.
    Zero means a bound state at lambda.
    """
    q = k * k - lam
    if q <= 0:
        raise ValueError(f"scan needs lambda < k^2 (got lambda={lam}, k={k})")
    kap = math.sqrt(q)
    V = build_preset("catenoid", {"t_min": -T, "T": T, "h": h})
    tr = integrate_mode(q, V, (-T, T), (1.0, kap), h)
    u, du = tr.w[-1], tr.w_prime[-1]
    return (kap * u + du) / (2.0 * kap) * math.exp(-2.0 * kap * T)


def eigenfunction_residual(T: float = 8.0, h: float = 0.01) -> float:
    """max |sech'' + 2 sech^3 - sech| on [-T, T], sech'' from its product-rule form."""
    t = np.linspace(-T, T, int(round(2 * T / h)) + 1)
    s, _, dds = _sech3(t)
    return float(np.max(np.abs(dds + 2.0 * s**3 - s)))


def spectrum_scan(lambdas, k: int, T: float = 8.0, h: float = 0.01, delta: float = 0.05) -> ScanReport:
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam <= -1.0 + delta) or np.any(lam >= -delta):
        raise ValueError(f"scan grid must stay inside (-1 + {delta}, -{delta})")
    if T < 6:
        raise ValueError("scan span needs T >= 6")
    coef = np.array([growing_coefficient(x, k, T, h) for x in lam])
    signs = np.sign(coef)
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    min_abs = float(np.min(np.abs(coef)))
    ok = changes == 0 and min_abs > 1e-6
    return ScanReport(k, lam, coef, eigenfunction_residual(T, h), min_abs, changes, ok)


def write_scan_csv(report: ScanReport, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["lambda", "growing_coefficient"])
        for x, c in zip(report.lambdas, report.coefficients):
            wr.writerow([f"{x:.12g}", f"{c:.12g}"])
