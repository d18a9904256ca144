"""Galerkin evolution of Cauchy data and the slice energy functionals built from it.

Mode coefficients evolve by

    a_j'' = lambda_j a_j - [V u]_j

where [V u] is projected onto the truncated basis.  Everything downstream
(identities, inequalities, frequency) reads the coefficient histories a, b = a'.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DynamicRangeError, NodalSliceError
from .mode_dynamics import OVERFLOW_LIMIT, step_count
from .potentials import Potential, multiplication_matrices
from .spectral_basis import CIRCLE, SpectralBasis


@dataclass(frozen=True)
class FieldTrajectory:
    basis: SpectralBasis
    t: np.ndarray
    a: np.ndarray  # (n_t, J) coefficients [u]_j
    b: np.ndarray  # (n_t, J) derivatives [u_t]_j
    potential: Potential = field(repr=False)
    label: Optional[str] = None

    def __post_init__(self):
        if self.a.shape != self.b.shape or self.a.shape != (self.t.size, self.basis.size):
            raise ValueError("coefficient arrays must be (len(t), basis size)")

    @property
    def h(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def k_max(self) -> int:
        return self.basis.max_wave_number

    def galerkin(self) -> np.ndarray:
        """Projected [V u]_j at the trajectory nodes."""
        return np.einsum("tjl,tl->tj", self.matrices(self.t), self.a)

    def galerkin_dt(self) -> np.ndarray:
        """Projected [d_t (V u)]_j = P(V_t u + V u_t)."""
        M = self.matrices(self.t)
        Mt = self.matrices(self.t, derivative=True)
        return np.einsum("tjl,tl->tj", Mt, self.a) + np.einsum("tjl,tl->tj", M, self.b)

    def matrices(self, t, derivative: bool = False) -> np.ndarray:
        V = self.potential.derivative() if derivative else self.potential
        if self.basis.cross_section != CIRCLE:
            return V.symmetric_profile(np.atleast_1d(t))[:, None, None] * np.eye(self.basis.size)
        return multiplication_matrices(V, t, self.k_max)

    def slice_at(self, t0: float) -> tuple[np.ndarray, np.ndarray, int]:
        i = int(np.argmin(np.abs(self.t - t0)))
        if abs(self.t[i] - t0) > 1e-9 * max(1.0, abs(t0)):
            raise ValueError(f"t0={t0} is not a grid node")
        return self.a[i], self.b[i], i

    @property
    def dynamic_range(self) -> float:
        lam = self.basis.eigenvalues
        I = (self.b**2 + (1.0 + lam) * self.a**2).sum(axis=1)
        lo = I.min()
        return math.inf if lo == 0 else float(I.max() / lo)


def _check_potential(V: Potential, basis: SpectralBasis) -> None:
    if basis.cross_section != CIRCLE and not V.is_symmetric:
        raise ValueError("theta-dependent potentials need a circle basis")


def evolve_field(
    V: Potential,
    basis: SpectralBasis,
    cauchy: tuple[np.ndarray, np.ndarray],
    span: tuple[float, float],
    h: Optional[float] = None,
    label: Optional[str] = None,
) -> FieldTrajectory:
    """RK4 on the coupled first-order system y = (a, b), y' = (b, (Lambda - M(t)) a)."""
    _check_potential(V, basis)
    a0 = np.asarray(cauchy[0], dtype=float)
    b0 = np.asarray(cauchy[1], dtype=float)
    if a0.shape != (basis.size,) or b0.shape != (basis.size,):
        raise ValueError(f"Cauchy data must have {basis.size} modes")
    t0, t1 = float(span[0]), float(span[1])
    V.check_domain(t0, t1)
    n = step_count(t0, t1, V.h if h is None else h)
    t = np.linspace(t0, t1, n + 1)
    hs = (t1 - t0) / n
    lam = basis.eigenvalues
    nodes = np.empty(2 * n + 1)
    nodes[0::2] = t
    nodes[1::2] = t[:-1] + 0.5 * hs
    if basis.cross_section == CIRCLE:
        M = multiplication_matrices(V, nodes, basis.max_wave_number)
        A = np.diag(lam)[None] - M
    else:
        A = None
        q = lam[None, :] - V.symmetric_profile(nodes)[:, None]

    a = np.empty((n + 1, basis.size))
    b = np.empty((n + 1, basis.size))
    a[0], b[0] = a0, b0
    x, y = a0.copy(), b0.copy()
    for i in range(n):
        if A is not None:
            op0, opm, op1 = A[2 * i], A[2 * i + 1], A[2 * i + 2]
            f0 = lambda z: op0 @ z  # noqa: E731
            fm = lambda z: opm @ z  # noqa: E731
            f1 = lambda z: op1 @ z  # noqa: E731
        else:
            q0, qm, q1 = q[2 * i], q[2 * i + 1], q[2 * i + 2]
            f0 = lambda z: q0 * z  # noqa: E731
            fm = lambda z: qm * z  # noqa: E731
            f1 = lambda z: q1 * z  # noqa: E731
        k1x, k1y = y, f0(x)
        k2x, k2y = y + 0.5 * hs * k1y, fm(x + 0.5 * hs * k1x)
        k3x, k3y = y + 0.5 * hs * k2y, fm(x + 0.5 * hs * k2x)
        k4x, k4y = y + hs * k3y, f1(x + hs * k3x)
        x = x + hs / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + hs / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        if not (np.all(np.abs(x) < OVERFLOW_LIMIT) and np.all(np.abs(y) < OVERFLOW_LIMIT)):
            raise DynamicRangeError(f"dynamic range exceeded at t={t[i + 1]:.6g}")
        a[i + 1], b[i + 1] = x, y
    return FieldTrajectory(basis, t, a, b, V, label)


def field_from_functions(
    basis: SpectralBasis,
    t: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    V: Potential,
    label: Optional[str] = None,
) -> FieldTrajectory:
    return FieldTrajectory(basis, np.asarray(t, float), np.asarray(a, float), np.asarray(b, float), V, label)


# ---------------------------------------------------------------- energies


def _fsum_rows(x: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in x])


@dataclass(frozen=True)
class EnergyProfile:
    t: np.ndarray
    I: np.ndarray
    J: np.ndarray
    H: np.ndarray
    L: np.ndarray
    Hbar: np.ndarray
    Lbar: np.ndarray
    dJ: np.ndarray
    U: np.ndarray
    m: int

    def columns(self) -> dict:
        return {
            "t": self.t,
            "I": self.I,
            "J": self.J,
            "H_m": self.H,
            "L_m": self.L,
            "Hbar_m": self.Hbar,
            "Lbar_m": self.Lbar,
            "U": self.U,
        }


def mode_energies(field: FieldTrajectory) -> np.ndarray:
    """E_j = ([u]_j')^2 + (1 + lambda_j) [u]_j^2, shape (n_t, J)."""
    return field.b**2 + (1.0 + field.basis.eigenvalues) * field.a**2


def energy_profile(field: FieldTrajectory, m: int) -> EnergyProfile:
    if not 0 <= m <= field.basis.size:
        raise ValueError(f"cut m={m} outside 0..{field.basis.size}")
    E = mode_energies(field)
    a2 = field.a**2
    H = _fsum_rows(E[:, m:])
    L = _fsum_rows(E[:, :m])
    Hb = _fsum_rows(a2[:, m:])
    Lb = _fsum_rows(a2[:, :m])
    # I and J are defined as the sums of their splits so the splits add up exactly
    I = H + L
    J = Hb + Lb
    dJ = 2.0 * _fsum_rows(field.a * field.b)
    with np.errstate(divide="ignore", invalid="ignore"):
        U = np.where(J > 0, dJ / J, np.nan)
    return EnergyProfile(field.t, I, J, H, L, Hb, Lb, dJ, U, m)


def write_profile_csv(profile: EnergyProfile, path) -> None:
    cols = profile.columns()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(list(cols))
        for row in zip(*cols.values()):
            wr.writerow([f"{x:.12g}" for x in row])


# ---------------------------------------------------------------- frequency


@dataclass(frozen=True)
class FrequencyProfile:
    t: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    equipartition: np.ndarray  # sum lambda a^2 - sum b^2 (>= 0 where the drift bound applies)
    J: np.ndarray
    sup_v: float
    drift_constant: float

    @property
    def drift_margin(self) -> np.ndarray:
        """U' + C sup|V| at every node."""
        return self.dU + self.drift_constant * self.sup_v

    @property
    def general_margin(self) -> np.ndarray:
        """U' - (2 D / J - 2 sup|V|), which is nonnegative for every solution."""
        return self.dU - (2.0 * self.equipartition / self.J - 2.0 * self.sup_v)

    def min_drift(self, where_equipartition: bool = True) -> float:
        mask = self.equipartition >= 0 if where_equipartition else np.ones_like(self.U, bool)
        if not np.any(mask):
            return math.inf
        return float(np.min(self.drift_margin[mask]))


def frequency_profile(field: FieldTrajectory, drift_constant: float = 2.0) -> FrequencyProfile:
    """U = J'/J and U' = J''/J - U^2 with J' = 2 sum a b, J'' = 2 sum (b^2 + lambda a^2 - a [Vu])."""
    lam = field.basis.eigenvalues
    J = _fsum_rows(field.a**2)
    if np.any(J <= 0):
        i = int(np.argmin(J))
        raise NodalSliceError(f"nodal slice: J vanishes at t={field.t[i]:.6g}")
    dJ = 2.0 * _fsum_rows(field.a * field.b)
    g = field.galerkin()
    ddJ = 2.0 * _fsum_rows(field.b**2 + lam * field.a**2 - field.a * g)
    U = dJ / J
    dU = ddJ / J - U**2
    D = _fsum_rows(lam * field.a**2 - field.b**2)
    return FrequencyProfile(field.t, U, dU, D, J, field.potential.sup_norm, drift_constant)


# ---------------------------------------------------------------- symplectic form


def symplectic_form(uf: FieldTrajectory, vf: FieldTrajectory, t0: float) -> float:
    """sum_j [u]_j [v_t]_j - [v]_j [u_t]_j on the slice t = t0."""
    if uf.basis.size != vf.basis.size or not np.array_equal(uf.basis.eigenvalues, vf.basis.eigenvalues):
        raise ValueError("fields have mismatched truncations")
    if uf.potential is not vf.potential and uf.potential.describe() != vf.potential.describe():
        raise ValueError("fields solve different equations")
    au, bu, _ = uf.slice_at(t0)
    av, bv, _ = vf.slice_at(t0)
    return math.fsum(np.concatenate([au * bv, -av * bu]))
