"""Potentials V(theta, t) on the flat cylinder, stored as theta-Fourier stacks of t-profiles.

    V(theta, t) = sum_{k=0}^{K} C_k(t) cos(k theta) + S_k(t) sin(k theta)

Profiles are vectorised callables of t, so Runge-Kutta stages can evaluate V
between grid nodes.  The uniform t-grid attached to a potential is used for
norms and export only.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import fourier

Profile = Callable[[np.ndarray], np.ndarray]

PRESETS = (
    "zero",
    "constant",
    "catenoid",
    "rescaled_catenoid",
    "compact_bump",
    "periodic_cos",
    "tabulated",
    "random_band",
)

THETA_SAMPLES_MIN = 64


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _numeric_derivative(fn: Profile, step: float = 1e-3) -> Profile:
    # 4th-order central difference; used only when no analytic derivative is supplied
    def d(t):
        t = np.asarray(t, dtype=float)
        return (fn(t - 2 * step) - 8 * fn(t - step) + 8 * fn(t + step) - fn(t + 2 * step)) / (12 * step)

    return d


@dataclass(frozen=True)
class Potential:
    cos_profiles: tuple
    sin_profiles: tuple
    cos_derivs: tuple
    sin_derivs: tuple
    t_min: float = 0.0
    t_max: float = 1.0
    h: float = 0.01
    preset: Optional[str] = None
    params: Mapping = field(default_factory=dict)
    domain: Optional[tuple] = None  # (lo, hi) when profiles are only defined on a table

    @classmethod
    def from_modes(
        cls,
        cos_profiles: Sequence[Profile],
        sin_profiles: Optional[Sequence[Optional[Profile]]] = None,
        cos_derivs: Optional[Sequence[Optional[Profile]]] = None,
        sin_derivs: Optional[Sequence[Optional[Profile]]] = None,
        **kw,
    ) -> "Potential":
        K = len(cos_profiles) - 1
        sin_profiles = list(sin_profiles or [None] * (K + 1))
        cos_derivs = list(cos_derivs or [None] * (K + 1))
        sin_derivs = list(sin_derivs or [None] * (K + 1))
        if not (len(sin_profiles) == len(cos_derivs) == len(sin_derivs) == K + 1):
            raise ValueError("all profile lists must have K+1 entries")
        cp = tuple(cos_profiles)
        sp = tuple(p if p is not None else _zero for p in sin_profiles)
        cd = tuple(d if d is not None else (_zero if c is _zero else _numeric_derivative(c)) for c, d in zip(cp, cos_derivs))
        sd = tuple(d if d is not None else (_zero if s is _zero else _numeric_derivative(s)) for s, d in zip(sp, sin_derivs))
        return cls(cp, sp, cd, sd, **kw)

    @classmethod
    def rotationally_symmetric(cls, profile: Profile, derivative: Optional[Profile] = None, **kw) -> "Potential":
        return cls.from_modes([profile], cos_derivs=[derivative], **kw)

    @classmethod
    def from_samples(cls, t: np.ndarray, cos_table: np.ndarray, sin_table: Optional[np.ndarray] = None, **kw) -> "Potential":
        """Cubic-spline potential from tabulated mode profiles, tables shaped (K+1, len(t))."""
        t = np.asarray(t, dtype=float)
        cos_table = np.atleast_2d(np.asarray(cos_table, dtype=float))
        if sin_table is None:
            sin_table = np.zeros_like(cos_table)
        sin_table = np.atleast_2d(np.asarray(sin_table, dtype=float))
        if not (np.all(np.isfinite(cos_table)) and np.all(np.isfinite(sin_table))):
            raise ValueError("tabulated potential contains non-finite values")
        cps, sps, cds, sds = [], [], [], []
        for row_c, row_s in zip(cos_table, sin_table):
            sc = CubicSpline(t, row_c)
            ss = CubicSpline(t, row_s)
            cps.append(sc)
            sps.append(ss)
            cds.append(sc.derivative())
            sds.append(ss.derivative())
        kw.setdefault("t_min", float(t[0]))
        kw.setdefault("t_max", float(t[-1]))
        kw.setdefault("h", float(t[1] - t[0]))
        kw.setdefault("domain", (float(t[0]), float(t[-1])))
        return cls(tuple(cps), tuple(sps), tuple(cds), tuple(sds), **kw)

    @property
    def K(self) -> int:
        return len(self.cos_profiles) - 1

    @property
    def is_symmetric(self) -> bool:
        return self.K == 0

    @cached_property
    def t_grid(self) -> np.ndarray:
        n = max(1, int(round((self.t_max - self.t_min) / self.h)))
        return np.linspace(self.t_min, self.t_max, n + 1)

    def check_domain(self, t0: float, t1: float) -> None:
        if self.domain is None:
            return
        lo, hi = self.domain
        if min(t0, t1) < lo - 1e-12 or max(t0, t1) > hi + 1e-12:
            raise ValueError(f"span [{t0}, {t1}] leaves the tabulated range [{lo}, {hi}]")

    def modes(self, t) -> tuple[np.ndarray, np.ndarray]:
        """(C, S) arrays of shape (K+1,) + shape(t)."""
        t = np.asarray(t, dtype=float)
        C = np.array([np.broadcast_to(f(t), t.shape) for f in self.cos_profiles], dtype=float)
        S = np.array([np.broadcast_to(f(t), t.shape) for f in self.sin_profiles], dtype=float)
        return C, S

    def mode_derivatives(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        C = np.array([np.broadcast_to(f(t), t.shape) for f in self.cos_derivs], dtype=float)
        S = np.array([np.broadcast_to(f(t), t.shape) for f in self.sin_derivs], dtype=float)
        return C, S

    def symmetric_profile(self, t) -> np.ndarray:
        if not self.is_symmetric:
            raise ValueError("potential depends on theta (K > 0)")
        return np.broadcast_to(self.cos_profiles[0](np.asarray(t, dtype=float)), np.shape(t)).astype(float)

    def hat(self, t) -> np.ndarray:
        """Plain exponential coefficients V_p(t), shape shape(t) + (2K+1,)."""
        return fourier.potential_hat(*self.modes(t))

    def hat_dt(self, t) -> np.ndarray:
        return fourier.potential_hat(*self.mode_derivatives(t))

    def evaluate(self, theta, t) -> np.ndarray:
        """V on the tensor grid, shape (len(t), len(theta))."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        C, S = self.modes(np.atleast_1d(t))
        k = np.arange(self.K + 1)[:, None]
        return C.T @ np.cos(k * theta) + S.T @ np.sin(k * theta)

    def _theta_grid(self) -> np.ndarray:
        n = max(THETA_SAMPLES_MIN, 8 * (self.K + 1))
        return np.linspace(0.0, 2 * np.pi, n, endpoint=False)

    def _grad_components(self):
        theta = self._theta_grid()
        t = self.t_grid
        C, S = self.modes(t)
        Cd, Sd = self.mode_derivatives(t)
        k = np.arange(self.K + 1)[:, None]
        vt = Cd.T @ np.cos(k * theta) + Sd.T @ np.sin(k * theta)
        vth = C.T @ (-k * np.sin(k * theta)) + S.T @ (k * np.cos(k * theta))
        return vt, vth

    @cached_property
    def sup_norm(self) -> float:
        V = self.evaluate(self._theta_grid(), self.t_grid)
        if not np.all(np.isfinite(V)):
            raise ValueError("potential is not finite on its grid")
        return float(np.max(np.abs(V)))

    @cached_property
    def lip_estimate(self) -> float:
        """Largest difference quotient between adjacent grid nodes, in t and in theta."""
        theta = self._theta_grid()
        V = self.evaluate(theta, self.t_grid)
        lip = 0.0
        if V.shape[0] > 1:
            lip = max(lip, float(np.max(np.abs(np.diff(V, axis=0))) / (self.t_grid[1] - self.t_grid[0])))
        if self.K > 0:
            wrapped = np.concatenate([V, V[:, :1]], axis=1)
            lip = max(lip, float(np.max(np.abs(np.diff(wrapped, axis=1))) / (theta[1] - theta[0])))
        return lip

    @cached_property
    def gradient_sup(self) -> float:
        """sup |grad V| from the analytic (or spline) derivatives on the grid."""
        vt, vth = self._grad_components()
        return float(np.max(np.hypot(vt, vth)))

    def derivative(self) -> "Potential":
        """The potential d/dt V as its own Fourier stack (second derivative numeric)."""
        return Potential.from_modes(
            list(self.cos_derivs),
            list(self.sin_derivs),
            t_min=self.t_min,
            t_max=self.t_max,
            h=self.h,
            preset=None,
            domain=self.domain,
        )

    def with_grid(self, t_min: float, t_max: float, h: Optional[float] = None) -> "Potential":
        return Potential(
            self.cos_profiles,
            self.sin_profiles,
            self.cos_derivs,
            self.sin_derivs,
            t_min=t_min,
            t_max=t_max,
            h=self.h if h is None else h,
            preset=self.preset,
            params=self.params,
            domain=self.domain,
        )

    def describe(self) -> dict:
        return {
            "preset": self.preset,
            "params": {k: self.params[k] for k in sorted(self.params)},
            "K": self.K,
            "t_range": [self.t_min, self.t_max],
            "h": self.h,
        }


def c01_norm(V: Potential) -> tuple[float, float]:
    """(sup |V|, Lipschitz estimate) on the potential's grid."""
    return V.sup_norm, V.lip_estimate


# ---------------------------------------------------------------- products


def project_product(V: Potential, coeffs: np.ndarray, t: float) -> tuple[np.ndarray, float]:
    """Circle-basis coefficients of V u at one slice, plus the L^2 mass dropped by truncation.

    coeffs are the circle-basis coefficients of u (length 2k+1); the result has
    the same truncation.
    """
    a = np.asarray(coeffs, dtype=float)
    if a.ndim != 1 or a.size % 2 == 0:
        raise ValueError("coefficient vector must have odd length 2k+1 (circle basis)")
    k = (a.size - 1) // 2
    if V.is_symmetric:
        return float(V.symmetric_profile(t)) * a, 0.0
    w = fourier.convolve(V.hat(t), fourier.real_to_complex(a))
    kw = (w.size - 1) // 2
    kept = fourier.complex_to_real(w, k)
    outer = np.abs(w) ** 2
    outer[kw - k: kw + k + 1] = 0.0
    return kept, float(outer.sum())


def multiplication_matrices(V: Potential, t: np.ndarray, k_max: int) -> np.ndarray:
    """Batched Galerkin matrices int V phi_j phi_l at the given times, shape (len(t), J, J)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    J = 2 * k_max + 1
    if V.is_symmetric:
        return V.symmetric_profile(t)[:, None, None] * np.eye(J)
    return fourier.multiplication_matrices(V.hat(t), k_max)


def product_norms(V: Potential, a: np.ndarray, b: np.ndarray, t: np.ndarray) -> dict:
    """Untruncated slice integrals of the product Vu, for coefficient histories a, b = u, u_t.

    Returns arrays over t:
      'vu2'      int (Vu)^2
      'grad_n'   int |grad_N (Vu)|^2
      'dt2'      int (d_t (Vu))^2
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    vh = V.hat(t)
    vth = V.hat_dt(t)
    ca = fourier.real_to_complex(a)
    cb = fourier.real_to_complex(b)
    w = fourier.convolve(vh, ca)
    wt = fourier.convolve(vth, ca) + fourier.convolve(vh, cb)
    n = fourier.wave_numbers((w.shape[-1] - 1) // 2)
    aw = np.abs(w) ** 2
    return {
        "vu2": aw.sum(axis=-1),
        "grad_n": (aw * n**2).sum(axis=-1),
        "dt2": (np.abs(wt) ** 2).sum(axis=-1),
    }


# ---------------------------------------------------------------- transforms


def conformal_transform(V: Potential, f: Profile, f_prime: Optional[Profile] = None) -> Potential:
    """The potential e^{-2 f(t)} V for a t-dependent conformal exponent f."""
    grid = V.t_grid
    fv = np.asarray(f(grid), dtype=float) * np.ones_like(grid)
    if not np.all(np.isfinite(fv)):
        raise ValueError("conformal exponent is not finite on the grid")
    fp = f_prime or _numeric_derivative(f)

    def scaled(p, dp):
        def val(t):
            return np.exp(-2 * f(t)) * p(t)

        def der(t):
            return np.exp(-2 * f(t)) * (dp(t) - 2 * fp(t) * p(t))

        return val, der

    pairs_c = [scaled(p, d) for p, d in zip(V.cos_profiles, V.cos_derivs)]
    pairs_s = [scaled(p, d) for p, d in zip(V.sin_profiles, V.sin_derivs)]
    return Potential(
        tuple(p for p, _ in pairs_c),
        tuple(p for p, _ in pairs_s),
        tuple(d for _, d in pairs_c),
        tuple(d for _, d in pairs_s),
        t_min=V.t_min,
        t_max=V.t_max,
        h=V.h,
        preset=None,
        params={"conformal_of": V.preset},
        domain=V.domain,
    )


def polar_lift(
    decay_constant: float,
    sampler: Callable[[np.ndarray], np.ndarray],
    T: float,
    h: float = 0.01,
    max_wave_number: int = 16,
    n_theta: int = 128,
) -> Potential:
    """Cylinder potential e^{2t} V(e^t theta) of a planar potential V(x), x in R^2.

    The sampler receives points of shape (..., 2).  The angular dependence is
    resolved by FFT and truncated at max_wave_number; the t-dependence is
    splined on the grid [0, T].
    """
    t = np.linspace(0.0, T, int(round(T / h)) + 1)
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    r = np.exp(t)[:, None]
    x = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    vals = np.asarray(sampler(x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("sampler returned non-finite values")
    lifted = np.exp(2 * t)[:, None] * vals
    spec = np.fft.rfft(lifted, axis=1) / n_theta
    K = min(max_wave_number, n_theta // 2 - 1)
    amp = np.abs(spec[:, : K + 1]).max(axis=0)
    scale = max(amp.max(), 1e-300)
    keep = [k for k in range(K + 1) if amp[k] > 1e-12 * scale]
    K_eff = max(keep) if keep else 0
    cos_table = np.zeros((K_eff + 1, t.size))
    sin_table = np.zeros((K_eff + 1, t.size))
    cos_table[0] = spec[:, 0].real
    for k in range(1, K_eff + 1):
        cos_table[k] = 2 * spec[:, k].real
        sin_table[k] = -2 * spec[:, k].imag
    V = Potential.from_samples(t, cos_table, sin_table, preset="polar_lift", params={"C0": decay_constant})
    bound_ok = np.all(np.abs(vals) <= decay_constant * r**-2 * (1 + 1e-12))
    if bound_ok and np.max(np.abs(lifted)) > decay_constant * (1 + 1e-9):
        raise AssertionError("lifted potential exceeds the decay constant")
    return V


# ---------------------------------------------------------------- presets


def _sech(t):
    return 1.0 / np.cosh(t)


def _bump(x):
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out


def _bump_prime(x):
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi)) * (-2.0 * xi / (1.0 - xi * xi) ** 2)
    return out


def _require(params: Mapping, key: str) -> float:
    if key not in params:
        raise KeyError(f"missing required parameter '{key}'")
    return float(params[key])


def random_band_potential(seed: int, K: int = 2, sup: float = 0.5, T: float = 1.0, h: float = 0.01, n_freq: int = 2) -> Potential:
    """Smooth band-limited potential with K theta-modes, rescaled to the given sup norm."""
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(2, K + 1, n_freq))
    freqs = rng.uniform(0.2, 2.0, size=(2, K + 1, n_freq))
    phases = rng.uniform(0, 2 * np.pi, size=(2, K + 1, n_freq))
    amps[1, 0] = 0.0

    def make(idx, k):
        A, w, p = amps[idx, k], freqs[idx, k], phases[idx, k]

        def val(t):
            t = np.asarray(t, dtype=float)
            return sum(A[i] * np.cos(w[i] * t + p[i]) for i in range(n_freq)) * scale[0]

        def der(t):
            t = np.asarray(t, dtype=float)
            return sum(-A[i] * w[i] * np.sin(w[i] * t + p[i]) for i in range(n_freq)) * scale[0]

        return val, der

    scale = [1.0]
    pc = [make(0, k) for k in range(K + 1)]
    ps = [make(1, k) for k in range(K + 1)]
    V = Potential.from_modes(
        [p for p, _ in pc],
        [p for p, _ in ps],
        [d for _, d in pc],
        [d for _, d in ps],
        t_min=0.0,
        t_max=T,
        h=h,
    )
    raw = V.sup_norm
    scale[0] = sup / raw if raw > 0 else 0.0
    return Potential.from_modes(
        [p for p, _ in pc],
        [p for p, _ in ps],
        [d for _, d in pc],
        [d for _, d in ps],
        t_min=0.0,
        t_max=T,
        h=h,
        preset="random_band",
        params={"seed": seed, "K": K, "sup": sup},
    )


def build_preset(name: str, params: Optional[Mapping] = None) -> Potential:
    """Named potential on the grid [params.t_min (0), params.T (1)] with step params.h (0.01)."""
    params = dict(params or {})
    if name not in PRESETS:
        raise KeyError(f"unknown preset '{name}'; choose from {', '.join(PRESETS)}")
    grid = {
        "t_min": float(params.get("t_min", 0.0)),
        "t_max": float(params.get("T", 1.0)),
        "h": float(params.get("h", 0.01)),
    }
    meta = {"preset": name, "params": params}

    if name == "zero":
        return Potential.rotationally_symmetric(_zero, _zero, **grid, **meta)
    if name == "constant":
        c = _require(params, "c")
        return Potential.rotationally_symmetric(lambda t: np.full(np.shape(t), c), _zero, **grid, **meta)
    if name == "catenoid":
        return Potential.rotationally_symmetric(
            lambda t: 2.0 * _sech(t) ** 2,
            lambda t: -4.0 * _sech(t) ** 2 * np.tanh(t),
            **grid,
            **meta,
        )
    if name == "rescaled_catenoid":
        eps = _require(params, "eps")
        return Potential.rotationally_symmetric(
            lambda t: eps**2 * 2.0 * _sech(eps * np.asarray(t)) ** 2,
            lambda t: -4.0 * eps**3 * _sech(eps * np.asarray(t)) ** 2 * np.tanh(eps * np.asarray(t)),
            **grid,
            **meta,
        )
    if name == "compact_bump":
        a = float(params.get("amplitude", 1.0))
        c = float(params.get("center", 0.5 * (grid["t_min"] + grid["t_max"])))
        w = float(params.get("width", 0.5))
        return Potential.rotationally_symmetric(
            lambda t: a * _bump((np.asarray(t, dtype=float) - c) / w),
            lambda t: a / w * _bump_prime((np.asarray(t, dtype=float) - c) / w),
            **grid,
            **meta,
        )
    if name == "periodic_cos":
        off = float(params.get("offset", 0.0))
        amp = _require(params, "amplitude")
        ell = float(params.get("period", 1.0))
        om = 2 * np.pi / ell
        return Potential.rotationally_symmetric(
            lambda t: off + amp * np.cos(om * np.asarray(t, dtype=float)),
            lambda t: -amp * om * np.sin(om * np.asarray(t, dtype=float)),
            **grid,
            **meta,
        )
    if name == "random_band":
        return random_band_potential(
            int(_require(params, "seed")),
            K=int(params.get("K", 2)),
            sup=float(params.get("sup", 0.5)),
            T=grid["t_max"],
            h=grid["h"],
        )
    # tabulated
    return load_tabulated(params, grid)


def read_profile_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV (t, value); a header row is skipped if present."""
    ts, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                ts.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                if ts:
                    raise
    t = np.array(ts)
    if t.size < 4 or np.any(np.diff(t) <= 0):
        raise ValueError(f"{path}: need >= 4 strictly increasing t samples")
    return t, np.array(vs)


def load_tabulated(params: Mapping, grid: Optional[dict] = None) -> Potential:
    """Tabulated potential from per-mode CSV files.

    Keys 'cos0', 'cos1', 'sin1', ... name CSV files; all files must share one t column.
    """
    files = {k: v for k, v in params.items() if k[:3] in ("cos", "sin") and k[3:].isdigit()}
    if "cos0" not in files and not files:
        raise KeyError("tabulated preset needs at least one 'cosK'/'sinK' CSV path")
    K = max(int(k[3:]) for k in files)
    t_ref = None
    cos_table = sin_table = None
    for key in sorted(files):
        t, v = read_profile_csv(files[key])
        if t_ref is None:
            t_ref = t
            cos_table = np.zeros((K + 1, t.size))
            sin_table = np.zeros((K + 1, t.size))
        elif t.shape != t_ref.shape or not np.allclose(t, t_ref):
            raise ValueError("tabulated mode files must share the same t column")
        (cos_table if key.startswith("cos") else sin_table)[int(key[3:])] = v
    kw = {"preset": "tabulated", "params": dict(params)}
    if grid is not None and "h" in params:
        kw["h"] = grid["h"]
    return Potential.from_samples(t_ref, cos_table, sin_table, **kw)


def load_config(path) -> dict:
    """Read a key=value config with [sections]; values are kept as strings."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    text = Path(path).read_text()
    parser.read_string(text)
    return {sec: dict(parser[sec]) for sec in parser.sections()}


def potential_from_config(section: Mapping, base_dir=None) -> Potential:
    params = {k: v for k, v in section.items() if k != "preset"}
    if "preset" not in section:
        raise KeyError("config section needs a 'preset' key")
    name = section["preset"]
    if name == "tabulated" and base_dir is not None:
        params = {
            k: (str(Path(base_dir) / v) if k[:3] in ("cos", "sin") and k[3:].isdigit() else v) for k, v in params.items()
        }
    return build_preset(name, params)
