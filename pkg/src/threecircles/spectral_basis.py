"""Laplace eigenvalues of the cross-section: the circle and the sphere-type cluster model.

Circle basis indexing (L^2-orthonormal):

    phi_0      = 1 / sqrt(2 pi)
    phi_{2k-1} = sin(k theta) / sqrt(pi)
    phi_{2k}   = cos(k theta) / sqrt(pi)        k >= 1

so lambda_0 = 0 and lambda_{2k-1} = lambda_{2k} = k^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GapNotFoundError

ALPHA_SEARCH_CAP = 10**6

CIRCLE = "circle"
CLUSTER = "cluster"


def cluster_value(n: int, m: int) -> float:
    """Eigenvalue of the m-th cluster on the round n-sphere: m^2 + (n-1) m."""
    if n < 1 or m < 0:
        raise ValueError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    return float(m * m + (n - 1) * m)


def cluster_multiplicity(n: int, m: int) -> int:
    """Dimension of degree-m spherical harmonics on S^n."""
    if m == 0:
        return 1
    return math.comb(m + n, n) - math.comb(m + n - 2, n)


@dataclass(frozen=True)
class SpectralBasis:
    eigenvalues: np.ndarray
    cluster_index: np.ndarray
    cross_section: str = CIRCLE
    dimension: int = 1
    _starts: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        idx = np.asarray(self.cluster_index, dtype=int)
        if lam.ndim != 1 or lam.size == 0 or lam.shape != idx.shape:
            raise ValueError("eigenvalues and cluster_index must be equal-length 1-d arrays")
        if lam[0] != 0.0:
            raise ValueError("lambda_0 must be 0")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be nondecreasing")
        lam.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "cluster_index", idx)
        starts = [0] + [j for j in range(1, idx.size) if idx[j] != idx[j - 1]]
        object.__setattr__(self, "_starts", tuple(starts))

    def __len__(self) -> int:
        return self.eigenvalues.size

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def max_wave_number(self) -> int:
        return int(self.cluster_index[-1])

    def cluster_start(self, cluster: int) -> int:
        """Mode index of the first eigenvalue in the given cluster."""
        for j in self._starts:
            if self.cluster_index[j] == cluster:
                return j
        raise GapNotFoundError(f"cluster {cluster} beyond truncation J={self.size - 1}")

    def to_dict(self) -> dict:
        return {
            "cross_section": self.cross_section,
            "dimension": self.dimension,
            "eigenvalues": self.eigenvalues.tolist(),
        }


def circle_basis(max_wave_number: int, allow_constant_only: bool = False) -> SpectralBasis:
    k_max = int(max_wave_number)
    if k_max < 0 or (k_max == 0 and not allow_constant_only):
        raise ValueError(
            "circle basis needs max_wave_number >= 1 "
            "(pass allow_constant_only=True for the constants-only basis)"
        )
    lam = [0.0]
    idx = [0]
    for k in range(1, k_max + 1):
        lam += [float(k * k)] * 2
        idx += [k, k]
    return SpectralBasis(np.array(lam), np.array(idx), CIRCLE, 1)


def cluster_basis(n: int, n_clusters: int) -> SpectralBasis:
    """Round S^n eigenvalues b_0..b_{n_clusters} with harmonic multiplicities."""
    if n < 1 or n_clusters < 1:
        raise ValueError("need n >= 1 and n_clusters >= 1")
    lam, idx = [], []
    for m in range(n_clusters + 1):
        mult = cluster_multiplicity(n, m)
        lam += [cluster_value(n, m)] * mult
        idx += [m] * mult
    return SpectralBasis(np.array(lam), np.array(idx), CLUSTER, n)


def find_gap_index(basis: SpectralBasis, kappa: float) -> int:
    """Smallest mode index m >= 1 with lambda_m - lambda_{m-1} > kappa."""
    lam = basis.eigenvalues
    if lam.size < 2:
        raise ValueError("basis needs at least two eigenvalues")
    gaps = np.diff(lam)
    hits = np.nonzero(gaps > kappa)[0]
    if hits.size == 0:
        raise GapNotFoundError(
            f"gap not found at truncation J={lam.size - 1}: "
            f"largest gap {gaps.max():g} <= kappa={kappa:g}; enlarge the basis"
        )
    return int(hits[0]) + 1


def alpha_bar_constraints(n: int, m: int, alpha: float, kappa: float, alpha_bar: float):
    """Return (lower_ok, quadratic_ok) for a candidate alpha_bar at cluster m.

    lower_ok:     2 (b_{m-1} + 1)^{1/2} + 1 <= alpha_bar and alpha_bar >= max(alpha, kappa)
    quadratic_ok: alpha_bar^2 + alpha_bar <= 4 b_m - kappa
    """
    b_prev = cluster_value(n, m - 1)
    b_m = cluster_value(n, m)
    lower_ok = 2.0 * math.sqrt(b_prev + 1.0) + 1.0 <= alpha_bar and alpha_bar >= max(alpha, kappa)
    quadratic_ok = alpha_bar * alpha_bar + alpha_bar <= 4.0 * b_m - kappa
    return lower_ok, quadratic_ok


def choose_alpha_bar(n: int, alpha: float, kappa: float, cap: int = ALPHA_SEARCH_CAP):
    """Smallest cluster m with alpha_bar = 2 sqrt(b_{m-1} + 1) + 1 admissible.

    Returns (m, alpha_bar).
    """
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    target = max(alpha, kappa)
    for m in range(1, cap + 1):
        ab = 2.0 * math.sqrt(cluster_value(n, m - 1) + 1.0) + 1.0
        if ab < target:
            continue
        if ab * ab + ab <= 4.0 * cluster_value(n, m) - kappa:
            return m, ab
    raise RuntimeError(f"alpha_bar search hit the cap m <= {cap}")


def first_gap_cluster(n: int, kappa: float, alpha: float = 0.0, cap: int = ALPHA_SEARCH_CAP) -> int:
    """Smallest cluster c >= 1 of the untruncated spectrum with
    b_c - b_{c-1} >= kappa and 2 sqrt(b_{c-1}) > |alpha|."""
    for c in range(1, cap + 1):
        b_prev = cluster_value(n, c - 1)
        if cluster_value(n, c) - b_prev >= kappa and 2.0 * math.sqrt(b_prev) > abs(alpha):
            return c
    raise GapNotFoundError(f"no cluster below the cap {cap} meets gap >= {kappa:g}")
