"""Limit covariance of the rescaled fields and convergence diagnostics.

The local limit kernel is the Fourier transform of the unit-ball indicator;
the finite-d kernel is the exact ensemble covariance at geodesic separation
r/d.  Convergence is asserted on normalized correlations rho = K / K(0),
which are free of the spectral normalization convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j1

from .ensembles import EnsembleSpec, ensemble_kernel_scalar
from .errors import UnsupportedDimensionError, UnsupportedEnsembleError

_SERIES_CROSSOVER = 1e-3


def limit_kernel(n: int, r) -> np.ndarray:
    """Scalar limit covariance at separation r >= 0 (times the identity for
    vector-valued fields):

        n=1:  2 sin(r)/r          -> 2 at r=0
        n=2:  2 pi J1(r)/r        -> pi
        n=3:  4 pi (sin r - r cos r)/r^3 -> 4 pi / 3

    A Taylor series takes over below r = 1e-3; the two branches agree to
    1e-10 at the crossover.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("separation must be nonnegative")
    small = r < _SERIES_CROSSOVER
    rs = np.where(small, 0.0, r)
    r2 = r * r
    if n == 1:
        series = 2.0 * (1.0 - r2 / 6.0 + r2 * r2 / 120.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            closed = 2.0 * np.sin(rs) / rs
    elif n == 2:
        series = math.pi * (1.0 - r2 / 8.0 + r2 * r2 / 192.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            closed = 2.0 * math.pi * j1(rs) / rs
    elif n == 3:
        series = (4.0 * math.pi / 3.0) * (1.0 - r2 / 10.0 + r2 * r2 / 280.0)
        # sin r - r cos r cancels ~6 digits near the crossover; extended
        # precision keeps the two branches within 1e-10 of each other there
        rl = rs.astype(np.longdouble)
        with np.errstate(invalid="ignore", divide="ignore"):
            closed = (4.0 * math.pi * (np.sin(rl) - rl * np.cos(rl)) / rl ** 3).astype(np.float64)
    else:
        raise UnsupportedDimensionError(f"sphere dimension must be 1, 2 or 3, got {n}")
    out = np.where(small, series, closed)
    return out if out.ndim else float(out)


def limit_correlation(n: int, r) -> np.ndarray:
    """rho_inf(r) = limit_kernel(n, r) / limit_kernel(n, 0)."""
    return limit_kernel(n, r) / limit_kernel(n, 0.0)


def rescaled_kernel(spec: EnsembleSpec, r) -> np.ndarray:
    """Exact covariance of the rescaled field at separation r: the ensemble
    kernel at geodesic distance r/d, scaled by d^-n.  Harmonic kind only."""
    if spec.kind != "harmonic":
        raise UnsupportedEnsembleError(
            "rescaled_kernel needs the harmonic ensemble (Kostlan kernel is t**d)")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0) or np.any(r > spec.d * math.pi):
        raise ValueError("separation must lie in [0, d*pi]")
    return spec.d ** (-spec.n) * ensemble_kernel_scalar(spec, np.cos(r / spec.d))


def rescaled_correlation(spec: EnsembleSpec, r) -> np.ndarray:
    """rho_d(r) = rescaled_kernel(r) / rescaled_kernel(0); rho_d(0) = 1."""
    return rescaled_kernel(spec, r) / rescaled_kernel(spec, 0.0)


@dataclass(frozen=True)
class CovarianceReport:
    """Normalized correlation curves rho_d against rho_inf on a radii grid."""

    n: int
    degrees: tuple[int, ...]
    radii: np.ndarray
    rho_d: np.ndarray          # (len(degrees), len(radii))
    rho_inf: np.ndarray        # (len(radii),)
    sup_distances: tuple[float, ...]
    monotone: bool             # sup distances strictly decreasing over degrees

    def csv_rows(self):
        """Rows (d, r, rho_d, rho_inf) for serialization."""
        for i, d in enumerate(self.degrees):
            for jr, r in enumerate(self.radii):
                yield d, float(r), float(self.rho_d[i, jr]), float(self.rho_inf[jr])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "degrees": list(self.degrees),
            "radii": [float(r) for r in self.radii],
            "sup_distances": [float(s) for s in self.sup_distances],
            "monotone": self.monotone,
        }


def convergence_report(n: int, degrees, radii) -> CovarianceReport:
    """Compare rho_d to rho_inf for each degree; record sup distances and
    whether they decrease strictly along the degree list."""
    degrees = tuple(int(d) for d in degrees)
    radii = np.asarray(radii, dtype=np.float64)
    if len(degrees) == 0 or radii.size == 0:
        raise ValueError("need at least one degree and one radius")
    rho_inf = np.atleast_1d(limit_correlation(n, radii))
    rho_d = np.empty((len(degrees), radii.size))
    sups = []
    for i, d in enumerate(degrees):
        spec = EnsembleSpec("harmonic", n=n, d=d)
        rho_d[i] = np.atleast_1d(rescaled_correlation(spec, radii))
        sups.append(float(np.abs(rho_d[i] - rho_inf).max()))
    monotone = all(sups[i + 1] < sups[i] for i in range(len(sups) - 1))
    return CovarianceReport(n, degrees, radii, rho_d, rho_inf, tuple(sups), monotone)
