"""Itinerant squeezed-vacuum reservoir: moments, bounds, loss, and Wigner map.

The reservoir is summarized by its photon-number moment ``N`` and two-photon
moment ``M`` (stored complex; squeezing of a physical state requires
``|M|^2 <= N(N+1)``).  All variance and Wigner formulas use ``|M|`` with the
squeezed axis fixed along Q; the squeezing phase only matters dynamically and
is handled as a detuning/rotation in :mod:`sqbloch.blochdyn`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "QuadratureVariances",
    "SqueezedReservoir",
    "WignerGrid",
    "attenuate",
    "eta_curve",
    "ideal_M",
    "thermal_from_population",
    "variances",
    "wigner",
    "wigner_grid_for",
]

_PHYSICALITY_SLACK = 1e-12


@dataclass(frozen=True)
class SqueezedReservoir:
    """Broadband squeezed vacuum characterized by moments (N, M).

    ``omega0`` is the squeezer center frequency in GHz, ``bandwidth`` in MHz,
    and ``N_th`` the thermal photon floor of the environment.
    """

    N: float
    M: complex
    omega0: float = 0.0
    bandwidth: float = 13.0
    N_th: float = 0.0

    def __post_init__(self):
        if self.N < 0.0:
            raise ValueError(f"N must be nonnegative, got {self.N}")
        if self.N_th < 0.0:
            raise ValueError(f"N_th must be nonnegative, got {self.N_th}")
        if self.bandwidth <= 0.0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if abs(self.M) ** 2 > self.N * (self.N + 1.0) + _PHYSICALITY_SLACK:
            raise ValueError(
                f"unphysical moments: |M|^2 = {abs(self.M) ** 2:.6g} exceeds "
                f"N(N+1) = {self.N * (self.N + 1.0):.6g}"
            )

    @property
    def M_abs(self) -> float:
        return abs(self.M)


@dataclass(frozen=True)
class QuadratureVariances:
    """Gaussian quadrature variances; vacuum gives (1, 1)."""

    sigmaI_sq: float
    sigmaQ_sq: float

    def __post_init__(self):
        if self.sigmaI_sq <= 0.0 or self.sigmaQ_sq <= 0.0:
            raise ValueError("variances must be strictly positive")
        if self.sigmaI_sq * self.sigmaQ_sq < 1.0 - _PHYSICALITY_SLACK:
            raise ValueError(
                f"uncertainty product {self.sigmaI_sq * self.sigmaQ_sq:.6g} < 1"
            )


def variances(r: SqueezedReservoir) -> QuadratureVariances:
    """Quadrature variances sigma_I^2 = 2(N+|M|+1/2), sigma_Q^2 = 2(N-|M|+1/2)."""
    m = r.M_abs
    return QuadratureVariances(
        sigmaI_sq=2.0 * (r.N + m + 0.5),
        sigmaQ_sq=2.0 * (r.N - m + 0.5),
    )


def ideal_M(n: float) -> float:
    """Largest |M| allowed at mean photon number ``n``: sqrt(n(n+1))."""
    if n < 0.0:
        raise ValueError(f"N must be nonnegative, got {n}")
    return math.sqrt(n * (n + 1.0))


def attenuate(
    r: SqueezedReservoir, eta: float, n_environment: float = 0.0
) -> SqueezedReservoir:
    """Beam-splitter loss with power transmission ``eta``.

    ``N' = eta*N + (1-eta)*n_environment`` and ``M' = eta*M``; center frequency
    and bandwidth are unchanged.  The default cold environment admixes vacuum.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if n_environment < 0.0:
        raise ValueError("environment photon number must be nonnegative")
    return replace(
        r, N=eta * r.N + (1.0 - eta) * n_environment, M=eta * r.M
    )


def eta_curve(n_measured: float, eta: float) -> float:
    """M - N at measured photon number ``n_measured``, assuming an ideal
    minimum-uncertainty source degraded only by transmission ``eta``."""
    if n_measured < 0.0:
        raise ValueError(f"N must be nonnegative, got {n_measured}")
    return math.sqrt(n_measured**2 + eta * n_measured) - n_measured


def thermal_from_population(p_e: float) -> float:
    """Thermal photon number from the equilibrium excited-state population.

    Inverts the thermal steady state p_e = N_th / (2 N_th + 1).
    """
    if not 0.0 <= p_e < 0.5:
        raise ValueError(
            f"equilibrium excited-state population must lie in [0, 0.5), got {p_e}"
        )
    return p_e / (1.0 - 2.0 * p_e)


@dataclass(frozen=True)
class WignerGrid:
    """Wigner distribution sampled on a rectangular (I, Q) grid.

    Gaussian states only, so the values are nonnegative everywhere."""

    I_axis: np.ndarray
    Q_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.I_axis.size, self.Q_axis.size):
            raise ValueError("values must be shaped (len(I_axis), len(Q_axis))")
        if np.any(self.values < 0.0):
            raise ValueError("Wigner values must be nonnegative for Gaussian states")

    def integral(self) -> float:
        """Trapezoidal integral of the distribution over the grid."""
        return float(
            np.trapezoid(np.trapezoid(self.values, self.Q_axis, axis=1), self.I_axis)
        )

    def to_csv(self) -> str:
        """CSV: header row of Q values, first column I values, body W values."""
        lines = ["#schema=wigner-grid-v1"]
        lines.append("," + ",".join(f"{q:.9g}" for q in self.Q_axis))
        for i, row in zip(self.I_axis, self.values):
            lines.append(f"{i:.9g}," + ",".join(f"{w:.9g}" for w in row))
        return "\n".join(lines) + "\n"


def wigner(
    v: QuadratureVariances,
    i_axis: np.ndarray,
    q_axis: np.ndarray,
) -> WignerGrid:
    """Gaussian Wigner distribution with the squeezed axis along Q.

    W(I, Q) = 2/(pi sqrt(sigma_I^2 sigma_Q^2)) exp(-2I^2/sigma_I^2 - 2Q^2/sigma_Q^2),
    normalized so vacuum gives W0 = (2/pi) exp(-2(I^2+Q^2)) and the integral
    over the plane is 1.
    """
    i_axis = np.asarray(i_axis, dtype=float)
    q_axis = np.asarray(q_axis, dtype=float)
    norm = 2.0 / (math.pi * math.sqrt(v.sigmaI_sq * v.sigmaQ_sq))
    ii = i_axis[:, None]
    qq = q_axis[None, :]
    values = norm * np.exp(-2.0 * ii**2 / v.sigmaI_sq - 2.0 * qq**2 / v.sigmaQ_sq)
    return WignerGrid(I_axis=i_axis, Q_axis=q_axis, values=values)


def wigner_grid_for(
    v: QuadratureVariances, n_points: int = 241, n_sigmas: float = 5.0
) -> WignerGrid:
    """Wigner grid spanning ``n_sigmas`` standard deviations on each axis.

    The distribution's standard deviation along I is sigma_I/2 in this
    convention (vacuum: 1/2).
    """
    if n_points < 2:
        raise ValueError("grid needs at least 2 points per axis")
    half_i = n_sigmas * math.sqrt(v.sigmaI_sq) / 2.0
    half_q = n_sigmas * math.sqrt(v.sigmaQ_sq) / 2.0
    i_axis = np.linspace(-half_i, half_i, n_points)
    q_axis = np.linspace(-half_q, half_q, n_points)
    return wigner(v, i_axis, q_axis)
