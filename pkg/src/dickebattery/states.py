"""Initial states: spin-coherent charger and down-polarized battery."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spin import PRODUCT, DensityMatrix, SystemGeometry


def wrap_angle(x: float) -> float:
    """Map an angle into ``[-pi, pi)``."""
    return (x + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True)
class ChargerPrep:
    """Bloch-sphere angles of every charger spin."""

    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("charger angles must be finite")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))


def spin_coherent(n: int, prep: ChargerPrep) -> np.ndarray:
    """Dicke-basis amplitudes of ``exp(-i phi Jz) exp(-i theta Jy) |J, J>``, J = n/2.

    Amplitude of ``|J, M>`` is ``sqrt(binom(2J, J+M)) cos^(J+M)(theta/2)
    sin^(J-M)(theta/2) exp(-i M phi)``; binomials go through ``lgamma``.
    Entries are ordered ``M = J ... -J``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"spin count must be a positive integer, got {n!r}")
    n = int(n)
    J = n / 2
    c, s = math.cos(prep.theta / 2), math.sin(prep.theta / 2)
    out = np.zeros(n + 1, dtype=complex)
    for k in range(n + 1):
        up = n - k  # J + M
        down = k  # J - M
        M = J - k
        # 0**0 must be 1 at the poles
        cp = c**up if up else 1.0
        sp = s**down if down else 1.0
        if cp == 0.0 or sp == 0.0:
            continue
        log_binom = math.lgamma(n + 1) - math.lgamma(up + 1) - math.lgamma(down + 1)
        out[k] = math.exp(0.5 * log_binom) * cp * sp * np.exp(-1j * M * prep.phi)
    return out


def battery_ground(n_b: int) -> np.ndarray:
    """``|J_B, -J_B>``: every battery spin down."""
    v = np.zeros(n_b + 1, dtype=complex)
    v[-1] = 1.0
    return v


def initial_state(geometry: SystemGeometry, prep: ChargerPrep) -> DensityMatrix:
    """Pure product state ``|theta, phi>_C (x) |down...down>_B`` in the product basis."""
    psi = np.kron(spin_coherent(geometry.n_c, prep), battery_ground(geometry.n_b))
    return DensityMatrix(np.outer(psi, psi.conj()), basis=PRODUCT, dims=geometry.dims)
