"""Squeezed-vacuum reservoir: parameters, jump operator and Lindblad generators.

Vectorization is column stacking, ``vec(A X B) = (B^T kron A) vec(X)``;
use :func:`vec` / :func:`unvec` rather than ``ravel`` to stay consistent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spin import SpinSector, SystemGeometry
from .states import wrap_angle


@dataclass(frozen=True)
class ReservoirParams:
    """Resonant-mode squeezing ``r`` with phase ``varphi`` and decay rate ``gamma``."""

    r: float = 0.0
    varphi: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.r) or self.r < 0:
            raise ValueError(f"squeezing strength must be finite and >= 0, got r={self.r}")
        if not math.isfinite(self.varphi):
            raise ValueError("squeezing phase must be finite")
        if not math.isfinite(self.gamma) or self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def n_bar(self) -> float:
        return math.sinh(self.r) ** 2

    @property
    def m_bar(self) -> complex:
        return math.sinh(self.r) * math.cosh(self.r) * complex(math.cos(self.varphi), math.sin(self.varphi))

    def with_r(self, r: float) -> "ReservoirParams":
        return ReservoirParams(r=r, varphi=self.varphi, gamma=self.gamma)


def squeezing_params(r: float, varphi: float = 0.0, gamma: float = 1.0) -> ReservoirParams:
    return ReservoirParams(r=float(r), varphi=float(varphi), gamma=float(gamma))


def relative_phase(varphi: float, phi: float) -> float:
    """Relative phase ``varphi - 2 phi`` wrapped into ``[-pi, pi)``."""
    return wrap_angle(varphi - 2 * phi)


def jump_operator(params: ReservoirParams, jplus: np.ndarray, jminus: np.ndarray) -> np.ndarray:
    """``J- cosh(r) e^{i varphi/2} + J+ sinh(r) e^{-i varphi/2}``."""
    jplus, jminus = np.asarray(jplus), np.asarray(jminus)
    if jplus.shape != jminus.shape or jplus.ndim != 2:
        raise ValueError("J+ and J- must be square matrices of equal shape")
    half = params.varphi / 2
    return (
        jminus * math.cosh(params.r) * np.exp(1j * half)
        + jplus * math.sinh(params.r) * np.exp(-1j * half)
    )


def sector_jump(sector: SpinSector, params: ReservoirParams) -> np.ndarray:
    return jump_operator(params, sector.Jplus, sector.Jminus)


def system_jump(geometry: SystemGeometry, params: ReservoirParams, basis: str = "coupled") -> np.ndarray:
    """Jump operator of the whole charger+battery system."""
    if basis == "coupled":
        jp, jm, _ = geometry.collective_coupled
    elif basis == "product":
        jp, jm, _ = geometry.collective_product
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return jump_operator(params, jp, jm)


def _same_shape(rho, *ops):
    rho = np.asarray(rho)
    for op in ops:
        if np.shape(op) != rho.shape:
            raise ValueError(f"operator shape {np.shape(op)} does not match state shape {rho.shape}")
    return rho


def lindblad_rhs_compact(rho, L, gamma: float = 1.0) -> np.ndarray:
    """``gamma (2 L rho L^+ - L^+ L rho - rho L^+ L)``."""
    rho = _same_shape(rho, L)
    Ld = L.conj().T
    LdL = Ld @ L
    return gamma * (2 * L @ rho @ Ld - LdL @ rho - rho @ LdL)


def lindblad_rhs_general(rho, n_bar, m_bar, jplus, jminus, gamma: float = 1.0) -> np.ndarray:
    """Four-term generator for a reservoir with occupation ``n_bar`` and anomalous
    correlation ``m_bar``.

    The anomalous terms are paired as ``m_bar (2 J- rho J- - {J-J-, rho})`` plus
    its conjugate on ``J+``, which is the pairing that reduces to the compact
    form with the jump operator of :func:`jump_operator` when
    ``|m_bar|^2 = n_bar (n_bar + 1)`` and ``arg(m_bar) = varphi``.
    """
    rho = _same_shape(rho, jplus, jminus)
    if n_bar < 0:
        raise ValueError("n_bar must be non-negative")
    if abs(m_bar) ** 2 > n_bar * (n_bar + 1) * (1 + 1e-12) + 1e-15:
        raise ValueError("unphysical reservoir: |m_bar|^2 exceeds n_bar (n_bar + 1)")

    def diss(a, b):
        # 2 a rho b - (b a rho + rho b a)
        ba = b @ a
        return 2 * a @ rho @ b - ba @ rho - rho @ ba

    jp, jm = np.asarray(jplus), np.asarray(jminus)
    return gamma * (
        (n_bar + 1) * diss(jm, jp)
        + n_bar * diss(jp, jm)
        + m_bar * diss(jm, jm)
        + np.conj(m_bar) * diss(jp, jp)
    )


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, shape) -> np.ndarray:
    return np.asarray(v).reshape(shape, order="F")


def liouvillian_from_jumps(L_row: np.ndarray, L_col: np.ndarray) -> np.ndarray:
    """Superoperator on a (row-sector x column-sector) coherence block, unit rate.

    Generates ``2 L_row X L_col^+ - L_row^+ L_row X - X L_col^+ L_col``.
    """
    n, k = L_row.shape[0], L_col.shape[0]
    lr = L_row.conj().T @ L_row
    lc = L_col.conj().T @ L_col
    return (
        2 * np.kron(L_col.conj(), L_row)
        - np.kron(np.eye(k), lr)
        - np.kron(lc.T, np.eye(n))
    )


def liouvillian_block(sector_j: SpinSector, sector_k: SpinSector, params: ReservoirParams) -> np.ndarray:
    """Vectorized generator (per unit ``gamma``) on the ``(J, K)`` coherence block."""
    return liouvillian_from_jumps(sector_jump(sector_j, params), sector_jump(sector_k, params))
