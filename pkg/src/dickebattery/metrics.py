"""Energy, ergotropy (total / incoherent / coherent), l1 coherence and log-negativity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spin import COUPLED, PRODUCT, DensityMatrix, SystemGeometry, partial_trace_charger, to_product

CLIP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BatteryHamiltonian:
    """``hbar omega (Jz_B + N_B/2)`` in the battery Dicke basis (ground energy 0)."""

    n_b: int
    omega: float = 1.0

    @property
    def H(self) -> np.ndarray:
        m = self.n_b / 2 - np.arange(self.n_b + 1)
        return np.diag(self.omega * (m + self.n_b / 2)).astype(complex)

    @property
    def levels(self) -> np.ndarray:
        return self.omega * np.arange(self.n_b + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """State eigenvalues in descending order with matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class ErgotropyReport:
    E: float
    W: float
    W_P: float
    W_C: float
    C: float
    S: float
    n_b: int
    omega: float = 1.0

    @property
    def E_per_spin(self) -> float:
        return self.E / (self.n_b * self.omega)

    @property
    def W_per_spin(self) -> float:
        return self.W / (self.n_b * self.omega)

    @property
    def W_P_per_spin(self) -> float:
        return self.W_P / (self.n_b * self.omega)

    @property
    def W_C_per_spin(self) -> float:
        return self.W_C / (self.n_b * self.omega)

    def row(self) -> dict:
        """Normalized columns as written to result tables."""
        return {
            "E_B": self.E_per_spin,
            "W_B": self.W_per_spin,
            "W_B_P": self.W_P_per_spin,
            "W_B_C": self.W_C_per_spin,
            "C_B": self.C,
            "S_B": self.S,
        }


def _matrix(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def _energy_basis(H):
    H = np.asarray(H)
    if np.count_nonzero(H - np.diag(np.diag(H))) == 0:
        eps = np.real(np.diag(H))
        order = np.argsort(eps, kind="stable")
        vecs = np.eye(H.shape[0], dtype=complex)[:, order]
        return eps[order], vecs
    eps, vecs = np.linalg.eigh(H)
    return eps, vecs


def spectrum(rho) -> Spectrum:
    """Eigen-decomposition with round-off negatives clipped and renormalized.

    Eigenvalues in ``[-1e-9, 0)`` are set to zero; anything more negative is
    passed through so that genuinely unphysical input stays visible.
    """
    m = _matrix(rho)
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    vals = np.where((vals < 0) & (vals >= -CLIP_TOL), 0.0, vals)
    total = vals.sum()
    if total > 0:
        vals = vals / total
    order = np.argsort(-vals, kind="stable")
    return Spectrum(values=vals[order], vectors=vecs[:, order])


def passive_state(rho, H) -> DensityMatrix:
    """Largest population on the lowest level, and so on down the ladder."""
    spec = spectrum(rho)
    _, evecs = _energy_basis(H)
    data = (evecs * spec.values) @ evecs.conj().T
    basis = rho.basis if isinstance(rho, DensityMatrix) else PRODUCT
    dims = rho.dims if isinstance(rho, DensityMatrix) else None
    return DensityMatrix(data, basis=basis, dims=dims)


def energy_expectation(rho, H) -> float:
    return float(np.real(np.trace(np.asarray(H) @ _matrix(rho))))


def ergotropy(rho, H) -> float:
    """``Tr(H rho) - Tr(H rho_passive)``, computed from sorted spectra."""
    eps, _ = _energy_basis(H)
    r = spectrum(rho).values
    passive = float(np.dot(r, eps))
    w = energy_expectation(rho, H) - passive
    # ergotropy is non-negative; a few ulps below zero are round-off
    return max(w, 0.0) if w > -1e-12 else w


def dephase(rho, H) -> np.ndarray:
    """Completely dephased state in the energy eigenbasis of ``H``."""
    _, evecs = _energy_basis(H)
    m = evecs.conj().T @ _matrix(rho) @ evecs
    return evecs @ np.diag(np.diag(m)) @ evecs.conj().T


def ergotropy_split(rho, H) -> tuple[float, float]:
    """``(W_P, W_C)``: ergotropy of the dephased state and the remainder."""
    w = ergotropy(rho, H)
    wp = ergotropy(dephase(rho, H), H)
    return wp, w - wp


def l1_coherence(rho, H) -> float:
    """Sum of |off-diagonal| entries in the energy eigenbasis."""
    _, evecs = _energy_basis(H)
    m = evecs.conj().T @ _matrix(rho) @ evecs
    off = ~np.eye(m.shape[0], dtype=bool)
    return float(np.sum(np.abs(m[off])))


def partial_transpose(m: np.ndarray, dims: tuple[int, int], subsystem: int = 1) -> np.ndarray:
    """Partial transpose over subsystem 0 (charger) or 1 (battery)."""
    a, b = dims
    t = np.asarray(m).reshape(a, b, a, b)
    if subsystem == 1:
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == 0:
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError("subsystem must be 0 or 1")
    return t.reshape(a * b, a * b)


def log_negativity(rho: DensityMatrix, geometry: SystemGeometry, subsystem: int = 1) -> float:
    """``log2`` of the trace norm of the partial transpose, in bits."""
    if rho.basis != PRODUCT:
        raise ValueError("log-negativity needs a product-basis state; call to_product first")
    pt = partial_transpose(rho.data, geometry.dims, subsystem)
    vals = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
    en = float(math.log2(np.sum(np.abs(vals))))
    return max(en, 0.0) if en > -1e-12 else en


def energy(rho_b, H_b) -> tuple[float, float]:
    """Battery energy ``E`` and its per-spin value (``H_b`` has unit level spacing)."""
    e = energy_expectation(rho_b, H_b)
    n_b = np.asarray(H_b).shape[0] - 1
    return e, e / n_b


def report(rho: DensityMatrix, geometry: SystemGeometry, omega: float = 1.0) -> ErgotropyReport:
    """All battery metrics for a full charger+battery state."""
    if rho.basis == COUPLED:
        rho = to_product(rho, geometry)
    rho_b = partial_trace_charger(rho, geometry)
    H = BatteryHamiltonian(geometry.n_b, omega).H
    w = ergotropy(rho_b, H)
    wp = ergotropy(dephase(rho_b, H), H)
    return ErgotropyReport(
        E=energy_expectation(rho_b, H),
        W=w,
        W_P=wp,
        W_C=w - wp,
        C=l1_coherence(rho_b, H),
        S=log_negativity(rho, geometry),
        n_b=geometry.n_b,
        omega=omega,
    )
