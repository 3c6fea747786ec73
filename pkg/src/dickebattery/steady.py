"""Stationary states of the collective squeezed-vacuum dissipator.

The generic path (:func:`steady_state`) works block by block in the coupled
basis: every ``(J, K)`` coherence block evolves under its own vectorized
generator, so the long-time limit of that block is the projection of the
initial block onto the generator's null space along its left null space.

The remaining functions are closed forms for one and two spins per side and
the biorthogonal eigenbasis of the sector jump operator; they exist as
independent checks of the generic path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .reservoir import ReservoirParams, liouvillian_block, sector_jump, unvec, vec
from .spin import COUPLED, DensityMatrix, SystemGeometry, ladder_matrices, to_coupled

ZERO_TOL = 1e-10
GAP_RATIO = 1e6
ANALYTIC_MIN_R = 1e-3


class NullSpaceError(RuntimeError):
    """Null-space dimension of a generator block cannot be decided numerically."""


class AnalyticSingularity(ValueError):
    """Closed-form biorthogonal construction is undefined (r = 0)."""


# ---------------------------------------------------------------------------
# generic projection path


def null_space(a: np.ndarray, rtol: float = ZERO_TOL, gap: float = GAP_RATIO) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker a``.

    Singular values below ``rtol * s_max`` are zero; any singular value in
    ``[rtol * s_max, gap * rtol * s_max)`` makes the rank ambiguous and
    raises :class:`NullSpaceError`.
    """
    _, s, vh = np.linalg.svd(a)
    n = a.shape[1]
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(n, dtype=complex)
    tol = rtol * smax
    grey = (s >= tol) & (s < gap * tol)
    if np.any(grey):
        raise NullSpaceError(
            f"ambiguous null space: singular values {s[grey]} within a factor {gap:g} "
            f"of the zero threshold {tol:.3e}"
        )
    rank = int(np.sum(s >= tol))
    return vh[rank:].conj().T


@dataclass(frozen=True, eq=False)
class BlockProjector:
    """Right/left null vectors of one block generator, biorthonormalized."""

    J: float
    K: float
    right: np.ndarray  # columns
    left: np.ndarray  # columns, left.conj().T @ right == I

    @property
    def dim(self) -> int:
        return self.right.shape[1]

    def coefficients(self, block: np.ndarray) -> np.ndarray:
        return self.left.conj().T @ vec(block)

    def apply(self, block: np.ndarray) -> np.ndarray:
        if self.dim == 0:
            return np.zeros_like(block)
        return unvec(self.right @ self.coefficients(block), block.shape)


def block_projector(geometry: SystemGeometry, J, K, params: ReservoirParams) -> BlockProjector:
    sj = geometry.sectors[geometry.sector_index(J)]
    sk = geometry.sectors[geometry.sector_index(K)]
    gen = liouvillian_block(sj, sk, params)
    right = null_space(gen)
    left = null_space(gen.conj().T)
    if right.shape[1] != left.shape[1]:
        raise NullSpaceError(
            f"block ({sj.J}, {sk.J}): right null dimension {right.shape[1]} "
            f"!= left null dimension {left.shape[1]}"
        )
    if right.shape[1]:
        overlap = left.conj().T @ right
        if np.linalg.cond(overlap) > 1e8:
            raise NullSpaceError(f"block ({sj.J}, {sk.J}): null space is not diagonalizable")
        left = left @ np.linalg.inv(overlap).conj().T
    return BlockProjector(J=sj.J, K=sk.J, right=right, left=left)


@dataclass(frozen=True, eq=False)
class SteadyStateWeights:
    """Stationary coefficients per ``(J, K)`` block (one-dimensional null spaces)."""

    weights: dict = field(default_factory=dict)

    def population(self, J) -> float:
        return float(np.real(self.weights.get((J, J), 0.0)))


def dark_vector(geometry: SystemGeometry, J, params: ReservoirParams):
    """Unit vector spanning ``ker L_J``, or ``None`` when the kernel is not one-dimensional."""
    ker = null_space(sector_jump(geometry.sectors[geometry.sector_index(J)], params))
    if ker.shape[1] != 1:
        return None
    v = ker[:, 0]
    # fix the gauge: largest component real and positive
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def steady_state_weights(rho0: DensityMatrix, geometry: SystemGeometry, params: ReservoirParams):
    """Stationary weights ``C_JK`` of the dark-state expansion of the steady state.

    ``C_JJ`` is the trace of each diagonal block.  Cross weights are reported
    only when every sector has a single pure dark state ``d_J``; then
    ``C_JK = <d_J| rho_ss |d_K>``.
    """
    ss = steady_state(rho0, geometry, params).data
    out = {}
    for s, sl in zip(geometry.sectors, geometry.sector_slices):
        out[(s.J, s.J)] = complex(np.trace(ss[sl, sl]))
    darks = {s.J: dark_vector(geometry, s.J, params) for s in geometry.sectors}
    if all(v is not None for v in darks.values()):
        for sj, slj in zip(geometry.sectors, geometry.sector_slices):
            for sk, slk in zip(geometry.sectors, geometry.sector_slices):
                if sj.J != sk.J:
                    out[(sj.J, sk.J)] = complex(darks[sj.J].conj() @ ss[slj, slk] @ darks[sk.J])
    return SteadyStateWeights(out)


def steady_state(rho0: DensityMatrix, geometry: SystemGeometry, params: ReservoirParams) -> DensityMatrix:
    """Long-time limit of the collective dissipator started from ``rho0`` (coupled basis out)."""
    if rho0.basis != COUPLED:
        rho0 = to_coupled(rho0, geometry)
    if rho0.dim != geometry.dim:
        raise ValueError("state dimension does not match geometry")
    out = np.zeros_like(rho0.data)
    n = len(geometry.sectors)
    for a in range(n):
        for b in range(a, n):
            sa, sb = geometry.sector_slices[a], geometry.sector_slices[b]
            proj = block_projector(geometry, geometry.sectors[a].J, geometry.sectors[b].J, params)
            out[sa, sb] = proj.apply(rho0.data[sa, sb])
            if a != b:
                out[sb, sa] = out[sa, sb].conj().T
    out = (out + out.conj().T) / 2
    return DensityMatrix(out, basis=COUPLED)


# ---------------------------------------------------------------------------
# biorthogonal eigenbasis of the sector jump operator


@dataclass(frozen=True, eq=False)
class BiorthogonalSector:
    J: float
    alpha: float
    m_values: np.ndarray
    Psi: np.ndarray  # right eigenvectors as columns
    Phi: np.ndarray  # left eigenvectors as columns
    lambdas: np.ndarray

    def right(self, M) -> np.ndarray:
        return self.Psi[:, self._index(M)]

    def left(self, M) -> np.ndarray:
        return self.Phi[:, self._index(M)]

    def _index(self, M) -> int:
        hits = np.flatnonzero(np.abs(self.m_values - M) < 1e-9)
        if hits.size != 1:
            raise KeyError(f"M={M} not in sector J={self.J}")
        return int(hits[0])


def squeezing_alpha(r: float) -> float:
    """Boost parameter ``alpha = ln(tanh r) / 2`` that diagonalizes the jump operator."""
    if r <= 0:
        raise AnalyticSingularity(
            "alpha diverges at r = 0; use steady_state (generic null-space path) instead"
        )
    return 0.5 * math.log(math.tanh(r))


def biorthogonal_sector(J, params: ReservoirParams) -> BiorthogonalSector:
    """Right/left eigenvectors of ``L_J``, gauge ``||Psi|| = 1`` and ``<Phi|Psi> = 1``.

    ``Psi_M ~ exp[(alpha - i varphi/2) Jz] exp(-i pi/2 Jy) |J, M>`` with
    eigenvalue ``sqrt(2 sinh 2r) M``; ``Phi_M`` flips the sign of ``alpha``.
    """
    alpha = squeezing_alpha(params.r)
    s = ladder_matrices(J)
    rot = sla.expm(-1j * math.pi / 2 * s.Jy)
    mz = np.real(np.diag(s.Jz))
    grow_r = np.exp((alpha - 0.5j * params.varphi) * mz)
    grow_l = np.exp((-alpha - 0.5j * params.varphi) * mz)
    psi = grow_r[:, None] * rot
    phi = grow_l[:, None] * rot
    psi = psi / np.linalg.norm(psi, axis=0)
    overlaps = np.einsum("ij,ij->j", phi.conj(), psi)
    phi = phi / overlaps.conj()
    lam = math.sqrt(2 * math.sinh(2 * params.r)) * s.m_values
    return BiorthogonalSector(J=s.J, alpha=alpha, m_values=s.m_values, Psi=psi, Phi=phi, lambdas=lam)


def odd_sector_state(J, params: ReservoirParams) -> np.ndarray:
    """Mixed stationary state of a half-integer sector, unit trace.

    ``sum_{M,N} <Phi_M|Phi_N> / (M N) |Psi_M><Psi_N|``, normalized.
    """
    bs = biorthogonal_sector(J, params)
    m = bs.m_values
    if np.any(np.abs(m) < 1e-12):
        raise ValueError("sector contains M = 0; it has a pure dark state instead")
    gram = bs.Phi.conj().T @ bs.Phi
    coeff = gram / np.outer(m, m)
    rho = bs.Psi @ coeff @ bs.Psi.conj().T
    return rho / np.trace(rho)


def analytic_steady_state(rho0: DensityMatrix, geometry: SystemGeometry, params: ReservoirParams) -> DensityMatrix:
    """Steady state assembled from biorthogonal dark states (needs ``r > 0``).

    Even total spin: ``sum_{JK} C_JK |Psi_J0><Psi_K0|`` with ``C_JK`` obtained
    by projecting ``rho0`` onto the left null vectors of each block.
    Odd total spin: ``sum_J C_JJ rho_J`` with ``C_JJ`` the sector populations.
    """
    if params.r < ANALYTIC_MIN_R:
        raise AnalyticSingularity(f"analytic construction used only for r >= {ANALYTIC_MIN_R}")
    if rho0.basis != COUPLED:
        rho0 = to_coupled(rho0, geometry)
    out = np.zeros((geometry.dim, geometry.dim), dtype=complex)
    secs = list(zip(geometry.sectors, geometry.sector_slices))
    if not geometry.even:
        for s, sl in secs:
            pop = np.real(np.trace(rho0.data[sl, sl]))
            out[sl, sl] = pop * odd_sector_state(s.J, params)
        return DensityMatrix(out, basis=COUPLED)
    dark = {s.J: biorthogonal_sector(s.J, params).right(0) for s, _ in secs}
    for sj, slj in secs:
        for sk, slk in secs:
            if sj.J == sk.J:
                pop = np.real(np.trace(rho0.data[slj, slj]))
                out[slj, slk] = pop * np.outer(dark[sj.J], dark[sj.J].conj())
                continue
            gen = liouvillian_block(sj, sk, params)
            v = vec(np.outer(dark[sj.J], dark[sk.J].conj()))
            w = null_space(gen.conj().T)
            if w.shape[1] != 1:
                raise NullSpaceError(f"expected one left null vector for block ({sj.J}, {sk.J})")
            w = w[:, 0] / np.vdot(w[:, 0], v).conj()
            c = np.vdot(w, vec(rho0.data[slj, slk]))
            out[slj, slk] = c * np.outer(dark[sj.J], dark[sk.J].conj())
    return DensityMatrix(out, basis=COUPLED)


# ---------------------------------------------------------------------------
# closed forms for N_C = N_B = 1 and N_C = N_B = 2
#
# Phases follow the jump operator of reservoir.jump_operator together with
# delta = varphi - 2 phi.  Every off-diagonal phase is the complex conjugate
# of the commonly printed form, which corresponds to the opposite sign of
# the squeezing phase; spectra, energies and ergotropies are unaffected.


def dark_states_n1(params: ReservoirParams) -> tuple[np.ndarray, np.ndarray]:
    """The two pure states annihilated by the jump operator of one charger
    spin plus one battery spin, product basis ``|uu>, |ud>, |du>, |dd>``."""
    n, m = params.n_bar, abs(params.m_bar)
    d1 = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    amp = m * np.exp(-1j * params.varphi) / (1 + n)
    d2 = math.sqrt((1 + n) / (1 + 2 * n)) * np.array([amp, 0, 0, -1], dtype=complex)
    return d1, d2


def analytic_state_n1(theta: float, phi: float, params: ReservoirParams) -> np.ndarray:
    """Full steady state for ``N_C = N_B = 1``, product basis, from ``|theta, phi>|down>``."""
    d1, d2 = dark_states_n1(params)
    n = params.n_bar
    cross = -math.sin(theta) / 2 * math.sqrt((1 + n) / (2 + 4 * n))
    P = lambda a, b: np.outer(a, b.conj())  # noqa: E731
    return (
        (1 + math.cos(theta)) / 4 * P(d1, d1)
        + (3 - math.cos(theta)) / 4 * P(d2, d2)
        + cross * np.exp(1j * phi) * P(d2, d1)
        + cross * np.exp(-1j * phi) * P(d1, d2)
    )


def analytic_rhoB_n1(theta: float, delta: float, params: ReservoirParams) -> np.ndarray:
    """Battery steady state for ``N_C = N_B = 1`` in the basis ``{|down>, |up>}``.

    Only ``params.r`` is read; the phase enters through ``delta``.
    """
    n, m = params.n_bar, abs(params.m_bar)
    s, c = math.sin(theta), math.cos(theta)
    off = -2 * s * (1 + n + m * np.exp(1j * delta))
    mat = np.array([[7 + 8 * n - c, off], [np.conj(off), 1 + 8 * n + c]], dtype=complex)
    return mat / (8 * (1 + 2 * n))


def analytic_energy_n1(theta: float, params: ReservoirParams) -> float:
    return -(3 - math.cos(theta)) / (8 * (1 + 2 * params.n_bar)) + 0.5


def _ergotropy_root(theta, delta, n, m):
    s2 = math.sin(theta) ** 2
    return math.sqrt(
        10 - 6 * math.cos(theta) + (3 + 12 * n + 8 * n * n) * s2 + 8 * (1 + n) * m * s2 * math.cos(delta)
    )


def analytic_ergotropy_n1(theta: float, delta: float, params: ReservoirParams) -> float:
    """Closed-form battery ergotropy for ``N_C = N_B = 1`` (units of hbar omega).

    Evaluated in the rationalized form, which is manifestly non-negative and
    free of cancellation near ``theta = 0``.
    """
    n, m = params.n_bar, abs(params.m_bar)
    root = _ergotropy_root(theta, delta, n, m)
    num = 4 * (1 + 2 * n + 2 * m * math.cos(delta)) * (1 + n) * math.sin(theta) ** 2
    return num / (8 * (1 + 2 * n) * (3 - math.cos(theta) + root))


def analytic_ergotropy_n1_direct(theta: float, delta: float, params: ReservoirParams) -> float:
    """Same quantity, un-rationalized ``(-3 + cos theta + sqrt(...)) / (8 (1 + 2 n))``."""
    n, m = params.n_bar, abs(params.m_bar)
    return (-3 + math.cos(theta) + _ergotropy_root(theta, delta, n, m)) / (8 * (1 + 2 * n))


def analytic_rhoB_n2_theta0(params: ReservoirParams, delta: float) -> np.ndarray:
    """Battery steady state for ``N_C = N_B = 2``, fully excited charger.

    Basis ``|1,-1>, |1,0>, |1,1>`` (ascending energy).
    """
    n, m = params.n_bar, abs(params.m_bar)
    z = 12 * (1 + 2 * n) * (3 + 8 * n + 8 * n * n)
    corner = 3 * m * np.exp(1j * delta)
    mat = np.array(
        [
            [19 + 79 * n + 120 * n**2 + 64 * n**3, 0, corner],
            [0, 13 + 58 * n + 96 * n**2 + 64 * n**3, 0],
            [np.conj(corner), 0, 4 + 31 * n + 72 * n**2 + 64 * n**3],
        ],
        dtype=complex,
    )
    return mat / z


def sector_jump_for(geometry: SystemGeometry, J, params: ReservoirParams) -> np.ndarray:
    return sector_jump(geometry.sectors[geometry.sector_index(J)], params)
