"""Angular-momentum primitives for a charger/battery pair of collective spins.

Conventions used throughout the package:

* Within a Dicke ladder the basis is ordered ``M = J, J-1, ..., -J`` so the
  fully excited state is the first coordinate.
* The product basis is ``|J_C, M_C> (x) |J_B, M_B>`` with the battery index
  running fastest (``numpy.kron`` ordering).
* The coupled basis is the direct sum of sectors ``|J, M>`` ordered by
  descending ``J``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

PRODUCT = "product"
COUPLED = "coupled"


def _twice(x, name="value") -> int:
    """Return ``2*x`` as an int, rejecting values that are not half-integers."""
    if isinstance(x, Fraction):
        two = 2 * x
        if two.denominator != 1:
            raise ValueError(f"{name}={x} is not a half-integer")
        return int(two)
    try:
        two = 2.0 * float(x)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name}={x!r} is not a number") from exc
    if not math.isfinite(two) or abs(two - round(two)) > 1e-9:
        raise ValueError(f"{name}={x} is not a half-integer")
    return int(round(two))


@dataclass(frozen=True, eq=False)
class SpinSector:
    """One Dicke ladder of total spin ``J`` with its collective operators."""

    J: float
    Jplus: np.ndarray
    Jminus: np.ndarray
    Jz: np.ndarray

    @property
    def dim(self) -> int:
        return self.Jz.shape[0]

    @property
    def m_values(self) -> np.ndarray:
        return self.J - np.arange(self.dim)

    @property
    def Jy(self) -> np.ndarray:
        return (self.Jplus - self.Jminus) / 2j

    @property
    def Jx(self) -> np.ndarray:
        return (self.Jplus + self.Jminus) / 2


def ladder_matrices(J) -> SpinSector:
    """Build ``J+``, ``J-`` and ``Jz`` for spin ``J`` in the descending-M basis."""
    two_j = _twice(J, "J")
    if two_j < 0:
        raise ValueError(f"J={J} must be non-negative")
    J = two_j / 2
    dim = two_j + 1
    m = J - np.arange(dim)
    jplus = np.zeros((dim, dim), dtype=complex)
    # <J, M+1| J+ |J, M> sits one row above the diagonal.
    for k in range(1, dim):
        jplus[k - 1, k] = math.sqrt(J * (J + 1) - m[k] * (m[k] + 1))
    jplus.setflags(write=False)
    jminus = jplus.conj().T.copy()
    jminus.setflags(write=False)
    jz = np.diag(m).astype(complex)
    jz.setflags(write=False)
    return SpinSector(J=J, Jplus=jplus, Jminus=jminus, Jz=jz)


def _log_fact(n: int) -> float:
    return math.lgamma(n + 1)


def clebsch_gordan(j1, j2, m1, m2, J, M) -> float:
    """Clebsch-Gordan coefficient ``<j1 m1; j2 m2 | J M>`` (Condon-Shortley phase).

    Evaluated with the Racah sum in log-factorial form so that moderately
    large spins (N ~ 30) do not overflow.
    """
    tj1, tj2 = _twice(j1, "j1"), _twice(j2, "j2")
    tm1, tm2 = _twice(m1, "m1"), _twice(m2, "m2")
    tJ, tM = _twice(J, "J"), _twice(M, "M")
    if min(tj1, tj2, tJ) < 0:
        raise ValueError("angular momenta must be non-negative")
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        raise ValueError("projection exceeds its angular momentum")
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        if (tj - tm) % 2:
            raise ValueError("projection and angular momentum differ by a half-integer")
    if tM != tm1 + tm2:
        return 0.0
    if tJ < abs(tj1 - tj2) or tJ > tj1 + tj2 or (tj1 + tj2 + tJ) % 2:
        return 0.0

    # integer combinations appearing in the Racah formula
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tj2 + tJ) // 2
    c = (-tj1 + tj2 + tJ) // 2
    d = (tj1 + tj2 + tJ) // 2 + 1
    jm1p, jm1m = (tj1 + tm1) // 2, (tj1 - tm1) // 2
    jm2p, jm2m = (tj2 + tm2) // 2, (tj2 - tm2) // 2
    JMp, JMm = (tJ + tM) // 2, (tJ - tM) // 2

    log_pref = 0.5 * (
        math.log(tJ + 1)
        + _log_fact(a) + _log_fact(b) + _log_fact(c) - _log_fact(d)
        + _log_fact(jm1p) + _log_fact(jm1m) + _log_fact(jm2p) + _log_fact(jm2m)
        + _log_fact(JMp) + _log_fact(JMm)
    )
    k_min = max(0, (tj2 - tJ - tm1) // 2, (tj1 - tJ + tm2) // 2)
    k_max = min(a, jm1m, jm2p)
    total = 0.0
    for k in range(k_min, k_max + 1):
        denom = (
            _log_fact(k) + _log_fact(a - k) + _log_fact(jm1m - k) + _log_fact(jm2p - k)
            + _log_fact((tJ - tj2 + tm1) // 2 + k) + _log_fact((tJ - tj1 - tm2) // 2 + k)
        )
        total += (-1) ** k * math.exp(log_pref - denom)
    return total


@dataclass(frozen=True, eq=False)
class SystemGeometry:
    """Charger of ``n_c`` spins and battery of ``n_b`` spins, symmetric subspaces only."""

    n_c: int
    n_b: int
    sectors: tuple = field(init=False, repr=False)
    charger: SpinSector = field(init=False, repr=False)
    battery: SpinSector = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("n_c", "n_b"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        object.__setattr__(self, "charger", ladder_matrices(self.j_c))
        object.__setattr__(self, "battery", ladder_matrices(self.j_b))
        two_min, two_max = abs(self.n_c - self.n_b), self.n_c + self.n_b
        object.__setattr__(
            self,
            "sectors",
            tuple(ladder_matrices(tj / 2) for tj in range(two_max, two_min - 1, -2)),
        )

    @property
    def j_c(self) -> float:
        return self.n_c / 2

    @property
    def j_b(self) -> float:
        return self.n_b / 2

    @property
    def dim(self) -> int:
        return (self.n_c + 1) * (self.n_b + 1)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.n_c + 1, self.n_b + 1)

    @property
    def even(self) -> bool:
        """True when the total spin count is even (integer-J sectors)."""
        return (self.n_c + self.n_b) % 2 == 0

    @property
    def sector_js(self) -> tuple:
        return tuple(s.J for s in self.sectors)

    @cached_property
    def sector_slices(self) -> tuple:
        out, start = [], 0
        for s in self.sectors:
            out.append(slice(start, start + s.dim))
            start += s.dim
        return tuple(out)

    def sector_index(self, J) -> int:
        tj = _twice(J, "J")
        for i, s in enumerate(self.sectors):
            if round(2 * s.J) == tj:
                return i
        raise KeyError(f"J={J} is not a sector of {self}")

    @cached_property
    def u_cg(self) -> np.ndarray:
        """Unitary with ``coupled = u_cg @ product`` for state vectors."""
        u = np.zeros((self.dim, self.dim))
        mc = self.charger.m_values
        mb = self.battery.m_values
        row = 0
        for s in self.sectors:
            for M in s.m_values:
                for i, m1 in enumerate(mc):
                    m2 = M - m1
                    if abs(m2) > self.j_b + 1e-12:
                        continue
                    j = int(round(self.j_b - m2))
                    u[row, i * (self.n_b + 1) + j] = clebsch_gordan(
                        self.j_c, self.j_b, m1, m2, s.J, M
                    )
                row += 1
        u.setflags(write=False)
        return u

    def _product_ops(self):
        ic, ib = np.eye(self.n_c + 1), np.eye(self.n_b + 1)
        jp = np.kron(self.charger.Jplus, ib) + np.kron(ic, self.battery.Jplus)
        jz = np.kron(self.charger.Jz, ib) + np.kron(ic, self.battery.Jz)
        return jp, jp.conj().T, jz

    @cached_property
    def collective_product(self) -> tuple:
        """Total ``(J+, J-, Jz)`` in the product basis."""
        return self._product_ops()

    @cached_property
    def collective_coupled(self) -> tuple:
        """Total ``(J+, J-, Jz)`` in the coupled basis, assembled block by block."""
        jp = np.zeros((self.dim, self.dim), dtype=complex)
        jz = np.zeros((self.dim, self.dim), dtype=complex)
        for s, sl in zip(self.sectors, self.sector_slices):
            jp[sl, sl] = s.Jplus
            jz[sl, sl] = s.Jz
        return jp, jp.conj().T.copy(), jz

    def sector_projector(self, J) -> np.ndarray:
        """Projector onto sector ``J`` in the coupled basis."""
        p = np.zeros((self.dim, self.dim))
        sl = self.sector_slices[self.sector_index(J)]
        p[sl, sl] = np.eye(sl.stop - sl.start)
        return p


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density matrix tagged with the basis it is expressed in."""

    data: np.ndarray
    basis: str = PRODUCT
    dims: tuple | None = None

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {data.shape}")
        if self.basis not in (PRODUCT, COUPLED):
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.dims is not None and int(np.prod(self.dims)) != data.shape[0]:
            raise ValueError(f"dims {self.dims} do not match shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def check(self, herm_tol=1e-12, trace_tol=1e-10, eig_tol=1e-9) -> "DensityMatrix":
        """Raise ``ValueError`` unless Hermitian, unit-trace and positive."""
        herm = np.max(np.abs(self.data - self.data.conj().T))
        if herm > herm_tol:
            raise ValueError(f"not Hermitian: max deviation {herm:.3e}")
        tr = np.trace(self.data)
        if abs(tr - 1) > trace_tol:
            raise ValueError(f"trace {tr} differs from 1")
        lo = np.linalg.eigvalsh(self.data).min()
        if lo < -eig_tol:
            raise ValueError(f"negative eigenvalue {lo:.3e}")
        return self

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))


def _check_dim(n, geometry: SystemGeometry):
    if n != geometry.dim:
        raise ValueError(f"dimension {n} does not match geometry dimension {geometry.dim}")


def to_coupled(obj, geometry: SystemGeometry):
    """Map a product-basis vector or :class:`DensityMatrix` to the coupled basis."""
    u = geometry.u_cg
    if isinstance(obj, DensityMatrix):
        if obj.basis != PRODUCT:
            raise ValueError("input is already in the coupled basis")
        _check_dim(obj.dim, geometry)
        return DensityMatrix(u @ obj.data @ u.T, basis=COUPLED)
    vec = np.asarray(obj)
    if vec.ndim != 1:
        raise TypeError("expected a state vector or a DensityMatrix")
    _check_dim(vec.shape[0], geometry)
    return u @ vec


def to_product(obj, geometry: SystemGeometry):
    """Inverse of :func:`to_coupled`."""
    u = geometry.u_cg
    if isinstance(obj, DensityMatrix):
        if obj.basis != COUPLED:
            raise ValueError("input is already in the product basis")
        _check_dim(obj.dim, geometry)
        return DensityMatrix(u.T @ obj.data @ u, basis=PRODUCT, dims=geometry.dims)
    vec = np.asarray(obj)
    if vec.ndim != 1:
        raise TypeError("expected a state vector or a DensityMatrix")
    _check_dim(vec.shape[0], geometry)
    return u.T @ vec


def partial_trace_charger(rho: DensityMatrix, geometry: SystemGeometry) -> DensityMatrix:
    """Reduced battery state, in the battery Dicke basis (M descending)."""
    if rho.basis != PRODUCT:
        raise ValueError("partial trace needs a product-basis state; call to_product first")
    _check_dim(rho.dim, geometry)
    dc, db = geometry.dims
    red = np.einsum("ijik->jk", rho.data.reshape(dc, db, dc, db))
    return DensityMatrix(red, basis=PRODUCT, dims=(db,))
