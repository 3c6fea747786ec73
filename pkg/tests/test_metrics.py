import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density
from dickebattery import metrics
from dickebattery.metrics import BatteryHamiltonian
from dickebattery.reservoir import ReservoirParams
from dickebattery.spin import PRODUCT, DensityMatrix, SystemGeometry, to_product
from dickebattery.states import ChargerPrep, initial_state
from dickebattery.steady import analytic_ergotropy_n1, analytic_rhoB_n1, dark_states_n1, steady_state

seeds = st.integers(0, 2**32 - 1)


def permutation_ergotropy(rho, levels):
    """min over permutations of sum_i r_i eps_pi(i), against the state's energy."""
    r = np.linalg.eigvalsh(rho)
    e = float(np.real(np.trace(np.diag(levels) @ rho)))
    passive = min(sum(ri * levels[p] for ri, p in zip(r, perm)) for perm in itertools.permutations(range(len(r))))
    return e - passive


class TestHamiltonian:
    @pytest.mark.parametrize("n", [1, 4, 7])
    def test_levels(self, n):
        h = BatteryHamiltonian(n, omega=2.0)
        np.testing.assert_allclose(np.diag(h.H).real, 2.0 * np.arange(n, -1, -1))
        np.testing.assert_allclose(h.levels, 2.0 * np.arange(n + 1))


class TestErgotropy:
    def test_examples(self):
        H = np.diag([0.0, 1.0])
        assert metrics.ergotropy(np.diag([0.3, 0.7]), H) == pytest.approx(0.4)
        assert metrics.ergotropy(np.eye(3) / 3, np.diag([0.0, 1, 2])) == pytest.approx(0.0, abs=1e-15)
        plus = np.full((2, 2), 0.5)
        assert metrics.ergotropy(plus, H) == pytest.approx(0.5)
        wp, wc = metrics.ergotropy_split(plus, H)
        assert wp == pytest.approx(0.0) and wc == pytest.approx(0.5)

    def test_n1_vacuum_equator(self):
        rho = analytic_rhoB_n1(math.pi / 2, 0.0, ReservoirParams(0.0))
        assert metrics.ergotropy(rho, np.diag([0.0, 1.0])) == pytest.approx((math.sqrt(13) - 3) / 8, abs=1e-12)

    @given(st.integers(3, 4), seeds)
    def test_permutation_oracle(self, dim, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(dim, rng, rank=int(rng.integers(1, dim + 1)))
        levels = np.sort(rng.integers(0, 3, size=dim).astype(float))  # degeneracies included
        assert metrics.ergotropy(rho, np.diag(levels)) == pytest.approx(permutation_ergotropy(rho, levels), abs=1e-10)

    @given(st.integers(2, 5), seeds)
    def test_nonnegative_and_split(self, dim, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(dim, rng)
        H = BatteryHamiltonian(dim - 1).H
        w = metrics.ergotropy(rho, H)
        wp, wc = metrics.ergotropy_split(rho, H)
        assert w >= 0 and wp >= 0
        assert w == pytest.approx(wp + wc, abs=1e-12)

    @given(st.integers(2, 5), seeds)
    def test_passive_state(self, dim, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(dim, rng)
        H = BatteryHamiltonian(dim - 1).H
        ps = metrics.passive_state(rho, H)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(ps.data)), np.sort(np.linalg.eigvalsh(rho)), atol=1e-12)
        assert metrics.ergotropy(ps, H) == pytest.approx(0.0, abs=1e-12)

    def test_passive_examples(self):
        H = np.diag([2.0, 1.0, 0.0])  # battery order, top level first
        already = np.diag([0.1, 0.3, 0.6])
        np.testing.assert_allclose(metrics.passive_state(already, H).data, already, atol=1e-15)
        top = np.diag([1.0, 0, 0])
        np.testing.assert_allclose(metrics.passive_state(top, H).data, np.diag([0, 0, 1.0]), atol=1e-15)

    def test_degenerate_tie_break(self):
        H = np.diag([0.0, 1.0, 2.0])
        v = np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))[0]
        a = v @ np.diag([0.4, 0.4, 0.2]) @ v.T
        b = v[:, [1, 0, 2]] @ np.diag([0.4, 0.4, 0.2]) @ v[:, [1, 0, 2]].T
        assert abs(metrics.ergotropy(a, H) - metrics.ergotropy(b, H)) < 1e-10

    def test_clipping(self):
        spec = metrics.spectrum(np.diag([1.0 + 5e-10, -5e-10]))
        assert spec.values.min() == 0.0 and spec.values.sum() == pytest.approx(1.0)
        spec = metrics.spectrum(np.diag([1.1, -0.1]))
        assert spec.values.min() < 0  # genuinely unphysical input stays visible

    def test_general_hamiltonian(self, rng):
        # non-diagonal H takes the eigh path
        h = rng.normal(size=(3, 3))
        h = h + h.T
        rho = random_density(3, rng)
        vals, vecs = np.linalg.eigh(h)
        rho_e = vecs.conj().T @ rho @ vecs
        assert metrics.ergotropy(rho, h) == pytest.approx(permutation_ergotropy(rho_e, vals), abs=1e-10)


class TestCoherence:
    def test_examples(self):
        H = np.diag([0.0, 1.0])
        assert metrics.l1_coherence(np.diag([0.2, 0.8]), H) == 0
        c = 0.1 - 0.2j
        assert metrics.l1_coherence(np.array([[0.5, c], [np.conj(c), 0.5]]), H) == pytest.approx(2 * abs(c))

    @given(st.floats(0, math.pi), st.floats(-math.pi, math.pi), st.floats(0, 1.5))
    def test_n1_closed_form(self, theta, delta, r):
        p = ReservoirParams(r)
        n, m = p.n_bar, abs(p.m_bar)
        want = 4 * math.sin(theta) * abs(1 + n + m * np.exp(-1j * delta)) / (8 * (1 + 2 * n))
        got = metrics.l1_coherence(analytic_rhoB_n1(theta, delta, p), np.diag([0.0, 1.0]))
        assert got == pytest.approx(want, abs=1e-12)

    @given(st.integers(2, 5), seeds)
    def test_dephased_has_none(self, dim, seed):
        rho = random_density(dim, np.random.default_rng(seed))
        H = BatteryHamiltonian(dim - 1).H
        d = metrics.dephase(rho, H)
        assert metrics.l1_coherence(d, H) == 0
        np.testing.assert_allclose(metrics.dephase(d, H), d)


class TestNegativity:
    def test_product_state(self, rng):
        g = SystemGeometry(2, 3)
        rho = DensityMatrix(np.kron(random_density(3, rng), random_density(4, rng)), PRODUCT, g.dims)
        assert metrics.log_negativity(rho, g) == pytest.approx(0.0, abs=1e-12)

    def test_singlet(self):
        g = SystemGeometry(1, 1)
        d1, _ = dark_states_n1(ReservoirParams())
        rho = DensityMatrix(np.outer(d1, d1.conj()), PRODUCT, g.dims)
        assert metrics.log_negativity(rho, g) == pytest.approx(1.0)
        pt = metrics.partial_transpose(rho.data, g.dims)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(pt)), [-0.5, 0.5, 0.5, 0.5], atol=1e-15)

    @given(st.integers(1, 3), st.integers(1, 3), seeds)
    def test_subsystem_symmetry(self, nc, nb, seed):
        g = SystemGeometry(nc, nb)
        rho = DensityMatrix(random_density(g.dim, np.random.default_rng(seed)), PRODUCT, g.dims)
        assert metrics.log_negativity(rho, g, 0) == pytest.approx(metrics.log_negativity(rho, g, 1), abs=1e-10)

    def test_errors(self):
        g = SystemGeometry(1, 1)
        with pytest.raises(ValueError):
            metrics.log_negativity(DensityMatrix(np.eye(4) / 4, "coupled"), g)
        with pytest.raises(ValueError):
            metrics.partial_transpose(np.eye(4), (2, 2), subsystem=2)

    def test_kinks_along_theta(self):
        """The sharpest bend of S_B(theta) sits where a partial-transpose eigenvalue nears zero."""
        g = SystemGeometry(4, 4)
        p = ReservoirParams(0.5)
        thetas = np.linspace(0, math.pi, 121)
        s, smallest = [], []
        for th in thetas:
            rho = to_product(steady_state(initial_state(g, ChargerPrep(th)), g, p), g)
            s.append(metrics.log_negativity(rho, g))
            smallest.append(np.abs(np.linalg.eigvalsh(metrics.partial_transpose(rho.data, g.dims))).min())
        curvature = np.abs(np.diff(s, 2))
        kink = int(np.argmax(curvature)) + 1
        assert curvature[kink - 1] > 10 * np.median(curvature)
        # the closest approach to zero of the spectrum is at the kink itself
        assert smallest[kink] < min(smallest[kink - 1], smallest[kink + 1])
        assert smallest[kink] < 1e-3


class TestEnergyAndReport:
    def test_energy(self):
        H = BatteryHamiltonian(2).H
        e, per = metrics.energy(np.diag([0, 0, 1.0]), H)
        assert e == 0 and per == 0
        e, per = metrics.energy(np.diag([1.0, 0, 0]), H)
        assert (e, per) == (2.0, 1.0)

    @pytest.mark.parametrize("r,want", [(0.0, 0.25), (0.5, -2 / (8 * (1 + 2 * math.sinh(0.5) ** 2)) + 0.5)])
    def test_n1_theta0_energy(self, r, want):
        g = SystemGeometry(1, 1)
        rep = metrics.report(steady_state(initial_state(g, ChargerPrep()), g, ReservoirParams(r)), g)
        assert rep.E == pytest.approx(want, abs=1e-12)

    def test_report_consistency(self):
        g = SystemGeometry(1, 1)
        p = ReservoirParams(0.5)
        rep = metrics.report(steady_state(initial_state(g, ChargerPrep(1.2)), g, p), g)
        assert rep.W == pytest.approx(analytic_ergotropy_n1(1.2, 0.0, p), abs=1e-12)
        assert rep.W == pytest.approx(rep.W_P + rep.W_C, abs=1e-12)
        assert rep.W_P == pytest.approx(0.0, abs=1e-12)
        row = rep.row()
        assert set(row) == {"E_B", "W_B", "W_B_P", "W_B_C", "C_B", "S_B"}
        g4 = SystemGeometry(4, 4)
        rep4 = metrics.report(steady_state(initial_state(g4, ChargerPrep(1.0)), g4, p), g4, omega=2.0)
        assert rep4.E_per_spin == pytest.approx(rep4.E / 8)
        assert 0 <= rep4.E_per_spin <= 1
