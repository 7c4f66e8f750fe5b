import math

import numpy as np
import pytest

import borngen as bg
from borngen.circuits import GateOp, ParamCircuit
from borngen.rng import substream
from borngen.sim import apply_gate, fidelity, zero_state
from borngen.targets import (
    Gaussian3DTarget,
    make_discrete_gaussian,
    make_ghz,
    make_xxz,
    sample_gaussian3d,
    xxz_ground_state,
)


class TestDiscreteGaussian:
    def test_symmetric_about_midrange_mean(self):
        dist = make_discrete_gaussian(3, 3.5, 1.3)
        p = dist.probs
        for t in range(4):
            assert p[3 - t] == pytest.approx(p[4 + t], rel=1e-12)

    def test_tiny_sigma_concentrates(self):
        dist = make_discrete_gaussian(4, 5.0, 1e-9)
        assert dist.probs[5] == pytest.approx(1.0)

    def test_huge_sigma_flattens(self):
        dist = make_discrete_gaussian(2, 1.5, 1e6)
        assert np.all(np.abs(dist.probs - 0.25) < 1e-6)

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            make_discrete_gaussian(3, 1.0, 0.0)

    @pytest.mark.parametrize("n", [4, 6, 8, 10, 12])
    def test_preset_sizes_are_valid_distributions(self, n):
        dist = make_discrete_gaussian(n, 1.0, 8.0)
        assert abs(dist.probs.sum() - 1.0) < 1e-10
        assert np.all(dist.probs >= 0)


class TestGhz:
    @pytest.mark.parametrize("n", [2, 4, 6, 8, 10, 12])
    def test_born_distribution(self, n):
        probs = bg.born_distribution(make_ghz(n)).probs
        assert probs[0] == pytest.approx(0.5)
        assert probs[-1] == pytest.approx(0.5)
        assert probs[1:-1].sum() == pytest.approx(0.0, abs=1e-15)

    def test_self_fidelity(self):
        assert fidelity(make_ghz(4), make_ghz(4)) == pytest.approx(1.0)

    def test_matches_textbook_preparation_circuit(self):
        # H on qubit 0 then a CNOT chain
        n = 5
        psi = apply_gate(zero_state(n), GateOp("h", (0,)))
        for q in range(n - 1):
            psi = apply_gate(psi, GateOp("cnot", (q, q + 1)))
        assert fidelity(psi, make_ghz(n)) == pytest.approx(1.0, abs=1e-12)

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            make_ghz(1)


class TestGaussian3D:
    COV = np.array([[0.5, 0.1, 0.25], [0.1, 0.5, 0.1], [0.25, 0.1, 0.5]])

    def test_asymmetric_input_is_symmetrized(self):
        skew = self.COV.copy()
        skew[0, 1] = 0.15
        skew[1, 0] = 0.05
        target = Gaussian3DTarget((0, 0, 0), skew)
        assert target.covariance[0, 1] == pytest.approx(0.1)
        assert np.allclose(target.covariance, target.covariance.T)

    def test_non_pd_rejected(self):
        # the literal printed matrix: entry (0,1)=1 implies |correlation| > 1,
        # and its symmetrization has a negative leading 2x2 minor
        bad = np.array([[0.5, 1.0, 0.25], [0.1, 0.5, 0.1], [0.25, 0.1, 0.5]])
        with pytest.raises(ValueError):
            Gaussian3DTarget((0, 0, 0), bad)

    def test_sample_mean_clt_band(self):
        target = Gaussian3DTarget((0, 0, 0), self.COV)
        draws = sample_gaussian3d(target, 10**5, substream(0, "g3")).values
        bound = 3.0 * math.sqrt(0.5) / math.sqrt(10**5)
        assert np.all(np.abs(draws.mean(axis=0)) < bound)

    def test_identity_covariance_recovered(self):
        target = Gaussian3DTarget((0, 0, 0), np.eye(3))
        draws = sample_gaussian3d(target, 10**5, substream(1, "g3")).values
        emp = np.cov(draws.T)
        assert np.max(np.abs(emp - np.eye(3))) < 0.02

    def test_correlations_recovered(self):
        target = Gaussian3DTarget((0, 0, 0), self.COV)
        draws = sample_gaussian3d(target, 2 * 10**5, substream(2, "g3")).values
        emp = np.cov(draws.T)
        assert np.max(np.abs(emp - self.COV)) < 0.02

    def test_deterministic(self):
        target = Gaussian3DTarget((0, 0, 0), self.COV)
        a = sample_gaussian3d(target, 50, substream(3, "g3")).values
        b = sample_gaussian3d(target, 50, substream(3, "g3")).values
        assert np.array_equal(a, b)


class TestXXZ:
    def test_two_site_open_ground(self):
        energy, state = xxz_ground_state(2, 0.0, 0.25, "open")
        assert energy == pytest.approx(-2.0, abs=1e-10)
        singlet = np.array([0, 1, -1, 0]) / math.sqrt(2)
        assert abs(np.vdot(singlet, state.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-10)

    def test_zero_coupling_drops_zz_terms(self):
        h = make_xxz(3, 0.0, 0.25, "open")
        assert not any("Z" in s and s.count("Z") == 2 for _, s in h.terms)

    def test_periodic_two_site_doubles_bonds(self):
        open_h = make_xxz(2, 0.7, 0.25, "open").to_matrix()
        per_h = make_xxz(2, 0.7, 0.25, "periodic").to_matrix()
        field = bg.Hamiltonian(2, ((0.25, "ZI"), (0.25, "IZ"))).to_matrix()
        assert np.allclose(per_h - field, 2.0 * (open_h - field), atol=1e-12)

    def test_boundary_validation(self):
        with pytest.raises(ValueError):
            make_xxz(2, 0.0, 0.25, "twisted")

    def test_ground_varies_smoothly_with_coupling(self):
        energies = [xxz_ground_state(2, a, 0.25)[0] for a in (-0.2, 0.0, 0.2)]
        # singlet sector: E = -2 - a on this range
        assert energies == pytest.approx([-1.8, -2.0, -2.2], abs=1e-10)
