import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import borngen as bg
from borngen.errors import CapabilityError
from borngen.kernels import (
    KernelSpec,
    kernel_eval,
    mmd2_exact,
    mmd2_u,
    mmd2_u_from_counts,
    offdiagonal_rbf_value,
    overlap_mmd2_u,
    quantum_mmd_diag,
    quantum_mmd_pure,
    rbf_mixture_value,
    swap_test_mmd_pure,
)
from borngen.rng import substream
from borngen.sim import DiscreteDistribution, PureState, SampleSet

RBF = KernelSpec("rbf", (0.25, 4.0))
LINEAR = KernelSpec("linear")
OVERLAP = KernelSpec("overlap")


def dist(*probs):
    return DiscreteDistribution(np.asarray(probs, dtype=float))


def random_dist(rng, size):
    w = rng.random(size) + 1e-3
    return DiscreteDistribution(w / w.sum())


class TestKernelSpec:
    def test_negative_precision_rejected(self):
        with pytest.raises(ValueError):
            KernelSpec("rbf", (-0.001, 1.0, 10.0))

    def test_rbf_needs_bandwidths(self):
        with pytest.raises(ValueError):
            KernelSpec("rbf")

    def test_lipschitz_constant_formula(self):
        spec = KernelSpec("rbf", (0.5, 4.0))
        assert spec.lipschitz_constant() == pytest.approx(math.sqrt(8.0 / math.e))


class TestKernelEval:
    def test_self_value_is_one(self):
        assert kernel_eval(RBF, [1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0)

    def test_log_two_distance(self):
        spec = KernelSpec("rbf", (1.0,))
        x = np.zeros(1)
        y = np.array([math.sqrt(math.log(2.0))])
        assert kernel_eval(spec, x, y) == pytest.approx(0.5, abs=1e-12)

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=2),
           st.lists(st.floats(-3, 3), min_size=2, max_size=2))
    @settings(max_examples=50, deadline=None)
    def test_symmetry(self, x, y):
        assert kernel_eval(RBF, x, y) == pytest.approx(kernel_eval(RBF, y, x))

    def test_nonclassical_rejected(self):
        with pytest.raises(CapabilityError):
            kernel_eval(LINEAR, [0.0], [1.0])


class TestMmd2Exact:
    def test_linear_disjoint_points(self):
        assert mmd2_exact(dist(1, 0), dist(0, 1), LINEAR) == pytest.approx(2.0)

    def test_linear_half_split(self):
        assert mmd2_exact(dist(0.5, 0.5), dist(1, 0), LINEAR) == pytest.approx(0.5)

    @pytest.mark.parametrize("spec", [LINEAR, RBF, OVERLAP])
    def test_self_distance_zero(self, spec):
        p = dist(0.3, 0.2, 0.4, 0.1)
        assert abs(mmd2_exact(p, p, spec)) < 1e-12

    def test_rbf_matches_dense_double_sum(self):
        # oracle: literal sum over events with one-hot squared distances
        rng = np.random.default_rng(0)
        p, q = random_dist(rng, 8), random_dist(rng, 8)
        c = offdiagonal_rbf_value(RBF)
        k = np.full((8, 8), c) + (1.0 - c) * np.eye(8)
        want = float(p.probs @ k @ p.probs + q.probs @ k @ q.probs - 2 * p.probs @ k @ q.probs)
        assert mmd2_exact(p, q, RBF) == pytest.approx(want, abs=1e-14)

    @pytest.mark.parametrize("spec", [LINEAR, RBF, OVERLAP])
    def test_nonnegative_and_symmetric(self, spec):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p, q = random_dist(rng, 16), random_dist(rng, 16)
            v = mmd2_exact(p, q, spec)
            assert v >= -1e-12
            assert v == pytest.approx(mmd2_exact(q, p, spec), abs=1e-14)

    @pytest.mark.parametrize("spec", [LINEAR, OVERLAP])
    def test_identity_of_indiscernibles(self, spec):
        rng = np.random.default_rng(6)
        p = random_dist(rng, 8)
        nudged = p.probs.copy()
        nudged[0] += 0.01
        nudged[1] -= 0.01
        q = DiscreteDistribution(nudged)
        assert mmd2_exact(p, q, spec) > 1e-10
        assert abs(mmd2_exact(p, DiscreteDistribution(p.probs.copy()), spec)) < 1e-12

    def test_event_space_mismatch(self):
        with pytest.raises(ValueError):
            mmd2_exact(dist(1.0), dist(0.5, 0.5), LINEAR)


class TestQuantumMmdPure:
    def test_identical_states(self):
        ghz = bg.make_ghz(3)
        assert quantum_mmd_pure(ghz, ghz) == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_support(self):
        a = PureState(1, np.array([1.0, 0.0]))
        b = PureState(1, np.array([0.0, 1.0]))
        assert quantum_mmd_pure(a, b) == pytest.approx(2.0)

    def test_half_overlap_value(self):
        a = PureState(1, np.array([1.0, 1.0]) / math.sqrt(2))
        b = PureState(1, np.array([1.0, 0.0]))
        assert quantum_mmd_pure(a, b) == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-12)

    def test_swap_form_agrees_on_nonnegative_amplitudes(self):
        rng = np.random.default_rng(2)
        p = rng.random(4) + 0.1
        q = rng.random(4) + 0.1
        a = PureState(2, np.sqrt(p / p.sum()))
        b = PureState(2, np.sqrt(q / q.sum()))
        assert swap_test_mmd_pure(a, b) == pytest.approx(quantum_mmd_pure(a, b), abs=1e-12)

    def test_swap_form_sees_relative_sign(self):
        plus = PureState(1, np.array([1.0, 1.0]) / math.sqrt(2))
        minus = PureState(1, np.array([1.0, -1.0]) / math.sqrt(2))
        assert quantum_mmd_pure(plus, minus) == pytest.approx(0.0, abs=1e-12)
        assert swap_test_mmd_pure(plus, minus) == pytest.approx(2.0, abs=1e-12)


class TestQuantumMmdDiag:
    def test_exact_self_is_zero(self):
        p = dist(0.25, 0.25, 0.5)
        assert quantum_mmd_diag(p, p) == 0.0

    def test_exact_disjoint(self):
        assert quantum_mmd_diag(dist(1, 0), dist(0, 1)) == pytest.approx(2.0)

    def test_shot_mode_close_at_large_shots(self):
        got = quantum_mmd_diag(dist(1, 0), dist(0, 1), shots=10**6, rng=substream(0, "swap"))
        assert abs(got - 2.0) < 0.01

    def test_zero_shots_rejected(self):
        with pytest.raises(ValueError):
            quantum_mmd_diag(dist(1, 0), dist(0, 1), shots=0, rng=substream(0, "s"))

    def test_shot_error_scaling(self):
        # median |error| vs shots should fall like ~1/sqrt(shots)
        p, q = dist(0.6, 0.3, 0.1, 0.0), dist(0.25, 0.25, 0.25, 0.25)
        exact = quantum_mmd_diag(p, q)
        shot_grid = [10**2, 10**3, 10**4, 10**5, 10**6]
        medians = []
        for shots in shot_grid:
            errs = [
                abs(quantum_mmd_diag(p, q, shots=shots, rng=substream(s, "sw", shots)) - exact)
                for s in range(41)
            ]
            medians.append(np.median(errs))
        slope = np.polyfit(np.log(shot_grid), np.log(medians), 1)[0]
        assert -0.6 <= slope <= -0.4


class TestMmd2U:
    def test_two_point_example(self):
        # xs={0,1}, ys={0,0} with the indicator kernel: 0 + 1 - 1 = 0
        xs = SampleSet(np.array([0, 1]), "model")
        ys = SampleSet(np.array([0, 0]), "target")
        assert mmd2_u(xs, ys, LINEAR) == pytest.approx(0.0, abs=1e-14)

    def test_equal_multisets_bounds(self):
        rng = np.random.default_rng(1)
        vals = rng.integers(0, 4, 20)
        xs = SampleSet(vals, "model")
        ys = SampleSet(vals.copy(), "target")
        for spec in (LINEAR, RBF):
            v = mmd2_u(xs, ys, spec)
            assert v <= 1e-14
            assert v >= -2.0 / (len(vals) - 1) - 1e-14

    def test_counts_path_matches_pairwise_bruteforce(self):
        rng = np.random.default_rng(3)
        xv = rng.integers(0, 5, 14)
        yv = rng.integers(0, 5, 11)
        c = offdiagonal_rbf_value(RBF)

        def k(a, b):
            return 1.0 if a == b else c

        n, m = len(xv), len(yv)
        s_xx = sum(k(xv[i], xv[j]) for i in range(n) for j in range(n) if i != j)
        s_yy = sum(k(yv[i], yv[j]) for i in range(m) for j in range(m) if i != j)
        s_xy = sum(k(a, b) for a in xv for b in yv)
        want = s_xx / (n * (n - 1)) + s_yy / (m * (m - 1)) - 2 * s_xy / (n * m)
        got = mmd2_u(SampleSet(xv, "model"), SampleSet(yv, "target"), RBF)
        assert got == pytest.approx(want, abs=1e-12)

    def test_continuous_matches_bruteforce(self):
        rng = np.random.default_rng(4)
        xv = rng.standard_normal((9, 3))
        yv = rng.standard_normal((7, 3))
        spec = KernelSpec("rbf", (0.5, 2.0))

        def k(a, b):
            return float(rbf_mixture_value(np.sum((a - b) ** 2), spec))

        n, m = len(xv), len(yv)
        s_xx = sum(k(xv[i], xv[j]) for i in range(n) for j in range(n) if i != j)
        s_yy = sum(k(yv[i], yv[j]) for i in range(m) for j in range(m) if i != j)
        s_xy = sum(k(a, b) for a in xv for b in yv)
        want = s_xx / (n * (n - 1)) + s_yy / (m * (m - 1)) - 2 * s_xy / (n * m)
        assert mmd2_u(SampleSet(xv, "model"), SampleSet(yv, "target"), spec) == pytest.approx(
            want, abs=1e-12
        )

    def test_minimum_sample_counts(self):
        with pytest.raises(ValueError):
            mmd2_u(SampleSet(np.array([0]), "model"), SampleSet(np.array([0, 1]), "target"), LINEAR)

    def test_quantum_spec_rejected(self):
        xs = SampleSet(np.array([0, 1]), "model")
        with pytest.raises(CapabilityError):
            mmd2_u(xs, xs, OVERLAP)

    @pytest.mark.parametrize("spec", [LINEAR, RBF])
    def test_unbiasedness_monte_carlo(self, spec):
        # mean over seeded resamples should approach the exact value
        p = dist(0.5, 0.3, 0.15, 0.05)
        q = dist(0.25, 0.25, 0.25, 0.25)
        exact = mmd2_exact(p, q, spec)
        n = m = 25
        reps = 2000
        rng = substream(11, "unbias", spec.kind)
        ux = rng.random((reps, n))
        uy = rng.random((reps, m))
        cdf_p, cdf_q = np.cumsum(p.probs), np.cumsum(q.probs)
        vals = np.empty(reps)
        for r in range(reps):
            cx = np.bincount(np.searchsorted(cdf_p, ux[r], side="right"), minlength=4)
            cy = np.bincount(np.searchsorted(cdf_q, uy[r], side="right"), minlength=4)
            vals[r] = mmd2_u_from_counts(cx, cy, spec)
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - exact) < 3 * se

    @pytest.mark.parametrize("spec", [LINEAR, RBF])
    def test_estimator_consistency(self, spec):
        # |MMD2_U - MMD2| medians shrink as n grows
        p = dist(0.4, 0.3, 0.2, 0.1)
        q = dist(0.1, 0.2, 0.3, 0.4)
        exact = mmd2_exact(p, q, spec)
        medians = []
        for n in (10**2, 10**3, 10**4):
            errs = []
            for s in range(20):
                rng = substream(s, "consistency", n)
                xs = bg.sample(p, n, rng, "model")
                ys = bg.sample(q, n, rng, "target")
                errs.append(abs(mmd2_u(xs, ys, spec) - exact))
            medians.append(np.median(errs))
        assert medians[0] > medians[1] > medians[2]

    def test_overlap_ustat_matches_bruteforce(self):
        rng = np.random.default_rng(9)

        def rand_states(k):
            v = rng.standard_normal((k, 4)) + 1j * rng.standard_normal((k, 4))
            return v / np.linalg.norm(v, axis=1, keepdims=True)

        xs, ys = rand_states(5), rand_states(6)

        def k_fid(a, b):
            return abs(np.vdot(a, b)) ** 2

        n, m = 5, 6
        s_xx = sum(k_fid(xs[i], xs[j]) for i in range(n) for j in range(n) if i != j)
        s_yy = sum(k_fid(ys[i], ys[j]) for i in range(m) for j in range(m) if i != j)
        s_xy = sum(k_fid(a, b) for a in xs for b in ys)
        want = s_xx / (n * (n - 1)) + s_yy / (m * (m - 1)) - 2 * s_xy / (n * m)
        assert overlap_mmd2_u(xs, ys) == pytest.approx(want, abs=1e-12)
