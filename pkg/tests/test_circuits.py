import math

import numpy as np
import pytest

import borngen as bg
from borngen.circuits import (
    Fixed,
    GateOp,
    Input,
    ParamCircuit,
    Trainable,
    bind,
    build_hardware_efficient,
    build_phl_qgan,
    build_qaoa,
    build_qcbm_ansatz,
    build_style_qgan,
    encode,
    generator_output,
    run_array,
)
from borngen.errors import CapabilityError
from borngen.sim import Hamiltonian, zero_state


class TestQcbmBuilder:
    def test_minimal_shape(self):
        circ = build_qcbm_ansatz(2, 1)
        kinds = [(g.kind, g.qubits) for g in circ.gates]
        assert kinds == [
            ("ry", (0,)),
            ("ry", (1,)),
            ("cnot", (0, 1)),
            ("ry", (0,)),
            ("ry", (1,)),
        ]
        assert circ.n_trainable == 4

    @pytest.mark.parametrize(
        "n,l,expected",
        [(2, 1, 4), (6, 8, 54), (4, 3, 16)],
    )
    def test_trainable_counts(self, n, l, expected):
        assert build_qcbm_ansatz(n, l).n_trainable == expected

    def test_locality_is_two(self):
        for n, l in [(2, 1), (5, 3), (8, 2)]:
            assert build_qcbm_ansatz(n, l).max_locality == 2

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            build_qcbm_ansatz(1, 1)
        with pytest.raises(ValueError):
            build_qcbm_ansatz(3, 0)


class TestHardwareEfficientBuilder:
    @pytest.mark.parametrize("n,l,expected", [(4, 1, 12), (4, 2, 24), (3, 5, 45)])
    def test_trainable_counts(self, n, l, expected):
        # three rotation slots per qubit per layer
        assert build_hardware_efficient(n, l).n_trainable == expected

    def test_entangler_count_per_layer(self):
        for n, l in [(4, 1), (5, 3)]:
            circ = build_hardware_efficient(n, l)
            cnots = sum(g.kind == "cnot" for g in circ.gates)
            assert cnots == n * l

    def test_gate_totals(self):
        circ = build_hardware_efficient(4, 2)
        assert circ.n_gates == 2 * (3 * 4 + 4)


class TestQaoaBuilder:
    def chain(self, n):
        terms = []
        for i in range(n - 1):
            labels = ["I"] * n
            labels[i] = labels[i + 1] = "Z"
            terms.append((1.0, "".join(labels)))
        return Hamiltonian(n, tuple(terms))

    @pytest.mark.parametrize("n,l,expected", [(3, 2, 8), (2, 1, 3), (4, 3, 15)])
    def test_trainable_counts(self, n, l, expected):
        assert build_qaoa(n, l, self.chain(n)).n_trainable == expected

    def test_locality_is_register_size(self):
        assert build_qaoa(3, 1, self.chain(3)).max_locality == 3

    def test_rejects_nondiagonal_cost(self):
        with pytest.raises(CapabilityError):
            build_qaoa(2, 1, Hamiltonian(2, ((1.0, "XX"),)))

    def test_zero_angles_act_as_identity_on_populations(self):
        circ = build_qaoa(3, 2, self.chain(3))
        out = bind(circ, np.zeros(circ.n_trainable))
        assert np.allclose(np.abs(out.amplitudes) ** 2, np.abs(zero_state(3).amplitudes) ** 2)

    def test_expdiag_matches_matrix_exponential(self):
        cost = Hamiltonian(2, ((0.8, "ZZ"), (0.3, "ZI")))
        theta = 0.913
        gate = GateOp("expdiag", (0, 1), Fixed(theta), cost.diagonal())
        rng = np.random.default_rng(4)
        vec = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        vec /= np.linalg.norm(vec)
        got = bg.apply_gate(bg.PureState(2, vec), gate).amplitudes
        from scipy.linalg import expm

        want = expm(-1j * theta * cost.to_matrix()) @ vec
        assert np.allclose(got, want, atol=1e-12)


class TestStyleQganBuilder:
    def test_encoder_counts(self):
        encoder, _ = build_style_qgan(1)
        assert encoder.n_encoding == 14  # 12 rotations + 2 controlled rotations
        assert encoder.n_features == 3
        assert encoder.n_trainable == 0

    def test_generator_counts(self):
        for l1, expected in [(1, 14), (2, 28), (4, 56)]:
            _, gen = build_style_qgan(l1)
            assert gen.n_trainable == expected

    def test_feature_reuse_pattern(self):
        encoder, _ = build_style_qgan(1)
        feats = [g.binding.feature for g in encoder.gates if g.qubits == (0,)]
        assert feats == [0, 1, 1, 2]

    def test_entangler_orientation_alternates(self):
        _, gen = build_style_qgan(2)
        crys = [g.qubits for g in gen.gates if g.kind == "cry"]
        assert crys == [(0, 1), (1, 2), (1, 0), (2, 1)]

    def test_zero_latent_gives_zero_state(self):
        encoder, _ = build_style_qgan(1)
        out = encode(encoder, [0.0, 0.0, 0.0])
        assert np.allclose(out.amplitudes, zero_state(3).amplitudes, atol=1e-12)


class TestPhlBuilder:
    def test_counts(self):
        encoder, generator = build_phl_qgan(4)
        assert encoder.n_encoding == 4
        assert encoder.n_features == 1
        assert generator.n_trainable == 16


class TestBindAndOutputs:
    def test_zero_angles_leave_vacuum(self):
        circ = build_qcbm_ansatz(3, 2)
        out = bind(circ, np.zeros(circ.n_trainable))
        assert np.allclose(out.amplitudes, zero_state(3).amplitudes)

    def test_single_ry_closed_form(self):
        circ = ParamCircuit(1, (GateOp("ry", (0,), Trainable(0)),))
        out = bind(circ, [math.pi])
        assert np.allclose(out.amplitudes, [0, 1], atol=1e-12)

    def test_bind_is_deterministic(self):
        circ = build_hardware_efficient(3, 2)
        rng = np.random.default_rng(0)
        theta = rng.uniform(0, 2 * math.pi, circ.n_trainable)
        a = bind(circ, theta).amplitudes
        b = bind(circ, theta).amplitudes
        assert np.array_equal(a, b)

    def test_wrong_theta_length(self):
        circ = build_qcbm_ansatz(2, 1)
        with pytest.raises(ValueError):
            bind(circ, [0.1])

    def test_missing_features_rejected(self):
        encoder, _ = build_style_qgan(1)
        with pytest.raises(ValueError):
            bind(encoder, z=[0.1])

    def test_generator_output_modes(self):
        encoder, generator = build_style_qgan(1)
        theta = np.zeros(generator.n_trainable)
        probs = generator_output(encoder, generator, theta, [0, 0, 0], "prob-vector")
        assert probs.shape == (8,)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert probs[0] == pytest.approx(1.0, abs=1e-12)
        zexp = generator_output(encoder, generator, theta, [0, 0, 0], "z-expectation")
        assert np.allclose(zexp, [1, 1, 1], atol=1e-12)

    def test_generator_output_mode_validation(self):
        encoder, generator = build_style_qgan(1)
        with pytest.raises(ValueError):
            generator_output(encoder, generator, np.zeros(14), [0, 0, 0], "amplitudes")

    def test_prob_vector_sums_to_one_generically(self):
        encoder, generator = build_style_qgan(2)
        rng = np.random.default_rng(8)
        theta = rng.uniform(0, 2 * math.pi, generator.n_trainable)
        probs = generator_output(encoder, generator, theta, rng.standard_normal(3), "prob-vector")
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)


class TestStructuralInvariants:
    @pytest.mark.parametrize(
        "circ",
        [
            build_qcbm_ansatz(2, 1),
            build_qcbm_ansatz(5, 4),
            build_hardware_efficient(4, 2),
            build_qaoa(3, 2, Hamiltonian(3, ((1.0, "ZZI"), (1.0, "IZZ")))),
            build_style_qgan(3)[0],
            build_style_qgan(3)[1],
            build_phl_qgan(2)[1],
        ],
    )
    def test_slot_and_feature_ranges_contiguous(self, circ):
        slots = sorted(
            g.binding.slot for g in circ.gates if isinstance(g.binding, Trainable)
        )
        assert slots == list(range(len(slots)))
        feats = sorted(
            {g.binding.feature for g in circ.gates if isinstance(g.binding, Input)}
        )
        assert feats == list(range(len(feats)))
        assert circ.n_gates == len(circ.gates)

    def test_slot_reuse_rejected(self):
        with pytest.raises(ValueError):
            ParamCircuit(
                1,
                (GateOp("ry", (0,), Trainable(0)), GateOp("rz", (0,), Trainable(0))),
            )

    def test_noncontiguous_slots_rejected(self):
        with pytest.raises(ValueError):
            ParamCircuit(1, (GateOp("ry", (0,), Trainable(1)),))


class TestSerialization:
    @pytest.mark.parametrize(
        "circ",
        [
            build_qcbm_ansatz(3, 2),
            build_hardware_efficient(3, 1),
            build_qaoa(2, 2, Hamiltonian(2, ((1.0, "ZZ"), (0.25, "IZ")))),
            build_style_qgan(2)[0],
        ],
    )
    def test_json_round_trip(self, circ):
        restored = ParamCircuit.from_json(circ.to_json())
        assert restored.n_qubits == circ.n_qubits
        assert restored.n_trainable == circ.n_trainable
        assert restored.n_encoding == circ.n_encoding
        for a, b in zip(restored.gates, circ.gates):
            assert a.kind == b.kind and a.qubits == b.qubits and a.binding == b.binding
            if a.diagonal is not None:
                assert np.allclose(a.diagonal, b.diagonal)
        # semantics preserved
        rng = np.random.default_rng(1)
        theta = rng.uniform(0, 2 * math.pi, circ.n_trainable)
        z = rng.standard_normal(circ.n_features) if circ.n_features else ()
        assert np.allclose(
            bind(circ, theta, z).amplitudes, bind(restored, theta, z).amplitudes
        )
