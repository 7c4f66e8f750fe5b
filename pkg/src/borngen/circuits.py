"""Parameterized-circuit IR and ansatz builders.

A circuit is an ordered gate list; each parameterized gate carries a
binding that is either a fixed angle, a trainable slot index, or an input
feature index. Trainable slots and input features each form contiguous
0-based ranges over the whole circuit, and every trainable slot belongs to
exactly one gate (features may be reused by several gates).

Structural counts exposed on the circuit:
    n_trainable   distinct trainable slots
    n_encoding    gates with an input-bound angle
    max_locality  largest gate arity
    n_gates       total gate count
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import sim
from .errors import CapabilityError
from .sim import GATE_KINDS, Hamiltonian, PureState


@dataclass(frozen=True)
class Fixed:
    value: float


@dataclass(frozen=True)
class Trainable:
    slot: int


@dataclass(frozen=True)
class Input:
    feature: int


Binding = Union[Fixed, Trainable, Input]

PARAMETERIZED_KINDS = {"rx", "ry", "rz", "cry", "expdiag"}


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple
    binding: Binding | None = None
    diagonal: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit indices: {self.qubits}")
        if self.kind in PARAMETERIZED_KINDS:
            if self.binding is None:
                raise ValueError(f"{self.kind} gate requires a binding")
        elif self.binding is not None:
            raise ValueError(f"{self.kind} gate takes no parameter binding")
        if self.kind == "expdiag":
            if self.diagonal is None:
                raise ValueError("expdiag gate requires a diagonal")
            diag = np.ascontiguousarray(self.diagonal, dtype=float)
            diag.flags.writeable = False
            object.__setattr__(self, "diagonal", diag)
        elif self.diagonal is not None:
            raise ValueError("only expdiag gates carry a diagonal")

    def fixed_angle(self) -> float | None:
        """Concrete angle, or None for unparameterized gates; raises if the
        binding is symbolic."""
        if self.binding is None:
            return None
        if isinstance(self.binding, Fixed):
            return self.binding.value
        raise ValueError("gate binding is not concrete; bind the circuit first")

    def inverse(self) -> "GateOp":
        """Inverse gate; only defined for concretely-bound gates."""
        if self.kind in ("h", "cnot"):
            return self
        angle = self.fixed_angle()
        return GateOp(self.kind, self.qubits, Fixed(-angle), self.diagonal)


@dataclass(frozen=True)
class ParamCircuit:
    n_qubits: int
    gates: tuple

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        slots, features = set(), set()
        for gate in self.gates:
            if any(q >= self.n_qubits for q in gate.qubits):
                raise ValueError(f"gate {gate.kind} addresses qubit outside register")
            if isinstance(gate.binding, Trainable):
                if gate.binding.slot in slots:
                    raise ValueError(f"trainable slot {gate.binding.slot} reused")
                slots.add(gate.binding.slot)
            elif isinstance(gate.binding, Input):
                features.add(gate.binding.feature)
            if gate.kind == "expdiag" and gate.diagonal.shape != (2**self.n_qubits,):
                raise ValueError("expdiag diagonal length does not match register")
        if slots and slots != set(range(len(slots))):
            raise ValueError("trainable slots must form a contiguous 0-based range")
        if features and features != set(range(len(features))):
            raise ValueError("input features must form a contiguous 0-based range")

    @property
    def n_trainable(self) -> int:
        return sum(isinstance(g.binding, Trainable) for g in self.gates)

    @property
    def n_encoding(self) -> int:
        return sum(isinstance(g.binding, Input) for g in self.gates)

    @property
    def n_features(self) -> int:
        feats = {g.binding.feature for g in self.gates if isinstance(g.binding, Input)}
        return len(feats)

    @property
    def max_locality(self) -> int:
        return max((len(g.qubits) for g in self.gates), default=0)

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    def trainable_gate(self, slot: int) -> GateOp:
        for gate in self.gates:
            if isinstance(gate.binding, Trainable) and gate.binding.slot == slot:
                return gate
        raise ValueError(f"no gate bound to trainable slot {slot}")

    # -- serialization -------------------------------------------------

    def to_json(self) -> str:
        def enc(gate: GateOp) -> dict:
            doc = {"kind": gate.kind, "qubits": list(gate.qubits)}
            b = gate.binding
            if isinstance(b, Fixed):
                doc["binding"] = {"type": "fixed", "value": b.value}
            elif isinstance(b, Trainable):
                doc["binding"] = {"type": "trainable", "slot": b.slot}
            elif isinstance(b, Input):
                doc["binding"] = {"type": "input", "feature": b.feature}
            if gate.diagonal is not None:
                doc["diagonal"] = list(map(float, gate.diagonal))
            return doc

        return json.dumps(
            {"n_qubits": self.n_qubits, "gates": [enc(g) for g in self.gates]}
        )

    @staticmethod
    def from_json(text: str) -> "ParamCircuit":
        doc = json.loads(text)
        gates = []
        for g in doc["gates"]:
            binding = None
            b = g.get("binding")
            if b is not None:
                binding = {
                    "fixed": lambda b: Fixed(float(b["value"])),
                    "trainable": lambda b: Trainable(int(b["slot"])),
                    "input": lambda b: Input(int(b["feature"])),
                }[b["type"]](b)
            diagonal = np.asarray(g["diagonal"], dtype=float) if "diagonal" in g else None
            gates.append(GateOp(g["kind"], tuple(g["qubits"]), binding, diagonal))
        return ParamCircuit(int(doc["n_qubits"]), tuple(gates))


# ---------------------------------------------------------------------------
# Evaluation


def _resolve_angle(binding: Binding, thetas, zs):
    if isinstance(binding, Fixed):
        return binding.value
    if isinstance(binding, Trainable):
        if thetas is None:
            raise ValueError("circuit has trainable slots but no theta was given")
        return thetas[..., binding.slot]
    if thetas is None and zs is None:
        raise ValueError("unbound gate")
    if zs is None:
        raise ValueError("circuit has input features but no z was given")
    return zs[..., binding.feature]


def run_array(
    circuit: ParamCircuit,
    amps: np.ndarray,
    thetas: np.ndarray | None = None,
    zs: np.ndarray | None = None,
) -> np.ndarray:
    """Apply the circuit to amplitudes of shape (..., 2**n).

    ``thetas`` has trainable slots on its last axis, ``zs`` has features on
    its last axis; their leading axes must broadcast against the state's
    leading axes. Pure function of its inputs.
    """
    for gate in circuit.gates:
        angle = None
        if gate.binding is not None:
            angle = _resolve_angle(gate.binding, thetas, zs)
        amps = sim.apply_gate_array(amps, gate.kind, gate.qubits, angle, gate.diagonal)
    return amps


def bind(
    circuit: ParamCircuit,
    theta: Sequence[float] = (),
    z: Sequence[float] = (),
    initial: PureState | None = None,
) -> PureState:
    """Concrete state prepared by the circuit from |0...0> (or ``initial``)."""
    theta = np.asarray(theta, dtype=float)
    z = np.asarray(z, dtype=float)
    if theta.shape != (circuit.n_trainable,):
        raise ValueError(
            f"theta has shape {theta.shape}, circuit expects ({circuit.n_trainable},)"
        )
    if circuit.n_features and z.shape != (circuit.n_features,):
        raise ValueError(
            f"z has shape {z.shape}, circuit expects ({circuit.n_features},)"
        )
    if initial is None:
        amps = sim.zero_state(circuit.n_qubits).amplitudes
    else:
        if initial.n_qubits != circuit.n_qubits:
            raise ValueError("initial state size does not match circuit")
        amps = initial.amplitudes
    out = run_array(circuit, amps, thetas=theta if theta.size else None, zs=z if z.size else None)
    return PureState(circuit.n_qubits, out)


GENERATOR_MODES = ("prob-vector", "z-expectation")


def encode(encoder: ParamCircuit, z: Sequence[float]) -> PureState:
    """Latent sample loaded into a state by the encoding circuit."""
    return bind(encoder, theta=(), z=z)


def generator_output(
    encoder: ParamCircuit,
    generator: ParamCircuit,
    theta: Sequence[float],
    z: Sequence[float],
    mode: str = "prob-vector",
) -> np.ndarray:
    """Generated sample for latent z: the full Born vector, or per-qubit <Z>."""
    if mode not in GENERATOR_MODES:
        raise ValueError(f"mode must be one of {GENERATOR_MODES}")
    state = bind(generator, theta=theta, initial=encode(encoder, z))
    probs = np.abs(state.amplitudes) ** 2
    if mode == "prob-vector":
        return probs
    return sim.z_expectations(probs, generator.n_qubits)


# ---------------------------------------------------------------------------
# Ansatz builders


def build_qcbm_ansatz(n_qubits: int, depth_l1: int) -> ParamCircuit:
    """Born-machine ansatz: depth_l1 blocks of a trainable-RY column followed
    by a CNOT ladder, closed by one final RY column. N_gt = n*(depth_l1+1)."""
    if n_qubits < 2 or depth_l1 < 1:
        raise ValueError("need n_qubits >= 2 and depth_l1 >= 1")
    gates, slot = [], 0
    for _ in range(depth_l1):
        for q in range(n_qubits):
            gates.append(GateOp("ry", (q,), Trainable(slot)))
            slot += 1
        for q in range(n_qubits - 1):
            gates.append(GateOp("cnot", (q, q + 1)))
    for q in range(n_qubits):
        gates.append(GateOp("ry", (q,), Trainable(slot)))
        slot += 1
    return ParamCircuit(n_qubits, tuple(gates))


def build_hardware_efficient(n_qubits: int, depth_l: int) -> ParamCircuit:
    """Per layer: RZ-RY-RZ trainable triple on each qubit, then a CNOT ring
    (n two-qubit gates, ladder plus wrap-around). N_gt = 3*L*n."""
    if n_qubits < 2 or depth_l < 1:
        raise ValueError("need n_qubits >= 2 and depth_l >= 1")
    gates, slot = [], 0
    for _ in range(depth_l):
        for q in range(n_qubits):
            for kind in ("rz", "ry", "rz"):
                gates.append(GateOp(kind, (q,), Trainable(slot)))
                slot += 1
        for q in range(n_qubits):
            gates.append(GateOp("cnot", (q, (q + 1) % n_qubits)))
    return ParamCircuit(n_qubits, tuple(gates))


def build_qaoa(n_qubits: int, depth_l: int, cost: Hamiltonian) -> ParamCircuit:
    """Alternating layers exp(-i t H_C) (one slot, acts on all qubits) and
    trainable RX on each qubit. N_gt = L*(n+1); locality = n."""
    if n_qubits < 1 or depth_l < 1:
        raise ValueError("need n_qubits >= 1 and depth_l >= 1")
    if cost.n_qubits != n_qubits:
        raise ValueError("cost Hamiltonian size does not match register")
    if not cost.is_diagonal():
        raise CapabilityError("QAOA cost Hamiltonian must contain only Z/I strings")
    diag = cost.diagonal()
    gates, slot = [], 0
    for _ in range(depth_l):
        gates.append(GateOp("expdiag", tuple(range(n_qubits)), Trainable(slot), diag))
        slot += 1
        for q in range(n_qubits):
            gates.append(GateOp("rx", (q,), Trainable(slot)))
            slot += 1
    return ParamCircuit(n_qubits, tuple(gates))


def _rotation_string(kinds_feats, qubit, make_binding):
    return [GateOp(kind, (qubit,), make_binding(ref)) for kind, ref in kinds_feats]


def build_style_qgan(depth_l1: int) -> tuple[ParamCircuit, ParamCircuit]:
    """3-qubit style generator pair (encoder, generator).

    Encoder, per qubit: RY(z1) RZ(z2) RY(z2) RZ(z3) in circuit order (feature
    z2 bound twice, as drawn), then CRY(z1) on 0->1 and CRY(z2) on 1->2.
    Generator layers repeat the same rotation pattern with one fresh slot per
    gate plus two CRY slots; odd layers entangle 0->1, 1->2 and even layers
    reverse the orientations.
    """
    if depth_l1 < 1:
        raise ValueError("depth_l1 must be >= 1")
    n = 3
    rotation_pattern = ("ry", "rz", "ry", "rz")
    encoder_features = (0, 1, 1, 2)

    enc_gates = []
    for q in range(n):
        enc_gates.extend(
            GateOp(kind, (q,), Input(f))
            for kind, f in zip(rotation_pattern, encoder_features)
        )
    enc_gates.append(GateOp("cry", (0, 1), Input(0)))
    enc_gates.append(GateOp("cry", (1, 2), Input(1)))
    encoder = ParamCircuit(n, tuple(enc_gates))

    gen_gates, slot = [], 0
    for layer in range(1, depth_l1 + 1):
        for q in range(n):
            for kind in rotation_pattern:
                gen_gates.append(GateOp(kind, (q,), Trainable(slot)))
                slot += 1
        pairs = [(0, 1), (1, 2)] if layer % 2 == 1 else [(1, 0), (2, 1)]
        for control, target in pairs:
            gen_gates.append(GateOp("cry", (control, target), Trainable(slot)))
            slot += 1
    generator = ParamCircuit(n, tuple(gen_gates))
    return encoder, generator


def build_phl_qgan(depth_l: int) -> tuple[ParamCircuit, ParamCircuit]:
    """2-qubit Hamiltonian-learning pair (encoder, generator).

    Encoder loads the scalar coupling a: RY(a) RZ(a) on each qubit, then one
    CNOT (N_ge = 4). Generator layers: trainable RY RZ on each qubit followed
    by a CNOT; N_gt = 4*L.
    """
    if depth_l < 1:
        raise ValueError("depth_l must be >= 1")
    enc_gates = []
    for q in range(2):
        enc_gates.append(GateOp("ry", (q,), Input(0)))
        enc_gates.append(GateOp("rz", (q,), Input(0)))
    enc_gates.append(GateOp("cnot", (0, 1)))
    encoder = ParamCircuit(2, tuple(enc_gates))

    gen_gates, slot = [], 0
    for _ in range(depth_l):
        for q in range(2):
            gen_gates.append(GateOp("ry", (q,), Trainable(slot)))
            slot += 1
            gen_gates.append(GateOp("rz", (q,), Trainable(slot)))
            slot += 1
        gen_gates.append(GateOp("cnot", (0, 1)))
    generator = ParamCircuit(2, tuple(gen_gates))
    return encoder, generator
