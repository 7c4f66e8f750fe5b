"""Exact statevector simulation, sampling, and state/distribution metrics.

Basis convention (fixed repo-wide): basis index x encodes qubit 0 as the
most significant bit, so for n qubits the bit of qubit q in index x is
``(x >> (n - 1 - q)) & 1``. Example: on 2 qubits, |10> (qubit 0 in |1>,
qubit 1 in |0>) is index 2.

Gate conventions: RX(t) = exp(-i t X / 2), RY(t) = exp(-i t Y / 2),
RZ(t) = exp(-i t Z / 2); CRY applies RY(t) on the target when the control
is |1>; ``expdiag`` multiplies amplitudes by exp(-i t d_x) for a supplied
real diagonal d.

All array kernels accept a statevector of shape (..., 2**n); leading axes
are batch axes, and rotation angles may be any array broadcastable against
them. This keeps single-state semantics and batched training paths on one
code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import CapabilityError

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids a circular import
    from .circuits import GateOp

NORM_ATOL = 1e-10
EIGEN_DIM_CAP = 64

GATE_KINDS = ("rx", "ry", "rz", "h", "cnot", "cry", "expdiag")

_H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Value types


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over 2**n_qubits basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({2**self.n_qubits},)"
            )
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm^2 = {norm!r} deviates from 1 beyond {NORM_ATOL}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over 2**N basis events."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("probs must be a nonempty 1-D vector")
        if np.any(probs < -1e-12):
            raise ValueError("probabilities must be nonnegative")
        total = float(probs.sum())
        if abs(total - 1.0) > NORM_ATOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {NORM_ATOL}")
        probs = np.clip(probs, 0.0, None)
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def n_events(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class SampleSet:
    """Finite sample of outcomes: basis indices (ints) or real vectors."""

    values: np.ndarray
    provenance: str = "model"  # "model" (drawn from P_theta) or "target" (drawn from Q)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.size == 0:
            raise ValueError("SampleSet must be nonempty")
        if values.ndim not in (1, 2):
            raise ValueError("values must be a 1-D index array or 2-D (n, dim) array")
        if self.provenance not in ("model", "target"):
            raise ValueError("provenance must be 'model' or 'target'")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.values.ndim == 1 and np.issubdtype(self.values.dtype, np.integer)


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Hamiltonian:
    """Real-weighted sum of Pauli strings; Hermitian by construction."""

    n_qubits: int
    terms: tuple

    def __post_init__(self):
        terms = []
        for coeff, string in self.terms:
            if len(string) != self.n_qubits:
                raise ValueError(f"pauli string {string!r} has wrong length")
            if any(ch not in "IXYZ" for ch in string):
                raise ValueError(f"pauli string {string!r} has labels outside IXYZ")
            terms.append((float(coeff), str(string)))
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def is_diagonal(self) -> bool:
        return all(set(s) <= {"I", "Z"} for _, s in self.terms)

    def to_matrix(self) -> np.ndarray:
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        for coeff, string in self.terms:
            term = np.array([[coeff]], dtype=complex)
            for ch in string:  # qubit 0 first = most significant factor
                term = np.kron(term, _PAULI[ch])
            mat += term
        return mat

    def diagonal(self) -> np.ndarray:
        """Diagonal of the matrix; only defined for Z/I strings."""
        if not self.is_diagonal():
            raise CapabilityError("Hamiltonian has X/Y terms; diagonal undefined")
        n = self.n_qubits
        x = np.arange(self.dim)
        diag = np.zeros(self.dim)
        for coeff, string in self.terms:
            signs = np.ones(self.dim)
            for q, ch in enumerate(string):
                if ch == "Z":
                    bit = (x >> (n - 1 - q)) & 1
                    signs *= 1.0 - 2.0 * bit
            diag += coeff * signs
        return diag


@dataclass(frozen=True)
class EigenResult:
    """Full spectrum in ascending order with orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: tuple


# ---------------------------------------------------------------------------
# Gate application kernels (batch-aware)


def zero_state(n_qubits: int) -> PureState:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return PureState(n_qubits, amps)


def _broadcastable(x, extra_axes: int):
    """Append singleton axes so a batch-shaped scalar field broadcasts
    against state axes appended on the right."""
    arr = np.asarray(x)
    if arr.ndim == 0:
        return arr
    return arr.reshape(arr.shape + (1,) * extra_axes)


def _apply_1q(amps: np.ndarray, m00, m01, m10, m11, qubit: int, n: int) -> np.ndarray:
    lead = amps.ndim - 1
    view = amps.reshape(amps.shape[:-1] + (2,) * n)
    axis = lead + qubit
    v = np.moveaxis(view, axis, -1)
    a0, a1 = v[..., 0], v[..., 1]
    pad = n - 1
    b0 = _broadcastable(m00, pad) * a0 + _broadcastable(m01, pad) * a1
    b1 = _broadcastable(m10, pad) * a0 + _broadcastable(m11, pad) * a1
    out = np.stack([b0, b1], axis=-1)
    out = np.moveaxis(out, -1, axis)
    return out.reshape(out.shape[: out.ndim - n] + (2**n,))


def _index(view_ndim: int, assignments: dict) -> tuple:
    idx = [slice(None)] * view_ndim
    for axis, value in assignments.items():
        idx[axis] = value
    return tuple(idx)


def _apply_cnot(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    lead = amps.ndim - 1
    view = amps.reshape(amps.shape[:-1] + (2,) * n)
    axc, axt = lead + control, lead + target
    out = view.copy()
    i10 = _index(view.ndim, {axc: 1, axt: 0})
    i11 = _index(view.ndim, {axc: 1, axt: 1})
    out[i10] = view[i11]
    out[i11] = view[i10]
    return out.reshape(amps.shape[:-1] + (2**n,))


def _apply_cry(amps: np.ndarray, angle, control: int, target: int, n: int) -> np.ndarray:
    lead = amps.ndim - 1
    view = amps.reshape(amps.shape[:-1] + (2,) * n)
    axc, axt = lead + control, lead + target
    out = view.copy()
    i10 = _index(view.ndim, {axc: 1, axt: 0})
    i11 = _index(view.ndim, {axc: 1, axt: 1})
    a0, a1 = view[i10], view[i11]
    pad = n - 2
    c = _broadcastable(np.cos(np.asarray(angle) / 2.0), pad)
    s = _broadcastable(np.sin(np.asarray(angle) / 2.0), pad)
    out[i10] = c * a0 - s * a1
    out[i11] = s * a0 + c * a1
    return out.reshape(amps.shape[:-1] + (2**n,))


def apply_gate_array(
    amps: np.ndarray,
    kind: str,
    qubits: Sequence[int],
    angle=None,
    diagonal: np.ndarray | None = None,
) -> np.ndarray:
    """Apply one gate to amplitudes of shape (..., 2**n); returns a new array.

    ``angle`` may be a scalar or an array broadcastable against the leading
    (batch) axes. ``diagonal`` is required for kind 'expdiag'.
    """
    dim = amps.shape[-1]
    n = dim.bit_length() - 1
    if dim != 2**n:
        raise ValueError("last axis is not a power-of-two Hilbert space")
    qubits = tuple(int(q) for q in qubits)
    if any(q < 0 or q >= n for q in qubits):
        raise ValueError(f"qubit index out of range for {n} qubits: {qubits}")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit indices: {qubits}")

    # A batch-shaped angle widens the output; materialize the broadcast lead
    # shape up front so every kernel below sees consistent batch axes.
    if angle is not None:
        t_shape = np.asarray(angle).shape
        if t_shape:
            lead = np.broadcast_shapes(amps.shape[:-1], t_shape)
            if lead != amps.shape[:-1]:
                amps = np.broadcast_to(amps, lead + (dim,))

    if kind in ("rx", "ry", "rz"):
        if angle is None:
            raise ValueError(f"{kind} gate needs an angle")
        (q,) = qubits
        t = np.asarray(angle)
        c, s = np.cos(t / 2.0), np.sin(t / 2.0)
        if kind == "rx":
            return _apply_1q(amps, c, -1j * s, -1j * s, c, q, n)
        if kind == "ry":
            return _apply_1q(amps, c, -s, s, c, q, n)
        return _apply_1q(amps, c - 1j * s, 0.0, 0.0, c + 1j * s, q, n)
    if kind == "h":
        (q,) = qubits
        m = _H_MATRIX
        return _apply_1q(amps, m[0, 0], m[0, 1], m[1, 0], m[1, 1], q, n)
    if kind == "cnot":
        control, target = qubits
        return _apply_cnot(amps, control, target, n)
    if kind == "cry":
        if angle is None:
            raise ValueError("cry gate needs an angle")
        control, target = qubits
        return _apply_cry(amps, angle, control, target, n)
    if kind == "expdiag":
        if angle is None or diagonal is None:
            raise ValueError("expdiag gate needs an angle and a diagonal")
        d = np.asarray(diagonal, dtype=float)
        if d.shape != (dim,):
            raise ValueError("expdiag diagonal has wrong length")
        t = np.asarray(angle)
        phase = np.exp(-1j * t[..., None] * d) if t.ndim else np.exp(-1j * t * d)
        return amps * phase
    raise ValueError(f"unknown gate kind {kind!r}")


def apply_gate(state: PureState, gate: "GateOp") -> PureState:
    """Apply a concretely-bound gate to a single state."""
    angle = gate.fixed_angle()
    amps = apply_gate_array(state.amplitudes, gate.kind, gate.qubits, angle, gate.diagonal)
    return PureState(state.n_qubits, amps)


# ---------------------------------------------------------------------------
# Measurement, sampling, metrics


def born_distribution(state: PureState) -> DiscreteDistribution:
    """Measurement distribution in the computational basis."""
    return DiscreteDistribution(np.abs(state.amplitudes) ** 2)


def sample_with_uniforms(dist: DiscreteDistribution, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws; sharing ``uniforms`` across distributions gives
    common-random-number coupling for variance reduction."""
    cdf = np.cumsum(dist.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, uniforms, side="right")
    return np.minimum(idx, dist.n_events - 1).astype(np.int64)


def sample(
    dist: DiscreteDistribution,
    n: int,
    rng: np.random.Generator,
    provenance: str = "model",
) -> SampleSet:
    """n i.i.d. multinomial draws, deterministic given the stream."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    u = rng.random(n)
    return SampleSet(sample_with_uniforms(dist, u), provenance)


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 for pure states."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("states live on different qubit counts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def kl_divergence(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Standard KL(p || q) = sum_x p(x) ln(p(x)/q(x)); +inf when the support
    of p is not contained in the support of q."""
    if p.n_events != q.n_events:
        raise ValueError("distributions have different event counts")
    mask = p.probs > 0.0
    if np.any(q.probs[mask] == 0.0):
        return math.inf
    pp, qq = p.probs[mask], q.probs[mask]
    return float(np.sum(pp * np.log(pp / qq)))


def expectation(state: PureState, h: Hamiltonian) -> float:
    """<psi| H |psi> (real part; H is Hermitian)."""
    if h.n_qubits != state.n_qubits:
        raise ValueError("Hamiltonian and state sizes differ")
    v = state.amplitudes
    return float(np.real(np.vdot(v, h.to_matrix() @ v)))


def z_expectations(probs: np.ndarray, n_qubits: int) -> np.ndarray:
    """Per-qubit <Z_q> from Born probabilities of shape (..., 2**n)."""
    signs = z_sign_table(n_qubits)
    return probs @ signs.T


_Z_SIGNS_CACHE: dict = {}


def z_sign_table(n_qubits: int) -> np.ndarray:
    """(n, 2**n) matrix of Z eigenvalues: +1 where qubit q reads 0."""
    table = _Z_SIGNS_CACHE.get(n_qubits)
    if table is None:
        x = np.arange(2**n_qubits)
        bits = (x[None, :] >> (n_qubits - 1 - np.arange(n_qubits)[:, None])) & 1
        table = 1.0 - 2.0 * bits
        table.flags.writeable = False
        _Z_SIGNS_CACHE[n_qubits] = table
    return table


# ---------------------------------------------------------------------------
# Dense Hermitian eigensolver


def eigendecompose_matrix(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a dense
    Hermitian matrix of dimension <= EIGEN_DIM_CAP."""
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    if mat.shape[0] > EIGEN_DIM_CAP:
        raise CapabilityError(
            f"dense eigensolver capped at dimension {EIGEN_DIM_CAP}, got {mat.shape[0]}"
        )
    if not np.allclose(mat, mat.conj().T, atol=1e-10):
        raise ValueError("matrix is not Hermitian")
    values, vectors = np.linalg.eigh(mat)
    return values, vectors


def eigendecompose(h: Hamiltonian) -> EigenResult:
    """Full spectrum of a Pauli-term Hamiltonian via dense diagonalization."""
    values, vectors = eigendecompose_matrix(h.to_matrix())
    states = tuple(PureState(h.n_qubits, vectors[:, i]) for i in range(values.size))
    return EigenResult(eigenvalues=values, eigenvectors=states)
