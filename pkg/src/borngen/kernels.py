"""Kernels and maximum mean discrepancy quantities.

Three kernel families:
  * rbf      normalized mixture k(x,y) = mean_g exp(-gamma_g ||x-y||^2);
             discrete outcomes are kernelized as one-hot vectors, so for
             basis indices k(x,y) = 1 if x == y else mean_g exp(-2 gamma_g).
  * linear   linear kernel on probability vectors / basis indicators, which
             makes k(x,y) = delta_{x,y} on samples and
             MMD^2 = sum p^2 + sum q^2 - 2 sum pq on exact distributions.
  * overlap  pure-state Bhattacharyya form MMD^2 = 2 - 2 sum_x sqrt(P(x)Q(x)),
             only valid with exact probability vectors / amplitudes.

MMD^2(P||Q) = E k(x,x') + E k(y,y') - 2 E k(x,y); the unbiased finite-sample
estimator MMD^2_U drops the i == i' diagonal terms and may be negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError
from .sim import DiscreteDistribution, PureState, SampleSet


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # "rbf" | "linear" | "overlap" | "swap-overlap"
    gammas: tuple = ()

    def __post_init__(self):
        if self.kind not in ("rbf", "linear", "overlap", "swap-overlap"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        gammas = tuple(float(g) for g in self.gammas)
        if self.kind == "rbf":
            if not gammas:
                raise ValueError("rbf kernel needs at least one bandwidth")
            if any(g <= 0 for g in gammas):
                raise ValueError("rbf precisions must be strictly positive")
        elif gammas:
            raise ValueError(f"{self.kind} kernel takes no bandwidths")
        object.__setattr__(self, "gammas", gammas)

    @property
    def is_classical(self) -> bool:
        """Kernels evaluable on raw samples without exact distribution access."""
        return self.kind in ("rbf", "linear")

    def lipschitz_constant(self) -> float:
        """C3 for bound evaluation: max slope of exp(-g t^2) along a ray is
        sqrt(2 g / e), attained at t = 1/sqrt(2 g); a mixture is bounded by
        its sharpest component. The delta-like kernels get C3 = 1."""
        if self.kind == "rbf":
            return math.sqrt(2.0 * max(self.gammas) / math.e)
        return 1.0


def rbf_mixture_value(sq_dists: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """mean_g exp(-gamma_g * d^2), elementwise over an array of squared distances."""
    sq = np.asarray(sq_dists, dtype=float)
    acc = np.zeros_like(sq)
    for g in spec.gammas:
        acc += np.exp(-g * sq)
    return acc / len(spec.gammas)


def offdiagonal_rbf_value(spec: KernelSpec) -> float:
    """k(x,y) for distinct one-hot-encoded basis indices (||e_x - e_y||^2 = 2)."""
    return float(rbf_mixture_value(np.asarray(2.0), spec))


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Pointwise kernel value; defined for classical rbf kernels only."""
    if spec.kind != "rbf":
        raise CapabilityError("pointwise evaluation is only defined for rbf kernels")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("kernel arguments have different shapes")
    return float(rbf_mixture_value(np.sum((x - y) ** 2), spec))


# ---------------------------------------------------------------------------
# Exact MMD^2 on full distributions


def mmd2_exact(p: DiscreteDistribution, q: DiscreteDistribution, spec: KernelSpec) -> float:
    """Population MMD^2 between distributions over the same event space."""
    if p.n_events != q.n_events:
        raise ValueError("distributions live on different event spaces")
    diff = p.probs - q.probs
    if spec.kind == "linear":
        return float(diff @ diff)
    if spec.kind == "rbf":
        # One-hot encoding makes the kernel two-valued: K = (1-c) I + c 11^T,
        # and the all-ones part cancels on the zero-sum vector p - q.
        c = offdiagonal_rbf_value(spec)
        return float((1.0 - c) * (diff @ diff))
    # overlap: Bhattacharyya coefficient form
    return float(2.0 - 2.0 * np.sum(np.sqrt(p.probs * q.probs)))


def quantum_mmd_pure(model: PureState, target: PureState) -> float:
    """Pure-state quantum-kernel loss 2 - 2 sum_x sqrt(P(x) Q(x)), computed
    from the Born probabilities of both states."""
    if model.n_qubits != target.n_qubits:
        raise ValueError("states live on different qubit counts")
    p = np.abs(model.amplitudes) ** 2
    q = np.abs(target.amplitudes) ** 2
    return float(2.0 - 2.0 * np.sum(np.sqrt(p * q)))


def swap_test_mmd_pure(model: PureState, target: PureState) -> float:
    """Swap-test evaluation of the pure-state loss: 2 - 2 |<model|target>|.

    Coincides with quantum_mmd_pure whenever both states have nonnegative
    real amplitudes (up to a global phase), which is the regime the
    closed-form derivation assumes. Off that regime the overlap is sensitive
    to relative signs while the Born-probability form is not, so minimizing
    this value also pins down the state, not just its distribution.
    """
    if model.n_qubits != target.n_qubits:
        raise ValueError("states live on different qubit counts")
    return float(2.0 - 2.0 * abs(np.vdot(model.amplitudes, target.amplitudes)))


def quantum_mmd_diag(
    p: DiscreteDistribution,
    q: DiscreteDistribution,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Linear-kernel loss sum p^2 + sum q^2 - 2 sum pq for diagonal states.

    With ``shots`` given, each of the three overlap terms is replaced by a
    seeded swap-test emulation: the test outputs 0 with probability
    1/2 + overlap/2, so the estimate carries O(1/sqrt(shots)) error.
    """
    if p.n_events != q.n_events:
        raise ValueError("distributions live on different event spaces")
    overlaps = (float(p.probs @ p.probs), float(q.probs @ q.probs), float(p.probs @ q.probs))
    if shots is None:
        pp, qq, pq = overlaps
        return pp + qq - 2.0 * pq
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if rng is None:
        raise ValueError("shot mode needs an explicit rng stream")
    estimates = []
    for tr in overlaps:
        zeros = rng.binomial(shots, 0.5 + tr / 2.0)
        estimates.append(2.0 * zeros / shots - 1.0)
    pp, qq, pq = estimates
    return pp + qq - 2.0 * pq


# ---------------------------------------------------------------------------
# Unbiased estimator MMD^2_U on finite samples


def _counts(xs: SampleSet, n_events: int) -> np.ndarray:
    return np.bincount(xs.values, minlength=n_events).astype(float)


def _discrete_terms(cx: np.ndarray, cy: np.ndarray, c_off: float):
    """U-statistic sums for the two-valued kernel (1 on equal indices,
    c_off otherwise), from per-event counts."""
    n, m = cx.sum(), cy.sum()
    same_xx = float(np.sum(cx * (cx - 1.0)))
    same_yy = float(np.sum(cy * (cy - 1.0)))
    same_xy = float(cx @ cy)
    s_xx = same_xx + c_off * (n * (n - 1.0) - same_xx)
    s_yy = same_yy + c_off * (m * (m - 1.0) - same_yy)
    s_xy = same_xy + c_off * (n * m - same_xy)
    return s_xx, s_yy, s_xy, n, m


def _pairwise_sq_dists_sum(a: np.ndarray, b: np.ndarray, spec: KernelSpec, block: int = 2048):
    """sum_{i,j} k(a_i, b_j) accumulated blockwise in a fixed order, using
    ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b so the inner pass is one matmul."""
    b_sq = np.einsum("ij,ij->i", b, b)
    partials = []
    for start in range(0, a.shape[0], block):
        chunk = a[start : start + block]
        d2 = np.einsum("ij,ij->i", chunk, chunk)[:, None] + b_sq[None, :] - 2.0 * (chunk @ b.T)
        np.maximum(d2, 0.0, out=d2)
        partials.append(float(np.sum(rbf_mixture_value(d2, spec))))
    return math.fsum(partials)


def mmd2_u(xs: SampleSet, ys: SampleSet, spec: KernelSpec) -> float:
    """Unbiased U-statistic estimate of MMD^2 from two sample sets."""
    n, m = len(xs), len(ys)
    if n < 2 or m < 2:
        raise ValueError("MMD^2_U needs at least 2 samples on each side")
    if not spec.is_classical:
        raise CapabilityError("sample-based MMD needs a classical kernel")

    if xs.is_discrete and ys.is_discrete:
        c_off = 0.0 if spec.kind == "linear" else offdiagonal_rbf_value(spec)
        n_events = int(max(xs.values.max(), ys.values.max())) + 1
        s_xx, s_yy, s_xy, _, _ = _discrete_terms(
            _counts(xs, n_events), _counts(ys, n_events), c_off
        )
    elif xs.is_discrete or ys.is_discrete:
        raise ValueError("sample sets must both be discrete or both continuous")
    else:
        if spec.kind == "linear":
            raise CapabilityError("linear-probability kernel expects basis indices")
        a = np.asarray(xs.values, dtype=float)
        b = np.asarray(ys.values, dtype=float)
        if a.shape[1] != b.shape[1]:
            raise ValueError("sample sets have different dimensions")
        # k(x,x) = 1 for the normalized mixture, so the diagonal sum is n.
        s_xx = _pairwise_sq_dists_sum(a, a, spec) - n
        s_yy = _pairwise_sq_dists_sum(b, b, spec) - m
        s_xy = _pairwise_sq_dists_sum(a, b, spec)

    return s_xx / (n * (n - 1.0)) + s_yy / (m * (m - 1.0)) - 2.0 * s_xy / (n * m)


def mmd2_u_from_counts(cx: np.ndarray, cy: np.ndarray, spec: KernelSpec) -> float:
    """MMD^2_U from per-event sample counts (discrete outcomes only)."""
    if spec.kind == "overlap":
        raise CapabilityError("sample-based MMD needs a classical kernel")
    c_off = 0.0 if spec.kind == "linear" else offdiagonal_rbf_value(spec)
    s_xx, s_yy, s_xy, n, m = _discrete_terms(
        np.asarray(cx, dtype=float), np.asarray(cy, dtype=float), c_off
    )
    return s_xx / (n * (n - 1.0)) + s_yy / (m * (m - 1.0)) - 2.0 * s_xy / (n * m)


def overlap_mmd2_u(x_states: np.ndarray, y_states: np.ndarray) -> float:
    """MMD^2_U over pure-state samples with the fidelity kernel |<a|b>|^2.

    ``x_states`` and ``y_states`` are (count, dim) amplitude arrays.
    """
    n, m = x_states.shape[0], y_states.shape[0]
    if n < 2 or m < 2:
        raise ValueError("MMD^2_U needs at least 2 samples on each side")
    k_xx = np.abs(x_states.conj() @ x_states.T) ** 2
    k_yy = np.abs(y_states.conj() @ y_states.T) ** 2
    k_xy = np.abs(x_states.conj() @ y_states.T) ** 2
    s_xx = float(k_xx.sum() - np.trace(k_xx))
    s_yy = float(k_yy.sum() - np.trace(k_yy))
    s_xy = float(k_xy.sum())
    return s_xx / (n * (n - 1.0)) + s_yy / (m * (m - 1.0)) - 2.0 * s_xy / (n * m)
