"""Parameter-shift gradient engines, optimizers, and training loops.

Gradients of Born probabilities and expectation values are exact finite
shift rules. A single-qubit rotation exp(-i t P / 2) has trigonometric
frequency 1, giving the familiar two-term rule with shift pi/2 and weight
1/2. Controlled rotations (frequencies {1/2, 1}) and diagonal-cost layers
exp(-i t D) (frequencies = gaps of D) need more terms; coefficients are
obtained by solving sum_mu c_mu * 2 sin(w s_mu) = w over the frequency set,
which reproduces the canonical rules and stays exact for every angle.

Sampled-mode losses draw one uniform batch per iteration and reuse it for
every shifted evaluation (common random numbers), so the 2*N_gt shifted
estimates within one gradient are coupled and the result is reproducible
regardless of evaluation order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import circuits as qc
from . import kernels as kn
from . import sim
from .errors import CapabilityError
from .rng import substream
from .sim import DiscreteDistribution, PureState, SampleSet

ROTATION_RULE = ((0.5, math.pi / 2.0),)


def general_shift_rule(frequencies: Sequence[float]) -> tuple:
    """(coefficient, shift) pairs giving the exact derivative of any
    trigonometric polynomial over the given positive frequencies."""
    freqs = np.asarray(sorted(frequencies), dtype=float)
    if freqs.size == 0 or freqs[0] <= 0:
        raise ValueError("frequencies must be positive")
    r = freqs.size
    w_max = freqs[-1]
    shifts = np.arange(1, r + 1) * math.pi / (2.0 * w_max)
    mat = 2.0 * np.sin(np.outer(freqs, shifts))
    if np.linalg.cond(mat) > 1e9:  # degenerate shift grid; perturb deterministically
        shifts = shifts * (1.0 + 1e-3 * np.arange(1, r + 1))
        mat = 2.0 * np.sin(np.outer(freqs, shifts))
    coeffs = np.linalg.solve(mat, freqs)
    return tuple((float(c), float(s)) for c, s in zip(coeffs, shifts))


CRY_RULE = general_shift_rule([0.5, 1.0])


def _expdiag_frequencies(diagonal: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    d = np.unique(np.round(np.asarray(diagonal, dtype=float) / tol) * tol)
    gaps = np.abs(d[:, None] - d[None, :]).ravel()
    gaps = np.unique(np.round(gaps / tol) * tol)
    return gaps[gaps > tol]


def shift_rule_for_gate(gate: qc.GateOp) -> tuple:
    if gate.kind in ("rx", "ry", "rz"):
        return ROTATION_RULE
    if gate.kind == "cry":
        return CRY_RULE
    if gate.kind == "expdiag":
        freqs = _expdiag_frequencies(gate.diagonal)
        if freqs.size == 0:  # constant diagonal: pure global phase, zero derivative
            return ()
        return general_shift_rule(freqs)
    raise ValueError(f"gate kind {gate.kind!r} has no shift rule")


def slot_shift_rules(circuit: qc.ParamCircuit) -> list:
    return [shift_rule_for_gate(circuit.trainable_gate(j)) for j in range(circuit.n_trainable)]


def _shift_plan(circuit: qc.ParamCircuit, theta: np.ndarray):
    """Theta matrix whose first row is theta and whose remaining rows are the
    +/- shifted variants needed by every slot's rule, plus bookkeeping
    (slot, coeff, plus_row, minus_row)."""
    rules = slot_shift_rules(circuit)
    rows = [theta]
    plan = []
    for slot, rule in enumerate(rules):
        for coeff, shift in rule:
            plus = theta.copy()
            plus[slot] += shift
            minus = theta.copy()
            minus[slot] -= shift
            plan.append((slot, coeff, len(rows), len(rows) + 1))
            rows.extend([plus, minus])
    return np.asarray(rows), plan


# ---------------------------------------------------------------------------
# Optimizers


class GradientDescent:
    def __init__(self, learning_rate: float):
        self.lr = learning_rate

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return theta - self.lr * grad


class Adam:
    """Adam with the standard beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = learning_rate, beta1, beta2, eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Adagrad:
    def __init__(self, learning_rate: float, eps: float = 1e-8):
        self.lr, self.eps = learning_rate, eps
        self.accum = None

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.accum is None:
            self.accum = np.zeros_like(theta)
        self.accum = self.accum + grad**2
        return theta - self.lr * grad / (np.sqrt(self.accum) + self.eps)


OPTIMIZERS = {"gd": GradientDescent, "adam": Adam, "adagrad": Adagrad}


def make_optimizer(name: str, learning_rate: float):
    if name not in OPTIMIZERS:
        raise ValueError(f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}")
    return OPTIMIZERS[name](learning_rate)


# ---------------------------------------------------------------------------
# Config and trace


@dataclass
class TrainConfig:
    max_iters: int = 50
    learning_rate: float = 0.1
    optimizer: str = "adam"
    n_model_samples: int | None = None  # None = exact access to P_theta
    m_target_samples: int | None = None  # None = exact access to Q
    batch_size: int | None = None  # None = full batch
    noise_refresh: int = 1  # regenerate latent inputs every r iterations
    seed: int = 0
    convergence_tol: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.noise_refresh < 1:
            raise ValueError("noise_refresh must be >= 1")
        if (
            self.batch_size is not None
            and self.m_target_samples is not None
            and self.batch_size > self.m_target_samples
        ):
            raise ValueError("batch_size cannot exceed m_target_samples")

    def to_dict(self) -> dict:
        return {
            "max_iters": self.max_iters,
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "n_model_samples": self.n_model_samples,
            "m_target_samples": self.m_target_samples,
            "batch_size": self.batch_size,
            "noise_refresh": self.noise_refresh,
            "seed": self.seed,
            "convergence_tol": self.convergence_tol,
        }


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    loss_empirical: float
    loss_exact: float  # nan when not computable
    grad_norm: float
    elapsed_ms: float


@dataclass
class TrainTrace:
    records: list
    final_theta: np.ndarray
    final_metrics: dict
    config: TrainConfig
    seed: int

    @property
    def min_empirical_loss(self) -> float:
        return min(r.loss_empirical for r in self.records)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "loss_empirical", "loss_exact", "grad_norm", "elapsed_ms"])
            for r in self.records:
                writer.writerow(
                    [r.iteration, repr(r.loss_empirical), repr(r.loss_exact), repr(r.grad_norm), repr(r.elapsed_ms)]
                )

    def summary_dict(self) -> dict:
        return {
            "seed": self.seed,
            "iterations": len(self.records),
            "final_theta": [float(t) for t in self.final_theta],
            "final_metrics": {k: float(v) for k, v in self.final_metrics.items()},
            "config": self.config.to_dict(),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary_dict(), fh, indent=2)


# ---------------------------------------------------------------------------
# QCBM loss and gradient


def _target_parts(target) -> tuple[DiscreteDistribution, PureState | None]:
    if isinstance(target, PureState):
        return sim.born_distribution(target), target
    if isinstance(target, DiscreteDistribution):
        return target, None
    raise TypeError("target must be a DiscreteDistribution or PureState")


def born_probs_batch(circuit: qc.ParamCircuit, thetas: np.ndarray) -> np.ndarray:
    """Born vectors for a (..., N_gt) batch of parameter vectors."""
    amps = sim.zero_state(circuit.n_qubits).amplitudes
    out = qc.run_array(circuit, amps, thetas=np.asarray(thetas, dtype=float))
    return np.abs(out) ** 2


def _state_batch(circuit: qc.ParamCircuit, thetas: np.ndarray) -> np.ndarray:
    amps = sim.zero_state(circuit.n_qubits).amplitudes
    return qc.run_array(circuit, amps, thetas=np.asarray(thetas, dtype=float))


def _exact_mmd2(p: np.ndarray, q: np.ndarray, spec: kn.KernelSpec) -> float:
    return kn.mmd2_exact(DiscreteDistribution(p), DiscreteDistribution(q), spec)


def _check_sampling(spec: kn.KernelSpec, sampling) -> tuple[int, int] | None:
    if sampling == "exact" or sampling is None:
        return None
    n, m = sampling
    if spec.kind != "rbf":
        raise CapabilityError(
            "quantum kernels require exact access to the distributions; "
            "sampled mode supports the rbf kernel only"
        )
    if n < 2 or m < 2:
        raise ValueError("sampled mode needs n >= 2 and m >= 2")
    return int(n), int(m)


def qcbm_loss(
    circuit: qc.ParamCircuit,
    theta: np.ndarray,
    target,
    spec: kn.KernelSpec,
    sampling="exact",
    rng: np.random.Generator | None = None,
) -> float:
    """MMD^2 between the circuit's Born distribution and the target, either
    exactly or from (n, m) fresh seeded samples."""
    theta = np.asarray(theta, dtype=float)
    q_dist, q_state = _target_parts(target)
    nm = _check_sampling(spec, sampling)
    if spec.kind == "swap-overlap":
        if q_state is None:
            raise CapabilityError("the swap-test kernel needs a pure-state target")
        return kn.swap_test_mmd_pure(qc.bind(circuit, theta), q_state)
    p = born_probs_batch(circuit, theta)
    if nm is None:
        if spec.kind == "overlap" and q_state is not None:
            return kn.quantum_mmd_pure(qc.bind(circuit, theta), q_state)
        return _exact_mmd2(p, q_dist.probs, spec)
    if rng is None:
        raise ValueError("sampled mode needs an explicit rng stream")
    n, m = nm
    xs = sim.sample(DiscreteDistribution(p), n, rng, "model")
    ys = sim.sample(q_dist, m, rng, "target")
    return kn.mmd2_u(xs, ys, spec)


def _born_and_derivatives(circuit: qc.ParamCircuit, theta: np.ndarray):
    """p (dim,) and dP/dtheta (N_gt, dim) via exact shift rules, one batched
    statevector pass."""
    thetas, plan = _shift_plan(circuit, theta)
    probs = born_probs_batch(circuit, thetas)
    p = probs[0]
    deriv = np.zeros((circuit.n_trainable, probs.shape[-1]))
    for slot, coeff, rp, rm in plan:
        deriv[slot] += coeff * (probs[rp] - probs[rm])
    return p, deriv


def _overlap_gradient_from_deriv(p: np.ndarray, q: np.ndarray, deriv: np.ndarray) -> np.ndarray:
    """d/dtheta [2 - 2 sum sqrt(pq)] = - sum_x p'(x) sqrt(q(x)/p(x)) over the
    support of q. Events with q = 0 contribute identically zero."""
    mask = q > 0.0
    ratio = np.sqrt(q[mask] / np.maximum(p[mask], 1e-300))
    return -deriv[:, mask] @ ratio


def qcbm_gradient(
    circuit: qc.ParamCircuit,
    theta: np.ndarray,
    target,
    spec: kn.KernelSpec,
    sampling="exact",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Gradient of qcbm_loss with respect to every trainable slot."""
    theta = np.asarray(theta, dtype=float)
    q_dist, q_state = _target_parts(target)
    q = q_dist.probs
    nm = _check_sampling(spec, sampling)

    if spec.kind == "swap-overlap":
        if q_state is None:
            raise CapabilityError("the swap-test kernel needs a pure-state target")
        # loss = 2 - 2 sqrt(F) with F = |<Phi(theta)|Psi>|^2; F obeys the
        # shift rules, and dL = -dF / sqrt(F).
        thetas, plan = _shift_plan(circuit, theta)
        states = _state_batch(circuit, thetas)
        fvals = np.abs(states @ q_state.amplitudes.conj()) ** 2
        grad = np.zeros(circuit.n_trainable)
        for slot, coeff, rp, rm in plan:
            grad[slot] += coeff * (fvals[rp] - fvals[rm])
        return -grad / math.sqrt(max(float(fvals[0]), 1e-300))

    if nm is None:
        p, deriv = _born_and_derivatives(circuit, theta)
        if spec.kind == "overlap":
            return _overlap_gradient_from_deriv(p, q, deriv)
        scale = 2.0 if spec.kind == "linear" else 2.0 * (1.0 - kn.offdiagonal_rbf_value(spec))
        return scale * (deriv @ (p - q))

    if rng is None:
        raise ValueError("sampled mode needs an explicit rng stream")
    n, m = nm
    thetas, plan = _shift_plan(circuit, theta)
    probs = born_probs_batch(circuit, thetas)
    uniforms = rng.random(n)  # shared across all shifted draws (CRN pairing)
    dim = probs.shape[-1]
    freqs = np.zeros((thetas.shape[0], dim))
    for row in range(thetas.shape[0]):
        idx = sim.sample_with_uniforms(DiscreteDistribution(probs[row]), uniforms)
        freqs[row] = np.bincount(idx, minlength=dim) / n
    ys = sim.sample(q_dist, m, rng, "target")
    g = np.bincount(ys.values, minlength=dim) / m
    # For the one-hot rbf kernel K = (1-c) I + c 11^T; the ones part cancels
    # on the zero-sum frequency differences.
    scale = 1.0 - kn.offdiagonal_rbf_value(spec)
    resid = freqs[0] - g
    grad = np.zeros(circuit.n_trainable)
    for slot, coeff, rp, rm in plan:
        grad[slot] += coeff * float((freqs[rp] - freqs[rm]) @ resid)
    return 2.0 * scale * grad


def train_qcbm(
    circuit: qc.ParamCircuit,
    target,
    spec: kn.KernelSpec,
    config: TrainConfig,
) -> TrainTrace:
    """First-order descent on the QCBM loss from seeded uniform [0, 2pi) init."""
    q_dist, q_state = _target_parts(target)
    sampling = "exact" if config.n_model_samples is None else (
        config.n_model_samples,
        config.m_target_samples or config.n_model_samples,
    )
    theta = substream(config.seed, "qcbm", "init").uniform(0.0, 2.0 * math.pi, circuit.n_trainable)
    optimizer = make_optimizer(config.optimizer, config.learning_rate)
    records = []
    for it in range(config.max_iters):
        t0 = time.perf_counter()
        it_rng = substream(config.seed, "qcbm", "iter", it)
        loss_exact = qcbm_loss(circuit, theta, target, spec, "exact")
        if sampling == "exact":
            loss_emp = loss_exact
            grad = qcbm_gradient(circuit, theta, target, spec, "exact")
        else:
            loss_emp = qcbm_loss(circuit, theta, target, spec, sampling, it_rng)
            grad = qcbm_gradient(circuit, theta, target, spec, sampling, it_rng)
        grad_norm = float(np.linalg.norm(grad))
        records.append(
            IterationRecord(it, float(loss_emp), float(loss_exact), grad_norm, (time.perf_counter() - t0) * 1e3)
        )
        if grad_norm < config.convergence_tol:
            break
        theta = optimizer.step(theta, grad)

    final_state = qc.bind(circuit, theta)
    born = sim.born_distribution(final_state)
    metrics = {
        "exact_mmd2": qcbm_loss(circuit, theta, target, spec, "exact"),
        "kl": sim.kl_divergence(born, q_dist),
        "loss_empirical_final": records[-1].loss_empirical,
    }
    if q_state is not None:
        metrics["fidelity"] = sim.fidelity(final_state, q_state)
    return TrainTrace(records, theta, metrics, config, config.seed)


# ---------------------------------------------------------------------------
# QGAN loss and gradient


def encode_batch(encoder: qc.ParamCircuit, z_values: np.ndarray) -> np.ndarray:
    """Encoded states (n, 2**N) for latent rows z_values (n, n_features)."""
    z = np.atleast_2d(np.asarray(z_values, dtype=float))
    amps = sim.zero_state(encoder.n_qubits).amplitudes
    return qc.run_array(encoder, amps, zs=z)


def generator_states(
    generator: qc.ParamCircuit, thetas: np.ndarray, enc_states: np.ndarray
) -> np.ndarray:
    """Generator output amplitudes for a (R, N_gt) parameter batch applied to
    (n, dim) encoded states; returns (R, n, dim) (or (n, dim) for one theta)."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        return qc.run_array(generator, enc_states, thetas=thetas)
    return qc.run_array(generator, enc_states[None, :, :], thetas=thetas[:, None, :])


def _outputs_from_states(states: np.ndarray, mode: str, n_qubits: int) -> np.ndarray:
    probs = np.abs(states) ** 2
    if mode == "prob-vector":
        return probs
    if mode == "z-expectation":
        return sim.z_expectations(probs, n_qubits)
    raise ValueError(f"unknown output mode {mode!r}")


def generator_outputs_batch(
    encoder: qc.ParamCircuit,
    generator: qc.ParamCircuit,
    thetas: np.ndarray,
    z_values: np.ndarray,
    mode: str,
) -> np.ndarray:
    return _outputs_from_states(
        generator_states(generator, thetas, encode_batch(encoder, z_values)),
        mode,
        generator.n_qubits,
    )


def _rbf_grad_weights(x: np.ndarray, y: np.ndarray, spec: kn.KernelSpec, block: int = 256) -> np.ndarray:
    """W_i = 2/(n(n-1)) sum_{i' != i} grad_1 k(x_i, x_i')
            - 2/(n m)   sum_j       grad_1 k(x_i, y_j),
    with grad_1 k(u, v) = mean_g exp(-g ||u-v||^2) * (-2 g) (u - v)."""
    n, m = x.shape[0], y.shape[0]
    w = np.zeros_like(x)

    def accumulate(target_rows, others, scale):
        for start in range(0, target_rows.shape[0], block):
            stop = start + block
            diff = target_rows[start:stop, None, :] - others[None, :, :]
            d2 = np.sum(diff**2, axis=-1)
            coeff = np.zeros_like(d2)
            for g in spec.gammas:
                coeff += np.exp(-g * d2) * (-2.0 * g)
            coeff /= len(spec.gammas)
            w[start:stop] += scale * np.sum(coeff[:, :, None] * diff, axis=1)

    accumulate(x, x, 2.0 / (n * (n - 1.0)))  # i = i' term vanishes since u - v = 0
    accumulate(x, y, -2.0 / (n * m))
    return w


def qgan_loss(
    encoder: qc.ParamCircuit,
    generator: qc.ParamCircuit,
    theta: np.ndarray,
    zs: SampleSet,
    ys: SampleSet,
    spec: kn.KernelSpec,
    mode: str = "z-expectation",
) -> float:
    """MMD^2_U between generated outputs for the latent set and the targets."""
    x = generator_outputs_batch(encoder, generator, np.asarray(theta, float), zs.values, mode)
    return kn.mmd2_u(SampleSet(x, "model"), ys, spec)


def qgan_gradient(
    encoder: qc.ParamCircuit,
    generator: qc.ParamCircuit,
    theta: np.ndarray,
    zs: SampleSet,
    ys: SampleSet,
    spec: kn.KernelSpec,
    mode: str = "z-expectation",
) -> np.ndarray:
    """Chain-rule gradient: kernel partials in output space times the exact
    shift-rule Jacobian of the generator outputs. The target-only U-statistic
    term carries no theta dependence and contributes nothing."""
    if len(zs) < 2 or len(ys) < 2:
        raise ValueError("need at least 2 latent and 2 target samples")
    if spec.kind != "rbf":
        raise CapabilityError("chain-rule QGAN gradient requires a classical rbf kernel")
    theta = np.asarray(theta, dtype=float)
    enc = encode_batch(encoder, zs.values)
    thetas, plan = _shift_plan(generator, theta)
    outs = _outputs_from_states(
        generator_states(generator, thetas, enc), mode, generator.n_qubits
    )
    x = outs[0]
    w = _rbf_grad_weights(x, np.asarray(ys.values, dtype=float), spec)
    grad = np.zeros(generator.n_trainable)
    for slot, coeff, rp, rm in plan:
        grad[slot] += coeff * float(np.sum(w * (outs[rp] - outs[rm])))
    return grad


def qgan_loss_states(
    encoder: qc.ParamCircuit,
    generator: qc.ParamCircuit,
    theta: np.ndarray,
    z_values: np.ndarray,
    y_states: np.ndarray,
) -> float:
    """MMD^2_U with the pure-state fidelity kernel |<a|b>|^2; used when the
    generator output is the state itself (Hamiltonian learning)."""
    x_states = generator_states(generator, np.asarray(theta, float), encode_batch(encoder, z_values))
    return kn.overlap_mmd2_u(x_states, y_states)


def qgan_gradient_states(
    encoder: qc.ParamCircuit,
    generator: qc.ParamCircuit,
    theta: np.ndarray,
    z_values: np.ndarray,
    y_states: np.ndarray,
) -> np.ndarray:
    """Gradient of qgan_loss_states: the fidelity kernel entries are circuit
    expectations, so each occurrence of theta obeys a shift rule; the x-x'
    term picks up a factor 2 from the product rule."""
    theta = np.asarray(theta, dtype=float)
    z_values = np.atleast_2d(np.asarray(z_values, dtype=float))
    n, m = z_values.shape[0], y_states.shape[0]
    if n < 2 or m < 2:
        raise ValueError("need at least 2 latent and 2 target samples")
    enc = encode_batch(encoder, z_values)
    thetas, plan = _shift_plan(generator, theta)
    states = generator_states(generator, thetas, enc)  # (R, n, dim)
    base = states[0]

    def xx_sum(shifted):
        overlaps = np.abs(shifted.conj() @ base.T) ** 2  # (n, n): <shifted_i | base_i'>
        return float(overlaps.sum() - np.trace(overlaps))

    def xy_sum(shifted):
        return float(np.sum(np.abs(shifted.conj() @ y_states.T) ** 2))

    grad = np.zeros(generator.n_trainable)
    for slot, coeff, rp, rm in plan:
        d_xx = xx_sum(states[rp]) - xx_sum(states[rm])
        d_xy = xy_sum(states[rp]) - xy_sum(states[rm])
        grad[slot] += coeff * (2.0 * d_xx / (n * (n - 1.0)) - 2.0 * d_xy / (n * m))
    return grad


def train_qgan_algorithm1(
    encoder: qc.ParamCircuit,
    generator: qc.ParamCircuit,
    prior_sampler: Callable[[int, np.random.Generator], np.ndarray],
    target_sampler: Callable[[int, np.random.Generator], np.ndarray],
    spec: kn.KernelSpec,
    config: TrainConfig,
    mode: str = "z-expectation",
) -> TrainTrace:
    """Minibatch MMD training of the generator.

    Per iteration: regenerate the n latent inputs every ``noise_refresh``
    iterations, reshuffle the m fixed target samples into ceil(m/b)
    minibatches, and take one optimizer step per minibatch on the gradient of
    MMD^2_U between all n generated samples and the minibatch.

    ``mode`` is 'z-expectation' or 'prob-vector' for vector outputs with a
    classical kernel, or 'state' for pure-state outputs with the fidelity
    kernel (spec kind 'overlap').
    """
    n = config.n_model_samples
    m = config.m_target_samples
    if n is None or m is None:
        raise ValueError("QGAN training needs explicit n_model_samples and m_target_samples")
    b = config.batch_size or m
    if b > m:
        raise ValueError("batch_size cannot exceed the target sample count")
    state_mode = mode == "state"
    if state_mode and spec.kind != "overlap":
        raise CapabilityError("state outputs require the overlap kernel")
    if not state_mode and spec.kind != "rbf":
        raise CapabilityError("vector outputs require the rbf kernel")

    ys = target_sampler(m, substream(config.seed, "qgan", "targets"))
    ys = np.asarray(ys)
    theta = substream(config.seed, "qgan", "init").uniform(0.0, 2.0 * math.pi, generator.n_trainable)
    optimizer = make_optimizer(config.optimizer, config.learning_rate)
    n_batches = math.ceil(m / b)

    records = []
    zs = None
    grad_norm = math.inf
    for it in range(config.max_iters):
        t0 = time.perf_counter()
        if it % config.noise_refresh == 0 or zs is None:
            zs = np.atleast_2d(np.asarray(prior_sampler(n, substream(config.seed, "qgan", "noise", it))))
        perm = substream(config.seed, "qgan", "shuffle", it).permutation(m)
        losses, norms = [], []
        for k in range(n_batches):
            batch_idx = perm[k * b : (k + 1) * b]
            y_batch = ys[batch_idx]
            if state_mode:
                loss = qgan_loss_states(encoder, generator, theta, zs, y_batch)
                grad = qgan_gradient_states(encoder, generator, theta, zs, y_batch)
            else:
                y_set = SampleSet(y_batch, "target")
                z_set = SampleSet(zs, "model")
                loss = qgan_loss(encoder, generator, theta, z_set, y_set, spec, mode)
                grad = qgan_gradient(encoder, generator, theta, z_set, y_set, spec, mode)
            losses.append(float(loss))
            grad_norm = float(np.linalg.norm(grad))
            norms.append(grad_norm)
            theta = optimizer.step(theta, grad)
        records.append(
            IterationRecord(
                it,
                float(np.mean(losses)),
                math.nan,
                float(np.mean(norms)),
                (time.perf_counter() - t0) * 1e3,
            )
        )
        if grad_norm < config.convergence_tol:
            break

    metrics = {"loss_empirical_final": records[-1].loss_empirical}
    return TrainTrace(records, theta, metrics, config, config.seed)
