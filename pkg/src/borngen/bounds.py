"""Closed-form generalization bounds and covering-number calculators.

All logarithms are natural. Formula identifiers ("qcbm", "qcbm-proof",
"qgan", "hea", "qaoa") select which closed form a report evaluates; the
"qcbm-proof" variant preserves the alternative constant factors so both can
be audited side by side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels as kn
from .sim import SampleSet


@dataclass(frozen=True)
class BoundInput:
    """Numeric inputs shared by the bound formulas.

    n, m       sample counts from model and target
    delta      failure probability, in (0, 1)
    c1         sup of the loss over parameter space
    c2         kernel sup-bound sup_x k(x, x)
    c3         kernel Lipschitz constant
    d          qudit dimension (2 for qubits)
    k          maximum gate locality
    n_qudits   register size N
    n_gt/n_ge  trainable / encoding gate counts
    layers / encoder_layers   L and L_E for the per-ansatz forms
    """

    n: int
    m: int
    delta: float = 0.05
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    d: int = 2
    k: int = 2
    n_qudits: int = 1
    n_gt: int = 1
    n_ge: int = 1
    layers: int = 1
    encoder_layers: int = 1

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("sample counts must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        for name in ("c1", "c2", "c3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("d", "k", "n_qudits", "n_gt", "n_ge", "layers", "encoder_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class BoundReport:
    formula: str
    terms: dict
    total: float

    def __post_init__(self):
        if abs(self.total - math.fsum(self.terms.values())) > 1e-12 * max(1.0, abs(self.total)):
            raise ValueError("report total must equal the sum of its terms")

    def to_dict(self) -> dict:
        return {"formula": self.formula, "terms": dict(self.terms), "total": self.total}


def _report(formula: str, terms: dict) -> BoundReport:
    return BoundReport(formula, terms, math.fsum(terms.values()))


def bound_qcbm(inp: BoundInput, formula: str = "main") -> BoundReport:
    """Sample-complexity bound for Born machines.

    main:  C1 * sqrt(8/n + 8/m) * sqrt(C2) * (2 + sqrt(ln(1/delta)))
    proof: 4 C1 * (2/n + sqrt(2/m)) * sqrt(C2) * (2 + sqrt(ln(2/delta)))
    """
    if formula == "main":
        value = (
            inp.c1
            * math.sqrt(8.0 / inp.n + 8.0 / inp.m)
            * math.sqrt(inp.c2)
            * (2.0 + math.sqrt(math.log(1.0 / inp.delta)))
        )
        return _report("qcbm", {"statistical": value, "inverse_n": 0.0, "architecture": 0.0})
    if formula == "proof":
        value = (
            4.0
            * inp.c1
            * (2.0 / inp.n + math.sqrt(2.0 / inp.m))
            * math.sqrt(inp.c2)
            * (2.0 + math.sqrt(math.log(2.0 / inp.delta)))
        )
        return _report("qcbm-proof", {"statistical": value, "inverse_n": 0.0, "architecture": 0.0})
    raise ValueError("formula must be 'main' or 'proof'")


def _qgan_shared_terms(inp: BoundInput) -> tuple[float, float]:
    if inp.n < 2:
        raise ValueError("the generator bound needs n >= 2")
    statistical = 8.0 * math.sqrt(
        8.0 * inp.c2**2 * (inp.n + inp.m) / (inp.n * inp.m) * math.log(1.0 / inp.delta)
    )
    inverse_n = 48.0 / (inp.n - 1.0)
    return statistical, inverse_n


def bound_qgan(inp: BoundInput) -> BoundReport:
    """Generator bound: statistical term + 48/(n-1) + architecture term
    144 d^k sqrt(N_gt + N_ge) / (n-1) * (N ln(441 d C3^2 n N_ge N_gt) + 1)."""
    statistical, inverse_n = _qgan_shared_terms(inp)
    c4 = inp.n_qudits * math.log(441.0 * inp.d * inp.c3**2 * inp.n * inp.n_ge * inp.n_gt) + 1.0
    architecture = 144.0 * inp.d**inp.k * math.sqrt(inp.n_gt + inp.n_ge) / (inp.n - 1.0) * c4
    return _report(
        "qgan",
        {"statistical": statistical, "inverse_n": inverse_n, "architecture": architecture},
    )


def bound_hea(inp: BoundInput) -> BoundReport:
    """Hardware-efficient specialization: architecture term
    576 sqrt(N (L_E + 3 L)) / (n-1) * (N ln(1323 d C3^2 n N^2 L_E L) + 1)."""
    statistical, inverse_n = _qgan_shared_terms(inp)
    n_q, l, l_e = inp.n_qudits, inp.layers, inp.encoder_layers
    log_term = n_q * math.log(1323.0 * inp.d * inp.c3**2 * inp.n * n_q**2 * l_e * l) + 1.0
    architecture = 576.0 * math.sqrt(n_q * (l_e + 3.0 * l)) / (inp.n - 1.0) * log_term
    return _report(
        "hea",
        {"statistical": statistical, "inverse_n": inverse_n, "architecture": architecture},
    )


def bound_qaoa(inp: BoundInput) -> BoundReport:
    """Alternating-operator specialization: architecture term
    144 * 2^N sqrt((N+1)(L + L_E)) / (n-1)
        * (N ln(441 d C3^2 n L L_E N (N+1)) + 1)."""
    statistical, inverse_n = _qgan_shared_terms(inp)
    n_q, l, l_e = inp.n_qudits, inp.layers, inp.encoder_layers
    log_term = (
        n_q * math.log(441.0 * inp.d * inp.c3**2 * inp.n * l * l_e * n_q * (n_q + 1.0)) + 1.0
    )
    architecture = (
        144.0 * 2.0**n_q * math.sqrt((n_q + 1.0) * (l + l_e)) / (inp.n - 1.0) * log_term
    )
    return _report(
        "qaoa",
        {"statistical": statistical, "inverse_n": inverse_n, "architecture": architecture},
    )


FORMULAS: dict = {
    "qcbm": bound_qcbm,
    "qgan": bound_qgan,
    "hea": bound_hea,
    "qaoa": bound_qaoa,
}


def log_covering_circuit(n_gt: int, k: int, d: int, epsilon: float, pi_norm: float = 1.0) -> float:
    """ln of the epsilon-covering bound for the trainable-circuit operator
    class: d^{2k} N_gt ln(7 N_gt ||Pi|| / eps). Raw counts overflow, so only
    the log form is exposed."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return d ** (2 * k) * n_gt * math.log(7.0 * n_gt * pi_norm / epsilon)


def log_covering_encoder(n_ge: int, k: int, d: int, epsilon: float) -> float:
    """ln of the epsilon-covering bound for the encoded-state class:
    d^{2k} N_ge ln(7 N_ge / eps)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return d ** (2 * k) * n_ge * math.log(7.0 * n_ge / epsilon)


# ---------------------------------------------------------------------------
# Empirical generalization gap


@dataclass(frozen=True)
class GapReport:
    """Hold-out estimate of the expected loss and its gap to the run's best
    empirical loss (the run minimum stands in for the infimum over theta)."""

    expected_mmd2: float
    best_empirical: float
    gap: float
    holdout_n: int
    seed: int


def empirical_gap(
    trace,
    model_sampler: Callable[[int, np.random.Generator], SampleSet],
    target_sampler: Callable[[int, np.random.Generator], SampleSet],
    spec: kn.KernelSpec,
    holdout_n: int,
    seed: int,
) -> GapReport:
    """Fresh-sample estimate of the trained model's expected MMD^2.

    Draws holdout_n samples from each side on named sub-streams of ``seed``
    and evaluates the unbiased estimator; reports the difference to the
    minimum empirical loss seen during training.
    """
    if holdout_n < 2:
        raise ValueError("holdout_n must be >= 2")
    from .rng import substream

    xs = model_sampler(holdout_n, substream(seed, "gap", "model"))
    ys = target_sampler(holdout_n, substream(seed, "gap", "target"))
    if isinstance(xs, SampleSet) and isinstance(ys, SampleSet):
        expected = kn.mmd2_u(xs, ys, spec)
    else:  # pure-state samples as amplitude arrays
        expected = kn.overlap_mmd2_u(np.asarray(xs), np.asarray(ys))
    best = trace.min_empirical_loss
    return GapReport(float(expected), float(best), float(expected - best), holdout_n, seed)
