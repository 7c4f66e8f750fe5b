"""Target constructors for the shipped experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sim import (
    DiscreteDistribution,
    EigenResult,
    Hamiltonian,
    PureState,
    SampleSet,
    eigendecompose,
)


def make_discrete_gaussian(n_qubits: int, mu: float, sigma: float) -> DiscreteDistribution:
    """probs[x] proportional to exp(-(x - mu)^2 / (2 sigma^2)) over x in
    [0, 2**n_qubits)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.arange(2**n_qubits, dtype=float)
    logw = -((x - mu) ** 2) / (2.0 * sigma**2)
    w = np.exp(logw - logw.max())  # stable for tiny sigma
    return DiscreteDistribution(w / w.sum())


def make_ghz(n_qubits: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2)."""
    if n_qubits < 2:
        raise ValueError("need at least 2 qubits")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = amps[-1] = 1.0 / math.sqrt(2.0)
    return PureState(n_qubits, amps)


@dataclass(frozen=True)
class Gaussian3DTarget:
    """Continuous 3-D Gaussian; the covariance is symmetrized and must be
    positive definite afterwards."""

    mean: tuple
    covariance: np.ndarray

    def __post_init__(self):
        mean = tuple(float(v) for v in self.mean)
        if len(mean) != 3:
            raise ValueError("mean must be a 3-vector")
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (3, 3):
            raise ValueError("covariance must be 3x3")
        sym = (cov + cov.T) / 2.0
        try:
            chol = np.linalg.cholesky(sym)
        except np.linalg.LinAlgError:
            raise ValueError("symmetrized covariance is not positive definite") from None
        chol.flags.writeable = False
        sym.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", sym)
        object.__setattr__(self, "_chol", chol)


def sample_gaussian3d(target: Gaussian3DTarget, n: int, rng: np.random.Generator) -> SampleSet:
    """n seeded draws via the Cholesky factor applied to standard normals."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    normals = rng.standard_normal((n, 3))
    draws = np.asarray(target.mean) + normals @ getattr(target, "_chol").T
    return SampleSet(draws, "target")


def make_xxz(n_qubits: int, a: float, eta: float, boundary: str = "open") -> Hamiltonian:
    """Spin chain sum_i (X_i X_{i+1} + Y_i Y_{i+1} + a Z_i Z_{i+1}) + eta sum_i Z_i.

    Open boundary uses bonds i = 0..N-2. The periodic variant runs the bond
    index over all N sites with wraparound, which for N = 2 doubles every
    two-body coefficient (both (0,1) and (1,0) appear in the literal sum).
    """
    if n_qubits < 2:
        raise ValueError("need at least 2 sites")
    if boundary not in ("open", "periodic"):
        raise ValueError("boundary must be 'open' or 'periodic'")
    bonds = list(range(n_qubits - 1 if boundary == "open" else n_qubits))
    terms = []

    def string(ch: str, i: int, j: int) -> str:
        labels = ["I"] * n_qubits
        labels[i] = ch
        labels[j] = ch
        return "".join(labels)

    for i in bonds:
        j = (i + 1) % n_qubits
        terms.append((1.0, string("X", i, j)))
        terms.append((1.0, string("Y", i, j)))
        if a != 0.0:
            terms.append((float(a), string("Z", i, j)))
    for i in range(n_qubits):
        labels = ["I"] * n_qubits
        labels[i] = "Z"
        terms.append((float(eta), "".join(labels)))
    return Hamiltonian(n_qubits, tuple(terms))


def xxz_ground_state(
    n_qubits: int, a: float, eta: float, boundary: str = "open"
) -> tuple[float, PureState]:
    """Ground energy and state of the chain at coupling ``a``."""
    result: EigenResult = eigendecompose(make_xxz(n_qubits, a, eta, boundary))
    return float(result.eigenvalues[0]), result.eigenvectors[0]
