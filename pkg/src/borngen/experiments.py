"""Experiment presets, config ingestion, execution, and result emission.

An experiment config is a JSON document validated against CONFIG_SCHEMA.
Presets are full configs under a registered name; a user config may name a
preset and override any field. Every run is reproducible bit-for-bit from
(config, seed): repeat k runs with seed (config seed + k) and all
randomness flows through named sub-streams of that run seed.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import circuits as qc
from . import sim
from . import training as tr
from .bounds import empirical_gap
from .kernels import KernelSpec
from .rng import substream
from .sim import PureState, SampleSet
from .targets import (
    Gaussian3DTarget,
    make_discrete_gaussian,
    make_ghz,
    make_xxz,
    sample_gaussian3d,
    xxz_ground_state,
)


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"type": "string"},
        "name": {"type": "string"},
        "model": {"enum": ["qcbm", "qgan"]},
        "target": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["discrete-gaussian", "ghz", "gaussian3d", "xxz-ground"]},
                "n_qubits": {"type": "integer", "minimum": 2},
                "mu": {"type": "number"},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "encode": {"enum": ["distribution", "pure-state"]},
                "mean": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                "covariance": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                    "minItems": 3,
                    "maxItems": 3,
                },
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "eta": {"type": "number"},
                "a_min": {"type": "number"},
                "a_max": {"type": "number"},
                "boundary": {"enum": ["open", "periodic"]},
            },
            "required": ["kind"],
        },
        "circuit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["qcbm-ry", "hardware-efficient", "style-qgan", "phl-qgan"]},
                "depth": {"type": "integer", "minimum": 1},
            },
            "required": ["family", "depth"],
        },
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["rbf", "linear", "overlap", "swap-overlap"]},
                "gammas": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["kind"],
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iters": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "optimizer": {"enum": ["gd", "adam", "adagrad"]},
                "n_model_samples": {"type": ["integer", "null"], "minimum": 2},
                "m_target_samples": {"type": ["integer", "null"], "minimum": 2},
                "batch_size": {"type": ["integer", "null"], "minimum": 2},
                "noise_refresh": {"type": "integer", "minimum": 1},
                "convergence_tol": {"type": "number", "minimum": 0},
            },
        },
        "output_mode": {"enum": ["prob-vector", "z-expectation", "state"]},
        "prior": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["normal", "uniform"]},
                "dim": {"type": "integer", "minimum": 1},
                "low": {"type": "number"},
                "high": {"type": "number"},
            },
            "required": ["kind", "dim"],
        },
        "holdout_n": {"type": "integer", "minimum": 2},
        "phl_grid": {"type": "integer", "minimum": 2},
        "repeats": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "out_prefix": {"type": ["string", "null"]},
    },
}


# ---------------------------------------------------------------------------
# Presets


def _gauss_qcbm(name, n_qubits, depth, kernel, encode, lr, mu=1.0, n_samples=None):
    cfg = {
        "name": name,
        "model": "qcbm",
        "target": {
            "kind": "discrete-gaussian",
            "n_qubits": n_qubits,
            "mu": mu,
            "sigma": 8.0,
            "encode": encode,
        },
        "circuit": {"family": "qcbm-ry", "depth": depth},
        "kernel": kernel,
        "train": {"max_iters": 50, "learning_rate": lr, "optimizer": "adam"},
        "repeats": 5,
        "seed": 0,
        "out_prefix": None,
    }
    if n_samples is not None:
        cfg["train"]["n_model_samples"] = n_samples
        cfg["train"]["m_target_samples"] = n_samples
    return cfg


def _ghz_qcbm(n_qubits, lr):
    return {
        "name": f"ghz-quantum-N{n_qubits}",
        "model": "qcbm",
        "target": {"kind": "ghz", "n_qubits": n_qubits},
        "circuit": {"family": "qcbm-ry", "depth": n_qubits},
        "kernel": {"kind": "swap-overlap"},
        "train": {"max_iters": 50, "learning_rate": lr, "optimizer": "adam"},
        "repeats": 5,
        "seed": 0,
        "out_prefix": None,
    }


STYLE_COVARIANCE = [[0.5, 0.1, 0.25], [0.1, 0.5, 0.1], [0.25, 0.1, 0.5]]


def _gauss3d(m, max_iters=120, lr=0.1, batch=None, n=None):
    return {
        "name": f"gauss3d-m{m}",
        "model": "qgan",
        "target": {
            "kind": "gaussian3d",
            "mean": [0.0, 0.0, 0.0],
            "covariance": STYLE_COVARIANCE,
            "scale": 0.5,
        },
        "circuit": {"family": "style-qgan", "depth": 2},
        "kernel": {"kind": "rbf", "gammas": [0.001, 1.0, 10.0]},
        "train": {
            "max_iters": max_iters,
            "learning_rate": lr,
            "optimizer": "adam",
            "n_model_samples": n if n is not None else m,
            "m_target_samples": m,
            "batch_size": batch,
            "noise_refresh": 1,
        },
        "output_mode": "z-expectation",
        "prior": {"kind": "normal", "dim": 3},
        "holdout_n": 10000,
        "repeats": 5,
        "seed": 0,
        "out_prefix": None,
    }


RBF_QCBM = {"kind": "rbf", "gammas": [0.25, 4.0]}

_PRESETS = {
    "gauss-quantum-N8": _gauss_qcbm(
        "gauss-quantum-N8", 8, 8, {"kind": "swap-overlap"}, "pure-state", 0.2
    ),
    "gauss-quantum-N12": _gauss_qcbm(
        "gauss-quantum-N12", 12, 12, {"kind": "swap-overlap"}, "pure-state", 0.2
    ),
    "gauss-quantum-linear-N8": _gauss_qcbm(
        "gauss-quantum-linear-N8", 8, 8, {"kind": "linear"}, "distribution", 0.1
    ),
    "gauss-quantum-mid-N8": _gauss_qcbm(
        "gauss-quantum-mid-N8", 8, 8, {"kind": "swap-overlap"}, "pure-state", 0.2, mu=128.0
    ),
    "gauss-rbf-n100-N8": _gauss_qcbm(
        "gauss-rbf-n100-N8", 8, 8, RBF_QCBM, "distribution", 0.1, n_samples=100
    ),
    "gauss-rbf-n1000-N8": _gauss_qcbm(
        "gauss-rbf-n1000-N8", 8, 8, RBF_QCBM, "distribution", 0.1, n_samples=1000
    ),
    "gauss-rbf-exact-N8": _gauss_qcbm(
        "gauss-rbf-exact-N8", 8, 8, RBF_QCBM, "distribution", 0.1
    ),
    "ghz-quantum-N4": _ghz_qcbm(4, 0.2),
    "ghz-quantum-N6": _ghz_qcbm(6, 0.2),
    "ghz-quantum-N8": _ghz_qcbm(8, 0.2),
    "ghz-quantum-N10": _ghz_qcbm(10, 0.3),
    "gauss3d-m2": _gauss3d(2),
    "gauss3d-m10": _gauss3d(10),
    "gauss3d-m200": _gauss3d(200),
    "gauss3d-appendix": _gauss3d(5000, max_iters=800, lr=0.05, batch=64, n=5000),
    "xxz-phl": {
        "name": "xxz-phl",
        "model": "qgan",
        "target": {
            "kind": "xxz-ground",
            "n_qubits": 2,
            "eta": 0.25,
            "a_min": -0.2,
            "a_max": 0.2,
            "boundary": "open",
        },
        "circuit": {"family": "phl-qgan", "depth": 4},
        "kernel": {"kind": "overlap"},
        "train": {
            "max_iters": 80,
            "learning_rate": 0.1,
            "optimizer": "adagrad",
            "n_model_samples": 9,
            "m_target_samples": 9,
        },
        "output_mode": "state",
        "prior": {"kind": "uniform", "dim": 1, "low": -0.2, "high": 0.2},
        "phl_grid": 41,
        "repeats": 5,
        "seed": 0,
        "out_prefix": None,
    },
}

# name each gauss3d preset correctly
for _name, _cfg in _PRESETS.items():
    _cfg["name"] = _name


def list_presets() -> list:
    return sorted(_PRESETS)


def preset(name: str) -> dict:
    if name not in _PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r}; see list-presets")
    return copy.deepcopy(_PRESETS[name])


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(doc: dict) -> dict:
    """Validate a raw config document (with optional preset inheritance) and
    return the fully merged config dict."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    merged = doc
    if "preset" in doc:
        base = preset(doc["preset"])
        override = {k: v for k, v in doc.items() if k != "preset"}
        merged = _merge(base, override)
    for field in ("name", "model", "target", "circuit", "kernel", "train"):
        if field not in merged:
            raise ConfigError(f"{field}: required field is missing")
    if merged["model"] == "qgan" and "prior" not in merged:
        raise ConfigError("prior: required for qgan experiments")
    merged.setdefault("repeats", 5)
    merged.setdefault("seed", 0)
    merged.setdefault("out_prefix", None)
    return merged


# ---------------------------------------------------------------------------
# Config realization


def _build_kernel(doc: dict) -> KernelSpec:
    return KernelSpec(doc["kind"], tuple(doc.get("gammas", ())))


def _build_target(doc: dict):
    kind = doc["kind"]
    if kind == "discrete-gaussian":
        dist = make_discrete_gaussian(doc["n_qubits"], doc["mu"], doc["sigma"])
        if doc.get("encode", "distribution") == "pure-state":
            return PureState(doc["n_qubits"], np.sqrt(dist.probs))
        return dist
    if kind == "ghz":
        return make_ghz(doc["n_qubits"])
    if kind == "gaussian3d":
        return Gaussian3DTarget(tuple(doc["mean"]), np.asarray(doc["covariance"]))
    if kind == "xxz-ground":
        return doc  # realized lazily by the samplers below
    raise ConfigError(f"target.kind: unsupported target {kind!r}")


def _build_circuit(doc: dict, target_doc: dict):
    family, depth = doc["family"], doc["depth"]
    if family == "qcbm-ry":
        return None, qc.build_qcbm_ansatz(target_doc["n_qubits"], depth)
    if family == "hardware-efficient":
        return None, qc.build_hardware_efficient(target_doc["n_qubits"], depth)
    if family == "style-qgan":
        return qc.build_style_qgan(depth)
    if family == "phl-qgan":
        return qc.build_phl_qgan(depth)
    raise ConfigError(f"circuit.family: unsupported family {family!r}")


def _build_prior(doc: dict):
    dim = doc["dim"]
    if doc["kind"] == "normal":
        return lambda n, rng: rng.standard_normal((n, dim))
    low, high = doc.get("low", -1.0), doc.get("high", 1.0)
    return lambda n, rng: rng.uniform(low, high, (n, dim))


def _train_config(doc: dict, seed: int) -> tr.TrainConfig:
    fields = dict(doc)
    fields.setdefault("max_iters", 50)
    fields.setdefault("learning_rate", 0.1)
    fields.setdefault("optimizer", "adam")
    return tr.TrainConfig(seed=seed, **fields)


# ---------------------------------------------------------------------------
# Execution


def _quartiles(values):
    arr = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return {"median": math.nan, "q1": math.nan, "q3": math.nan}
    return {
        "median": float(np.median(arr)),
        "q1": float(np.percentile(arr, 25)),
        "q3": float(np.percentile(arr, 75)),
    }


def _xxz_target_sampler(tdoc: dict):
    n_q, eta, boundary = tdoc["n_qubits"], tdoc["eta"], tdoc["boundary"]
    lo, hi = tdoc["a_min"], tdoc["a_max"]

    def sampler(m, rng):
        avals = rng.uniform(lo, hi, m)
        return np.stack(
            [xxz_ground_state(n_q, a, eta, boundary)[1].amplitudes for a in avals]
        )

    return sampler


def run_phl_eval(
    encoder: qc.ParamCircuit,
    generator: qc.ParamCircuit,
    theta: np.ndarray,
    a_grid,
    eta: float = 0.25,
    boundary: str = "open",
) -> list:
    """Per coupling value: generator state vs exact ground state.

    Returns rows (a, fidelity, estimated energy, exact energy); the estimate
    is the Rayleigh quotient of the generated state, so it can never fall
    below the exact ground energy.
    """
    n_q = generator.n_qubits
    rows = []
    for a in np.asarray(a_grid, dtype=float):
        state_vec = tr.generator_states(generator, theta, tr.encode_batch(encoder, [[a]]))[0]
        psi = PureState(n_q, state_vec)
        ham = make_xxz(n_q, a, eta, boundary)
        exact_e, ground = xxz_ground_state(n_q, a, eta, boundary)
        rows.append((float(a), sim.fidelity(psi, ground), sim.expectation(psi, ham), exact_e))
    return rows


def _run_qcbm_once(config: dict, run_seed: int):
    target = _build_target(config["target"])
    spec = _build_kernel(config["kernel"])
    _, circuit = _build_circuit(config["circuit"], config["target"])
    train_cfg = _train_config(config.get("train", {}), run_seed)
    trace = tr.train_qcbm(circuit, target, spec, train_cfg)
    final_probs = tr.born_probs_batch(circuit, trace.final_theta)
    return trace, {"final_distribution": final_probs}


def _run_qgan_once(config: dict, run_seed: int):
    tdoc = config["target"]
    spec = _build_kernel(config["kernel"])
    encoder, generator = _build_circuit(config["circuit"], tdoc)
    prior = _build_prior(config["prior"])
    mode = config.get("output_mode", "z-expectation")
    train_cfg = _train_config(config.get("train", {}), run_seed)

    if tdoc["kind"] == "xxz-ground":
        target_sampler = _xxz_target_sampler(tdoc)
    elif tdoc["kind"] == "gaussian3d":
        target = _build_target(tdoc)
        scale = tdoc.get("scale", 1.0)

        def target_sampler(m, rng):
            return scale * sample_gaussian3d(target, m, rng).values

    else:
        raise ConfigError(f"target.kind: {tdoc['kind']!r} is not a qgan target")

    trace = tr.train_qgan_algorithm1(
        encoder, generator, prior, target_sampler, spec, train_cfg, mode=mode
    )
    extras = {}

    if tdoc["kind"] == "xxz-ground":
        grid = np.linspace(tdoc["a_min"], tdoc["a_max"], config.get("phl_grid", 41))
        rows = run_phl_eval(
            encoder, generator, trace.final_theta, grid, tdoc["eta"], tdoc["boundary"]
        )
        fidelities = [r[1] for r in rows]
        errors = [abs(r[2] - r[3]) for r in rows]
        variational_ok = all(r[2] >= r[3] - 1e-9 for r in rows)
        trace.final_metrics.update(
            {
                "min_fidelity": min(fidelities),
                "median_fidelity": float(np.median(fidelities)),
                "max_energy_error": max(errors),
                "variational_ok": float(variational_ok),
            }
        )
        extras["phl_rows"] = rows
    else:
        holdout_n = config.get("holdout_n", 10000)

        def model_sampler(n, rng):
            zs = prior(n, rng)
            outs = tr.generator_outputs_batch(encoder, generator, trace.final_theta, zs, mode)
            return SampleSet(outs, "model")

        def target_sampleset(m, rng):
            return SampleSet(target_sampler(m, rng), "target")

        gap = empirical_gap(
            trace, model_sampler, target_sampleset, spec, holdout_n, seed=run_seed
        )
        trace.final_metrics.update(
            {"expected_mmd2": gap.expected_mmd2, "generalization_gap": gap.gap}
        )
        dump = model_sampler(min(holdout_n, 2000), substream(run_seed, "dump")).values
        extras["sample_dump"] = dump
    return trace, extras


def run_experiment(
    config: dict,
    out_prefix: str | None = None,
    seed: int | None = None,
    repeats: int | None = None,
) -> dict:
    """Execute the configured experiment over its seeds and emit artifacts.

    Per run: a trace CSV and a JSON run summary; per experiment: a JSON
    summary with medians and quartiles of every final metric, echoing the
    exact config. Distribution targets additionally dump the learned Born
    vector, continuous targets a sample dump, and the Hamiltonian-learning
    preset its evaluation table.
    """
    config = copy.deepcopy(config)
    if seed is not None:
        config["seed"] = int(seed)
    if repeats is not None:
        config["repeats"] = int(repeats)
    if out_prefix is not None:
        config["out_prefix"] = out_prefix
    prefix = config.get("out_prefix")
    if prefix:
        os.makedirs(os.path.dirname(os.path.abspath(prefix)), exist_ok=True)

    runner = _run_qcbm_once if config["model"] == "qcbm" else _run_qgan_once
    run_summaries = []
    metric_values: dict = {}
    for k in range(config["repeats"]):
        run_seed = config["seed"] + k
        trace, extras = runner(config, run_seed)
        summary = trace.summary_dict()
        summary["experiment"] = {key: val for key, val in config.items() if key != "out_prefix"}
        run_summaries.append(summary)
        for name, value in trace.final_metrics.items():
            metric_values.setdefault(name, []).append(float(value))
        if prefix:
            trace.to_csv(f"{prefix}_seed{run_seed}_trace.csv")
            with open(f"{prefix}_seed{run_seed}_summary.json", "w") as fh:
                json.dump(summary, fh, indent=2)
            if "final_distribution" in extras:
                np.savetxt(f"{prefix}_seed{run_seed}_dist.txt", extras["final_distribution"])
            if "sample_dump" in extras:
                np.savetxt(f"{prefix}_seed{run_seed}_samples.txt", extras["sample_dump"])
            if "phl_rows" in extras:
                with open(f"{prefix}_seed{run_seed}_phl.csv", "w") as fh:
                    fh.write("a,fidelity,estimated_energy,exact_energy\n")
                    for row in extras["phl_rows"]:
                        fh.write(",".join(repr(v) for v in row) + "\n")

    summary = {
        "name": config["name"],
        "config": {key: val for key, val in config.items() if key != "out_prefix"},
        "runs": [s["final_metrics"] for s in run_summaries],
        "metrics": {name: _quartiles(vals) for name, vals in metric_values.items()},
    }
    if prefix:
        with open(f"{prefix}_summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    summary["run_summaries"] = run_summaries
    return summary
