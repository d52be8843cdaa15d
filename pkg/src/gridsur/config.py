"""Experiment configuration: JSON schema, validation, seed derivation.

A config document fully determines an experiment:

    {
      "domain":   {"extent": [0.0, 1.0], "resolution": 101,
                   "weights": "uniform",            # or a list of N reals
                   "noise": {"mode": "zero"}},      # constant/custom modes
      "kernel":   {"family": "matern52", "variance": 1.0, "lengthscale": 0.3},
      "functional": {"kind": "ibv", "threshold": 1.0},
      "strategy": {"n_init": 3, "n_steps": 60,
                   "epsilon": {"kind": "constant", "value": 0.0},
                   "selection": "argmin", "candidates": "all",
                   "quadrature_nodes": 25},
      "replications": 20,
      "seed": 0,
      "output_dir": "out"
    }

`compare` documents carry a list under "functionals" instead of the
single "functional".  Replication seeds are derived by hashing the
canonical config (output location excluded) together with the
replication index, so outputs are a pure function of the document.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError, ParameterError
from .functionals import FunctionalSpec
from .grid import Domain, KernelSpec, regular_grid
from .strategy import EpsilonSchedule, StrategyConfig


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _get(doc: dict, key: str, kind, where: str):
    _require(key in doc, f"{where}: missing required key {key!r}")
    value = doc[key]
    if kind is float:
        _require(isinstance(value, (int, float)) and not isinstance(value, bool),
                 f"{where}.{key}: expected a number")
        return float(value)
    if kind is int:
        _require(isinstance(value, int) and not isinstance(value, bool),
                 f"{where}.{key}: expected an integer")
        return value
    _require(isinstance(value, kind), f"{where}.{key}: expected {kind.__name__}")
    return value


def build_domain(doc: dict) -> Domain:
    _require(isinstance(doc, dict), "domain: expected an object")
    extent = _get(doc, "extent", list, "domain")
    resolution = _get(doc, "resolution", int, "domain")
    _require(resolution >= 2, "domain.resolution: must be >= 2")

    ext = np.asarray(extent, dtype=float)
    _require(ext.shape in ((2,), (2, 2)), "domain.extent: expected [lo, hi] or [[lo, hi], [lo, hi]]")
    n = resolution if ext.shape == (2,) else resolution**2

    weights_doc = doc.get("weights", "uniform")
    if weights_doc == "uniform":
        weights = None
    else:
        _require(isinstance(weights_doc, list) and len(weights_doc) == n,
                 f"domain.weights: expected 'uniform' or a list of {n} reals")
        weights = np.asarray(weights_doc, dtype=float)

    noise_doc = doc.get("noise", {"mode": "zero"})
    _require(isinstance(noise_doc, dict), "domain.noise: expected an object")
    mode = noise_doc.get("mode", "zero")
    if mode == "zero":
        noise = 0.0
    elif mode == "constant":
        noise = _get(noise_doc, "value", float, "domain.noise")
        _require(noise >= 0, "domain.noise.value: must be nonnegative")
    elif mode == "custom":
        values = _get(noise_doc, "values", list, "domain.noise")
        _require(len(values) == n, f"domain.noise.values: expected {n} entries")
        noise = np.asarray(values, dtype=float)
    else:
        raise ConfigError("domain.noise.mode: expected zero|constant|custom")

    try:
        return regular_grid(ext, resolution, weights=weights, noise_sd=noise)
    except ParameterError as exc:
        raise ConfigError(f"domain: {exc}") from exc


def build_kernel(doc: dict) -> KernelSpec:
    _require(isinstance(doc, dict), "kernel: expected an object")
    family = _get(doc, "family", str, "kernel")
    variance = _get(doc, "variance", float, "kernel")
    lengthscale = doc.get("lengthscale")
    _require(lengthscale is not None, "kernel: missing required key 'lengthscale'")
    try:
        return KernelSpec(family=family, variance=variance, lengthscale=np.asarray(lengthscale, dtype=float))
    except ParameterError as exc:
        raise ConfigError(f"kernel: {exc}") from exc


def build_functional(doc: dict, noiseless: bool) -> FunctionalSpec:
    _require(isinstance(doc, dict), "functional: expected an object")
    kind = _get(doc, "kind", str, "functional")
    kwargs: dict[str, Any] = {}
    if "threshold" in doc:
        kwargs["threshold"] = _get(doc, "threshold", float, "functional")
    if "mc_samples" in doc:
        kwargs["mc_samples"] = _get(doc, "mc_samples", int, "functional")
    if "zero_sd_tol" in doc:
        kwargs["zero_sd_tol"] = _get(doc, "zero_sd_tol", float, "functional")
    try:
        spec = FunctionalSpec(kind=kind, **kwargs)
    except ParameterError as exc:
        raise ConfigError(f"functional: {exc}") from exc
    if spec.kind == "ei":
        _require(noiseless, "functional: ei requires the zero-noise observation mode")
    return spec


def build_strategy(doc: dict, spec: FunctionalSpec, grid_size: int) -> StrategyConfig:
    _require(isinstance(doc, dict), "strategy: expected an object")
    n_steps = _get(doc, "n_steps", int, "strategy")
    kwargs: dict[str, Any] = {}
    if "n_init" in doc:
        kwargs["n_init"] = _get(doc, "n_init", int, "strategy")
    if "selection" in doc:
        kwargs["selection"] = _get(doc, "selection", str, "strategy")
    if "quadrature_nodes" in doc:
        kwargs["quadrature_nodes"] = _get(doc, "quadrature_nodes", int, "strategy")
    eps_doc = doc.get("epsilon", {"kind": "constant", "value": 0.0})
    _require(isinstance(eps_doc, dict), "strategy.epsilon: expected an object")
    try:
        epsilon = EpsilonSchedule(
            kind=eps_doc.get("kind", "constant"),
            value=float(eps_doc.get("value", 0.0)),
        )
    except ParameterError as exc:
        raise ConfigError(f"strategy.epsilon: {exc}") from exc
    candidates = doc.get("candidates", "all")
    if candidates != "all":
        _require(isinstance(candidates, list), "strategy.candidates: expected 'all' or a list")
        _require(all(isinstance(c, int) and 0 <= c < grid_size for c in candidates),
                 "strategy.candidates: indices out of range")
        candidates = tuple(candidates)
    try:
        return StrategyConfig(
            spec=spec, n_steps=n_steps, epsilon=epsilon, candidates=candidates, **kwargs
        )
    except ParameterError as exc:
        raise ConfigError(f"strategy: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment: domain, kernel, functional(s), strategy."""

    document: dict
    domain: Domain
    kernel: KernelSpec
    functionals: list[FunctionalSpec]
    strategy: StrategyConfig
    replications: int
    output_dir: str | None

    @property
    def config_hash(self) -> str:
        return config_hash(self.document)

    def replication_seed(self, replication: int) -> int:
        return replication_seed(self.document, replication)

    def strategy_for(self, spec: FunctionalSpec, seed: int) -> StrategyConfig:
        base = self.strategy
        return StrategyConfig(
            spec=spec,
            n_steps=base.n_steps,
            n_init=base.n_init,
            epsilon=base.epsilon,
            seed=seed,
            candidates=base.candidates,
            selection=base.selection,
            quadrature_nodes=base.quadrature_nodes,
        )


def canonical_document(doc: dict) -> dict:
    """The config content that determines the computation: everything
    except where outputs are written."""
    return {k: v for k, v in doc.items() if k != "output_dir"}


def canonical_json(doc: dict) -> str:
    return json.dumps(canonical_document(doc), sort_keys=True, separators=(",", ":"))


def config_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def replication_seed(doc: dict, replication: int) -> int:
    digest = hashlib.sha256(
        f"{config_hash(doc)}:rep:{replication}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def load_config(
    doc: dict,
    *,
    multi: bool = False,
    override_replications: int | None = None,
    override_seed: int | None = None,
) -> ExperimentConfig:
    """Validate a parsed config document; every invariant is checked
    before any computation starts."""
    _require(isinstance(doc, dict), "config: expected a JSON object")
    doc = dict(doc)
    if override_replications is not None:
        doc["replications"] = override_replications
    if override_seed is not None:
        doc["seed"] = override_seed

    domain = build_domain(_get(doc, "domain", dict, "config"))
    kernel = build_kernel(_get(doc, "kernel", dict, "config"))
    _require(
        kernel.lengthscale.size in (1, domain.dim),
        "kernel.lengthscale: must be scalar or one entry per axis",
    )

    noiseless = domain.noiseless()
    if multi:
        specs_doc = _get(doc, "functionals", list, "config")
        _require(len(specs_doc) >= 1, "config.functionals: must be nonempty")
        functionals = [build_functional(d, noiseless) for d in specs_doc]
    else:
        functionals = [build_functional(_get(doc, "functional", dict, "config"), noiseless)]

    strategy = build_strategy(_get(doc, "strategy", dict, "config"), functionals[0], domain.size)

    replications = doc.get("replications", 1)
    _require(isinstance(replications, int) and replications >= 1,
             "config.replications: must be a positive integer")
    seed = doc.get("seed", 0)
    _require(isinstance(seed, int) and seed >= 0, "config.seed: must be a nonnegative integer")

    output_dir = doc.get("output_dir")
    if output_dir is not None:
        _require(isinstance(output_dir, str), "config.output_dir: expected a string")

    return ExperimentConfig(
        document=doc,
        domain=domain,
        kernel=kernel,
        functionals=functionals,
        strategy=strategy,
        replications=replications,
        output_dir=output_dir,
    )
