"""Experiment configuration (JSON files; unknown keys are errors)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .quantum import LossKind

LearnerKind = Literal["erfi", "expsq", "mmwu_minimax", "mmwu_oracle", "mmwu_fixed"]


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StateSpec(Strict):
    kind: Literal[
        "maximally_mixed", "pure", "depolarized", "noisy_circuit", "haar_subsystem", "product", "gibbs", "file"
    ] = "maximally_mixed"
    gamma: float | None = Field(None, ge=0.0, le=1.0)
    depth: int | None = Field(None, ge=1)
    d_prime: int | None = Field(None, ge=1)
    ensemble: str | None = None  # product: Bloch ensemble; gibbs: "gue" or "rsps"
    radius: float | None = Field(None, ge=0.0, le=1.0)
    beta: float | None = Field(None, ge=0.0)
    J: int | None = Field(None, ge=1)
    path: str | None = None
    seed: int | None = None  # defaults to a sub-seed of the run seed

    @model_validator(mode="after")
    def _required(self):
        need = {
            "depolarized": ["gamma"],
            "noisy_circuit": ["gamma", "depth"],
            "haar_subsystem": ["d_prime"],
            "product": ["ensemble"],
            "gibbs": ["ensemble", "beta"],
            "file": ["path"],
        }.get(self.kind, [])
        missing = [f for f in need if getattr(self, f) is None]
        if missing:
            raise ValueError(f"state kind {self.kind!r} needs {missing}")
        return self


class AdversaryConfig(Strict):
    kind: Literal["uniform_diag", "greedy_sign", "random_pauli", "random_hermitian", "zero"]
    tie_break: Literal["zero", "random"] = "zero"


class QuantumConfig(Strict):
    observables: Literal["random_pauli", "greedy_sign"] = "random_pauli"
    loss: LossKind = LossKind.L1
    tie_break: Literal["zero", "random"] = "zero"


class ComparatorConfig(Strict):
    policy: Literal["truth", "topk", "file"] = "truth"
    r: float | None = Field(None, ge=0.0)
    path: str | None = None

    @model_validator(mode="after")
    def _required(self):
        if self.policy == "topk" and self.r is None:
            raise ValueError("topk comparator needs r")
        if self.policy == "file" and self.path is None:
            raise ValueError("file comparator needs path")
        return self


class ExperimentConfig(Strict):
    name: str = ""
    seed: int = Field(0, ge=0, lt=2**64)
    d: int | None = Field(None, ge=1, le=512)
    n_qubits: int | None = Field(None, ge=1, le=10)
    T: int = Field(..., ge=1)
    l: float = Field(1.0, gt=0.0)
    learner: LearnerKind = "erfi"
    eta: float | None = Field(None, gt=0.0)
    adversary: AdversaryConfig | None = None
    quantum: QuantumConfig | None = None
    state: StateSpec = StateSpec()
    comparator: ComparatorConfig = ComparatorConfig()
    monitor: bool = False
    random_comparators: int = Field(0, ge=0)
    mistake_threshold: float | None = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _consistent(self):
        if (self.d is None) == (self.n_qubits is None):
            raise ValueError("give exactly one of d and n_qubits")
        if (self.adversary is None) == (self.quantum is None):
            raise ValueError("give exactly one of adversary and quantum")
        if self.learner == "mmwu_fixed" and self.eta is None:
            raise ValueError("mmwu_fixed needs eta")
        if self.comparator.policy == "topk" and (self.adversary is None or self.adversary.kind not in ("uniform_diag", "zero")):
            raise ValueError("topk comparator is supported for diagonal adversaries (uniform_diag, zero)")
        return self

    @property
    def dim(self) -> int:
        return self.d if self.d is not None else 2**self.n_qubits


class ConfigError(ValueError):
    pass


def format_validation_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def load_config(path: str | Path, model=ExperimentConfig, **overrides):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw, model, **overrides)


def parse_config(raw: dict, model=ExperimentConfig, **overrides):
    raw = dict(raw)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from exc


def dump_config(cfg: BaseModel) -> str:
    return cfg.model_dump_json(indent=2, exclude_none=True)
