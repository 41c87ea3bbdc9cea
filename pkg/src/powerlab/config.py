"""Experiment configuration: strict JSON with validated fields."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from powerlab.models import ModelParams

Method = Literal["powered", "nonbacktracking", "cycle_count"]


def default_threads() -> int:
    env = os.environ.get("POWERLAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"POWERLAB_THREADS must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"POWERLAB_THREADS must be a positive integer, got {env!r}")
        return value
    return os.cpu_count() or 1


class ExperimentConfig(BaseModel):
    """Null-versus-structured distinguishing experiment.

    Each trial flips a fair coin between ``null_model`` and ``alt_model``,
    draws a graph, optionally plants an adversarial ``c``-clique and runs
    every requested test on the largest component.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    null_model: Literal["ER", "RR"] = "ER"
    alt_model: Literal["SBM", "RSBM"] = "SBM"
    n: int = Field(gt=1)
    a: float = Field(ge=0)
    b: float = Field(ge=0)
    d: float | None = Field(default=None, ge=0)
    r: int = Field(default=3, ge=1)
    c: int = Field(default=0, ge=0)
    adversary: Literal["targeted", "uniform"] = "targeted"
    trials: int = Field(default=40, ge=1)
    calibration_trials: int = Field(default=50, ge=10)
    quantile: float = Field(default=0.95, gt=0, lt=1)
    calibrate_adversary: bool = True
    methods: tuple[Method, ...] = ("powered", "nonbacktracking", "cycle_count")
    cycle_m: int = Field(default=5, ge=3)
    nb_factor: float = Field(default=1.2, gt=0)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default_factory=default_threads, ge=1)
    output: str | None = None
    json_output: str | None = None
    record_timing: bool = False

    @field_validator("methods")
    @classmethod
    def _methods_nonempty(cls, v):
        if not v:
            raise ValueError("methods must name at least one test")
        if len(set(v)) != len(v):
            raise ValueError("methods must not repeat")
        return v

    @model_validator(mode="after")
    def _check_models(self):
        if self.b > self.a:
            raise ValueError("b must not exceed a")
        if self.c >= self.n:
            raise ValueError("c must be smaller than n")
        self.null_params().validate()
        self.alt_params().validate()
        return self

    @property
    def null_degree(self) -> float:
        if self.d is not None:
            return self.d
        return self.alt_params().mean_degree()

    def alt_params(self) -> ModelParams:
        return ModelParams(self.alt_model, self.n, a=self.a, b=self.b)

    def null_params(self) -> ModelParams:
        return ModelParams(self.null_model, self.n, d=self.null_degree)

    def echo(self) -> dict:
        """Replayable dictionary; the thread count is left out since results do not depend on it."""
        data = self.model_dump(mode="json")
        data.pop("threads")
        return data


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config; unknown keys are rejected."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: top level must be an object")
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "config"
            msgs.append(f"{loc}: {err['msg']}")
        raise ValueError("invalid config: " + "; ".join(msgs)) from None
