# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Run configuration for finr.

Each command reads one TOML file validated against a pydantic schema. All
models forbid unknown keys, so typos are reported instead of ignored.
Command-line flags override the file; FINR_THREADS is the fallback for the
thread cap when neither the flag nor ``[run].threads`` sets it.

Classes:
    RunConfig: seed, step budget, optimizer and precision settings
    NetworkConfig: per-axis sub-network backend
    ModelConfig: decomposition mode, rank, network and the baseline switch
    ImageConfig, SdfConfig, PinnConfig, BenchConfig, EvalConfig: task sections
    FitImageFile, FitSdfFile, FitPinnFile, BenchFile, EvalFile: whole files
    ConfigLoader: file loading, overrides and snapshots
"""

import os
from pathlib import Path
from typing import Literal, Optional, Type, TypeVar, Union

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from finr.backends.subnetwork import ActivationSpec, EncodingSpec, SubNetworkSpec
from finr.errors import ConfigError
from finr.model import FInrSpec, MonolithicSpec, monolithic_equivalent

THREADS_ENV = "FINR_THREADS"


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunConfig(Section):
    """Training loop settings."""

    seed: int = Field(default=0, description="Seed for initialization, batching and evaluation")
    steps: int = Field(default=50000, ge=0, description="Optimizer steps (0 reports the initial model only)")
    learning_rate: float = Field(default=1e-4, ge=0.0, description="Adam learning rate")
    log_interval: int = Field(default=100, ge=1, description="Steps between metric rows")
    checkpoint_interval: int = Field(default=0, ge=0, description="Steps between checkpoints (0 = final only)")
    f64: bool = Field(default=False, description="Train in 64-bit precision")
    threads: Optional[int] = Field(default=None, ge=1, description="BLAS thread cap")


class NetworkConfig(Section):
    """Backend shared by every axis network."""

    encoding: Literal["none", "fourier", "featuregrid"] = "none"
    levels: int = Field(default=8, ge=1)
    features: int = Field(default=2, ge=1)
    base_resolution: int = Field(default=16, ge=1)
    growth: float = Field(default=1.5, ge=1.0)
    layers: int = Field(default=4, ge=1, description="Activated hidden layers")
    width: int = Field(default=256, ge=1, description="Features per hidden layer")
    activation: Literal["relu", "tanh", "sine", "gabor", "finer", "gauss"] = "sine"
    omega0: float = Field(default=30.0, gt=0.0)
    scale: float = Field(default=10.0, gt=0.0)
    bias_k: float = Field(default=1.0, gt=0.0)

    def to_spec(self) -> SubNetworkSpec:
        return SubNetworkSpec(
            encoding=EncodingSpec(
                kind=self.encoding,
                levels=self.levels,
                features=self.features,
                base_resolution=self.base_resolution,
                growth=self.growth,
            ),
            layers=self.layers,
            width=self.width,
            activation=ActivationSpec(
                kind=self.activation, omega0=self.omega0, scale=self.scale, bias_k=self.bias_k
            ),
        )


class ModelConfig(Section):
    """Decomposition settings; unset fields take the task's defaults."""

    mode: Optional[Literal["CP", "TT", "TU"]] = None
    rank: Optional[int] = Field(default=None, ge=1)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    baseline: bool = Field(
        default=False, description="Train the coordinate-MLP baseline with the same neuron budget instead"
    )

    def build(self, domains, channels: int, mode: str, rank: int) -> Union[FInrSpec, MonolithicSpec]:
        try:
            spec = FInrSpec.uniform(
                self.mode or mode, self.rank or rank, self.network.to_spec(), domains, channels
            )
            return monolithic_equivalent(spec) if self.baseline else spec
        except ValidationError as e:
            raise ConfigError(f"invalid model: {e}") from e


class ImageConfig(Section):
    path: Optional[str] = Field(default=None, description="PNG target; synthetic when unset")
    height: int = Field(default=64, ge=2)
    width: int = Field(default=64, ge=2)
    channels: Literal[1, 3] = 3
    components: int = Field(default=8, ge=1, le=8, description="Plane waves in the synthetic target")
    target_seed: int = 0
    batch_size: int = Field(default=2**18, ge=1)


class SdfConfig(Section):
    shape: Literal["sphere", "torus", "union"] = "sphere"
    resolution: int = Field(default=48, ge=2)
    tau: float = Field(default=0.1, gt=0.0)
    eikonal_weight: float = Field(default=0.1, ge=0.0)
    data_weight: float = Field(default=1.0, ge=0.0)
    surface_weight: float = Field(default=3.0, ge=0.0)
    batch_size: int = Field(default=2**18, ge=1)
    metric_shape: Optional[Literal["sphere", "torus", "union"]] = None
    oracle: bool = Field(default=False, description="Evaluate the analytic SDF instead of training")


class PinnConfig(Section):
    nu: float = Field(default=0.01, gt=0.0)
    observations: list[int] = Field(default=[6, 32, 32])
    collocation: int = Field(default=20000, ge=1)
    collocation_batch: int = Field(default=1024, ge=1)
    collocation_layout: Literal["points", "grid"] = "points"
    collocation_grid: list[int] = Field(default=[8, 16, 16])
    data_weight: float = Field(default=1.0, ge=0.0)
    pde_weight: float = Field(default=1.0, ge=0.0)
    eval_grid: list[int] = Field(default=[51, 64, 64])

    @field_validator("observations", "collocation_grid", "eval_grid")
    @classmethod
    def three_axes(cls, v: list[int]) -> list[int]:
        if len(v) != 3 or any(n < 2 for n in v):
            raise ValueError("expected three axis sizes (t, x, y), each at least 2")
        return v


class BenchConfig(Section):
    sizes: list[int] = Field(default=[64, 128, 256, 512])
    ranks: list[int] = Field(default=[16])
    modes: list[Literal["CP", "TT", "TU"]] = Field(default=["CP"])
    width: int = Field(default=256, ge=1)
    layers: int = Field(default=4, ge=1)
    reps: int = Field(default=5, ge=1)
    backward: bool = Field(default=True, description="Also time forward+backward")
    monolithic_backward_points: int = Field(
        default=2**16, ge=1, description="Largest grid timed for the baseline backward pass"
    )
    dims: int = Field(default=2, ge=2, le=5, description="Input dimension d of the timed grids")
    assert_slopes: bool = True

    @field_validator("sizes")
    @classmethod
    def two_sizes(cls, v: list[int]) -> list[int]:
        if len(set(v)) < 2 or min(v) < 2:
            raise ValueError("slopes need at least two distinct grid sizes, each at least 2")
        return sorted(set(v))


class EvalConfig(Section):
    checkpoint: str
    resolution: Optional[list[int]] = Field(default=None, description="Points per axis")
    bounds: Optional[list[list[float]]] = Field(default=None, description="Per-axis [lo, hi] query ranges")


class FitImageFile(Section):
    run: RunConfig = Field(default_factory=RunConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    image: ImageConfig = Field(default_factory=ImageConfig)


class FitSdfFile(Section):
    run: RunConfig = Field(default_factory=RunConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    sdf: SdfConfig = Field(default_factory=SdfConfig)


class FitPinnFile(Section):
    run: RunConfig = Field(default_factory=RunConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    pinn: PinnConfig = Field(default_factory=PinnConfig)


class BenchFile(Section):
    run: RunConfig = Field(default_factory=RunConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)


class EvalFile(Section):
    run: RunConfig = Field(default_factory=RunConfig)
    eval: EvalConfig


Schema = TypeVar("Schema", bound=BaseModel)


class ConfigLoader:
    """Loads a run configuration file against a command schema."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def read(self) -> dict:
        try:
            with open(self.path, "r", encoding="utf-8") as f:
                return toml.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {self.path}") from e
        except (OSError, toml.TomlDecodeError) as e:
            raise ConfigError(f"cannot parse {self.path}: {e}") from e

    def load(
        self,
        schema: Type[Schema],
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        f64: bool = False,
    ) -> Schema:
        """Validate the file, then apply flag and environment overrides."""
        try:
            config = schema.model_validate(self.read())
        except ValidationError as e:
            raise ConfigError(f"invalid config {self.path}:\n{e}") from e
        run = getattr(config, "run", None)
        if run is not None:
            self._apply_overrides(run, seed, threads, f64)
        return config

    def _apply_overrides(self, run: RunConfig, seed, threads, f64) -> None:
        if seed is not None:
            run.seed = seed
        if threads is not None:
            run.threads = threads
        if f64:
            run.f64 = True
        if run.threads is None and (env_threads := os.environ.get(THREADS_ENV)):
            try:
                run.threads = int(env_threads)
            except ValueError as e:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {env_threads!r}") from e
            if run.threads < 1:
                raise ConfigError(f"{THREADS_ENV} must be positive")

    @staticmethod
    def snapshot(config: BaseModel) -> dict:
        """Plain-data copy of a validated config for manifests."""
        return config.model_dump(mode="json", exclude_none=True)
