"""
Run configuration: a YAML document validated by pydantic.

Every section is frozen and rejects unknown keys. `RunConfig.model_dump(mode="json")`
is the config echo written next to every result; validating it again
reproduces the run.
"""

import logging
import math
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from buffer_manager import OverflowPolicy
from config import (
    DEFAULT_BUFFER_CAPACITY,
    DEFAULT_FIBER_ATTENUATION_DB_PER_KM,
    DEFAULT_HISTOGRAM_BIN_WIDTH,
    DEFAULT_INTERMEDIATE_LOSS_DB,
    DEFAULT_LATENCY_MEDIAN_S,
    DEFAULT_LATENCY_SIGMA,
    DEFAULT_MEMORY_LOSS_DB,
    DEFAULT_PRUNE_HORIZON_FACTOR,
    DEFAULT_SIGNAL_SPEED_KM_PER_S,
    DEFAULT_SOURCE_LOSS_DB,
    FULL_SCALE_SOURCE_RATE_HZ,
    QKD_FIDELITY_THRESHOLD,
)
from errors import ConfigurationError
from memory.decoherence import timeout_from_threshold
from memory.technologies import DephasingConvention, MemoryTechnology, custom_technology, get_technology
from network.latency import DirectionPolicy, LatencyModel, load_latency_samples
from network.topology import FiberLink, NodeKind, NodePair, NodeSpec, Topology
from simulation.metrics import histogram_bin_count

logger = logging.getLogger(__name__)

PRESET_PACKAGE = "simulation.presets"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NodeLossDefaults(_Section):
    """Insertion loss applied to nodes that do not set their own."""
    source: float = Field(DEFAULT_SOURCE_LOSS_DB, ge=0)
    intermediate: float = Field(DEFAULT_INTERMEDIATE_LOSS_DB, ge=0)
    entangling: float = Field(DEFAULT_MEMORY_LOSS_DB, ge=0)

    def for_kind(self, kind: NodeKind) -> float:
        return getattr(self, kind.value)


class NodeConfig(_Section):
    id: str
    kind: NodeKind
    insertion_loss_db: Optional[float] = Field(None, ge=0)


class LinkConfig(_Section):
    a: str
    b: str
    length_km: float = Field(ge=0)
    attenuation_db_per_km: float = Field(DEFAULT_FIBER_ATTENUATION_DB_PER_KM, ge=0)


class PairConfig(_Section):
    label: str
    node_a: str
    node_b: str
    route_a: Optional[Tuple[str, ...]] = None
    route_b: Optional[Tuple[str, ...]] = None


def _two_arm_nodes() -> List[NodeConfig]:
    return [
        NodeConfig(id="S", kind=NodeKind.SOURCE),
        NodeConfig(id="A", kind=NodeKind.ENTANGLING),
        NodeConfig(id="B", kind=NodeKind.ENTANGLING),
    ]


def _two_arm_links() -> List[LinkConfig]:
    return [LinkConfig(a="S", b="A", length_km=10.0), LinkConfig(a="S", b="B", length_km=10.0)]


class TopologyConfig(_Section):
    """Network layout; defaults to a symmetric two-arm link of 10 km per arm."""
    signal_speed_km_per_s: float = Field(DEFAULT_SIGNAL_SPEED_KM_PER_S, gt=0)
    default_losses_db: NodeLossDefaults = NodeLossDefaults()
    nodes: Tuple[NodeConfig, ...] = Field(default_factory=lambda: tuple(_two_arm_nodes()))
    links: Tuple[LinkConfig, ...] = Field(default_factory=lambda: tuple(_two_arm_links()))
    pairs: Tuple[PairConfig, ...] = (PairConfig(label="A-B", node_a="A", node_b="B"),)
    pair_under_test: str = "A-B"

    @model_validator(mode="after")
    def _pair_exists(self) -> "TopologyConfig":
        if self.pair_under_test not in {pair.label for pair in self.pairs}:
            raise ValueError(f"pair_under_test '{self.pair_under_test}' is not one of the configured pairs")
        return self

    def build(self) -> Topology:
        nodes = tuple(
            NodeSpec(
                id=node.id,
                kind=node.kind,
                insertion_loss_db=(
                    node.insertion_loss_db
                    if node.insertion_loss_db is not None
                    else self.default_losses_db.for_kind(node.kind)
                ),
            )
            for node in self.nodes
        )
        links = tuple(
            FiberLink(endpoints=(link.a, link.b), length_km=link.length_km, attenuation_db_per_km=link.attenuation_db_per_km)
            for link in self.links
        )
        pairs = tuple(
            NodePair(label=p.label, node_a=p.node_a, node_b=p.node_b, route_a=p.route_a, route_b=p.route_b)
            for p in self.pairs
        )
        return Topology(nodes=nodes, links=links, pairs=pairs, signal_speed_km_per_s=self.signal_speed_km_per_s)


class CustomTechnology(_Section):
    name: str = "custom"
    t1_s: Optional[float] = Field(None, gt=0, description="None means infinite T1")
    t2_s: float = Field(gt=0)


class MemoryConfig(_Section):
    technology: Union[str, CustomTechnology] = "Ca40"
    convention: DephasingConvention = DephasingConvention.EQ1_CALIBRATED

    @field_validator("technology")
    @classmethod
    def _known_technology(cls, value):
        if isinstance(value, str):
            get_technology(value)
        return value

    def build(self) -> MemoryTechnology:
        if isinstance(self.technology, str):
            return get_technology(self.technology)
        return custom_technology(self.technology.name, self.technology.t1_s, self.technology.t2_s)


class ProtocolConfig(_Section):
    fidelity_threshold: float = Field(QKD_FIDELITY_THRESHOLD, gt=0.5, le=1.0)
    timeout_s: Optional[float] = Field(None, ge=0, description="Overrides the threshold-derived timeout")
    buffer_capacity: int = Field(DEFAULT_BUFFER_CAPACITY, ge=1)
    overflow_policy: OverflowPolicy = OverflowPolicy.DROP_NEWEST
    gap_guard_s: Optional[float] = Field(None, ge=0, description="Defaults to the arm skew")
    batch_gap_discards: bool = False
    prune_horizon_factor: float = Field(DEFAULT_PRUNE_HORIZON_FACTOR, gt=0)


class SourceConfig(_Section):
    rate_hz: float = Field(FULL_SCALE_SOURCE_RATE_HZ, gt=0)
    pair_count: Optional[int] = Field(None, ge=1)
    duration_s: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _one_run_length(self) -> "SourceConfig":
        if self.pair_count is None and self.duration_s is None:
            raise ValueError("source needs pair_count or duration_s")
        if self.pair_count is not None and self.duration_s is not None:
            raise ValueError("source takes pair_count or duration_s, not both")
        return self

    def resolved_pair_count(self) -> int:
        if self.pair_count is not None:
            return self.pair_count
        return max(1, math.ceil(self.duration_s * self.rate_hz - 1e-9))

    def resolved_duration_s(self) -> float:
        if self.duration_s is not None:
            return self.duration_s
        return self.pair_count / self.rate_hz


class LatencyConfig(_Section):
    kind: Literal["constant", "lognormal", "empirical"] = "lognormal"
    value_s: Optional[float] = Field(None, ge=0)
    median_s: Optional[float] = Field(None, gt=0)
    mu: Optional[float] = None
    sigma: float = Field(DEFAULT_LATENCY_SIGMA, gt=0)
    samples_file: Optional[str] = None
    samples_ms: Optional[Tuple[float, ...]] = None
    policy: DirectionPolicy = DirectionPolicy.MAX_SHARED

    @model_validator(mode="after")
    def _parameters_for_kind(self) -> "LatencyConfig":
        if self.kind == "constant" and self.value_s is None:
            raise ValueError("constant latency needs value_s")
        if self.kind == "lognormal" and self.median_s is not None and self.mu is not None:
            raise ValueError("lognormal latency takes median_s or mu, not both")
        if self.kind == "empirical" and (self.samples_file is None) == (self.samples_ms is None):
            raise ValueError("empirical latency needs exactly one of samples_file or samples_ms")
        return self

    def build(self) -> LatencyModel:
        if self.kind == "constant":
            return LatencyModel.constant(self.value_s)
        if self.kind == "lognormal":
            if self.mu is not None:
                return LatencyModel.lognormal(self.mu, self.sigma)
            return LatencyModel.lognormal_from_median(self.median_s or DEFAULT_LATENCY_MEDIAN_S, self.sigma)
        if self.samples_ms is not None:
            return LatencyModel.empirical([ms / 1000.0 for ms in self.samples_ms])
        return load_latency_samples(self.samples_file)


class SurvivalOverride(_Section):
    """Fixed per-arm survival probabilities replacing the loss budget."""
    a: float = Field(ge=0, le=1)
    b: float = Field(ge=0, le=1)


class SimulationConfig(_Section):
    fidelity_model: Literal["closed_form", "lindblad"] = "closed_form"
    drain: bool = True
    histogram_bin_width: float = Field(DEFAULT_HISTOGRAM_BIN_WIDTH, gt=0, le=1)
    survival_override: Optional[SurvivalOverride] = None
    skew_override_s: Optional[float] = Field(None, ge=0, description="Replaces the topology arm skew")

    @field_validator("survival_override", mode="before")
    @classmethod
    def _scalar_survival(cls, value):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return {"a": value, "b": value}
        return value

    @field_validator("histogram_bin_width")
    @classmethod
    def _whole_bins(cls, value):
        histogram_bin_count(value)
        return value


class FidelityCurveConfig(_Section):
    technologies: Optional[Tuple[str, ...]] = None
    t_max_s: float = Field(1.0, gt=0)
    points: int = Field(101, ge=2)

    def grid(self) -> List[float]:
        return [float(t) for t in np.linspace(0.0, self.t_max_s, self.points)]


class BufferSweepConfig(_Section):
    latencies_s: Tuple[float, ...] = (0.0, 0.005, 0.010, 0.020, 0.030)
    pairs: Optional[Tuple[str, ...]] = None

    @field_validator("latencies_s")
    @classmethod
    def _enough_points(cls, value):
        if len(value) < 2:
            raise ValueError("buffer sweep needs at least two latency values")
        if any(v < 0 for v in value):
            raise ValueError("latency values must be non-negative")
        return value


class RateSweepConfig(_Section):
    thresholds: Tuple[float, ...] = (0.6, 0.7, 0.81, 0.9, 0.95, 0.99)

    @field_validator("thresholds")
    @classmethod
    def _threshold_domain(cls, value):
        if not value:
            raise ValueError("rate sweep needs at least one threshold")
        if any(not 0.5 < f <= 1.0 for f in value):
            raise ValueError("every threshold must lie in (0.5, 1]")
        return value


class ExperimentsConfig(_Section):
    fidelity_curve: FidelityCurveConfig = FidelityCurveConfig()
    buffer_sweep: BufferSweepConfig = BufferSweepConfig()
    rate_sweep: RateSweepConfig = RateSweepConfig()


class RunConfig(_Section):
    """Complete, reproducible description of one run (and the sweeps built on it)."""
    seed: Optional[int] = Field(None, ge=0)
    topology: TopologyConfig = TopologyConfig()
    memory: MemoryConfig = MemoryConfig()
    protocol: ProtocolConfig = ProtocolConfig()
    source: SourceConfig = SourceConfig(pair_count=10_000)
    latency: LatencyConfig = LatencyConfig()
    simulation: SimulationConfig = SimulationConfig()
    experiments: ExperimentsConfig = ExperimentsConfig()

    def resolve_seed(self) -> "RunConfig":
        """Fix a fresh random seed when none was configured."""
        if self.seed is not None:
            return self
        seed = int(np.random.SeedSequence().entropy % (2**63))
        logger.info(f"No seed configured, using {seed}")
        return self.model_copy(update={"seed": seed})

    def technology(self) -> MemoryTechnology:
        return self.memory.build()

    def timeout_s(self) -> float:
        """Configured timeout, or the one implied by the fidelity threshold."""
        if self.protocol.timeout_s is not None:
            return self.protocol.timeout_s
        return timeout_from_threshold(self.protocol.fidelity_threshold, self.technology())

    def with_changes(self, changes: Dict[str, Any]) -> "RunConfig":
        """Copy with dotted-path overrides, e.g. {"latency.value_s": 0.01}; revalidated."""
        data = self.model_dump(mode="json")
        for path, value in changes.items():
            target = data
            *parents, leaf = path.split(".")
            for key in parents:
                if not isinstance(target.get(key), dict):
                    target[key] = {}
                target = target[key]
            target[leaf] = value
        return config_from_mapping(data)


def config_from_mapping(data: Optional[Dict[str, Any]], base_dir: Optional[Path] = None) -> RunConfig:
    """
    Validate a parsed config document.

    Raises:
        ConfigurationError: If the document does not match the schema
    """
    data = dict(data or {})
    latency = data.get("latency")
    if base_dir is not None and isinstance(latency, dict) and latency.get("samples_file"):
        samples = Path(latency["samples_file"])
        if not samples.is_absolute():
            data["latency"] = {**latency, "samples_file": str((base_dir / samples).resolve())}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration:\n{e}") from e


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Load and validate a YAML config file.

    Raises:
        OSError: If the file cannot be read
        ConfigurationError: If the YAML is malformed or fails validation
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{path}: malformed YAML: {e}") from e
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    logger.info(f"Loaded configuration from {path}")
    return config_from_mapping(data, base_dir=path.parent)


def preset_names() -> List[str]:
    return sorted(
        entry.name[: -len(".yaml")]
        for entry in resources.files(PRESET_PACKAGE).iterdir()
        if entry.name.endswith(".yaml")
    )


def load_preset(name: str) -> RunConfig:
    """Load a shipped preset by name ('paper-full', 'desk-scale')."""
    if name not in preset_names():
        raise ConfigurationError(f"Unknown preset '{name}'; available: {', '.join(preset_names())}")
    text = resources.files(PRESET_PACKAGE).joinpath(f"{name}.yaml").read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Preset '{name}' is malformed: {e}") from e
    return config_from_mapping(data)
