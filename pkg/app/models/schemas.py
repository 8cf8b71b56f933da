"""
Pydantic Schemas

Configuration models and the documents written to / read from disk.
"""

import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, TypeVar

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    StrictBool,
    StrictInt,
    StrictStr,
    ValidationError,
    field_validator,
    model_validator,
)

from app.errors import ConfigError, SchemaError


def _strict_number(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("expected a number")
    if not math.isfinite(value):
        raise ValueError("expected a finite number")
    return float(value)


Number = Annotated[float, BeforeValidator(_strict_number)]
IntPair = Annotated[list[StrictInt], Field(min_length=2, max_length=2)]


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ============= Layout documents =============

class GridDoc(_Config):
    nx: StrictInt = Field(..., ge=1)
    ny: StrictInt = Field(..., ge=1)
    gcell_w: Number = Field(..., gt=0)
    gcell_h: Number = Field(..., gt=0)


class LayersDoc(_Config):
    metal: StrictInt = Field(..., ge=1)
    via: StrictInt = Field(..., ge=1)


class RectDoc(_Config):
    x: Number
    y: Number
    w: Number
    h: Number


class CellDoc(RectDoc):
    id: StrictStr


class PinDoc(_Config):
    id: StrictStr
    cell: Optional[StrictStr] = None
    net: StrictStr
    x: Number
    y: Number
    clock: StrictBool = False


class NetDoc(_Config):
    id: StrictStr
    pins: list[StrictStr]
    ndr: StrictBool = False


class CongestionDoc(_Config):
    metal: list[list[IntPair]]
    via: list[list[IntPair]]


class LayoutDocument(_Config):
    """Top-level layout interchange document."""
    grid: GridDoc
    layers: LayersDoc
    cells: list[CellDoc] = Field(default_factory=list)
    pins: list[PinDoc] = Field(default_factory=list)
    nets: list[NetDoc] = Field(default_factory=list)
    blockages: list[RectDoc] = Field(default_factory=list)
    congestion: CongestionDoc


# ============= Generation =============

class LayerSpec(_Config):
    metal: int = Field(5, ge=1, description="Number of metal layers (M)")
    via: int = Field(4, ge=1, description="Number of via layers (V)")


class SynthConfig(_Config):
    """Synthetic design parameters."""
    nx: int = Field(32, ge=1)
    ny: int = Field(32, ge=1)
    gcell_width: float = Field(10.0, gt=0)
    gcell_height: float = Field(10.0, gt=0)
    layer_config: LayerSpec = Field(default_factory=LayerSpec)
    cells_per_gcell_mean: float = Field(6.0, gt=0)
    pins_per_cell_mean: float = Field(3.0, gt=0)
    clock_pin_fraction: float = Field(0.02, ge=0, le=1)
    ndr_net_fraction: float = Field(0.05, ge=0, le=1)
    blockage_fraction: float = Field(0.05, ge=0, le=1)
    congestion_base_capacity: int = Field(10, ge=1)
    target_hotspot_rate: float = Field(0.03, gt=0, lt=1)
    label_noise: float = Field(0.0, ge=0, lt=1)
    seed: int = 0


# ============= Dataset =============

class SplitSpec(_Config):
    """Per-design random split ratios plus holdout designs."""
    train_frac: float = Field(0.2, ge=0, le=1)
    valid_frac: float = Field(0.2, ge=0, le=1)
    test_frac: float = Field(0.6, ge=0, le=1)
    holdout_designs: list[str] = Field(default_factory=list)
    seed: int = 0

    @model_validator(mode="after")
    def _fractions_sum_to_one(self) -> "SplitSpec":
        total = self.train_frac + self.valid_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total!r}, expected 1")
        return self


SampleKey = tuple[str, int, int]


class SampleFileRef(_Config):
    path: str
    sha256: str


class SplitManifest(_Config):
    """Exact partition of sample keys, reusable across runs."""
    samples: list[SampleFileRef] = Field(default_factory=list)
    train: list[SampleKey]
    valid: list[SampleKey]
    tests: dict[str, list[SampleKey]]


# ============= Models =============

class SelectionConfig(_Config):
    mode: Literal["all", "largest_variance", "srs"] = "all"
    subset_size: Optional[int] = Field(None, ge=1, description="n; None means every feature")
    num_voters: int = Field(1, ge=1)
    seed: int = 0


class LossConfig(_Config):
    w0: float = Field(1.0, gt=0, description="Negative-class weight")
    w1: float = Field(10.0, gt=0, description="Positive-class weight")


class TrainConfig(_Config):
    """Ensemble training hyperparameters."""
    learning_rate: float = Field(0.001, gt=0)
    epochs: int = Field(50, ge=1)
    batch_size: int = Field(32, ge=1)
    num_voters: int = Field(1, ge=1)
    hidden_units: int = Field(20, ge=1)
    selection: SelectionConfig = Field(default_factory=SelectionConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    use_pca: Optional[bool] = Field(None, description="None: off for mode 'all', on otherwise")
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    seed: int = 0

    @model_validator(mode="before")
    @classmethod
    def _sync_selection(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        selection = data.get("selection", {})
        if isinstance(selection, SelectionConfig):
            selection = selection.model_dump()
        if not isinstance(selection, dict):
            return data
        num_voters = data.get("num_voters", cls.model_fields["num_voters"].default)
        return {**data, "selection": {**selection, "num_voters": num_voters}}

    @property
    def pca_enabled(self) -> bool:
        if self.use_pca is None:
            return self.selection.mode != "all"
        return self.use_pca


class RfConfig(_Config):
    """Random forest comparison model."""
    num_trees: int = Field(100, ge=1)
    max_features_per_tree: int = Field(20, ge=1)
    max_depth: Optional[int] = Field(None, ge=1)
    min_samples_leaf: int = Field(1, ge=1)
    w0: float = Field(1.0, gt=0)
    w1: float = Field(10.0, gt=0)
    bootstrap: bool = True
    feature_sampling: Literal["per_tree", "per_split"] = "per_tree"
    seed: int = 0


class GridSpec(_Config):
    """Hyperparameter grid evaluated on the validation set."""
    learning_rate: list[float] = Field(default_factory=lambda: [0.001], min_length=1)
    epochs: list[int] = Field(default_factory=lambda: [50], min_length=1)
    num_voters: list[int] = Field(default_factory=lambda: [100], min_length=1)
    subset_size: list[int] = Field(default_factory=lambda: [20], min_length=1)
    mode: Literal["all", "largest_variance", "srs"] = "srs"
    metric: Literal["a_roc", "acc_e", "a_prc"] = "a_roc"
    base: TrainConfig = Field(default_factory=TrainConfig)


class MatrixConfig(_Config):
    """Settings 1-4 plus the random forest, sharing one base config."""
    train: TrainConfig = Field(default_factory=TrainConfig)
    rf: RfConfig = Field(default_factory=RfConfig)
    num_voters: int = Field(100, ge=1)
    subset_size: int = Field(20, ge=1)
    settings: list[Literal["setting1", "setting2", "setting3", "setting4", "rf"]] = Field(
        default_factory=lambda: ["setting1", "setting2", "setting3", "setting4", "rf"]
    )


class ExperimentMatrix(_Config):
    """Named training configurations of the model-settings table."""
    settings: dict[str, TrainConfig]
    rf: RfConfig

    @classmethod
    def from_config(cls, cfg: MatrixConfig) -> "ExperimentMatrix":
        base = cfg.train

        def variant(num_voters: int, mode: str, subset_size: Optional[int]) -> TrainConfig:
            selection = base.selection.model_copy(
                update={"mode": mode, "subset_size": subset_size, "num_voters": num_voters}
            )
            return base.model_copy(update={"num_voters": num_voters, "selection": selection, "use_pca": None})

        return cls(
            settings={
                "setting1": variant(1, "all", None),
                "setting2": variant(cfg.num_voters, "all", None),
                "setting3": variant(cfg.num_voters, "largest_variance", cfg.subset_size),
                "setting4": variant(cfg.num_voters, "srs", cfg.subset_size),
            },
            rf=cfg.rf,
        )


# ============= Model files =============

class NormDoc(_Config):
    mean: list[float]
    std: list[float]


class PcaDoc(_Config):
    components: list[list[float]]
    variances: list[float]


class VoterDoc(_Config):
    W1: list[list[float]]
    b1: list[float]
    w2: list[float]
    b2: float


class EnsembleDocument(_Config):
    kind: Literal["nn_ensemble"]
    version: int
    norm: NormDoc
    pca: PcaDoc
    masks: list[list[int]]
    voters: list[VoterDoc]
    meta: dict[str, Any] = Field(default_factory=dict)


class TreeDoc(_Config):
    feature: list[int]
    threshold: list[float]
    left: list[int]
    right: list[int]
    value: list[float]
    features: list[int]


class ForestDocument(_Config):
    kind: Literal["random_forest"]
    version: int
    num_features: int
    trees: list[TreeDoc]
    meta: dict[str, Any] = Field(default_factory=dict)


# ============= Reports =============

class EvalReportDocument(_Config):
    acc_e: Optional[float]
    a_roc: Optional[float]
    a_prc: Optional[float]
    n_pos: int
    n_neg: int
    undefined: bool


class RunManifest(_Config):
    """Record of one command invocation, written next to its primary output."""
    command: str
    arguments: dict[str, Any]
    inputs: dict[str, str]
    outputs: dict[str, str]
    extra: dict[str, Any] = Field(default_factory=dict)


class GridResultRow(_Config):
    rank: int
    learning_rate: float
    epochs: int
    num_voters: int
    subset_size: int
    acc_e: Optional[float]
    a_roc: Optional[float]
    a_prc: Optional[float]


# ============= Loading helpers =============

ModelT = TypeVar("ModelT", bound=BaseModel)


def describe_validation_error(error: ValidationError) -> tuple[str, str]:
    """First error of a pydantic ValidationError as (dotted path, message)."""
    first = error.errors()[0]
    path = ".".join(str(part) for part in first["loc"]) or "<root>"
    return path, first["msg"]


def load_config(model: type[ModelT], path: Optional[str | Path] = None, **overrides: Any) -> ModelT:
    """
    Load a JSON config file into `model`, applying non-None overrides.

    Args:
        model: Pydantic config class
        path: JSON file (None means all defaults)
        overrides: Top-level fields to replace (None values are ignored)

    Returns:
        Validated config instance
    """
    data: dict[str, Any] = {}
    if path is not None:
        from app.core.storage import read_bytes

        try:
            data = json.loads(read_bytes(path))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON at byte {e.pos}: {e.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model.model_validate(data)
    except ValidationError as e:
        field, message = describe_validation_error(e)
        raise ConfigError(f"{model.__name__}.{field}: {message}") from None


def validate_document(model: type[ModelT], data: Any) -> ModelT:
    """Validate an already-decoded document, raising SchemaError with the field path."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        field, message = describe_validation_error(e)
        raise SchemaError(field, message) from None
