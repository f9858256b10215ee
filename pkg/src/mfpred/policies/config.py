"""Model and training configuration, mirrored by the JSON config file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from ..data.synth import SynthConfig


@dataclass(frozen=True)
class CspConfig:
    """Architecture and windowing for the social-pooling predictor.

    The mixture always has six modes (three lateral by two longitudinal
    maneuver classes). History and horizon lengths are fixed at 3 s and 5 s
    of the configured sample rate.
    """

    grid_rows: int = 13
    grid_cols: int = 3
    cell_length: float = 4.57
    cell_width: float = 3.66
    embed_size: int = 32
    encoder_hidden: int = 64
    conv_filters: int = 64
    social_context: int = 80
    dynamics_size: int = 32
    decoder_hidden: int = 128
    num_modes: int = 6
    sample_rate: float = 10.0
    history_s: float = 3.0
    horizon_s: float = 5.0
    pool_window: tuple[int, int] = (2, 1)
    leaky_alpha: float = 0.1
    input_scale: float = 0.1
    sigma_scale: float = 3.0
    delta_scale: float = 0.3

    def __post_init__(self):
        if self.num_modes != 6:
            raise ValueError("the mixture is fixed at six modes")
        for name in ("grid_rows", "grid_cols", "embed_size", "encoder_hidden",
                     "conv_filters", "social_context", "dynamics_size", "decoder_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.sample_rate <= 0 or self.cell_length <= 0 or self.cell_width <= 0:
            raise ValueError("rates and cell sizes must be positive")

    @property
    def history_steps(self) -> int:
        return int(round(self.history_s * self.sample_rate))

    @property
    def horizon_steps(self) -> int:
        return int(round(self.horizon_s * self.sample_rate))

    @classmethod
    def desk(cls, sample_rate: float = 10.0) -> "CspConfig":
        """Shrunken sizes for laptop-scale training and tests."""
        return cls(embed_size=8, encoder_hidden=16, conv_filters=16,
                   social_context=32, dynamics_size=16, decoder_hidden=32,
                   sample_rate=sample_rate)

    @classmethod
    def micro(cls) -> "CspConfig":
        """Tiny sizes and short windows for exhaustive gradient checks."""
        return cls(embed_size=3, encoder_hidden=4, conv_filters=2,
                   social_context=4, dynamics_size=4, decoder_hidden=8,
                   sample_rate=10.0, history_s=0.5, horizon_s=0.5)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pool_window"] = list(self.pool_window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CspConfig":
        d = dict(d)
        if "pool_window" in d:
            d["pool_window"] = tuple(d["pool_window"])
        return cls(**d)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and labeling settings for joint policy training."""

    learning_rate: float = 1e-3
    lr_decay: float = 1.0           # per-epoch multiplier on the learning rate
    batch_size: int = 32
    epochs: int = 15
    beta1: float = 0.9
    beta2: float = 0.999
    grad_clip: float = 10.0
    nll_weight_low: float = 1.0       # history-only model loss weight
    nll_weight_high: float = 1.0      # future-conditional model loss weight
    ce_weight: float = 1.0
    lane_offset_threshold: float = 0.5  # lateral label, in lane widths
    braking_ratio: float = 0.8          # longitudinal label threshold
    cv_sigma0: float = 0.5
    multi_fidelity: bool = False
    sensor_range: float = 60.0
    periphery_fraction: float = 0.25

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("invalid optimizer settings")
        if not 0 < self.braking_ratio < 1:
            raise ValueError("braking_ratio must be in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs, loadable from one JSON file."""

    model: CspConfig
    train: TrainConfig
    synth: SynthConfig

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "train": self.train.to_dict(),
                "synth": self.synth.to_dict()}

    @classmethod
    def default(cls) -> "RunConfig":
        return cls(CspConfig.desk(), TrainConfig(), SynthConfig())

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        base = cls.default()
        model = CspConfig.from_dict({**base.model.to_dict(), **d.get("model", {})})
        train = TrainConfig.from_dict({**base.train.to_dict(), **d.get("train", {})})
        synth = SynthConfig.from_dict({**base.synth.to_dict(), **d.get("synth", {})})
        return cls(model, train, synth)


def load_config(path) -> RunConfig:
    return RunConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def config_hash(config: RunConfig) -> str:
    import hashlib

    canon = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def with_sample_rate(config: CspConfig, sample_rate: float) -> CspConfig:
    return replace(config, sample_rate=sample_rate)
