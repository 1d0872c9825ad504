"""Pipeline configuration: one JSON file plus command-line overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .learn.chain import BASES, parse_edge
from .learn.data import SplitSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    seed: int | None = None
    frames_dir: str | None = None
    catalog: str | None = None
    segments_dir: str | None = None
    features: str | None = None
    annotations: str | None = None
    model: str | None = None
    out_dir: str = "out"
    frame_width: float = 1280.0
    frame_height: float = 720.0
    window: int = 3
    threshold_fraction: float = 0.10
    feature_set: str = "distance"
    split: tuple[float, float, float] = (0.67, 0.165, 0.165)
    tasks: tuple[str, ...] = ()
    classifier: str = "knn"
    classifier_params: dict = field(default_factory=dict)
    coupling: tuple[tuple[str, str], ...] = ()
    mode: str = "separate"
    kfold: int = 0
    alpha: float = 0.05
    handshape_format: str = "code"
    workers: int = 1

    def __post_init__(self):
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int)):
            raise ConfigError("seed must be an integer")
        if len(self.split) != 3:
            raise ConfigError("split needs three fractions (train, validation, test)")
        try:
            SplitSpec(*self.split)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if not 0 < self.threshold_fraction < 1:
            raise ConfigError("threshold_fraction must lie in (0, 1)")
        if not (self.frame_width > 0 and self.frame_height > 0):
            raise ConfigError("frame dimensions must be positive")
        if self.feature_set not in ("distance", "raw"):
            raise ConfigError("feature_set must be 'distance' or 'raw'")
        if self.classifier not in BASES:
            raise ConfigError(f"classifier must be one of {sorted(BASES)}")
        if self.mode not in ("separate", "joint"):
            raise ConfigError("mode must be 'separate' or 'joint'")
        if self.mode == "joint" and self.classifier != "mlp":
            raise ConfigError("joint mode needs classifier 'mlp'")
        if self.kfold == 1 or self.kfold < 0:
            raise ConfigError("kfold must be 0 (off) or >= 2")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.handshape_format not in ("code", "index"):
            raise ConfigError("handshape_format must be 'code' or 'index'")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(*self.split, seed=self.seed or 0)

    def require(self, *names: str) -> None:
        """Raise unless each named path is set and exists."""
        for n in names:
            p = getattr(self, n)
            if p is None:
                raise ConfigError(f"{n} is not set")
            if not Path(p).exists():
                raise ConfigError(f"{n} {p} does not exist")


_FIELDS = {f.name for f in fields(PipelineConfig)}


def _normalise(raw: dict) -> dict:
    out = dict(raw)
    unknown = sorted(set(out) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "split" in out:
        out["split"] = tuple(float(v) for v in out["split"])
    if "tasks" in out:
        out["tasks"] = tuple(out["tasks"])
    if "coupling" in out:
        try:
            out["coupling"] = tuple(parse_edge(e) if isinstance(e, str) else tuple(e) for e in out["coupling"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if "classifier_params" in out and not isinstance(out["classifier_params"], dict):
        raise ConfigError("classifier_params must be an object")
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Read the JSON file (if any) and apply ``overrides``; overrides win and
    ``None`` values in them are ignored."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return PipelineConfig(**_normalise(raw))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def with_overrides(cfg: PipelineConfig, **kw) -> PipelineConfig:
    return replace(cfg, **_normalise({k: v for k, v in kw.items() if v is not None}))
