"""Runtime configuration: cost weights plus tracker, geometry and solver knobs.

Config files are plain ``key = value`` lines with ``#`` comments, one key
per line, so diffs stay readable.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

__all__ = ["CostWeights", "Config", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CostWeights:
    """Per-event base costs, per-frame duration costs, and the motion weight.

    Occlusion gaps are cheaper per frame than plain detector gaps
    (`w_occl_len < w_md_len`): long disappearances are better explained by
    an occluder than by a failing detector.
    """

    w_enter: float = 1.0
    w_exit: float = 1.0
    w_occl: float = 5.0
    w_occl_len: float = 0.5
    w_md: float = 5.0
    w_md_len: float = 1.0
    w_noise: float = 10.0
    w_noise_len: float = 2.0
    w_v: float = 1.0

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if value < 0:
                raise ConfigError(f"{f.name} must be >= 0, got {value}")

    def scaled(self, factor: float) -> "CostWeights":
        return CostWeights(**{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass
class Config:
    weights: CostWeights = field(default_factory=CostWeights)

    # tracker
    gate: float = 0.7
    max_age: int = 1
    min_hits: int = 1
    min_confidence: float = 0.0
    distance: str = "iou"  # "iou" or "center"
    q_pos: float = 1e-2
    q_vel: float = 1e-4
    r_meas: float = 1e-1

    # geometry
    eps: float = 0.5
    border_margin: float = 20.0

    # candidate generation and solving
    max_gap: int = 50
    containment_ratio: float = 0.8
    max_optima: int = 100_000
    part_class: str = "face"
    whole_class: str = "person"
    require_part_whole: bool = True

    # complex events
    mt_min_frames: int = 15
    mt_vel_tol: float = 2.0

    def validate(self) -> None:
        self.weights.validate()
        if self.gate <= 0:
            raise ConfigError(f"gate must be > 0, got {self.gate}")
        if self.max_age < 1:
            raise ConfigError(f"max_age must be >= 1, got {self.max_age}")
        if self.min_hits < 1:
            raise ConfigError(f"min_hits must be >= 1, got {self.min_hits}")
        if self.distance not in ("iou", "center"):
            raise ConfigError(f"distance must be 'iou' or 'center', got {self.distance!r}")
        if self.q_pos < 0 or self.q_vel < 0 or self.r_meas < 0:
            raise ConfigError("noise variances must be >= 0")
        if self.eps < 0:
            raise ConfigError(f"eps must be >= 0, got {self.eps}")
        if self.border_margin < 0:
            raise ConfigError(f"border_margin must be >= 0, got {self.border_margin}")
        if self.max_gap < 1:
            raise ConfigError(f"max_gap must be >= 1, got {self.max_gap}")
        if not 0 < self.containment_ratio <= 1:
            raise ConfigError(f"containment_ratio must be in (0, 1], got {self.containment_ratio}")
        if self.max_optima < 1:
            raise ConfigError(f"max_optima must be >= 1, got {self.max_optima}")
        if self.mt_min_frames < 2:
            raise ConfigError(f"mt_min_frames must be >= 2, got {self.mt_min_frames}")
        if self.mt_vel_tol < 0:
            raise ConfigError(f"mt_vel_tol must be >= 0, got {self.mt_vel_tol}")

    def replace(self, **updates) -> "Config":
        cfg = dataclasses.replace(self, **updates)
        cfg.validate()
        return cfg

    # --- key = value serialization -------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "Config":
        weight_names = {f.name for f in fields(CostWeights)}
        plain = {f.name: f for f in fields(cls) if f.name != "weights"}
        weight_kw: dict[str, float] = {}
        plain_kw: dict[str, object] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            try:
                if key in weight_names:
                    weight_kw[key] = float(value)
                elif key in plain:
                    plain_kw[key] = _coerce(plain[key].type, value)
                else:
                    raise ConfigError(f"unknown key {key!r}")
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
        cfg = cls(weights=CostWeights(**weight_kw), **plain_kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        lines = ["# cost weights"]
        for f in fields(CostWeights):
            lines.append(f"{f.name} = {getattr(self.weights, f.name):g}")
        lines.append("")
        lines.append("# stage parameters")
        for f in fields(self):
            if f.name == "weights":
                continue
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = f"{value:g}"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def _coerce(typ: object, value: str):
    name = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    if name == "bool":
        lowered = value.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ValueError(f"expected a boolean, got {value!r}")
    if name == "int":
        return int(value)
    if name == "float":
        return float(value)
    return value
