from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Union

from maskface.coarticulation import DEFAULT_BANDWIDTH, DEFAULT_FPS, SmoothingKernel
from maskface.expression import DEFAULT_ATTACK, DEFAULT_RELEASE
from maskface.viseme import DEFAULT_MAX_EXTENSION, DEFAULT_MIN_DURATION


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    fps: float = DEFAULT_FPS
    kernel_shape: str = "gaussian"
    bandwidth: float = DEFAULT_BANDWIDTH
    max_extension: float = DEFAULT_MAX_EXTENSION
    min_duration: float = DEFAULT_MIN_DURATION
    enforce_closure: bool = True
    attack: float = DEFAULT_ATTACK
    release: float = DEFAULT_RELEASE
    viseme_table: Optional[str] = None
    compat_table: Optional[str] = None
    morphset: Optional[str] = None
    inverse_tol: float = 1e-9

    def __post_init__(self):
        if not self.fps > 0:
            raise ConfigError(f"fps must be positive, got {self.fps}")
        if not self.bandwidth >= 0:
            raise ConfigError(f"bandwidth must be >= 0, got {self.bandwidth}")
        if self.kernel_shape not in ("gaussian", "triangular"):
            raise ConfigError(f"unknown kernel shape {self.kernel_shape!r}")
        if self.max_extension < 0 or self.min_duration < 0:
            raise ConfigError("labial extension parameters must be >= 0")

    @property
    def kernel(self) -> SmoothingKernel:
        return SmoothingKernel(self.kernel_shape, self.bandwidth)

    def basic(self) -> "EngineConfig":
        """Baseline lip sync: no smoothing, no closure enforcement or extension."""
        return replace(self, bandwidth=0.0, enforce_closure=False, max_extension=0.0, min_duration=0.0)

    def check_paths(self) -> None:
        for name in ("viseme_table", "compat_table", "morphset"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{name} path does not exist: {p}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict, base: Optional[Path] = None) -> "EngineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if base is not None:
            for name in ("viseme_table", "compat_table", "morphset"):
                if data.get(name) and not Path(data[name]).is_absolute():
                    data[name] = str(base / data[name])
        return cls(**data)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "EngineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: {err}") from None
        return cls.from_dict(data, base=path.parent)
