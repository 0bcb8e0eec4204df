"""Pipeline configuration: every tunable default under a dotted key.

Files are UTF-8 ``key = value`` lines; ``#`` starts a comment. Keys are
``section.field`` (e.g. ``acm.lambda_ff``, ``polygonize.min_prob``). Unknown
keys are rejected and values are validated by the owning dataclass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .losses import CLAMP_EPS, GRAD_EPS, SEG_C, SMOOTH_EPS
from .polygonize.acm import AcmParams
from .polygonize.pipeline import PipelineParams, PolygonizeParams
from .synth.scene import SceneConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LossParams:
    c: float = SEG_C
    clamp_eps: float = CLAMP_EPS
    smooth_eps: float = SMOOTH_EPS
    grad_eps: float = GRAD_EPS
    w0: float = 10.0
    sigma_w: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"c must lie in [0, 1], got {self.c}")
        if not 0.0 < self.clamp_eps < 0.5:
            raise ValueError(f"clamp_eps must lie in (0, 0.5), got {self.clamp_eps}")
        if self.smooth_eps <= 0 or self.grad_eps <= 0 or self.sigma_w <= 0 or self.w0 < 0:
            raise ValueError("smooth_eps, grad_eps, sigma_w must be > 0 and w0 >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    acm: AcmParams = field(default_factory=AcmParams)
    polygonize: PolygonizeParams = field(default_factory=PolygonizeParams)
    losses: LossParams = field(default_factory=LossParams)
    synth: SceneConfig = field(default_factory=SceneConfig)

    @property
    def pipeline(self):
        return PipelineParams(self.acm, self.polygonize)

    def keys(self):
        return [f"{s.name}.{f.name}" for s in fields(self) for f in fields(getattr(self, s.name))]

    def get(self, key):
        section, name = _split(self, key)
        return getattr(getattr(self, section), name)

    def with_overrides(self, values):
        """New config with ``{dotted_key: value}`` applied; strings are parsed."""
        grouped = {}
        for key, value in values.items():
            section, name = _split(self, key)
            current = getattr(getattr(self, section), name)
            grouped.setdefault(section, {})[name] = _coerce(key, value, current)
        cfg = self
        for section, kw in grouped.items():
            try:
                cfg = replace(cfg, **{section: replace(getattr(cfg, section), **kw)})
            except ValueError as err:
                raise ConfigError(f"invalid {section} settings: {err}") from err
        return cfg

    def as_dict(self):
        return {k: self.get(k) for k in self.keys()}


def _split(cfg, key):
    section, _, name = key.partition(".")
    if section not in {f.name for f in fields(cfg)} or not name:
        raise ConfigError(f"unknown config key {key!r}")
    if name not in {f.name for f in fields(getattr(cfg, section))}:
        raise ConfigError(f"unknown config key {key!r}")
    return section, name


def _coerce(key, value, current):
    if not isinstance(value, str):
        raw = value
    else:
        raw = value.strip()
    try:
        if isinstance(current, bool):
            if isinstance(raw, str):
                if raw.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(raw)
                return raw.lower() in ("true", "1")
            return bool(raw)
        if isinstance(current, int):
            out = int(raw)
            if isinstance(raw, float) and raw != out:
                raise ValueError(raw)
            return out
        out = float(raw)
        if not math.isfinite(out):
            raise ValueError(raw)
        return out
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def parse_config_text(text, base=None):
    cfg = PipelineConfig() if base is None else base
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        key = key.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return cfg.with_overrides(values)


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)
