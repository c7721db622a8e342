"""Flat key=value experiment configuration.

The config format is one assignment per line with ``#`` comments.  Values
are typed per key; unknown keys and invalid enum values are rejected with
the offending line.  ``serialize`` emits keys in declaration order with
repr-exact floats, so parse -> serialize -> parse is a fixpoint.
"""

from __future__ import annotations

from .errors import ConfigError
from .losses import LOSS_NAMES
from .models import CONV_KINDS

SCHEDULE_NAMES = ("constant", "ramp", "combination", "coupled")

# (name, type, default, validator) for every recognized key, in serialization
# order.  ``data_dir`` and ``synthetic`` are mutually exclusive data sources.
_FIELDS = [
    ("image_size", int, 32, lambda v: v >= 8 and (v & (v - 1)) == 0),
    ("latent_dim", int, 64, lambda v: v >= 1),
    ("base_channels", int, 32, lambda v: v >= 4),
    ("loss", str, "vanilla", lambda v: v in LOSS_NAMES),
    ("conv", str, "standard", lambda v: v in CONV_KINDS),
    ("alpha", float, 0.5, lambda v: 0.0 <= v <= 1.0),
    ("schedule", str, "constant", lambda v: v in SCHEDULE_NAMES),
    ("schedule_points", str, "", lambda v: True),
    ("lr", float, 2e-4, lambda v: v > 0),
    ("beta1", float, 0.5, lambda v: 0.0 <= v < 1.0),
    ("beta2", float, 0.999, lambda v: 0.0 <= v < 1.0),
    ("batch_size", int, 64, lambda v: v >= 2),
    ("epochs", int, 20, lambda v: v >= 0),
    ("clip", float, 0.01, lambda v: v > 0),
    ("seed", int, 1, lambda v: True),
    ("data_dir", str, "", lambda v: True),
    ("synthetic", str, "shapes:2048:1", lambda v: True),
    ("out_dir", str, "runs/out", lambda v: True),
    ("eval_samples", int, 256, lambda v: v >= 2),
    ("resume", str, "", lambda v: True),
    ("fixed_clock", int, 0, lambda v: v in (0, 1)),
]

_BY_NAME = {name: (typ, default, check) for name, typ, default, check in _FIELDS}


class GanConfig:
    """Typed view of a parsed configuration; attributes match key names."""

    def __init__(self, **values):
        for name, (typ, default, check) in _BY_NAME.items():
            v = values.pop(name, default)
            setattr(self, name, v)
        if values:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(values))}")
        self.validate()

    def validate(self) -> None:
        for name, (typ, default, check) in _BY_NAME.items():
            v = getattr(self, name)
            if not isinstance(v, typ):
                raise ConfigError(f"config key '{name}' must be {typ.__name__}, got {v!r}")
            if not check(v):
                raise ConfigError(f"config key '{name}' has invalid value {v!r}")
        if self.data_dir and self.synthetic:
            # Both set is allowed only because synthetic has a default; an
            # explicit data_dir wins and is the single source of truth.
            pass
        if self.schedule_points:
            parse_schedule_points(self.schedule_points)

    def serialize(self) -> str:
        lines = []
        for name, (typ, _, _) in _BY_NAME.items():
            v = getattr(self, name)
            lines.append(f"{name}={v!r}" if typ is float else f"{name}={v}")
        return "\n".join(lines) + "\n"

    def copy(self, **overrides) -> "GanConfig":
        vals = {name: getattr(self, name) for name in _BY_NAME}
        vals.update(overrides)
        return GanConfig(**vals)

    def __eq__(self, other) -> bool:
        return isinstance(other, GanConfig) and all(
            getattr(self, n) == getattr(other, n) for n in _BY_NAME)

    def __repr__(self) -> str:
        return f"GanConfig({', '.join(f'{n}={getattr(self, n)!r}' for n in _BY_NAME)})"


def _parse_value(name: str, raw: str, line_desc: str):
    if name not in _BY_NAME:
        raise ConfigError(f"unknown config key '{name}' ({line_desc})")
    typ = _BY_NAME[name][0]
    raw = raw.strip()
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(
            f"config key '{name}' expects {typ.__name__}, got '{raw}' ({line_desc})") from None


def parse_config_text(text: str, base: GanConfig | None = None) -> GanConfig:
    """Parse key=value lines (# comments, blank lines allowed) over ``base``."""
    values = {} if base is None else {n: getattr(base, n) for n in _BY_NAME}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected key=value, got '{line.strip()}' (line {lineno})")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        values[key] = _parse_value(key, raw, f"line {lineno}: {line.strip()}")
    return GanConfig(**values)


def load_config(path: str, base: GanConfig | None = None) -> GanConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def apply_overrides(cfg: GanConfig, tokens: list[str]) -> GanConfig:
    """Apply CLI ``key=value`` override tokens on top of a config."""
    values = {n: getattr(cfg, n) for n in _BY_NAME}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"expected key=value override, got '{tok}'")
        key, raw = tok.split("=", 1)
        key = key.strip()
        values[key] = _parse_value(key, raw, f"override '{tok}'")
    return GanConfig(**values)


def parse_schedule_points(text: str) -> list[tuple[float, float, float]]:
    """Parse ``t:beta_low:beta_high`` triples separated by commas."""
    points = []
    for part in text.split(","):
        fields = part.strip().split(":")
        if len(fields) != 3:
            raise ConfigError(
                f"schedule point must be t:beta_low:beta_high, got '{part.strip()}'")
        try:
            points.append(tuple(float(f) for f in fields))
        except ValueError:
            raise ConfigError(f"malformed schedule point '{part.strip()}'") from None
    return points


def build_schedule(cfg: GanConfig):
    """Construct the BetaSchedule selected by a config."""
    from .octave import BetaSchedule
    if cfg.schedule_points:
        return BetaSchedule(parse_schedule_points(cfg.schedule_points),
                            coupled=(cfg.schedule == "coupled"), name="custom")
    return BetaSchedule.from_name(cfg.schedule)
