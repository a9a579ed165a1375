"""Run configuration: a flat TOML table whose keys mirror the CLI flags."""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .errors import InvalidInputError
from .potential import PhysicalUnits
from .spectral import POTENTIALS
from .surfaces import DEFAULT_PARAMS, make_chart, surface_parameters

SURFACE_PARAMS = ("a", "c", "R", "r", "Rb", "h")
EMIT_CHOICES = ("json", "csv", "plot-data")
# resources that do not change any computed number; kept out of the report echo
EXECUTION_KEYS = ("workers",)


def parse_grid(text) -> tuple[int, int]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).lower().split("x")
    try:
        nu, nv = (int(p) for p in parts)
    except (TypeError, ValueError):
        raise InvalidInputError(f"grid must look like NxM, got {text!r}") from None
    if nu < 16 or nv < 16:
        raise InvalidInputError(f"grid must be at least 16x16, got {text!r}")
    return nu, nv


def parse_emit(text) -> tuple[str, ...]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    out = []
    for item in items:
        item = item.strip()
        if not item:
            continue
        if item not in EMIT_CHOICES:
            raise InvalidInputError(f"unknown emit flag {item!r}; choose from {EMIT_CHOICES}")
        if item not in out:
            out.append(item)
    if "json" not in out:
        out.insert(0, "json")
    return tuple(out)


@dataclass(frozen=True)
class RunConfig:
    surface: str = "catenoid"
    a: float | None = None
    c: float | None = None
    R: float | None = None
    r: float | None = None
    Rb: float | None = None
    h: float | None = None
    hbar: float = 1.0
    mass: float = 0.5
    grid: tuple[int, int] = (512, 512)
    # meridian half-width: chart coordinate for analyze, arclength for spectrum
    T: float | None = None
    lmax: int = 8
    N: int = 2048
    potential: str = "dacosta"
    n_eigs: int = 6
    out: str = "gqp-run"
    emit: tuple[str, ...] = ("json",)
    workers: int = 1
    # sweep settings
    param: str | None = None
    range: tuple[float, float] | None = None
    steps: int = 10

    def __post_init__(self):
        surface_parameters(self.surface)
        object.__setattr__(self, "grid", parse_grid(self.grid))
        object.__setattr__(self, "emit", parse_emit(self.emit))
        for name in ("hbar", "mass"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {v!r}")
            object.__setattr__(self, name, float(v))
        for name in SURFACE_PARAMS + ("T",):
            v = getattr(self, name)
            if v is None:
                continue
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {v!r}")
            object.__setattr__(self, name, float(v))
        for name, lo in (("lmax", 0), ("N", 64), ("n_eigs", 1), ("workers", 1), ("steps", 2)):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < lo:
                raise InvalidInputError(f"{name} must be an integer >= {lo}, got {v!r}")
        if self.potential not in POTENTIALS:
            raise InvalidInputError(f"potential must be one of {POTENTIALS}, got {self.potential!r}")
        foreign = [p for p in SURFACE_PARAMS
                   if getattr(self, p) is not None and p not in surface_parameters(self.surface)]
        if foreign:
            raise InvalidInputError(f"surface {self.surface!r} takes no parameter(s) {foreign}")
        if self.range is not None:
            try:
                lo, hi = (float(x) for x in self.range)
            except (TypeError, ValueError):
                raise InvalidInputError(f"range must be two numbers, got {self.range!r}") from None
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise InvalidInputError(f"range must satisfy lo < hi, got {self.range!r}")
            object.__setattr__(self, "range", (lo, hi))
        if self.param is not None and self.param not in surface_parameters(self.surface):
            raise InvalidInputError(
                f"surface {self.surface!r} has no parameter {self.param!r}; "
                f"known: {list(surface_parameters(self.surface))}")

    # -- derived objects

    @property
    def units(self) -> PhysicalUnits:
        return PhysicalUnits(self.hbar, self.mass)

    def surface_params(self) -> dict:
        full = dict(DEFAULT_PARAMS[self.surface])
        full.update({p: getattr(self, p) for p in surface_parameters(self.surface)
                     if getattr(self, p) is not None})
        return full

    def chart(self, **override):
        params = self.surface_params()
        params.update(override)
        return make_chart(self.surface, **params)

    def truncation(self, chart) -> float | None:
        """T if given, else 20 times the chart's length scale (noncompact only)."""
        if chart.compact:
            return None
        return self.T if self.T is not None else 20.0 * chart.scale

    # -- serialization

    def to_dict(self, execution: bool = True) -> dict:
        d = asdict(self)
        d["grid"] = f"{self.grid[0]}x{self.grid[1]}"
        d["emit"] = ",".join(self.emit)
        if self.range is not None:
            d["range"] = list(self.range)
        if not execution:
            for k in EXECUTION_KEYS:
                d.pop(k)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict, **defaults) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config key(s): {sorted(unknown)}")
        merged = dict(defaults)
        merged.update(data)
        if "range" in merged and merged["range"] is not None:
            merged["range"] = tuple(merged["range"])
        return cls(**merged)

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidInputError(f"invalid TOML: {exc}") from None
        return cls.from_dict(data)

    def with_overrides(self, **values) -> "RunConfig":
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {p}: {exc}") from None
    return RunConfig.from_toml(text)


__all__ = ["RunConfig", "load_config", "parse_grid", "parse_emit", "EMIT_CHOICES", "SURFACE_PARAMS"]
