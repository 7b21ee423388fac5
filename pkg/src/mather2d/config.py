"""Run configuration: one versioned JSON document shared by every command.

The schema is deliberately small and explicit.  Every field must be present
(a recorded seed is mandatory: no entropy enters a run without appearing in
the file), parse errors name the offending field, and the canonical dump is
hashed into output headers so artifacts can be traced back to their inputs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

__all__ = ["ConfigError", "RunConfig", "default_config_dict"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or out-of-range configuration; message names the field."""


@dataclass(frozen=True)
class ModelCfg:
    amplitude: float = 1.0


@dataclass(frozen=True)
class IntegratorCfg:
    dt: float = 1e-3
    max_T: float = 400.0


@dataclass(frozen=True)
class VariationalCfg:
    N: int = 96
    restarts: int = 2
    max_iters: int = 500
    grad_tol: float = 1e-5
    seed: int = 0
    q_max: int = 8
    period_scale: float = 1.0


@dataclass(frozen=True)
class GridCfg:
    h_box: tuple[tuple[float, float], tuple[float, float]] = ((-2.0, 2.0), (-2.0, 2.0))
    steps: int = 33


@dataclass(frozen=True)
class TolerancesCfg:
    corner_gap_tol: float = 0.05
    subdiff_tol: float = 0.05
    invariance_tol: float = 1e-4


@dataclass(frozen=True)
class OutputCfg:
    directory: str = "."
    format: str = "csv"


_SECTIONS = {
    "model": ModelCfg,
    "integrator": IntegratorCfg,
    "variational": VariationalCfg,
    "grid": GridCfg,
    "tolerances": TolerancesCfg,
    "output": OutputCfg,
}


def _require(cond: bool, field: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"config field {field!r}: {msg}")


@dataclass(frozen=True)
class RunConfig:
    model: ModelCfg
    integrator: IntegratorCfg
    variational: VariationalCfg
    grid: GridCfg
    tolerances: TolerancesCfg
    output: OutputCfg

    def __post_init__(self):
        _require(self.model.amplitude > 0, "model.amplitude", "must be > 0")
        _require(self.integrator.dt > 0, "integrator.dt", "must be > 0")
        _require(self.integrator.max_T > 0, "integrator.max_T", "must be > 0")
        v = self.variational
        _require(v.N >= 8, "variational.N", "must be >= 8")
        _require(v.restarts >= 1, "variational.restarts", "must be >= 1")
        _require(v.max_iters >= 1, "variational.max_iters", "must be >= 1")
        _require(v.grad_tol > 0, "variational.grad_tol", "must be > 0")
        _require(v.q_max >= 1, "variational.q_max", "must be >= 1")
        _require(v.period_scale > 0, "variational.period_scale", "must be > 0")
        _require(isinstance(v.seed, int), "variational.seed", "must be an integer")
        g = self.grid
        _require(g.steps >= 8, "grid.steps", "must be >= 8")
        box = g.h_box
        ok = (len(box) == 2 and all(len(side) == 2 and side[0] < side[1] for side in box))
        _require(ok, "grid.h_box", "must be [[lo1, hi1], [lo2, hi2]] with lo < hi")
        t = self.tolerances
        for name in ("corner_gap_tol", "subdiff_tol", "invariance_tol"):
            _require(getattr(t, name) > 0, f"tolerances.{name}", "must be > 0")
        _require(self.output.format in ("csv", "json"), "output.format",
                 "must be 'csv' or 'json'")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root: must be a JSON object")
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"config field 'schema_version': expected {SCHEMA_VERSION}, got {version!r}"
            )
        extra = set(doc) - set(_SECTIONS) - {"schema_version"}
        if extra:
            raise ConfigError(f"config field {sorted(extra)[0]!r}: unknown section")
        parts = {}
        for name, typ in _SECTIONS.items():
            section = doc.get(name)
            if section is None:
                raise ConfigError(f"config field {name!r}: missing section")
            if not isinstance(section, dict):
                raise ConfigError(f"config field {name!r}: must be an object")
            fields = typ.__dataclass_fields__
            unknown = set(section) - set(fields)
            if unknown:
                raise ConfigError(
                    f"config field '{name}.{sorted(unknown)[0]}': unknown field"
                )
            missing = set(fields) - set(section)
            if missing:
                raise ConfigError(
                    f"config field '{name}.{sorted(missing)[0]}': missing"
                )
            kwargs = {}
            for key, val in section.items():
                if key == "h_box":
                    try:
                        val = tuple((float(a), float(b)) for a, b in val)
                    except (TypeError, ValueError):
                        raise ConfigError(
                            "config field 'grid.h_box': must be [[lo1, hi1], [lo2, hi2]]"
                        ) from None
                elif fields[key].type in ("int",):
                    if isinstance(val, bool) or not isinstance(val, int):
                        raise ConfigError(f"config field '{name}.{key}': must be an integer")
                elif fields[key].type in ("float",):
                    if isinstance(val, bool) or not isinstance(val, (int, float)):
                        raise ConfigError(f"config field '{name}.{key}': must be a number")
                    val = float(val)
                kwargs[key] = val
            try:
                parts[name] = typ(**kwargs)
            except TypeError as exc:
                raise ConfigError(f"config field {name!r}: {exc}") from None
        return cls(**parts)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON at line {exc.lineno}, "
                              f"column {exc.colno}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = {"schema_version": SCHEMA_VERSION}
        for name in _SECTIONS:
            doc[name] = asdict(getattr(self, name))
        doc["grid"]["h_box"] = [list(side) for side in doc["grid"]["h_box"]]
        return doc

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        """Short hash of the canonical form, embedded in output headers."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


def default_config_dict() -> dict:
    return RunConfig(ModelCfg(), IntegratorCfg(), VariationalCfg(),
                     GridCfg(), TolerancesCfg(), OutputCfg()).to_dict()
