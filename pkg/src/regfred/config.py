"""Experiment configuration: JSON files and compact family description strings."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from regfred import families
from regfred.fredholm import DELTA_HIGH, DELTA_LOW, TruncatedFamily

SUITES = ("identities", "gap", "fredholm", "perturb", "paths")
KINDS = ("diagonal", "shift", "banded", "custom-matrix-file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)

    @property
    def selfadjoint_kind(self) -> bool:
        return self.kind in ("diagonal", "banded")

    def build(self, levels) -> TruncatedFamily:
        p = self.params
        if self.kind == "diagonal":
            profile = p.get("profile", "k")
            if profile not in families.PROFILES:
                raise ConfigError(f"family {self.name}: unknown profile {profile!r}")
            return families.diagonal(profile, levels, self.name, shift=float(p.get("shift", 0.0)),
                                     scale=float(p.get("scale", 1.0)))
        if self.kind == "shift":
            return families.shift(levels, self.name)
        if self.kind == "banded":
            pot = p.get("potential", "k")
            if pot not in families.PROFILES:
                raise ConfigError(f"family {self.name}: unknown potential {pot!r}")
            return families.banded(levels, families.PROFILES[pot], self.name)
        if self.kind == "custom-matrix-file":
            paths = p.get("paths")
            if not paths:
                raise ConfigError(f"family {self.name}: custom-matrix-file needs 'paths'")
            try:
                return families.from_matrix_files(paths, self.name)
            except (OSError, ValueError) as exc:
                raise ConfigError(str(exc)) from None
        raise ConfigError(f"unknown family kind {self.kind!r}; expected one of {KINDS}")


@dataclass(frozen=True)
class Tolerances:
    delta_low: float = DELTA_LOW
    delta_high: float = DELTA_HIGH
    identity_tol: float = 1e-10


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str
    families: tuple[FamilySpec, ...]
    levels: tuple[int, ...]
    seed: int
    tolerances: Tolerances = Tolerances()
    out_dir: str = "reports"
    formats: tuple[str, ...] = ("csv", "json")
    cases: int = 100
    gap_samples: int = 20
    timings: bool = False

    @property
    def suites(self) -> tuple[str, ...]:
        return SUITES if self.suite == "all" else (self.suite,)


def _family_from_dict(d: dict, i: int) -> FamilySpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"families[{i}] must be an object with a 'kind'")
    if d["kind"] not in KINDS:
        raise ConfigError(f"families[{i}]: unknown kind {d['kind']!r}")
    return FamilySpec(d.get("name", f"{d['kind']}{i}"), d["kind"], dict(d.get("params", {})),
                      dict(d.get("expect", {})))


def parse_config(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("seed", "levels"):
        if key not in data:
            raise ConfigError(f"config is missing required key {key!r}")
    suite = data.get("suite", "all")
    if suite not in SUITES + ("all",):
        raise ConfigError(f"unknown suite {suite!r}")
    levels = data["levels"]
    if not isinstance(levels, list) or not all(isinstance(n, int) and n > 0 for n in levels):
        raise ConfigError("levels must be a list of positive integers")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError("levels must be ascending")
    if len(levels) < 3:
        raise ConfigError("at least 3 levels are required")
    seed = data["seed"]
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    fams = []
    for i, d in enumerate(data.get("families", [])):
        spec = _family_from_dict(d, i)
        if spec.kind == "custom-matrix-file" and base_dir is not None:
            paths = [str((base_dir / p).resolve()) if not Path(p).is_absolute() else p
                     for p in spec.params.get("paths", [])]
            spec = FamilySpec(spec.name, spec.kind, {**spec.params, "paths": paths}, spec.expect)
        fams.append(spec)
    names = [f.name for f in fams]
    if len(set(names)) != len(names):
        raise ConfigError("family names must be unique")
    tol = data.get("tolerances", {})
    try:
        tolerances = Tolerances(float(tol.get("delta_low", DELTA_LOW)),
                                float(tol.get("delta_high", DELTA_HIGH)),
                                float(tol.get("identity_tol", 1e-10)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad tolerances: {exc}") from None
    if not tolerances.delta_low < tolerances.delta_high:
        raise ConfigError("delta_low must be below delta_high")
    out = data.get("output", {})
    fmt = out.get("format", ["csv", "json"])
    formats = (fmt,) if isinstance(fmt, str) else tuple(fmt)
    return ExperimentConfig(
        suite=suite,
        families=tuple(fams),
        levels=tuple(levels),
        seed=seed,
        tolerances=tolerances,
        out_dir=str(out.get("dir", "reports")),
        formats=formats,
        cases=int(data.get("cases", 100)),
        gap_samples=int(data.get("gap_samples", 20)),
        timings=bool(out.get("timings", False)),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data, path.parent)


_CALL = re.compile(r"^([\w-]+)\((.*)\)$")


def parse_family_spec(text: str) -> FamilySpec:
    """Parse ``kind``, ``kind(arg)`` or ``kind:key=value,key=value``.

    ``diagonal(k)`` is shorthand for ``diagonal:profile=k``; for
    custom-matrix-file, ``paths`` is a ``;``-separated list.
    """
    text = text.strip()
    if text.startswith("{"):
        try:
            return _family_from_dict(json.loads(text), 0)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad family JSON: {exc}") from None
    params: dict = {}
    m = _CALL.match(text)
    if m:
        kind, arg = m.group(1), m.group(2).strip()
        if arg:
            key = {"diagonal": "profile", "banded": "potential", "custom-matrix-file": "paths"}.get(kind)
            if key is None:
                raise ConfigError(f"{kind} takes no positional argument")
            params[key] = arg
    else:
        kind, _, rest = text.partition(":")
        for item in filter(None, rest.split(",")):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(f"expected key=value, got {item!r}")
            params[key.strip()] = value.strip()
    if kind not in KINDS:
        raise ConfigError(f"unknown family kind {kind!r}; expected one of {KINDS}")
    if "paths" in params and isinstance(params["paths"], str):
        params["paths"] = [p for p in params["paths"].split(";") if p]
    return FamilySpec(kind, kind, params)
