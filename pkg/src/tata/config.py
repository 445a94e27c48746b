"""Run configuration: defaults, JSON file loading, CLI override precedence."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidValueError, ParseError

MODES = ("transductive", "streaming")
TOGGLE_NAMES = ("aap", "bdc", "mac", "sv")


@dataclass
class RunConfig:
    """All knobs of the adaptation pipeline with their defaults.

    `n_classes` is usually left unset and bound from the class-prompt
    file at run time.
    """

    n_classes: int | None = None
    k1: int = 5
    k3: int = 4
    alpha: float = 1.75
    tau: float = 0.01
    tau_tilde: float = 0.005
    n_attr: int = 3
    theta: float = 0.55
    capacity: int = 8
    warmup: int = 256
    recluster_every: int = 256
    mode: str = "transductive"
    seed: int = 0
    use_aap: bool = True
    use_bdc: bool = True
    use_mac: bool = True
    use_sv: bool = True

    def validate(self) -> "RunConfig":
        counts = {
            "k1": self.k1,
            "k3": self.k3,
            "n_attr": self.n_attr,
            "capacity": self.capacity,
            "warmup": self.warmup,
            "recluster_every": self.recluster_every,
        }
        if self.n_classes is not None and self.n_classes < 1:
            raise InvalidValueError("n_classes")
        if self.k1 < 1:
            raise InvalidValueError("k1")
        for name, value in counts.items():
            if value < 0:
                raise InvalidValueError(name)
        for name, value in (("tau", self.tau), ("tau_tilde", self.tau_tilde)):
            if not value > 0:
                raise InvalidValueError(name)
        if self.alpha < 0:
            raise InvalidValueError("alpha")
        if self.mode not in MODES:
            raise InvalidValueError("mode", f"mode must be one of {MODES}, got {self.mode!r}")
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes).validate()

    def toggles(self) -> dict:
        return {
            "aap": self.use_aap,
            "bdc": self.use_bdc,
            "mac": self.use_mac,
            "sv": self.use_sv,
        }


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from defaults, then a JSON file, then overrides.

    CLI flags (the `overrides` mapping) take precedence over file values.
    """
    values: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ParseError(f"config {path} must hold a JSON object")
        values.update(raw)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - _FIELD_NAMES
    if unknown:
        raise InvalidValueError(sorted(unknown)[0], f"unknown config field {sorted(unknown)[0]!r}")
    return RunConfig(**values).validate()


def parse_toggles(spec: str) -> dict:
    """Parse a --toggle value like "aap,bdc" into use_* overrides.

    Listed components are enabled and the rest disabled; "none" (or an
    empty string) disables everything.
    """
    wanted = set()
    text = spec.strip().lower()
    if text and text != "none":
        for part in text.split(","):
            name = part.strip()
            if name not in TOGGLE_NAMES:
                raise InvalidValueError("toggle", f"unknown component {name!r}")
            wanted.add(name)
    return {f"use_{name}": (name in wanted) for name in TOGGLE_NAMES}
