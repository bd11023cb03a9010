"""Flat ``key = value`` run configuration.

Example::

    # sq-general with a fixed environment
    variant = sq-general
    shots = 100000
    seed = 7
    agent = random
    environment = 0.6, 0.8
    noise.p_readout = 0.02
    hardware.sequential_cnots = false

Blank lines and ``#`` comments are ignored.  Amplitude lists are comma
separated Python complex literals (``0.5+0.5j``); several environments (one
per cycle) are separated by ``;``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from ..channels import HardwareBudget, NoiseModel
from ..errors import ConfigError, StateError
from ..protocol import Variant

log = logging.getLogger(__name__)

MODES = ("ideal", "noisy", "enumerate")
FORMATS = ("csv", "json")
NORM_TOL = 1e-6
NORM_WARN = 1e-9

_TOP_KEYS = {
    "variant", "cycles", "shots", "seed", "mode", "agent", "environment",
    "output", "format", "include_zero_branches",
}
_NOISE_KEYS = {f.name for f in fields(NoiseModel)}
_HW_KEYS = {f.name for f in fields(HardwareBudget)}


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings.

    ``agent`` / ``environment`` are ``"default"`` (the variant's fixed states,
    else random), ``"random"``, or explicit amplitudes; ``environment`` holds
    one amplitude tuple per scheduled cycle (or a single one, reused).
    """

    variant: Variant
    cycles: int = 1
    shots: int = 10_000
    seed: int = 0
    mode: str = "ideal"
    agent: str | tuple[complex, ...] = "default"
    environment: str | tuple[tuple[complex, ...], ...] = "default"
    noise: NoiseModel = field(default_factory=NoiseModel)
    hardware: HardwareBudget = field(default_factory=HardwareBudget)
    output: str | None = None
    format: str = "csv"
    include_zero_branches: bool = False

    def echo(self) -> dict:
        """JSON-safe, canonical dump of every setting."""

        def amps(a):
            return [[float(np.real(z)), float(np.imag(z))] for z in a]

        env = self.environment if isinstance(self.environment, str) else [amps(e) for e in self.environment]
        return {
            "variant": self.variant.value,
            "cycles": self.cycles,
            "shots": self.shots,
            "seed": self.seed,
            "mode": self.mode,
            "agent": self.agent if isinstance(self.agent, str) else amps(self.agent),
            "environment": env,
            "noise": asdict(self.noise),
            "hardware": asdict(self.hardware),
            "output": self.output,
            "format": self.format,
            "include_zero_branches": self.include_zero_branches,
        }


def _int(key, raw, line, lo=0, hi=None):
    try:
        v = int(raw, 0)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}", line, key) from None
    if v < lo or (hi is not None and v > hi):
        raise ConfigError(f"{key}={v} out of range", line, key)
    return v


def _float(key, raw, line):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}", line, key) from None


def _bool(key, raw, line):
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key} must be true/false, got {raw!r}", line, key)


def _amplitudes(key, raw, width, line) -> tuple[complex, ...]:
    try:
        amps = tuple(complex(tok.replace(" ", "")) for tok in raw.split(","))
    except ValueError:
        raise ConfigError(f"{key}: cannot parse amplitudes {raw!r}", line, key) from None
    if len(amps) != 2**width:
        raise ConfigError(
            f"{key}: {len(amps)} amplitudes given, variant needs {2**width} ({width}-qubit state)", line, key
        )
    norm = float(np.sqrt(sum(abs(a) ** 2 for a in amps)))
    if abs(norm - 1) > NORM_TOL:
        raise ConfigError(f"{key}: amplitudes have norm {norm:.9g}, expected 1 within {NORM_TOL}", line, key)
    if abs(norm - 1) > NORM_WARN:
        log.warning("%s: renormalizing amplitudes with norm %.12g", key, norm)
        amps = tuple(a / norm for a in amps)
    return amps


def _tokenize(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if not key or not value:
            raise ConfigError(f"empty key or value in {stripped!r}", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", lineno, key)
        entries[key] = (value, lineno)
    return entries


def _check_key(key: str, line: int | None) -> None:
    if key in _TOP_KEYS:
        return
    section, _, name = key.partition(".")
    if (section == "noise" and name in _NOISE_KEYS) or (section == "hardware" and name in _HW_KEYS):
        return
    raise ConfigError(f"unknown key {key!r}", line, key)


def parse_config(text: str, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """Parse a configuration document; ``overrides`` replace or add keys."""
    entries = _tokenize(text)
    for k, v in (overrides or {}).items():
        entries[k] = (str(v), None)
    for key, (_, line) in entries.items():
        _check_key(key, line)
    if "variant" not in entries:
        raise ConfigError("missing required key 'variant'", key="variant")

    def get(key):
        return entries.get(key, (None, None))

    raw, line = get("variant")
    try:
        variant = Variant.parse(raw)
    except StateError as e:
        raise ConfigError(str(e), line, "variant") from None

    cfg = RunConfig(variant)
    updates = {}
    for key in ("cycles", "shots"):
        raw, line = get(key)
        if raw is not None:
            updates[key] = _int(key, raw, line, lo=1)
    raw, line = get("seed")
    if raw is not None:
        updates["seed"] = _int("seed", raw, line, lo=0, hi=2**64 - 1)
    raw, line = get("mode")
    if raw is not None:
        if raw not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {raw!r}", line, "mode")
        updates["mode"] = raw
    raw, line = get("format")
    if raw is not None:
        if raw not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {raw!r}", line, "format")
        updates["format"] = raw
    raw, line = get("output")
    if raw is not None:
        updates["output"] = raw
    raw, line = get("include_zero_branches")
    if raw is not None:
        updates["include_zero_branches"] = _bool("include_zero_branches", raw, line)

    width = variant.width
    raw, line = get("agent")
    if raw is not None and raw not in ("default", "random"):
        updates["agent"] = _amplitudes("agent", raw, width, line)
    elif raw is not None:
        updates["agent"] = raw
    raw, line = get("environment")
    if raw is not None and raw not in ("default", "random"):
        updates["environment"] = tuple(
            _amplitudes("environment", part, width, line) for part in raw.split(";") if part.strip()
        )
    elif raw is not None:
        updates["environment"] = raw

    noise_kw, hw_kw = {}, {}
    for key, (raw, line) in entries.items():
        section, _, name = key.partition(".")
        if section == "noise":
            noise_kw[name] = None if name == "t_coh" and raw.lower() == "none" else _float(key, raw, line)
        elif section == "hardware":
            hw_kw[name] = _bool(key, raw, line) if name == "sequential_cnots" else _float(key, raw, line)
    try:
        if noise_kw:
            updates["noise"] = replace(cfg.noise, **noise_kw)
        if hw_kw:
            updates["hardware"] = replace(cfg.hardware, **hw_kw)
    except StateError as e:
        raise ConfigError(str(e)) from None

    cfg = replace(cfg, **updates)
    env = cfg.environment
    if not isinstance(env, str) and len(env) not in (1, cfg.cycles):
        raise ConfigError(
            f"environment lists {len(env)} states; need 1 or cycles={cfg.cycles}", get("environment")[1], "environment"
        )
    return cfg
