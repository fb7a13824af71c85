"""Experiment configuration: a line-based ``key = value`` format with sections.

Unknown sections or keys are hard errors, duplicates are reported with both
line numbers, and every default is materialized into the resolved config so
the manifest echoes the exact parameters a run used.  Serialization is
canonical (fixed section order, sorted keys, round-trip float formatting),
which makes the config hash stable.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import InputError

COMMANDS = (
    "spectrum",
    "check-conditions",
    "stabilize",
    "steer",
    "random-growth",
    "nonlinear-stabilize",
    "linearized-probe",
)

# section -> key -> (type tag, default)
SCHEMA = {
    "experiment": {
        "command": ("str", "spectrum"),
        "seed": ("int", 0),
        "output_dir": ("str", "results"),
    },
    "grid": {
        "n_points": ("int", 2048),
        "length": ("float", 1.0),
        "truncation": ("int", 12),
    },
    "potential": {
        "v": ("str", "linear 1"),
        "q": ("str", "gauss 1 0.37 0.08"),
        "csv": ("str", ""),
    },
    "control": {
        "dt": ("float", 1e-3),
        "alpha": ("float", 0.1),
        "delta": ("float", 0.5),
        "target": ("int", 1),
        "hold": ("float", 1e-3),
        "u_max": ("float", 0.0),
        "horizon": ("float", 60.0),
        "stop_threshold": ("float", 1e-4),
        "eps": ("float", 0.1),
        "budget": ("float", 0.0),
        "max_time": ("int", 600),
        "state": ("str", "random smooth"),
        "steer_from": ("str", "mode 2"),
        "steer_to": ("str", "mode 1"),
        "source_mode": ("int", 2),
        "probe_mode": ("int", 1),
        "index_bound": ("int", 8),
        "coupling_tol": ("float", 1e-8),
        "gap_tol": ("float", 1e-6),
    },
    "stochastic": {
        "model": ("str", "inverse-square"),
        "amplitude": ("float", 1.0),
        "j_trunc": ("int", 16),
        "noise": ("str", "gaussian"),
        "paths": ("int", 200),
        "max_steps": ("int", 500),
        "radius": ("float", 0.0),
        "radius_scale": ("float", 0.5),
        "order": ("float", 1.0),
        "block": ("int", 50),
        "n_max": ("int", 8),
        "growth_steps": ("int", 400),
        "growth_order": ("float", 2.0),
        "state": ("str", "mode 1"),
        "write_paths": ("bool", False),
    },
}

SECTION_ORDER = tuple(SCHEMA)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved configuration: every schema key has a value."""

    sections: dict

    @property
    def command(self):
        return self.sections["experiment"]["command"]

    @property
    def seed(self):
        return self.sections["experiment"]["seed"]

    def get(self, section, key):
        return self.sections[section][key]

    def replaced(self, section, key, value):
        sections = {s: dict(kv) for s, kv in self.sections.items()}
        sections[section][key] = value
        return ExperimentConfig(sections)


def _convert(raw, tag, where):
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise InputError(f"{where}: cannot parse {raw!r} as {tag}") from exc


def parse_config(text):
    """Parse config text; returns the resolved ExperimentConfig."""
    values = {}
    seen = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise InputError(f"line {lineno}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise InputError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise InputError(f"line {lineno}: key outside any section")
        key, _, raw_val = line.partition("=")
        key = key.strip()
        val = raw_val.strip()
        if key not in SCHEMA[section]:
            raise InputError(f"line {lineno}: unknown key {key!r} in section [{section}]")
        if (section, key) in seen:
            raise InputError(
                f"line {lineno}: duplicate key {key!r} in section [{section}] "
                f"(first set on line {seen[(section, key)]})")
        seen[(section, key)] = lineno
        tag, _ = SCHEMA[section][key]
        values[(section, key)] = _convert(val, tag, f"line {lineno}")

    sections = {
        sec: {key: values.get((sec, key), default)
              for key, (_, default) in SCHEMA[sec].items()}
        for sec in SECTION_ORDER
    }
    cfg = ExperimentConfig(sections)
    _validate(cfg)
    return cfg


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """Canonical text form; parse(serialize(parse(t))) == parse(t)."""
    lines = []
    for sec in SECTION_ORDER:
        lines.append(f"[{sec}]")
        for key in sorted(SCHEMA[sec]):
            lines.append(f"{key} = {_format(cfg.sections[sec][key])}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg):
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


def _validate(cfg):
    g = cfg.sections["grid"]
    c = cfg.sections["control"]
    s = cfg.sections["stochastic"]
    e = cfg.sections["experiment"]
    checks = [
        (e["command"] in COMMANDS, f"unknown command {e['command']!r}"),
        (e["seed"] >= 0, "seed must be a non-negative integer"),
        (g["n_points"] >= 16, "grid n_points must be >= 16"),
        (g["length"] > 0, "grid length must be positive"),
        (1 <= g["truncation"] <= g["n_points"] // 4,
         "truncation must lie in 1 .. n_points/4"),
        (c["dt"] > 0, "control dt must be positive"),
        (c["alpha"] > 0, "control alpha must be positive"),
        (c["delta"] > 0, "control delta must be positive"),
        (c["target"] >= 1, "control target must be >= 1"),
        (c["hold"] > 0, "control hold must be positive"),
        (c["u_max"] >= 0, "control u_max must be >= 0 (0 disables)"),
        (c["horizon"] >= 0, "control horizon must be >= 0"),
        (c["eps"] > 0, "control eps must be positive"),
        (c["budget"] >= 0, "control budget must be >= 0 (0 disables)"),
        (c["max_time"] >= 0, "control max_time must be >= 0"),
        (s["paths"] >= 1, "stochastic paths must be >= 1"),
        (s["max_steps"] >= 0, "stochastic max_steps must be >= 0"),
        (s["j_trunc"] >= 1, "stochastic j_trunc must be >= 1"),
        (s["amplitude"] > 0, "stochastic amplitude must be positive"),
        (s["order"] > 0, "stochastic order must be positive"),
        (s["radius"] >= 0, "stochastic radius must be >= 0"),
        (s["radius_scale"] >= 0, "stochastic radius_scale must be >= 0"),
        (s["radius"] > 0 or s["radius_scale"] > 0,
         "set stochastic radius or radius_scale"),
        (s["block"] >= 1, "stochastic block must be >= 1"),
        (s["n_max"] >= 1, "stochastic n_max must be >= 1"),
        (s["growth_steps"] >= 10, "stochastic growth_steps must be >= 10"),
        (s["growth_order"] > 0, "stochastic growth_order must be positive"),
        (s["model"] in ("flat", "inverse-square"),
         f"unknown stochastic model {s['model']!r}"),
        (s["noise"] in ("gaussian", "logistic"),
         f"unknown noise family {s['noise']!r}"),
    ]
    for ok, message in checks:
        if not ok:
            raise InputError(message)
