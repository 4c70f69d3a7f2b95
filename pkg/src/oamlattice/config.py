"""Config files: unit-carrying TOML in, validated domain objects out.

Every physical quantity in a config file is a string with an explicit
unit ("1.0 /us", "2.5 us", "0.5 pi", "0.3 m"); bare numbers are only
accepted for genuinely dimensionless fields.  Unknown keys are collected
and rejected in one pass so a typo list comes back whole.  Canonical
internal units are microseconds and rad/us (meters for cavity geometry,
which converts to rad/s on output).

`manifest_text` renders a resolved configuration back to the same format,
with every "auto" replaced by the concrete value the run used, so a
manifest is itself a config file that reproduces the run byte-for-byte.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .dynamics import Scenario, auto_extent
from .errors import ConfigurationError
from .filters import FilterStage, gamma_for_target
from .lattice import (
    InputPulse,
    LatticeConfig,
    LossModel,
    PhaseSchedule,
    PhaseSegment,
)
from .memory import MemoryPlan, suggest_lattice
from .physical import CavitySpec

__all__ = [
    "load_toml",
    "resolve_config",
    "apply_override",
    "apply_sweep_axis",
    "manifest_text",
    "parse_quantity",
    "format_quantity",
    "sweep_points",
    "COMMANDS",
    "build_losses",
    "build_plan",
    "build_pulse",
    "build_memory_lattice",
    "build_scenario",
    "build_filter_stages",
    "build_cavity",
]

_REQUIRED = object()

_UNITS = {
    "time": {"us": 1.0, "ns": 1e-3, "ms": 1e3, "s": 1e6},
    "rate": {"/us": 1.0, "/ns": 1e3, "/ms": 1e-3, "/s": 1e-6},
    "phase": {"rad": 1.0, "pi": math.pi, "deg": math.pi / 180.0},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
}

_CANONICAL_UNIT = {"time": "us", "rate": "/us", "phase": "rad", "length": "m"}

_NUMBER_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(.*?)\s*$"
)


def parse_quantity(text, kind: str, key: str = "value") -> float:
    """Parse a unit-carrying string to the canonical unit for `kind`."""
    units = _UNITS[kind]
    if not isinstance(text, str):
        raise ConfigurationError(
            f"{key} needs a unit string like \"1.0 {_CANONICAL_UNIT[kind]}\", "
            f"got {text!r}"
        )
    m = _NUMBER_RE.match(text)
    if not m:
        raise ConfigurationError(f"{key}: cannot parse quantity {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if unit not in units:
        raise ConfigurationError(
            f"{key}: unknown unit {unit!r} in {text!r}; "
            f"accepted: {', '.join(sorted(units))}"
        )
    return value * units[unit]


def format_quantity(value: float, kind: str) -> str:
    """Render a canonical-unit value back to its config string form."""
    return f'"{float(value)!r} {_CANONICAL_UNIT[kind]}"'


@dataclass(frozen=True)
class Field:
    kind: str
    default: object = _REQUIRED
    choices: tuple = ()


SCHEMA: dict[str, dict[str, Field]] = {
    "run": {
        "command": Field("str", _REQUIRED),
        "dt": Field("auto_time", "auto"),
        "rotating_frame": Field("bool", True),
        "jobs": Field("int", 1),
        "svg": Field("bool", True),
    },
    "lattice": {
        "kappa": Field("rate", "1.0 /us"),
        "extent": Field("auto_int", "auto"),
        "num_aux": Field("int", 1),
        "step_index": Field("int", 1),
        "omega0": Field("rate", "0.0 /us"),
    },
    "losses": {
        "port_rate": Field("rate", "0.0 /us"),
        "site0_extra": Field("rate", "0.0 /us"),
        "exp_amplitude": Field("rate", "0.0 /us"),
        "exp_range": Field("float", 1.0),
        "uniform": Field("rate", "0.0 /us"),
    },
    "plan": {
        "variant": Field("str", "preset_echo", choices=("preset_echo", "on_demand")),
        "write_time": Field("time", "20.0 us"),
        "hold_time": Field("time", "10.0 us"),
        "ramp": Field("time", "0.0 us"),
        "readout_time": Field("auto_time", "auto"),
        "interpolation": Field(
            "str", "raised_cosine", choices=("raised_cosine", "linear")
        ),
    },
    "pulse": {
        "kind": Field("str", "gaussian", choices=("gaussian",)),
        "width": Field("auto_time", "auto"),
        "scale": Field("float", 1.0),
        "carrier": Field("rate", "0.0 /us"),
        "center": Field("auto_time", "auto"),
    },
    "schedule": {
        "segments": Field("segments", ()),
        "interpolation": Field(
            "str", "raised_cosine", choices=("raised_cosine", "linear")
        ),
    },
    "simulate": {
        "t_start": Field("time", "0.0 us"),
        "t_end": Field("time", _REQUIRED),
        "boundary_fraction": Field("float", 1e-6),
    },
    "filter": {
        "kappa": Field("rate", "1.0 /us"),
        "omega0": Field("rate", "0.0 /us"),
        "targets": Field("rate_list", None),
        "port_rates": Field("rate_list", None),
        "span": Field("float", 3.0),
        "points": Field("int", 2001),
        "refine": Field("bool", True),
    },
    "design": {
        "kappa": Field("rate", "1.0 /us"),
        "center": Field("rate", "0.0 /us"),
        "width_3db": Field("rate", _REQUIRED),
        "rejection_db": Field("float", -25.0),
        "stages": Field("int", 2),
    },
    "bands": {
        "kappa": Field("rate", "1.0 /us"),
        "omega0": Field("rate", "0.0 /us"),
        "phi": Field("phase_list", ("0.0 rad",)),
        "num_aux": Field("int", 1),
        "points": Field("int", 256),
    },
    "cavity": {
        "length": Field("length", "0.3 m"),
        "bs_reflectivity": Field("float", 0.25),
    },
}

COMMAND_SECTIONS: dict[str, tuple[str, ...]] = {
    "memory": ("run", "lattice", "losses", "plan", "pulse", "sweep"),
    "simulate": ("run", "lattice", "losses", "schedule", "pulse", "simulate", "sweep"),
    "filter": ("run", "filter", "losses", "sweep"),
    "design": ("run", "design", "losses", "sweep"),
    "bands": ("run", "bands"),
    "params": ("run", "cavity", "sweep"),
}

COMMANDS = tuple(COMMAND_SECTIONS)

_SEGMENT_KEYS = {"start": "time", "phase": "phase", "ramp": "time"}


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid TOML: {exc}")


def _parse_segments(raw, key: str, errors: list[str]):
    if not isinstance(raw, (list, tuple)):
        errors.append(f"{key} must be an array of tables")
        return ()
    out = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            errors.append(f"{key}[{i}] must be a table")
            continue
        for k in item:
            if k not in _SEGMENT_KEYS:
                errors.append(f"unknown key {key}[{i}].{k}")
        seg = {}
        for k, kind in _SEGMENT_KEYS.items():
            if k not in item:
                if k == "ramp":
                    seg[k] = 0.0
                    continue
                errors.append(f"{key}[{i}] is missing {k}")
                continue
            try:
                seg[k] = parse_quantity(item[k], kind, f"{key}[{i}].{k}")
            except ConfigurationError as exc:
                errors.append(str(exc))
        out.append(seg)
    return tuple(out)


def _parse_value(field: Field, raw, key: str, errors: list[str]):
    try:
        if field.kind in ("time", "rate", "phase", "length"):
            return parse_quantity(raw, field.kind, key)
        if field.kind == "auto_time":
            if raw == "auto":
                return "auto"
            if isinstance(raw, float):  # already canonical (defaults, sweeps)
                return raw
            return parse_quantity(raw, "time", key)
        if field.kind == "auto_int":
            if raw == "auto":
                return "auto"
            if isinstance(raw, int) and not isinstance(raw, bool):
                return raw
            raise ConfigurationError(f'{key} must be an integer or "auto"')
        if field.kind == "float":
            if isinstance(raw, (int, float)) and not isinstance(raw, bool):
                return float(raw)
            raise ConfigurationError(f"{key} must be a number, got {raw!r}")
        if field.kind == "int":
            if isinstance(raw, int) and not isinstance(raw, bool):
                return raw
            raise ConfigurationError(f"{key} must be an integer, got {raw!r}")
        if field.kind == "bool":
            if isinstance(raw, bool):
                return raw
            raise ConfigurationError(f"{key} must be true or false, got {raw!r}")
        if field.kind == "str":
            if not isinstance(raw, str):
                raise ConfigurationError(f"{key} must be a string, got {raw!r}")
            if field.choices and raw not in field.choices:
                raise ConfigurationError(
                    f"{key} must be one of {', '.join(field.choices)}; got {raw!r}"
                )
            return raw
        if field.kind in ("rate_list", "phase_list"):
            if raw is None:
                return None
            if not isinstance(raw, (list, tuple)):
                raise ConfigurationError(f"{key} must be an array")
            unit_kind = field.kind.split("_", 1)[0]
            return tuple(
                parse_quantity(item, unit_kind, f"{key}[{i}]")
                for i, item in enumerate(raw)
            )
        if field.kind == "segments":
            return _parse_segments(raw, key, errors)
        raise AssertionError(f"unhandled field kind {field.kind}")
    except ConfigurationError as exc:
        errors.append(str(exc))
        return None


def _axis_field(key: str, sections: tuple[str, ...]) -> Field:
    parts = key.split(".")
    if len(parts) != 2:
        raise ConfigurationError(f"sweep axis {key!r} must look like section.key")
    sec, name = parts
    if sec not in sections or sec == "sweep":
        raise ConfigurationError(f"sweep axis {key!r}: no section {sec!r} here")
    if name not in SCHEMA[sec]:
        raise ConfigurationError(f"sweep axis {key!r}: unknown key")
    if key == "run.command":
        raise ConfigurationError("run.command cannot be swept")
    return SCHEMA[sec][name]


def resolve_config(raw: dict, command: str) -> dict:
    """Validate a raw TOML mapping and return the canonical config dict.

    All problems (unknown sections, unknown keys, bad units, missing
    required fields) are gathered and raised together.
    """
    if command not in COMMAND_SECTIONS:
        raise ConfigurationError(f"unknown command {command!r}")
    sections = COMMAND_SECTIONS[command]
    errors: list[str] = []
    for sec in raw:
        if sec not in sections:
            errors.append(f"unknown section [{sec}] for command {command}")

    out: dict = {}
    for sec in sections:
        if sec == "sweep":
            continue
        data = raw.get(sec, {})
        if not isinstance(data, dict):
            errors.append(f"[{sec}] must be a table")
            data = {}
        for key in data:
            if key not in SCHEMA[sec]:
                errors.append(f"unknown key {sec}.{key}")
        resolved = {}
        for key, fld in SCHEMA[sec].items():
            if key in data:
                resolved[key] = _parse_value(fld, data[key], f"{sec}.{key}", errors)
            elif fld.default is _REQUIRED:
                if sec == "run" and key == "command":
                    resolved[key] = command
                else:
                    errors.append(f"{sec}.{key} is required for {command} runs")
            else:
                resolved[key] = _parse_value(
                    fld, fld.default, f"{sec}.{key}", errors
                )
        out[sec] = resolved

    if out.get("run", {}).get("command") not in (None, command):
        errors.append(
            f"config says command = {out['run']['command']!r} but was run "
            f"as {command!r}"
        )

    axes: dict[str, tuple] = {}
    raw_sweep = raw.get("sweep", {})
    if raw_sweep and "sweep" not in sections:
        errors.append(f"command {command} does not support sweeps")
        raw_sweep = {}
    if not isinstance(raw_sweep, dict):
        errors.append("[sweep] must be a table")
        raw_sweep = {}
    for key, values in raw_sweep.items():
        try:
            fld = _axis_field(key, sections)
        except ConfigurationError as exc:
            errors.append(str(exc))
            continue
        if not isinstance(values, (list, tuple)) or not values:
            errors.append(f"sweep axis {key!r} needs a nonempty array of values")
            continue
        parsed = tuple(
            _parse_value(fld, v, f"sweep {key}[{i}]", errors)
            for i, v in enumerate(values)
        )
        axes[key] = parsed
    out["sweep"] = axes

    if errors:
        raise ConfigurationError(
            f"invalid configuration ({len(errors)} problem"
            f"{'s' if len(errors) != 1 else ''})",
            details=errors,
        )
    return out


def apply_override(raw: dict, assignment: str) -> None:
    """Apply one --set section.key=value override to the raw mapping."""
    if "=" not in assignment:
        raise ConfigurationError(f"--set needs section.key=value, got {assignment!r}")
    path, text = assignment.split("=", 1)
    parts = path.strip().split(".")
    if len(parts) != 2:
        raise ConfigurationError(f"--set key must look like section.key: {path!r}")
    sec, key = parts
    raw.setdefault(sec, {})[key] = _coerce_cli_value(text.strip())


def apply_sweep_axis(raw: dict, assignment: str) -> None:
    """Apply one --sweep section.key=v1,v2,... axis to the raw mapping."""
    if "=" not in assignment:
        raise ConfigurationError(
            f"--sweep needs section.key=v1,v2,..., got {assignment!r}"
        )
    path, text = assignment.split("=", 1)
    values = [_coerce_cli_value(v.strip()) for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigurationError(f"--sweep axis {path!r} has no values")
    raw.setdefault("sweep", {})[path.strip()] = values


def _coerce_cli_value(text: str):
    """Interpret a command-line value the way TOML would.

    Quantities keep their unit ("5us" and "5 us" both work); bare numbers
    become numbers; true/false become booleans; anything else is a string.
    """
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    m = _NUMBER_RE.match(text)
    if m and m.group(2):
        # quantity like "5us", "5 us", or "0.01/us": normalize the spacing
        return f"{m.group(1)} {m.group(2)}"
    return text


def _render_value(fld: Field, value) -> str | None:
    if value is None:
        return None
    kind = fld.kind
    if kind in ("time", "rate", "phase", "length"):
        return format_quantity(value, kind)
    if kind == "auto_time":
        return '"auto"' if value == "auto" else format_quantity(value, "time")
    if kind == "auto_int":
        return '"auto"' if value == "auto" else str(int(value))
    if kind == "float":
        return repr(float(value))
    if kind == "int":
        return str(int(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "str":
        return f'"{value}"'
    if kind in ("rate_list", "phase_list"):
        unit_kind = kind.split("_", 1)[0]
        inner = ", ".join(format_quantity(v, unit_kind) for v in value)
        return f"[{inner}]"
    if kind == "segments":
        rows = []
        for seg in value:
            rows.append(
                "{ start = %s, phase = %s, ramp = %s }"
                % (
                    format_quantity(seg["start"], "time"),
                    format_quantity(seg["phase"], "phase"),
                    format_quantity(seg["ramp"], "time"),
                )
            )
        if not rows:
            return "[]"
        return "[\n    " + ",\n    ".join(rows) + ",\n]"
    raise AssertionError(f"unhandled field kind {kind}")


def manifest_text(resolved: dict, command: str) -> str:
    """Render the resolved configuration as a reusable config file."""
    lines = []
    for sec in COMMAND_SECTIONS[command]:
        if sec == "sweep":
            axes = resolved.get("sweep") or {}
            if axes:
                lines.append("[sweep]")
                for key in axes:
                    fld = _axis_field(key, COMMAND_SECTIONS[command])
                    inner = ", ".join(
                        _render_value(fld, v) for v in axes[key]
                    )
                    lines.append(f'"{key}" = [{inner}]')
                lines.append("")
            continue
        lines.append(f"[{sec}]")
        for key, fld in SCHEMA[sec].items():
            rendered = _render_value(fld, resolved[sec][key])
            if rendered is not None:
                lines.append(f"{key} = {rendered}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def sweep_points(resolved: dict) -> list[dict]:
    """Cartesian product of sweep axes as per-point override dicts.

    Points run in lexicographic order of axis indices, axes in the order
    they appear in the config.
    """
    axes = resolved.get("sweep") or {}
    if not axes:
        return []
    keys = list(axes)
    points: list[dict] = [{}]
    for key in keys:
        points = [
            {**p, key: v} for p in points for v in axes[key]
        ]
    return points


def point_config(resolved: dict, point: dict) -> dict:
    """Resolved config for one sweep point: base values plus axis values."""
    out = {
        sec: dict(vals) if isinstance(vals, dict) else vals
        for sec, vals in resolved.items()
    }
    out["sweep"] = {}
    for key, value in point.items():
        sec, name = key.split(".")
        out[sec][name] = value
    return out


# ---------------------------------------------------------------------------
# Builders from a resolved config to domain objects.  Each returns the
# object and, where an "auto" was resolved, patches the concrete value back
# into the dict so the emitted manifest pins it.


def build_losses(resolved: dict, require_no_port: bool = False) -> LossModel:
    sec = resolved["losses"]
    if require_no_port and sec["port_rate"] != 0.0:
        raise ConfigurationError(
            "losses.port_rate must be 0 here: each filter stage's port rate "
            "comes from its target (or filter.port_rates)"
        )
    return LossModel(
        port_rate=sec["port_rate"],
        site0_extra=sec["site0_extra"],
        exp_amplitude=sec["exp_amplitude"],
        exp_range=sec["exp_range"],
        uniform=sec["uniform"],
    )


def build_plan(resolved: dict) -> MemoryPlan:
    sec = resolved["plan"]
    readout = sec["readout_time"]
    return MemoryPlan(
        variant=sec["variant"],
        write_time=sec["write_time"],
        hold_time=sec["hold_time"],
        ramp=sec["ramp"],
        readout_time=None if readout == "auto" else readout,
        interpolation=sec["interpolation"],
    )


def build_pulse(resolved: dict, default_center: float) -> InputPulse:
    sec = resolved["pulse"]
    kappa = _pulse_kappa(resolved)
    width = sec["width"]
    if width == "auto":
        width = 2.5 / kappa
        sec["width"] = width
    center = sec["center"]
    if center == "auto":
        center = default_center
        sec["center"] = center
    return InputPulse(
        kind=sec["kind"],
        scale=sec["scale"],
        width=width,
        carrier=sec["carrier"],
        center=center,
    )


def _pulse_kappa(resolved: dict) -> float:
    return resolved["lattice"]["kappa"]


def build_memory_lattice(resolved: dict, plan: MemoryPlan) -> LatticeConfig:
    sec = resolved["lattice"]
    if sec["extent"] == "auto":
        lattice = suggest_lattice(
            plan,
            sec["kappa"],
            step_index=sec["step_index"],
            omega0=sec["omega0"],
        )
        if lattice.num_aux != sec["num_aux"]:
            raise ConfigurationError(
                f"plan.variant {plan.variant!r} needs lattice.num_aux = "
                f"{plan.required_num_aux()}, config says {sec['num_aux']}"
            )
        sec["extent"] = lattice.j_max
        return lattice
    extent = sec["extent"]
    return LatticeConfig(
        kappa=sec["kappa"],
        j_min=-extent,
        j_max=extent,
        omega0=sec["omega0"],
        num_aux=sec["num_aux"],
        step_index=sec["step_index"],
    )


def resolve_dt(resolved: dict, kappa: float) -> float:
    run = resolved["run"]
    if run["dt"] == "auto":
        run["dt"] = 1e-3 / kappa
    return run["dt"]


def build_scenario(resolved: dict) -> Scenario:
    """Scenario for the generic `simulate` command."""
    lat = resolved["lattice"]
    sim = resolved["simulate"]
    segs = resolved["schedule"]["segments"]
    if not segs:
        raise ConfigurationError("simulate needs at least one schedule segment")
    schedule = PhaseSchedule(
        tuple(PhaseSegment(s["start"], s["phase"], s["ramp"]) for s in segs),
        interpolation=resolved["schedule"]["interpolation"],
    )
    pulse = build_pulse(resolved, default_center=sim["t_start"] + 3.0 * _auto_width(resolved))
    losses = build_losses(resolved)
    span = sim["t_end"] - sim["t_start"]
    if lat["extent"] == "auto":
        lat["extent"] = auto_extent(lat["kappa"], span)
    lattice = LatticeConfig(
        kappa=lat["kappa"],
        j_min=-lat["extent"],
        j_max=lat["extent"],
        omega0=lat["omega0"],
        num_aux=lat["num_aux"],
        step_index=lat["step_index"],
    )
    dt = resolve_dt(resolved, lattice.kappa)
    return Scenario(
        lattice=lattice,
        losses=losses,
        schedule=schedule,
        input=pulse,
        t_end=sim["t_end"],
        t_start=sim["t_start"],
        dt=dt,
        rotating_frame=resolved["run"]["rotating_frame"],
        boundary_fraction=sim["boundary_fraction"],
    )


def _auto_width(resolved: dict) -> float:
    width = resolved["pulse"]["width"]
    if width == "auto":
        return 2.5 / _pulse_kappa(resolved)
    return width


def build_filter_stages(resolved: dict) -> tuple[FilterStage, ...]:
    sec = resolved["filter"]
    targets = sec["targets"]
    rates = sec["port_rates"]
    if (targets is None) == (rates is None):
        raise ConfigurationError(
            "set exactly one of filter.targets (absorption frequencies) or "
            "filter.port_rates"
        )
    losses = build_losses(resolved, require_no_port=True)
    kappa, omega0 = sec["kappa"], sec["omega0"]
    if targets is not None:
        # derived, not patched back: the manifest keeps targets as the one
        # source so re-resolving it never sees both fields set
        rates = tuple(gamma_for_target(t, kappa, omega0) for t in targets)
    return tuple(
        FilterStage(kappa=kappa, port_rate=r, omega0=omega0, losses=losses)
        for r in rates
    )


def build_cavity(resolved: dict) -> CavitySpec:
    sec = resolved["cavity"]
    return CavitySpec(
        length=sec["length"], bs_reflectivity=sec["bs_reflectivity"]
    )
