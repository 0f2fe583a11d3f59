"""JSON run configurations for the command line.

Errors carry the JSON path of the offending field (``channels[1].strengths``)
or, for syntax errors, the line and column.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .hamiltonians import CHANNELS, CrossKerr, ErrorChannel, GateConfig
from .harness import SweepPlan
from .propagation import IntegratorConfig
from .quantum import DOWN, UP, MotionalEnsemble

SWEEP_SCHEMA = "gatebudget.sweep/1"
BUDGET_SCHEMA = "gatebudget.budget/1"

_by_name = {cls.name: cls for cls in CHANNELS.values()}
CHANNEL_NAMES = tuple(_by_name)

_DD = np.kron(DOWN, DOWN)
_UU = np.kron(UP, UP)
NAMED_STATES = {
    "down": DOWN,
    "up": UP,
    "plus_x": (UP + DOWN) / math.sqrt(2),
    "mixed_3_1": math.sqrt(3 / 4) * DOWN + math.sqrt(1 / 4) * UP,
    "down_down": _DD,
    "plus": math.sqrt(1 / 3) * _DD + math.sqrt(2 / 3) * _UU,
    "minus": math.sqrt(1 / 3) * _DD - math.sqrt(2 / 3) * _UU,
}
DEFAULT_STATES = {"one-qubit": "down", "two-qubit": "down_down"}


def _fail(path, msg):
    if isinstance(msg, ConfigError):
        raise msg
    raise ConfigError(f"{path}: {msg}")


def _obj(x, path):
    if not isinstance(x, dict):
        _fail(path, f"expected an object, got {type(x).__name__}")
    return x


def _real(x, path, minimum=None, positive=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        _fail(path, f"expected a finite number, got {x!r}")
    if positive and not x > 0:
        _fail(path, f"must be > 0, got {x!r}")
    if minimum is not None and x < minimum:
        _fail(path, f"must be >= {minimum}, got {x!r}")
    return float(x)


def _int(x, path, minimum=None):
    if isinstance(x, bool) or not isinstance(x, int):
        _fail(path, f"expected an integer, got {x!r}")
    if minimum is not None and x < minimum:
        _fail(path, f"must be >= {minimum}, got {x!r}")
    return x


def _keys(d, allowed, path):
    extra = sorted(set(d) - set(allowed))
    if extra:
        _fail(path, f"unknown field(s) {', '.join(extra)}")


def load_json(source) -> dict:
    """Parse a path or JSON text; syntax errors report line and column."""
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc.strerror or exc}") from None
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return _obj(doc, "$")


def bundled_config(name: str) -> Path:
    p = resources.files("gatebudget") / "configs" / name
    if not p.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return Path(str(p))


def parse_gate(d, kind, path) -> GateConfig:
    d = _obj(d or {}, path)
    _keys(d, ("omega_g", "loops", "axis", "angle", "detuning", "gate_time"), path)
    kw = {}
    if "omega_g" in d:
        kw["omega_g"] = _real(d["omega_g"], f"{path}.omega_g", positive=True)
    if "axis" in d:
        if d["axis"] not in ("x", "y", "z"):
            _fail(f"{path}.axis", f"must be x, y or z, got {d['axis']!r}")
        kw["axis"] = d["axis"]
    if "loops" in d:
        if kind != "two-qubit":
            _fail(f"{path}.loops", "only two-qubit gates have loops")
        kw["loops"] = _int(d["loops"], f"{path}.loops", 1)
    if "angle" in d:
        if kind != "one-qubit":
            _fail(f"{path}.angle", "only one-qubit gates take a rotation angle")
        kw["angle"] = _real(d["angle"], f"{path}.angle", positive=True)
    for k in ("detuning", "gate_time"):
        if k in d:
            kw[k] = _real(d[k], f"{path}.{k}", positive=True)
    try:
        return GateConfig(kind=kind, **kw)
    except ValueError as exc:
        _fail(path, exc)


def parse_state(x, kind, path) -> np.ndarray:
    """A named state or an amplitude list; entries are reals or ``[re, im]`` pairs."""
    dim = 2 if kind == "one-qubit" else 4
    if x is None:
        x = DEFAULT_STATES[kind]
    if isinstance(x, str):
        if x not in NAMED_STATES:
            _fail(path, f"unknown state {x!r}; known: {', '.join(NAMED_STATES)}")
        psi = NAMED_STATES[x]
    else:
        if not isinstance(x, list):
            _fail(path, "expected a state name or a list of amplitudes")
        amps = []
        for i, a in enumerate(x):
            if isinstance(a, list) and len(a) == 2:
                amps.append(complex(_real(a[0], f"{path}[{i}][0]"), _real(a[1], f"{path}[{i}][1]")))
            else:
                amps.append(complex(_real(a, f"{path}[{i}]")))
        psi = np.array(amps, dtype=complex)
        norm = np.linalg.norm(psi)
        if norm == 0:
            _fail(path, "state is not normalizable")
        psi = psi / norm
    if psi.shape != (dim,):
        _fail(path, f"a {kind} state needs {dim} amplitudes, got {psi.shape[0]}")
    return psi


def parse_motion(d, path) -> MotionalEnsemble:
    d = _obj(d if d is not None else {"kind": "fixed", "n": 0}, path)
    kind = d.get("kind", "fixed")
    try:
        if kind == "fixed":
            _keys(d, ("kind", "n"), path)
            return MotionalEnsemble.fixed(_int(d.get("n", 0), f"{path}.n", 0))
        if kind == "thermal":
            _keys(d, ("kind", "nbar"), path)
            return MotionalEnsemble.thermal(_real(d.get("nbar"), f"{path}.nbar", 0.0))
        if kind == "explicit":
            _keys(d, ("kind", "probs"), path)
            probs = _obj(d.get("probs"), f"{path}.probs")
            parsed = {}
            for k, v in probs.items():
                if not k.isdigit():
                    _fail(f"{path}.probs", f"phonon numbers must be non-negative integers, got {k!r}")
                parsed[int(k)] = _real(v, f"{path}.probs.{k}", 0.0)
            return MotionalEnsemble.explicit(parsed)
    except ValueError as exc:
        _fail(path, exc)
    _fail(f"{path}.kind", f"must be fixed, thermal or explicit, got {kind!r}")


def channel_class(name, path) -> type[ErrorChannel]:
    cls = _by_name.get(name) or CHANNELS.get(name)
    if cls is None:
        _fail(path, f"unknown channel {name!r}; known: {', '.join(CHANNEL_NAMES)}")
    return cls


def _channel_params(cls, params, path, with_strength=True) -> dict:
    params = _obj(params or {}, path)
    fields = {f for f in cls.__dataclass_fields__}
    allowed = fields if with_strength else fields - {cls.strength_field}
    _keys(params, allowed, path)
    return {k: _real(v, f"{path}.{k}") for k, v in params.items()}


def _build_channel(cls, kw, path) -> ErrorChannel:
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        _fail(path, exc)


def _strengths(x, path) -> tuple:
    if not isinstance(x, list) or not x:
        _fail(path, "expected a non-empty list of numbers")
    vals = tuple(_real(v, f"{path}[{i}]", 0.0) for i, v in enumerate(x))
    if any(b <= a for a, b in zip(vals[:-1], vals[1:])):
        _fail(path, "strengths must be strictly increasing")
    return vals


def _schema(doc, expected):
    if "schema" not in doc:
        _fail("$.schema", f"missing; expected {expected!r}")
    if doc["schema"] != expected:
        _fail("$.schema", f"unsupported schema {doc['schema']!r}; expected {expected!r}")


@dataclass
class SweepConfig:
    plans: list[SweepPlan] = field(default_factory=list)
    description: str = ""


_SWEEP_KEYS = (
    "schema", "description", "gate_1q", "gate_2q", "state_1q", "state_2q", "motional", "motional_b",
    "channels", "comparison", "walsh_k", "markov_method", "n_samples", "band_halfwidth", "seed",
    "integrator", "audit",
)


def parse_sweep(doc: dict, channels=None, strengths=None) -> SweepConfig:
    """Build one :class:`SweepPlan` per configured channel.

    ``channels`` (names or ``["all"]``) and ``strengths`` override the file.
    """
    _schema(doc, SWEEP_SCHEMA)
    _keys(doc, _SWEEP_KEYS, "$")
    gates = {
        "one-qubit": parse_gate(doc.get("gate_1q"), "one-qubit", "$.gate_1q"),
        "two-qubit": parse_gate(doc.get("gate_2q"), "two-qubit", "$.gate_2q"),
    }
    states = {
        "one-qubit": parse_state(doc.get("state_1q"), "one-qubit", "$.state_1q"),
        "two-qubit": parse_state(doc.get("state_2q"), "two-qubit", "$.state_2q"),
    }
    motion = parse_motion(doc.get("motional"), "$.motional")
    motion_b = parse_motion(doc.get("motional_b"), "$.motional_b") if "motional_b" in doc else None
    integ = _obj(doc.get("integrator", {}), "$.integrator")
    _keys(integ, ("steps_per_fastest_period", "scheme", "convergence_check", "min_steps"), "$.integrator")
    try:
        icfg = IntegratorConfig(**integ)
    except (TypeError, ValueError) as exc:
        _fail("$.integrator", exc)

    entries = doc.get("channels")
    if not isinstance(entries, list) or not entries:
        _fail("$.channels", "expected a non-empty list of channel entries")
    specs = []
    for i, e in enumerate(entries):
        p = f"$.channels[{i}]"
        e = _obj(e, p)
        _keys(e, ("name", "params", "strengths"), p)
        cls = channel_class(e.get("name"), f"{p}.name")
        kw = _channel_params(cls, e.get("params"), f"{p}.params", with_strength=False)
        vals = _strengths(e.get("strengths"), f"{p}.strengths") if strengths is None else None
        specs.append((cls, kw, vals, p))
    if channels:
        if list(channels) == ["all"]:
            specs = [(cls, {}, None, f"--channels {cls.name}") for cls in _by_name.values()]
        else:
            known = {s[0]: s for s in specs}
            picked = []
            for name in channels:
                cls = channel_class(name, "--channels")
                picked.append(known.get(cls, (cls, {}, None, f"--channels {name}")))
            specs = picked

    common = dict(
        comparison=doc.get("comparison", "instantaneous"),
        markov_method=doc.get("markov_method", "lindblad"),
        n_samples=_int(doc.get("n_samples", 400), "$.n_samples", 100),
        seed=_int(doc.get("seed", 0), "$.seed", 0),
        audit=doc.get("audit", "all"),
        integrator=icfg,
    )
    if doc.get("band_halfwidth") is not None:
        common["band_halfwidth"] = _real(doc["band_halfwidth"], "$.band_halfwidth", positive=True)
    walsh = doc.get("walsh_k")
    if walsh is not None:
        walsh = _int(walsh, "$.walsh_k", 0)

    plans = []
    for cls, kw, vals, p in specs:
        vals = vals if strengths is None else tuple(strengths)
        if vals is None:
            _fail(f"{p}.strengths", "no strengths given for this channel")
        ch = _build_channel(cls, kw, p)
        kind = ch.gate_kind
        mb = motion_b if motion_b is not None else (motion if cls is CrossKerr else None)
        try:
            plans.append(
                SweepPlan(
                    ch,
                    gates[kind],
                    states[kind],
                    motion,
                    vals,
                    motional_b=mb if cls is CrossKerr else None,
                    walsh_k=walsh if cls.name == "motional_shift_2q" else None,
                    **common,
                )
            )
        except ValueError as exc:
            _fail(p, exc)
    return SweepConfig(plans, str(doc.get("description", "")))


@dataclass
class BudgetInput:
    gates: dict
    states: dict
    motional: MotionalEnsemble
    motional_b: MotionalEnsemble
    channels: list[ErrorChannel]


def parse_budget(doc: dict) -> BudgetInput:
    """Channels absent from ``strengths`` contribute zero."""
    _schema(doc, BUDGET_SCHEMA)
    _keys(doc, ("schema", "description", "gate_1q", "gate_2q", "state_1q", "state_2q", "motional", "motional_b", "channels"), "$")
    gates = {
        "one-qubit": parse_gate(doc.get("gate_1q"), "one-qubit", "$.gate_1q"),
        "two-qubit": parse_gate(doc.get("gate_2q"), "two-qubit", "$.gate_2q"),
    }
    states = {
        "one-qubit": parse_state(doc.get("state_1q"), "one-qubit", "$.state_1q"),
        "two-qubit": parse_state(doc.get("state_2q"), "two-qubit", "$.state_2q"),
    }
    motion = parse_motion(doc.get("motional"), "$.motional")
    motion_b = parse_motion(doc.get("motional_b"), "$.motional_b") if "motional_b" in doc else motion
    given = _obj(doc.get("channels", {}), "$.channels")
    for name in given:
        channel_class(name, f"$.channels.{name}")
    chans = []
    for name, cls in _by_name.items():
        p = f"$.channels.{name}"
        kw = _channel_params(cls, given.get(name), p)
        chans.append(_build_channel(cls, kw, p))
    return BudgetInput(gates, states, motion, motion_b, chans)
