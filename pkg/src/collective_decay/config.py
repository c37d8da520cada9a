"""Scenario configuration: a versioned, flat key-value schema with dotted paths.

A scenario file is TOML. Every setting has a dotted path; tables and dotted
keys are interchangeable, so these two spellings are the same::

    params.n_total = 100

    [params]
    n_total = 100

Schema version 1 keys:

``schema``                 must be 1
``model``                  bb_full | bb_logistic | bb_interacting | bf | fb
``params.*``               fields of the model's parameter record; bb models
                           also accept ``params.omega`` (instead of ``g``) and
                           ``params.eta`` (instead of ``u``)
``time.t_end``             final time (> 0)
``time.n_samples``         number of output samples (>= 2)
``time.spacing``           linear | log
``time.t_min``             first non-zero sample for log spacing
``integrator.*``           fields of the integrator configuration
``options.fast_neutrino``  bf only: drop the neutrino mode
``options.form``           fb only: pair | reduced
``outputs``                list of observable names (default: all)
``output_path``            file stem relative to the output directory
``tags.*``                 free-form labels copied into the run metadata

The sidecar JSON written next to every CSV stores the flattened config under
``"config"`` and can be passed back as ``--config``.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bb import BBParams
from .bf import BFParams, log_time_grid
from .errors import ConfigInvalid
from .fb import DEFAULT_CONFIG as FB_DEFAULT_CONFIG
from .fb import FBParams
from .ode import IntegratorConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
MODELS = ("bb_full", "bb_logistic", "bb_interacting", "bf", "fb")
PARAM_TYPES = {"bb": BBParams, "bf": BFParams, "fb": FBParams}
TOP_KEYS = {"schema", "model", "outputs", "output_path"}
SECTIONS = {"params", "time", "integrator", "options", "tags"}
TIME_KEYS = {"t_end", "n_samples", "spacing", "t_min"}
OPTION_KEYS = {"bb_full": set(), "bb_logistic": set(), "bb_interacting": set(),
               "bf": {"fast_neutrino"}, "fb": {"form"}}
BB_COLUMNS = {
    "bb_full": ["n_a", "n_b", "n_c", "s_re", "s_im", "n_b_frac", "rate"],
    "bb_logistic": ["n_b", "n_b_frac", "rate"],
    "bb_interacting": ["n_b", "n_b_frac", "rate"],
}
FB_COLUMNS = ["n_a", "n_b", "n_b_frac", "t_gamma_n2"]
BF_COLUMNS = ["n_a", "decayed_frac", "n_c", "decay_rate"]


def family(model: str) -> str:
    return model.split("_")[0]


def flatten(tree: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in tree.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, path + "."))
        else:
            out[path] = value
    return out


def _number(path, value, integer=False, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalid(path, f"expected a number, got {value!r}")
    if integer and float(value) != int(value):
        raise ConfigInvalid(path, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigInvalid(path, "must be finite")
    if positive and not value > 0:
        raise ConfigInvalid(path, "must be positive")
    return int(value) if integer else value


@dataclass
class ScenarioConfig:
    model: str
    params: object
    t_end: float
    n_samples: int
    spacing: str = "linear"
    t_min: float | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    outputs: list = field(default_factory=list)
    output_path: str = "run"
    options: dict = field(default_factory=dict)
    tags: dict = field(default_factory=dict)
    flat: dict = field(default_factory=dict, repr=False)

    def sample_times(self) -> np.ndarray:
        if self.spacing == "log":
            return log_time_grid(self.t_min, self.t_end, self.n_samples)
        return np.linspace(0.0, self.t_end, self.n_samples)

    def columns(self) -> list:
        if self.model == "bf":
            return BF_COLUMNS + [f"n_k_{k}" for k in range(self.params.n_levels)]
        if self.model == "fb":
            return list(FB_COLUMNS)
        return list(BB_COLUMNS[self.model])

    def with_value(self, path: str, value) -> "ScenarioConfig":
        flat = dict(self.flat)
        if path not in flat and not path.startswith("params."):
            raise ConfigInvalid(path, "sweep path must address an existing setting or a model parameter")
        flat[path] = value
        return parse_flat(flat)


def _bb_params(p: dict) -> BBParams:
    p = dict(p)
    if "omega" in p:
        if "g" in p:
            raise ConfigInvalid("params.omega", "give either g or omega, not both")
        omega = _number("params.omega", p.pop("omega"))
        if omega < 0:
            raise ConfigInvalid("params.omega", "must be >= 0")
        gamma = p.get("gamma_cap", 1.0)
        delta = p.get("delta", 0.0)
        p["g"] = math.sqrt(omega * (delta**2 + gamma**2) / (2.0 * gamma))
    if "eta" in p:
        if "u" in p:
            raise ConfigInvalid("params.eta", "give either u or eta, not both")
        eta = _number("params.eta", p.pop("eta"))
        if eta < 0:
            raise ConfigInvalid("params.eta", "must be >= 0")
        p["u"] = p.get("gamma_cap", 1.0) * math.sqrt(eta) / p["n_total"]
    return BBParams(**p)


def _build_params(model: str, raw: dict):
    kind = family(model)
    cls = PARAM_TYPES[kind]
    allowed = {f.name for f in fields(cls)} | ({"omega", "eta"} if kind == "bb" else set())
    for key in raw:
        if key not in allowed:
            raise ConfigInvalid(f"params.{key}", f"unknown parameter for model {model}")
    for key, value in raw.items():
        if key in ("e_levels", "gamma_profile"):
            if not isinstance(value, (list, tuple)):
                raise ConfigInvalid(f"params.{key}", "expected a list of numbers")
            for v in value:
                _number(f"params.{key}", v)
        else:
            _number(f"params.{key}", value)
    required = [f.name for f in fields(cls) if f.default is MISSING]
    for name in required:
        if name not in raw and not (name == "g" and "omega" in raw):
            raise ConfigInvalid(f"params.{name}", f"missing (required for model {model})")
    try:
        if kind == "bb":
            return _bb_params(raw)
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
    except TypeError as exc:
        raise ConfigInvalid("params", str(exc)) from None
    except ValueError as exc:
        msg = str(exc)
        name = next((f.name for f in fields(cls) if msg.startswith(f.name)), None)
        raise ConfigInvalid(f"params.{name}" if name else "params", msg) from None


def parse_flat(flat: dict) -> ScenarioConfig:
    """Validate a flattened config mapping and build a :class:`ScenarioConfig`."""
    flat = dict(flat)
    sections = {s: {} for s in SECTIONS}
    for path, value in flat.items():
        head, _, rest = path.partition(".")
        if rest and head in SECTIONS:
            sections[head][rest] = value
        elif path not in TOP_KEYS:
            raise ConfigInvalid(path, "unknown setting")

    if flat.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigInvalid("schema", f"unsupported schema version {flat['schema']!r}, expected {SCHEMA_VERSION}")
    model = flat.get("model")
    if model not in MODELS:
        raise ConfigInvalid("model", f"must be one of {', '.join(MODELS)}, got {model!r}")
    params = _build_params(model, sections["params"])

    time = sections["time"]
    for key in time:
        if key not in TIME_KEYS:
            raise ConfigInvalid(f"time.{key}", "unknown setting")
    if "t_end" not in time:
        raise ConfigInvalid("time.t_end", "missing")
    t_end = float(_number("time.t_end", time["t_end"], positive=True))
    n_samples = _number("time.n_samples", time.get("n_samples", 201), integer=True)
    if n_samples < 2:
        raise ConfigInvalid("time.n_samples", "must be >= 2")
    spacing = time.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigInvalid("time.spacing", f"must be linear or log, got {spacing!r}")
    t_min = None
    if spacing == "log":
        t_min = float(_number("time.t_min", time.get("t_min", t_end * 1e-6), positive=True))
        if t_min >= t_end:
            raise ConfigInvalid("time.t_min", "must be below time.t_end")
        if n_samples < 3:
            raise ConfigInvalid("time.n_samples", "log spacing needs at least 3 samples")
    elif "t_min" in time:
        raise ConfigInvalid("time.t_min", "only used with log spacing")

    base = FB_DEFAULT_CONFIG.to_dict() if model == "fb" else IntegratorConfig().to_dict()
    integ = sections["integrator"]
    for key, value in integ.items():
        if key not in base:
            raise ConfigInvalid(f"integrator.{key}", "unknown setting")
        if key != "method":
            _number(f"integrator.{key}", value, integer=key == "max_steps")
    base.update(integ)
    try:
        integrator = IntegratorConfig(**base)
    except ValueError as exc:
        msg = str(exc)
        name = next((k for k in base if msg.startswith(k)), None)
        raise ConfigInvalid(f"integrator.{name}" if name else "integrator", msg) from None

    options = sections["options"]
    for key, value in options.items():
        if key not in OPTION_KEYS[model]:
            raise ConfigInvalid(f"options.{key}", f"not an option of model {model}")
    if "fast_neutrino" in options and not isinstance(options["fast_neutrino"], bool):
        raise ConfigInvalid("options.fast_neutrino", "expected true or false")
    if "form" in options and options["form"] not in ("pair", "reduced"):
        raise ConfigInvalid("options.form", "must be pair or reduced")

    output_path = flat.get("output_path", model)
    if not isinstance(output_path, str) or not output_path:
        raise ConfigInvalid("output_path", "expected a non-empty string")

    cfg = ScenarioConfig(model, params, t_end, n_samples, spacing, t_min, integrator,
                         [], output_path, options, sections["tags"], flat)
    outputs = flat.get("outputs")
    available = cfg.columns()
    if outputs is None:
        outputs = available
    if not isinstance(outputs, list) or not outputs:
        raise ConfigInvalid("outputs", "expected a non-empty list of observable names")
    for name in outputs:
        if name not in available:
            raise ConfigInvalid("outputs", f"unknown observable {name!r} for model {model}; "
                                           f"available: {', '.join(available)}")
    cfg.outputs = list(outputs)
    return cfg


def load_config(path) -> ScenarioConfig:
    """Read a TOML scenario or a sidecar JSON written by a previous run."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigInvalid("--config", f"cannot read {path}: {exc.strerror}") from None
    if path.suffix == ".json":
        try:
            flat = json.loads(text.decode("utf-8"))["config"]
        except (ValueError, KeyError, TypeError):
            raise ConfigInvalid("config", f"{path} is not a run sidecar") from None
    else:
        try:
            flat = flatten(tomllib.loads(text.decode("utf-8")))
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigInvalid("--config", f"{path}: {exc}") from None
    return parse_flat(flat)
