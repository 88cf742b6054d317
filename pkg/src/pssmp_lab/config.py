"""Experiment configuration: a flat ``key = value`` text format.

Grammar
-------
* One ``key = value`` pair per line; ``#`` starts a comment; blank lines are
  ignored.
* Keys are dotted.  Generic keys: ``experiment``, ``seed``, ``x0``,
  ``horizon``, ``grid_step``, ``replicas``, ``epsilon_ladder``, ``out_dir``.
* Model slots: ``<slot>.drift``, ``<slot>.sigma``, ``<slot>.jump_intensity``,
  ``<slot>.killing_rate``, ``<slot>.alpha`` and ``<slot>.jump`` whose value is
  ``none``, ``two_sided(p, eta_plus, eta_minus)``, ``gaussian(mean, sd)`` or
  ``constant(c)``.  Each experiment declares its slots (``model`` for most).
* ``threshold.<name>`` and ``param.<name>`` hold verdict thresholds and
  experiment knobs.  Lists are comma separated; ``inf`` is accepted.
* Any key may be prefixed with an experiment id (``E3.replicas = 200``); in
  suite mode unprefixed keys apply to every experiment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Any

from .errors import ConfigError, LabError
from .levy_model import ConstantJump, GaussianJump, LevyModel, NoJumps, TwoSidedExponential

EXPERIMENTS = tuple(f"E{i}" for i in range(1, 11))

_LADDER9 = ", ".join(repr(2.0 ** -k) for k in range(1, 10))

BM = {"drift": "0.5", "sigma": "1", "jump_intensity": "0", "jump": "none", "killing_rate": "0"}
KOU_KILLED = {"drift": "0.5", "sigma": "1", "jump_intensity": "1",
              "jump": "two_sided(0.5, 3, 3)", "killing_rate": "0.2"}
KOU_LC3 = dict(KOU_KILLED, killing_rate="0")
SPEC_POS = {"drift": "0.2", "sigma": "1", "jump_intensity": "1",
            "jump": "two_sided(1, 2, 2)", "killing_rate": "0"}


def _slot(name, fields, alpha="1"):
    out = {f"{name}.{k}": v for k, v in fields.items()}
    out[f"{name}.alpha"] = alpha
    return out


_COMMON = {"seed": "20240601", "x0": "1", "horizon": "inf", "grid_step": "0.01",
           "replicas": "1000", "epsilon_ladder": _LADDER9, "out_dir": "results"}

DEFAULTS: dict[str, dict[str, str]] = {
    "E1": {**_slot("model", BM), "grid_step": "0.001", "replicas": "50000",
           "param.rise": "20", "threshold.ks": "0.015",
           "threshold.slope_lo": "0.95", "threshold.slope_hi": "1.05"},
    "E2": {**_slot("model_a", BM), **_slot("model_b", KOU_LC3),
           **_slot("model_c", SPEC_POS, alpha="2"),
           "replicas": "1000", "param.bridge": "1", "threshold.m_tol": "1e-9"},
    "E3": {**_slot("model_a", BM), **_slot("model_b", KOU_LC3),
           **_slot("model_c", SPEC_POS, alpha="2"),
           "replicas": "1000", "threshold.rel_err": "1e-9"},
    "E4": {**_slot("model", BM), "replicas": "20000", "param.x_arms": "0.1, 0.01",
           "param.x_ref": "0.001", "param.t0": "1", "threshold.ks_final": "0.05"},
    "E5": {**_slot("model", KOU_KILLED), "grid_step": "0.001", "replicas": "100000",
           "param.pairs": "0.5:value>0.5; 1:value>1; 1:value>0.3; 2:value>0.5; "
                          "1:max>1.5&value>0.3",
           "threshold.z": "3", "threshold.min_pass": "4"},
    "E6": {**_slot("model", BM), "replicas": "100000", "param.t": "0.5",
           "param.event": "value>1.5", "param.gamma": "auto",
           "param.target_replicas": "100000",
           "threshold.z": "3", "threshold.min_hits": "200", "threshold.trend_rows": "4"},
    "E7": {**_slot("model", KOU_KILLED), "replicas": "100000", "param.t": "0.5",
           "param.event": "value>0.5", "param.target_replicas": "100000",
           "threshold.z": "3", "threshold.min_hits": "200", "threshold.trend_rows": "4"},
    "E8": {**_slot("model", {**BM, "drift": "1"}), **_slot("det_model", {**BM, "drift": "1", "sigma": "0"}),
           "param.vartheta": "1", "param.det_vartheta": "1",
           "param.x_grid": "4, 5, 6, 7, 8", "param.det_x_grid": "0, 1, 2, 3",
           "replicas": "29809580", "param.det_replicas": "1000000",
           "threshold.closed_tol": "1e-12", "threshold.agree": "0.05",
           "threshold.z_integral": "1e-4", "threshold.z": "3",
           "threshold.h_stability": "0.003"},
    "E9": {**_slot("model", KOU_KILLED), **_slot("bm_model", BM), **_slot("lc3_model", KOU_LC3),
           "replicas": "4000000",
           "epsilon_ladder": ", ".join(repr(2.0 ** -k) for k in range(1, 14)),
           "param.min_hits": "1000", "param.x_pair": "1, 2",
           "param.min_replicas": "50000", "param.min_grid_step": "0.5",
           "param.t_grid": "0.5, 1, 2, 3", "param.lc3_t_grid": "1, 2, 3, 4",
           "param.lc3_replicas": "20000", "param.bootstrap": "500",
           "threshold.dq_rel": "0.10", "threshold.scale_rel": "0.10", "threshold.z": "3"},
    "E10": {**_slot("model", BM), "replicas": "20000", "param.epsilon": "0.1",
            "param.t": "0.5", "param.x_grid": "0.05, 0.1, 0.2, 0.5, 1, 2",
            "param.min_grid_step": "0.5", "threshold.z": "3"},
}

_GENERIC = set(_COMMON) | {"experiment"}
_MODEL_FIELDS = {"drift", "sigma", "jump_intensity", "jump", "killing_rate", "alpha"}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    x0: float
    horizon: float
    grid_step: float
    replicas: int
    epsilon_ladder: tuple
    out_dir: str
    models: dict = field(default_factory=dict)
    alphas: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def model(self) -> LevyModel:
        return self.models["model"]

    def param(self, name, kind=float):
        return _convert(f"param.{name}", self.params[name], kind)

    def param_list(self, name):
        return _floats(f"param.{name}", self.params[name])

    def threshold(self, name):
        return self.thresholds[name]


def parse_text(text: str) -> dict[str, str]:
    """Parse the key-value grammar into an ordered raw dict."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[A-Za-z0-9_.]+", key):
            raise ConfigError(key, f"invalid key on line {lineno}")
        if key in out:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        out[key] = value
    return out


def _convert(key, value, kind):
    try:
        if kind is int:
            v = float(value)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind is float:
            return float(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot read {value!r} as {kind.__name__}") from None


def _floats(key, value):
    try:
        return tuple(float(s) for s in str(value).split(",") if s.strip())
    except ValueError:
        raise ConfigError(key, f"cannot read {value!r} as a list of numbers") from None


def parse_jump(key, text):
    text = text.strip().lower()
    if text == "none":
        return NoJumps()
    m = re.fullmatch(r"(two_sided|gaussian|constant)\((.*)\)", text)
    if not m:
        raise ConfigError(key, f"unknown jump law {text!r}")
    args = _floats(key, m.group(2))
    kinds = {"two_sided": (TwoSidedExponential, 3), "gaussian": (GaussianJump, 2),
             "constant": (ConstantJump, 1)}
    cls, n = kinds[m.group(1)]
    if len(args) != n:
        raise ConfigError(key, f"{m.group(1)} takes {n} arguments")
    try:
        return cls(*args)
    except LabError as exc:
        raise ConfigError(key, str(exc)) from None


def _build_model(slot, raw):
    get = lambda f: raw[f"{slot}.{f}"]
    try:
        model = LevyModel(
            drift=_convert(f"{slot}.drift", get("drift"), float),
            sigma=_convert(f"{slot}.sigma", get("sigma"), float),
            jump_intensity=_convert(f"{slot}.jump_intensity", get("jump_intensity"), float),
            jump_law=parse_jump(f"{slot}.jump", get("jump")),
            killing_rate=_convert(f"{slot}.killing_rate", get("killing_rate"), float),
        )
    except ConfigError:
        raise
    except LabError as exc:
        raise ConfigError(slot, str(exc)) from None
    alpha = _convert(f"{slot}.alpha", get("alpha"), float)
    if not alpha > 0:
        raise ConfigError(f"{slot}.alpha", "must be positive")
    return model, alpha


def select(raw: dict[str, str], experiment: str) -> dict[str, str]:
    """Keys for one experiment: unprefixed keys, overridden by prefixed ones."""
    out = {k: v for k, v in raw.items() if k.split(".", 1)[0] not in EXPERIMENTS}
    for k, v in raw.items():
        head, _, rest = k.partition(".")
        if head == experiment and rest:
            out[rest] = v
    return out


def _known_anywhere(key):
    return key in _GENERIC or any(key in d for d in DEFAULTS.values())


def build(raw: dict[str, str], experiment: str | None = None,
          overrides: dict[str, str] | None = None, suite: bool = False) -> ExperimentConfig:
    """Merge defaults, config keys and ``overrides`` into a validated config.

    In ``suite`` mode an unprefixed key that belongs to another experiment
    is skipped instead of rejected.
    """
    exp = experiment or raw.get("experiment")
    if exp is None:
        raise ConfigError("experiment", "missing (or use --suite)")
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {exp!r}")
    keys = select(raw, exp)
    keys.pop("experiment", None)
    merged = {**_COMMON, **DEFAULTS[exp]}
    prefixed = {k.partition(".")[2] for k in raw if k.partition(".")[0] == exp}
    for k, v in {**keys, **(overrides or {})}.items():
        if k not in merged and suite and k not in prefixed and _known_anywhere(k):
            continue
        if k not in merged:
            raise ConfigError(k, f"unknown key for {exp}")
        merged[k] = v
    slots = sorted({k.split(".")[0] for k in DEFAULTS[exp] if k.split(".")[-1] in _MODEL_FIELDS
                    and not k.startswith(("param.", "threshold."))})
    models, alphas = {}, {}
    for s in slots:
        models[s], alphas[s] = _build_model(s, merged)
    cfg = ExperimentConfig(
        experiment=exp,
        seed=_convert("seed", merged["seed"], int),
        x0=_convert("x0", merged["x0"], float),
        horizon=_convert("horizon", merged["horizon"], float),
        grid_step=_convert("grid_step", merged["grid_step"], float),
        replicas=_convert("replicas", merged["replicas"], int),
        epsilon_ladder=_floats("epsilon_ladder", merged["epsilon_ladder"]),
        out_dir=merged["out_dir"],
        models=models, alphas=alphas,
        thresholds={k[10:]: _convert(k, v, float) for k, v in merged.items()
                    if k.startswith("threshold.")},
        params={k[6:]: v for k, v in merged.items() if k.startswith("param.")},
    )
    for name in ("x0", "horizon", "grid_step"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(name, "must be positive")
    if not math.isfinite(cfg.grid_step):
        raise ConfigError("grid_step", "must be finite")
    if cfg.replicas < 1:
        raise ConfigError("replicas", "must be at least 1")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    if any(not e > 0 for e in cfg.epsilon_ladder):
        raise ConfigError("epsilon_ladder", "levels must be positive")
    if any(b >= a for a, b in zip(cfg.epsilon_ladder, cfg.epsilon_ladder[1:])):
        raise ConfigError("epsilon_ladder", "levels must be strictly decreasing")
    return cfg


def load(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_text(fh.read())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None


def with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(cfg, seed=seed)
