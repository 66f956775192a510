"""Run configuration: JSON files, study presets and strict validation.

A config file is a JSON object. ``study`` selects a preset whose values act
as defaults; the fields that define a study (variant, priors, fixed values,
discrepancy mode) may be repeated in the file but not changed, so a preset
never silently overrides what the user wrote. ``study: "custom"`` has no
defaults for those fields.
"""
from dataclasses import dataclass, field, asdict
import copy
import json

from .acquisition import AcquisitionConfig
from .discrepancy import DiscrepancyConfig
from .gp import KernelConfig
from .inference import COMPLETION_MODES, EPSILON_RULES
from .params import ParameterError, ParameterSpace, PriorSpec
from .simulator import VARIANTS, MenuLayout, QLearningConfig

SCHEMA_VERSION = 1
PRESET_VERSION = 1
PARAMETER_LEVELS = {"f_dur": 0, "d_sel": 1, "p_rec": 2, "p_sem": 3}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key when known."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


# -- presets ----------------------------------------------------------------

_F_DUR_PRIOR = {"kind": "truncated-gaussian", "mean": 300.0, "std": 100.0, "min": 0.0, "max": 600.0}
_D_SEL_PRIOR = {"kind": "truncated-gaussian", "mean": 300.0, "std": 300.0, "min": 0.0, "max": 1000.0}
_UNIT_PRIOR = {"kind": "uniform", "min": 0.0, "max": 1.0}


def _study2(variant, truth, n_acq):
    names = ["f_dur", "d_sel", "p_rec", "p_sem"][:VARIANTS.index(variant) + 1]
    priors = {"f_dur": _F_DUR_PRIOR, "d_sel": _D_SEL_PRIOR,
              "p_rec": _UNIT_PRIOR, "p_sem": _UNIT_PRIOR}
    return {
        "variant": variant,
        "priors": {n: priors[n] for n in names},
        "fixed": {},
        "truth": dict(zip(names, truth)),
        "discrepancy": {"mode": "split-conditions"},
        "budgets": {"subset": 2500, "n_acquisitions": n_acq},
    }


PRESETS = {
    "study1": {
        "variant": "baseline",
        "priors": {"f_dur": _F_DUR_PRIOR},
        "fixed": {},
        "truth": {"f_dur": 300.0},
        "discrepancy": {"mode": "aggregate"},
        "budgets": {"subset": 2500, "n_acquisitions": 32},
    },
    # default ground truths are the published population-level estimates
    "study2-baseline": _study2("baseline", [210.0], 32),
    "study2-v1": _study2("v1", [170.0, 320.0], 48),
    "study2-v2": _study2("v2", [290.0, 300.0, 0.87], 64),
    "study2-v3": _study2("v3", [280.0, 290.0, 0.69, 0.93], 72),
    "study3": {
        "variant": "v3",
        "priors": {
            "p_rec": {"kind": "truncated-gaussian", "mean": 0.69, "std": 0.2, "min": 0.0, "max": 1.0},
            "p_sem": {"kind": "truncated-gaussian", "mean": 0.93, "std": 0.2, "min": 0.0, "max": 1.0},
        },
        "fixed": {"f_dur": 280.0, "d_sel": 290.0},
        "truth": {"p_rec": 0.7, "p_sem": 0.9},
        "discrepancy": {"mode": "split-conditions"},
        "budgets": {"subset": 200, "n_acquisitions": 60},
    },
}
STUDIES = tuple(PRESETS) + ("custom",)


# -- config dataclasses -------------------------------------------------------

@dataclass(frozen=True)
class Budgets:
    train_episodes: int = 100_000
    n_sessions: int = 2500
    subset: object = None  # int or None for all sessions
    n_init: int = 8
    n_acquisitions: int = 32
    workers: int = 1
    refit_every: int = 1
    rejection_samples: int = 200
    accept_quantile: float = 0.05


@dataclass(frozen=True)
class RunConfig:
    study: str
    variant: str
    priors: dict
    fixed: dict
    truth: dict
    observed: object = None  # path to a summary JSON, replaces synthetic truth
    discrepancy: DiscrepancyConfig = field(default_factory=DiscrepancyConfig)
    budgets: Budgets = field(default_factory=Budgets)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    qlearning: QLearningConfig = field(default_factory=QLearningConfig)
    layout: MenuLayout = field(default_factory=MenuLayout)
    epsilon_rule: str = "gp-min"
    completion: str = "as-completed"
    export_grid: int = 101
    seed: int = 0
    out: str = "runs/out"
    schema_version: int = SCHEMA_VERSION

    @property
    def names(self):
        return list(self.priors)

    def space(self):
        return ParameterSpace.from_priors(
            {n: PriorSpec.from_dict(p) for n, p in self.priors.items()})

    def truth_vector(self):
        return [self.truth[n] for n in self.names]

    def to_dict(self):
        d = asdict(self)
        d["priors"] = copy.deepcopy(self.priors)
        return d

    def replace(self, **changes):
        """Copy with top-level or ``budgets`` fields changed, re-validated."""
        d = self.to_dict()
        for k, v in changes.items():
            if k in _SECTION_TYPES["budgets"].__dataclass_fields__ and k not in d:
                d["budgets"][k] = v
            else:
                d[k] = v
        return _build(d)


_SECTION_TYPES = {
    "discrepancy": DiscrepancyConfig,
    "budgets": Budgets,
    "kernel": KernelConfig,
    "acquisition": AcquisitionConfig,
    "qlearning": QLearningConfig,
    "layout": MenuLayout,
}
_TOP_KEYS = set(RunConfig.__dataclass_fields__)


# -- loading ------------------------------------------------------------------

def _parse_json(text, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError(
            f"{source}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}\n    {line}\n    {' ' * (exc.colno - 1)}^") from None


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError("expected a JSON object", where or "<root>")
    for k in d:
        if k not in allowed:
            path = f"{where}.{k}" if where else k
            raise ConfigError(f"unknown key {k!r}", path)


def _merge_preset(user):
    study = user.get("study", "custom")
    if study not in STUDIES:
        raise ConfigError(f"unknown study preset {study!r}; choose from {list(STUDIES)}", "study")
    if study == "custom":
        return copy.deepcopy(user)
    preset = copy.deepcopy(PRESETS[study])
    for key in ("variant", "priors", "fixed"):
        if key in user and user[key] != preset[key]:
            raise ConfigError(f"conflicts with preset {study!r} (preset value {preset[key]!r})", key)
    mode = user.get("discrepancy", {}).get("mode")
    if mode is not None and mode != preset["discrepancy"]["mode"]:
        raise ConfigError(f"conflicts with preset {study!r} "
                          f"(preset value {preset['discrepancy']['mode']!r})", "discrepancy.mode")
    merged = preset
    for k, v in user.items():
        if k in _SECTION_TYPES and isinstance(v, dict):
            merged.setdefault(k, {}).update(v)
        else:
            merged[k] = v
    return merged


def _section(d, key):
    cls = _SECTION_TYPES[key]
    raw = d.get(key, {})
    _check_keys(raw, set(cls.__dataclass_fields__), key)
    try:
        if cls is MenuLayout:
            return MenuLayout.from_dict(raw)
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key) from None


def _positive_int(value, name, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", name)
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigError(f"must be {'non-negative' if allow_zero else 'positive'}", name)


def _validate_budgets(b):
    for name in ("train_episodes", "refit_every", "workers", "rejection_samples"):
        _positive_int(getattr(b, name), f"budgets.{name}", allow_zero=(name == "train_episodes"))
    _positive_int(b.n_sessions, "budgets.n_sessions")
    _positive_int(b.n_init, "budgets.n_init", allow_zero=True)
    _positive_int(b.n_acquisitions, "budgets.n_acquisitions", allow_zero=True)
    if b.n_init + b.n_acquisitions < 1:
        raise ConfigError("n_init + n_acquisitions must be positive", "budgets")
    if b.subset is not None:
        _positive_int(b.subset, "budgets.subset")
        if b.subset > b.n_sessions:
            raise ConfigError("cannot exceed n_sessions", "budgets.subset")
    if not 0.0 < b.accept_quantile <= 1.0:
        raise ConfigError("must lie in (0, 1]", "budgets.accept_quantile")


def _build(d):
    _check_keys(d, _TOP_KEYS, "")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {version!r}", "schema_version")
    study = d.get("study", "custom")
    for key in ("variant", "priors"):
        if key not in d:
            raise ConfigError("required for a custom study", key)
    variant = d["variant"]
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}", "variant")
    priors, fixed = d["priors"], d.get("fixed", {}) or {}
    truth = d.get("truth", {}) or {}
    _check_keys(priors, PARAMETER_LEVELS, "priors")
    _check_keys(fixed, PARAMETER_LEVELS, "fixed")
    if not priors:
        raise ConfigError("at least one inferred parameter is required", "priors")
    both = sorted(set(priors) & set(fixed))
    if both:
        raise ConfigError(f"parameters both fixed and inferred: {both}", "fixed")
    level = VARIANTS.index(variant)
    for name in list(priors) + list(fixed):
        if PARAMETER_LEVELS[name] > level:
            raise ConfigError(f"parameter {name!r} has no effect in variant {variant!r}",
                              "priors" if name in priors else "fixed")
    try:
        space = ParameterSpace.from_priors(
            {n: PriorSpec.from_dict(p) for n, p in priors.items()})
    except (ParameterError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc), "priors") from None
    observed = d.get("observed")
    _check_keys(truth, set(priors), "truth")
    if observed is None:
        missing = [n for n in priors if n not in truth]
        if missing:
            raise ConfigError(f"ground truth missing for {missing}", "truth")
        for ax in space.axes:
            if not ax.lower <= truth[ax.name] <= ax.upper:
                raise ConfigError(f"{ax.name}={truth[ax.name]} outside [{ax.lower}, {ax.upper}]",
                                  "truth")
    sections = {k: _section(d, k) for k in _SECTION_TYPES}
    _validate_budgets(sections["budgets"])
    _positive_int(d.get("seed", 0), "seed", allow_zero=True)
    _positive_int(d.get("export_grid", 101), "export_grid")
    if d.get("epsilon_rule", "gp-min") not in EPSILON_RULES:
        raise ConfigError(f"choose from {list(EPSILON_RULES)}", "epsilon_rule")
    if d.get("completion", "as-completed") not in COMPLETION_MODES:
        raise ConfigError(f"choose from {list(COMPLETION_MODES)}", "completion")
    return RunConfig(
        study=study, variant=variant,
        priors={n: PriorSpec.from_dict(p).to_dict() for n, p in priors.items()},
        fixed={k: float(v) for k, v in fixed.items()},
        truth={k: float(v) for k, v in truth.items()},
        observed=observed,
        epsilon_rule=d.get("epsilon_rule", "gp-min"),
        completion=d.get("completion", "as-completed"),
        export_grid=d.get("export_grid", 101),
        seed=d.get("seed", 0),
        out=str(d.get("out", "runs/out")),
        **sections,
    )


def config_from_dict(d):
    """Validate a config mapping, applying preset defaults."""
    _check_keys(d, _TOP_KEYS, "")
    return _build(_merge_preset(d))


def load_config(path):
    """Read, merge with its preset and validate a JSON config file."""
    with open(path) as fh:
        text = fh.read()
    return config_from_dict(_parse_json(text, str(path)))


def preset_config(study, **overrides):
    """Config for a named preset with top-level or budget overrides."""
    return config_from_dict({"study": study}).replace(**overrides)
