"""Experiment configuration.

Defaults mirror the full-scale experiment settings (N=4096, dense grids,
50k-100k optimizer steps at learning rate 1e-4), so ``scale="paper"``
needs no extra keys. The ``desk`` scale is a reduced preset sized for
minutes of runtime; any field can then be overridden by a YAML file whose
keys match the per-experiment dataclass fields below, plus the shared
``seed``, ``jobs``, ``trace_every``, ``out``, and nested ``optimizer``
section. Validation errors carry the dotted key path.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace

import yaml

from ..errors import ConfigError, ValidationError
from ..losses import DFT_MAG_MSE, TIME_MSE
from ..optim import AdamConfig

__all__ = [
    "DESK",
    "PAPER",
    "LANDSCAPE",
    "SINGLE",
    "MULTI",
    "FIT",
    "OptimizerSettings",
    "LandscapeSettings",
    "SingleSettings",
    "MultiSettings",
    "FitSettings",
    "ExperimentConfig",
    "default_config",
    "load_config_file",
    "apply_overrides",
    "validate_config",
    "config_hash",
]

DESK = "desk"
PAPER = "paper"

LANDSCAPE = "landscape"
SINGLE = "single"
MULTI = "multi"
FIT = "fit"

_LOSSES = (TIME_MSE, DFT_MAG_MSE)


@dataclass(frozen=True)
class OptimizerSettings:
    """Adam settings as they appear in config files."""

    steps: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def to_adam(self) -> AdamConfig:
        return AdamConfig(
            steps=self.steps,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
        )


@dataclass(frozen=True)
class LandscapeSettings:
    """Loss-vs-frequency sweep between two fixed sinusoids."""

    lengths: tuple = (32, 2048)
    grid_points: int = 1601
    freq_min: float = 0.0
    freq_max: float = math.pi
    target_freq: float = 0.3 * math.pi
    amplitude: float = 1.0


@dataclass(frozen=True)
class SingleSettings:
    """Single-sinusoid frequency estimation over a (frequency, SNR, seed) grid."""

    length: int = 4096
    freq_steps: int = 100
    freq_min: float = 0.1 * math.pi
    freq_max: float = 0.9 * math.pi
    snr_steps: int = 20
    snr_min: float = 0.0
    snr_max: float = 40.0
    seeds: int = 10
    losses: tuple = _LOSSES
    include_noiseless: bool = False


@dataclass(frozen=True)
class MultiSettings:
    """Multi-sinusoid estimation: surrogate vs. baseline vs. random control.

    ``draws`` targets are fitted; ``control_draws`` targets are scored
    against freshly drawn random-parameter models without any fitting
    (the control needs a larger sample than is affordable to fit).
    """

    length: int = 4096
    component_counts: tuple = (2, 8, 32)
    draws: int = 2000
    control_draws: int = 2000
    losses: tuple = _LOSSES
    freq_min: float = 0.1 * math.pi
    freq_max: float = 0.9 * math.pi
    amp_min: float = 0.1
    amp_max: float = 1.0
    snr_db: float | None = None


@dataclass(frozen=True)
class FitSettings:
    """One densely-traced fit against a synthetic or file-loaded target."""

    length: int = 4096
    components: int = 8
    model: str = "surrogate"
    loss: str = TIME_MSE
    freq_min: float = 0.1 * math.pi
    freq_max: float = 0.9 * math.pi
    amp_min: float = 0.1
    amp_max: float = 1.0
    snr_db: float | None = None
    target_file: str | None = None


_SETTINGS_TYPES = {
    LANDSCAPE: LandscapeSettings,
    SINGLE: SingleSettings,
    MULTI: MultiSettings,
    FIT: FitSettings,
}

_PAPER_OPTIMIZER = {
    LANDSCAPE: OptimizerSettings(steps=0, learning_rate=1e-4),
    SINGLE: OptimizerSettings(steps=50_000, learning_rate=1e-4),
    MULTI: OptimizerSettings(steps=100_000, learning_rate=1e-4),
    FIT: OptimizerSettings(steps=100_000, learning_rate=1e-4),
}

_DESK_OPTIMIZER = {
    LANDSCAPE: OptimizerSettings(steps=0, learning_rate=1e-3),
    SINGLE: OptimizerSettings(steps=10_000, learning_rate=1e-3),
    MULTI: OptimizerSettings(steps=20_000, learning_rate=1e-3),
    FIT: OptimizerSettings(steps=20_000, learning_rate=1e-3),
}

_DESK_SETTINGS = {
    LANDSCAPE: LandscapeSettings(),
    SINGLE: SingleSettings(
        length=512,
        freq_steps=10,
        snr_steps=5,
        # The desk step budget leaves an optimization floor near -100 dB in
        # squared frequency error; SNRs above ~20 dB would all collide with
        # it, so the desk sweep stops where the noise floor still dominates.
        snr_min=0.0,
        snr_max=20.0,
        seeds=3,
        include_noiseless=True,
    ),
    MULTI: MultiSettings(
        length=1024,
        component_counts=(2, 8),
        draws=50,
        control_draws=500,
        losses=(TIME_MSE,),
    ),
    FIT: FitSettings(length=1024, components=8),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved configuration for one experiment run."""

    experiment: str
    scale: str
    settings: object
    optimizer: OptimizerSettings
    seed: int = 0
    jobs: int = 1
    trace_every: int = 100
    out: str | None = None

    @property
    def out_dir(self) -> str:
        return self.out if self.out is not None else f"runs/{self.experiment}-{self.scale}"


def default_config(experiment: str, scale: str = DESK) -> ExperimentConfig:
    """The preset configuration for an experiment at the given scale."""
    if experiment not in _SETTINGS_TYPES:
        raise ConfigError(f"experiment: unknown experiment {experiment!r}")
    if scale == PAPER:
        settings = _SETTINGS_TYPES[experiment]()
        optimizer = _PAPER_OPTIMIZER[experiment]
    elif scale == DESK:
        settings = _DESK_SETTINGS[experiment]
        optimizer = _DESK_OPTIMIZER[experiment]
    else:
        raise ConfigError(f"scale: must be 'desk' or 'paper', got {scale!r}")
    return ExperimentConfig(
        experiment=experiment, scale=scale, settings=settings, optimizer=optimizer
    )


def load_config_file(path: str) -> dict:
    """Parse a YAML config file into a plain mapping.

    Raises :class:`ConfigError` with the parser's line/column on syntax
    errors, and if the document is not a mapping.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}") from err
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        problem = getattr(err, "problem", None) or str(err)
        raise ConfigError(f"{path}{where}: {problem}") from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping, got {type(data).__name__}")
    return data


def _want_int(path: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _want_float(path: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _want_bool(path: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected a boolean, got {value!r}")
    return value


def _want_str(path: str, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _want_list(path: str, value) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{path}: expected a list, got {value!r}")
    return list(value)


def _convert(path: str, value, current):
    """Coerce a YAML value to the type of the preset field it replaces."""
    if current is None or isinstance(current, str):
        # Optional fields (snr_db, target_file, out) and string fields.
        if value is None:
            return None
        if isinstance(current, str):
            return _want_str(path, value)
        return float(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else _want_str(path, value)
    if isinstance(current, bool):
        return _want_bool(path, value)
    if isinstance(current, int):
        return _want_int(path, value)
    if isinstance(current, float):
        return _want_float(path, value)
    if isinstance(current, tuple):
        items = _want_list(path, value)
        if not items:
            raise ConfigError(f"{path}: list must not be empty")
        element = current[0] if current else 0
        converted = []
        for i, item in enumerate(items):
            converted.append(_convert(f"{path}[{i}]", item, element))
        return tuple(converted)
    raise ConfigError(f"{path}: unsupported value {value!r}")


def _apply_section(path: str, target, data: dict):
    known = {f.name: getattr(target, f.name) for f in target.__dataclass_fields__.values()}
    updates = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(
                f"{path}{key}: unknown key (valid: {', '.join(sorted(known))})"
            )
        updates[key] = _convert(f"{path}{key}", value, known[key])
    return replace(target, **updates)


def apply_overrides(config: ExperimentConfig, data: dict) -> ExperimentConfig:
    """Overlay a parsed YAML mapping onto a preset configuration."""
    shared = {"seed", "jobs", "trace_every", "out"}
    settings_data = {}
    updates = {}
    for key, value in data.items():
        if key == "optimizer":
            if not isinstance(value, dict):
                raise ConfigError(f"optimizer: expected a mapping, got {value!r}")
            updates["optimizer"] = _apply_section("optimizer.", config.optimizer, value)
        elif key in shared:
            if key == "out":
                updates[key] = None if value is None else _want_str("out", value)
            elif key == "seed":
                updates[key] = _want_int("seed", value)
            else:
                updates[key] = _want_int(key, value)
        elif key in ("experiment", "scale"):
            raise ConfigError(
                f"{key}: set on the command line, not in the config file"
            )
        else:
            settings_data[key] = value
    if settings_data:
        updates["settings"] = _apply_section("", config.settings, settings_data)
    return replace(config, **updates)


def _check(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{path}: {message}")


def _check_freq_range(prefix: str, lo: float, hi: float, open_interval: bool) -> None:
    if open_interval:
        _check(0.0 < lo, f"{prefix}freq_min", f"must be > 0, got {lo}")
        _check(hi < math.pi, f"{prefix}freq_max", f"must be < pi, got {hi}")
    else:
        _check(0.0 <= lo, f"{prefix}freq_min", f"must be >= 0, got {lo}")
        _check(hi <= math.pi, f"{prefix}freq_max", f"must be <= pi, got {hi}")
    _check(lo <= hi, f"{prefix}freq_max", f"must be >= freq_min, got {lo} > {hi}")


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """Check every invariant of a resolved configuration; returns it unchanged."""
    _check(config.experiment in _SETTINGS_TYPES, "experiment", f"unknown {config.experiment!r}")
    _check(config.scale in (DESK, PAPER), "scale", f"must be 'desk' or 'paper', got {config.scale!r}")
    _check(0 <= config.seed < 2**64, "seed", f"must fit in an unsigned 64-bit integer, got {config.seed}")
    _check(config.jobs >= 1, "jobs", f"must be >= 1, got {config.jobs}")
    _check(config.trace_every >= 1, "trace_every", f"must be >= 1, got {config.trace_every}")
    try:
        config.optimizer.to_adam()
    except ValidationError as err:
        raise ConfigError(f"optimizer: {err}") from err

    s = config.settings
    expected = _SETTINGS_TYPES[config.experiment]
    _check(isinstance(s, expected), "settings", f"expected {expected.__name__}")
    if isinstance(s, LandscapeSettings):
        _check(len(s.lengths) >= 1, "lengths", "must list at least one signal length")
        for i, n in enumerate(s.lengths):
            _check(isinstance(n, int) and n >= 2, f"lengths[{i}]", f"must be an integer >= 2, got {n}")
        _check(s.grid_points >= 1000, "grid_points", f"must be >= 1000, got {s.grid_points}")
        _check_freq_range("", s.freq_min, s.freq_max, open_interval=False)
        _check(0.0 < s.target_freq < math.pi, "target_freq", f"must be in (0, pi), got {s.target_freq}")
        _check(s.amplitude > 0, "amplitude", f"must be > 0, got {s.amplitude}")
    elif isinstance(s, SingleSettings):
        _check(s.length >= 2, "length", f"must be >= 2, got {s.length}")
        _check(s.freq_steps >= 1, "freq_steps", f"must be >= 1, got {s.freq_steps}")
        _check_freq_range("", s.freq_min, s.freq_max, open_interval=True)
        _check(s.snr_steps >= 1, "snr_steps", f"must be >= 1, got {s.snr_steps}")
        _check(s.snr_min <= s.snr_max, "snr_max", f"must be >= snr_min, got {s.snr_min} > {s.snr_max}")
        _check(s.seeds >= 1, "seeds", f"must be >= 1, got {s.seeds}")
        _check_losses(s.losses)
    elif isinstance(s, MultiSettings):
        _check(s.length >= 2, "length", f"must be >= 2, got {s.length}")
        _check(len(s.component_counts) >= 1, "component_counts", "must list at least one |K|")
        for i, k in enumerate(s.component_counts):
            _check(isinstance(k, int) and k >= 1, f"component_counts[{i}]", f"must be a positive integer, got {k}")
        _check(s.draws >= 1, "draws", f"must be >= 1, got {s.draws}")
        _check(s.control_draws >= 1, "control_draws", f"must be >= 1, got {s.control_draws}")
        _check_losses(s.losses)
        _check_freq_range("", s.freq_min, s.freq_max, open_interval=True)
        _check(0 < s.amp_min <= s.amp_max, "amp_max", f"must satisfy 0 < amp_min <= amp_max, got ({s.amp_min}, {s.amp_max})")
        _check_snr(s.snr_db)
    elif isinstance(s, FitSettings):
        _check(s.length >= 2, "length", f"must be >= 2, got {s.length}")
        _check(s.components >= 1, "components", f"must be >= 1, got {s.components}")
        _check(s.model in ("surrogate", "baseline"), "model", f"must be 'surrogate' or 'baseline', got {s.model!r}")
        _check(s.loss in _LOSSES, "loss", f"must be one of {_LOSSES}, got {s.loss!r}")
        _check_freq_range("", s.freq_min, s.freq_max, open_interval=True)
        _check(0 < s.amp_min <= s.amp_max, "amp_max", f"must satisfy 0 < amp_min <= amp_max, got ({s.amp_min}, {s.amp_max})")
        _check_snr(s.snr_db)
        _check(
            s.target_file is None or isinstance(s.target_file, str),
            "target_file",
            f"must be a path or null, got {s.target_file!r}",
        )
    return config


def _check_losses(losses) -> None:
    _check(len(losses) >= 1, "losses", "must list at least one loss")
    for i, name in enumerate(losses):
        _check(name in _LOSSES, f"losses[{i}]", f"must be one of {_LOSSES}, got {name!r}")


def _check_snr(snr_db) -> None:
    if snr_db is not None:
        _check(
            isinstance(snr_db, (int, float)) and math.isfinite(snr_db),
            "snr_db",
            f"must be a finite number or null, got {snr_db!r}",
        )


def config_hash(config: ExperimentConfig) -> str:
    """Stable 12-hex-digit digest of everything that affects the results.

    ``out`` and ``jobs`` are excluded: neither changes a single emitted
    value, so re-running into another directory or with a different worker
    count keeps the hash (and the output bytes) identical.
    """
    payload = {
        "experiment": config.experiment,
        "scale": config.scale,
        "seed": config.seed,
        "trace_every": config.trace_every,
        "optimizer": asdict(config.optimizer),
        "settings": asdict(config.settings),
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
