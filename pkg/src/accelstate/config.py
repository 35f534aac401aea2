"""Run configuration: JSON file, defaults, validation."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields

from .dsp import DEFAULT_CUTOFF_HZ, WINDOW_SIZES_S
from .errors import ConfigInvalid
from .evaluation import GridSpec
from .features import N_FEATURES
from .learn.model import ClassifierKind
from .series import DEFAULT_RATE_HZ

GRID_PRESETS = ("paper", "ci")


@dataclass
class RunConfig:
    accel: list[str] = field(default_factory=list)
    annotations: list[str] = field(default_factory=list)
    manifest: str | None = None  # synthetic cohort manifest, alternative to accel/annotations
    use_drifted: bool = False
    features_csv: str | None = None  # precomputed dataset, skips ingest
    out_dir: str = "out"
    window_size_s: int = 9
    classifier: str = "rf"
    k_features: int = 5
    grid_preset: str = "paper"
    grid: dict | None = None  # explicit value lists, overrides the preset
    cutoff_hz: float = DEFAULT_CUTOFF_HZ
    sample_rate_hz: float = DEFAULT_RATE_HZ
    correct_drift: bool = False
    seed: int = 0
    workers: int = 1
    paper_mode: bool = False

    def grid_spec(self, kind: str | None = None) -> GridSpec:
        kind = ClassifierKind(kind or self.classifier)
        if self.grid is not None and kind.value == self.classifier:
            return GridSpec(kind, self.grid)
        return GridSpec.paper(kind) if self.grid_preset == "paper" else GridSpec.ci(kind)

    def validate(self) -> RunConfig:
        if self.window_size_s not in WINDOW_SIZES_S:
            raise ConfigInvalid("window_size_s", f"must be one of {WINDOW_SIZES_S}")
        if self.classifier not in {k.value for k in ClassifierKind}:
            raise ConfigInvalid("classifier", "must be rf, gb or svm")
        if not 1 <= self.k_features <= N_FEATURES:
            raise ConfigInvalid("k_features", f"must lie in 1..{N_FEATURES}")
        if self.grid_preset not in GRID_PRESETS:
            raise ConfigInvalid("grid_preset", f"must be one of {GRID_PRESETS}")
        if self.grid is not None:
            try:
                GridSpec(ClassifierKind(self.classifier), self.grid).cells()
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid("grid", str(exc)) from None
        if not 0 < self.cutoff_hz < self.sample_rate_hz / 2:
            raise ConfigInvalid("cutoff_hz", "must lie between 0 and the Nyquist frequency")
        if self.sample_rate_hz <= 0:
            raise ConfigInvalid("sample_rate_hz", "must be positive")
        if self.workers < 1:
            raise ConfigInvalid("workers", "must be at least 1")
        if len(self.accel) != len(self.annotations):
            raise ConfigInvalid("annotations", "need one annotation file per accelerometer file")
        for name in ("accel", "annotations"):
            for p in getattr(self, name):
                if not os.path.isfile(p):
                    raise ConfigInvalid(name, f"no such file: {p}")
        for name in ("manifest", "features_csv"):
            p = getattr(self, name)
            if p is not None and not os.path.isfile(p):
                raise ConfigInvalid(name, f"no such file: {p}")
        return self

    def has_inputs(self) -> bool:
        return bool(self.accel) or self.manifest is not None or self.features_csv is not None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, out_dir: str | os.PathLike, name: str = "effective_config.json") -> str:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
        return path


_PATH_FIELDS = ("manifest", "features_csv", "out_dir")


def config_from_dict(d: dict, base_dir: str | None = None) -> RunConfig:
    """Build a config; relative paths resolve against ``base_dir``."""
    known = {f.name for f in fields(RunConfig)}
    for key in d:
        if key not in known:
            raise ConfigInvalid(key, "unknown field")
    d = dict(d)

    def resolve(p):
        if p is None or base_dir is None or os.path.isabs(p):
            return p
        return os.path.normpath(os.path.join(base_dir, p))

    for key in ("accel", "annotations"):
        if key in d:
            if not isinstance(d[key], list):
                raise ConfigInvalid(key, "must be a list of paths")
            d[key] = [resolve(p) for p in d[key]]
    for key in _PATH_FIELDS:
        if key in d:
            d[key] = resolve(d[key])
    try:
        cfg = RunConfig(**d)
    except TypeError as exc:
        raise ConfigInvalid("config", str(exc)) from None
    _check_types(cfg)
    return cfg


def _check_types(cfg: RunConfig) -> None:
    for name in ("window_size_s", "k_features", "seed", "workers"):
        v = getattr(cfg, name)
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigInvalid(name, "must be an integer")
    for name in ("cutoff_hz", "sample_rate_hz"):
        v = getattr(cfg, name)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigInvalid(name, "must be a number")
        setattr(cfg, name, float(v))
    for name in ("use_drifted", "correct_drift", "paper_mode"):
        if not isinstance(getattr(cfg, name), bool):
            raise ConfigInvalid(name, "must be true or false")


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid("config", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("config", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigInvalid("config", "top level must be an object")
    return config_from_dict(doc, os.path.dirname(os.path.abspath(path)))

