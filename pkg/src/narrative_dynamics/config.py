"""Run configuration: loading, defaults, strict validation, env overrides.

Every key may be overridden from the environment with the ``NARRDYN_``
prefix; nested keys join with a double underscore, e.g.
``NARRDYN_THRESHOLDS__MIN_FREQ=4`` or ``NARRDYN_WINDOW__NUM_WEEKS=6``.
Values are parsed as YAML scalars.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from .corpus import CorpusError, StudyWindow
from .narratives import PROFILES

ENV_PREFIX = "NARRDYN_"

DEFAULT_THRESHOLDS: dict[str, Any] = {
    "min_freq": 3,
    "min_core_retweets": 3,
    "min_lang_tweets": 3,
    "lang": "zh",
    "indeg_pct": 75.0,
    "close_pct": 70.0,
    "sample_n": 150,
    "per_account_tweet_sample": 20,
    "rank_n": 150,
    "expansion_k": 5000,
    "dominance": 0.5,
    "persistence": 2,
    "resolution": 1.0,
}

DEFAULTS: dict[str, Any] = {
    "corpus": None,
    "window": None,
    "tokenizer": "mixed",
    "trigram_count": "tweets",
    "closeness_direction": "in",
    "labels": None,
    "lexicon": None,
    "topical_keywords": [],
    "thresholds": DEFAULT_THRESHOLDS,
    "out": "out",
    "seed": 42,
    "threads": 1,
}

# key -> (kind, low, high); kind "int" or "float"; bounds inclusive
_RANGES = {
    "min_freq": ("int", 1, None),
    "min_core_retweets": ("int", 0, None),
    "min_lang_tweets": ("int", 0, None),
    "indeg_pct": ("float", 0.0, 100.0),
    "close_pct": ("float", 0.0, 100.0),
    "sample_n": ("int", 1, None),
    "per_account_tweet_sample": ("int", 1, None),
    "rank_n": ("int", 1, None),
    "expansion_k": ("int", 1, None),
    "dominance": ("float", 0.0, 1.0),
    "persistence": ("int", 1, None),
    "resolution": ("float", 0.0, None),
}


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    corpus: tuple[Path, ...]
    window: StudyWindow
    tokenizer: str
    trigram_count: str
    closeness_direction: str
    labels: Path | None
    lexicon: Path | None
    topical_keywords: tuple[str, ...]
    thresholds: Mapping[str, Any]
    out: Path
    seed: int
    threads: int
    warnings: tuple[str, ...] = ()

    def t(self, key: str) -> Any:
        return self.thresholds[key]

    def provenance(self) -> dict:
        """Serializable view for output trees: no output path, no thread count."""
        return {
            "corpus": [p.name for p in self.corpus],
            "window": self.window.to_mapping(),
            "tokenizer": self.tokenizer,
            "trigram_count": self.trigram_count,
            "closeness_direction": self.closeness_direction,
            "labels": None if self.labels is None else self.labels.name,
            "lexicon": None if self.lexicon is None else self.lexicon.name,
            "topical_keywords": list(self.topical_keywords),
            "thresholds": dict(sorted(self.thresholds.items())),
            "seed": self.seed,
        }

    def digest(self) -> str:
        blob = json.dumps(self.provenance(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _set_path(data: dict, path: list[str], value: Any) -> None:
    for part in path[:-1]:
        nxt = data.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            data[part] = nxt
        data = nxt
    data[path[-1]] = value


def apply_env(data: dict, environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    data = copy.deepcopy(data)
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX) or name == "NARRDYN_PURE_PYTHON":
            continue
        path = [p.lower() for p in name[len(ENV_PREFIX):].split("__") if p]
        if path:
            _set_path(data, path, yaml.safe_load(environ[name]))
    return data


def _number(kind: str, value: Any) -> int | float:
    if isinstance(value, bool):
        raise TypeError
    if kind == "int":
        if isinstance(value, float) and not value.is_integer():
            raise TypeError
        return int(value)
    return float(value)


def normalize(
    data: Mapping[str, Any],
    base_dir: Path | None = None,
    strict: bool = True,
    check_paths: bool = True,
) -> RunConfig:
    """Fill defaults and validate, collecting every problem before raising."""
    base_dir = base_dir or Path.cwd()
    errors: list[str] = []
    warnings: list[str] = []
    if not isinstance(data, Mapping):
        raise ConfigError(["configuration must be a mapping"])

    unknown = sorted(set(data) - set(DEFAULTS))
    thresholds_in = data.get("thresholds") or {}
    if not isinstance(thresholds_in, Mapping):
        errors.append("thresholds must be a mapping")
        thresholds_in = {}
    unknown += [f"thresholds.{k}" for k in sorted(set(thresholds_in) - set(DEFAULT_THRESHOLDS))]
    for key in unknown:
        (errors if strict else warnings).append(f"unknown key {key!r}")

    def resolve(p: Any, what: str) -> Path | None:
        if p is None:
            return None
        path = Path(str(p))
        if not path.is_absolute():
            path = base_dir / path
        if check_paths and not path.exists():
            errors.append(f"{what} path does not exist: {path}")
        return path

    corpus_raw = data.get("corpus")
    if corpus_raw is None:
        errors.append("missing required key 'corpus'")
        corpus_raw = []
    if isinstance(corpus_raw, (str, Path)):
        corpus_raw = [corpus_raw]
    corpus = tuple(p for p in (resolve(c, "corpus") for c in corpus_raw) if p is not None)

    window = None
    if data.get("window") is None:
        errors.append("missing required key 'window'")
    elif not isinstance(data["window"], Mapping):
        errors.append("window must be a mapping")
    else:
        extra = set(data["window"]) - {"start_date", "num_weeks", "period_boundary"}
        for key in sorted(extra):
            (errors if strict else warnings).append(f"unknown key 'window.{key}'")
        try:
            window = StudyWindow.from_mapping(dict(data["window"]))
        except CorpusError as exc:
            errors.append(str(exc))

    def choice(key: str, allowed) -> str:
        value = data.get(key, DEFAULTS[key])
        if value not in allowed:
            errors.append(f"{key} must be one of {list(allowed)}, got {value!r}")
        return value

    tokenizer = choice("tokenizer", PROFILES)
    trigram_count = choice("trigram_count", ("tweets", "occurrences"))
    direction = choice("closeness_direction", ("in", "out"))

    thresholds = dict(DEFAULT_THRESHOLDS)
    for key, value in thresholds_in.items():
        if key not in DEFAULT_THRESHOLDS:
            continue
        if key == "lang":
            thresholds[key] = str(value)
            continue
        kind, lo, hi = _RANGES[key]
        try:
            num = _number(kind, value)
        except (TypeError, ValueError):
            errors.append(f"thresholds.{key} must be {'an integer' if kind == 'int' else 'a number'}")
            continue
        if (lo is not None and num < lo) or (hi is not None and num > hi):
            what = "percentile" if key.endswith("_pct") else "value"
            errors.append(f"thresholds.{key}={value}: {what} out of range")
            continue
        thresholds[key] = num

    keywords = data.get("topical_keywords") or []
    if not isinstance(keywords, (list, tuple)) or not all(isinstance(k, str) for k in keywords):
        errors.append("topical_keywords must be a list of strings")
        keywords = []

    scalars = {}
    for key, low in (("seed", 0), ("threads", 1)):
        value = data.get(key, DEFAULTS[key])
        try:
            scalars[key] = _number("int", value)
            if scalars[key] < low:
                raise ValueError
        except (TypeError, ValueError):
            errors.append(f"{key} must be an integer >= {low}")
            scalars[key] = DEFAULTS[key]

    labels = resolve(data.get("labels"), "labels")
    lexicon = resolve(data.get("lexicon"), "lexicon")
    out = Path(str(data.get("out") or DEFAULTS["out"]))
    if not out.is_absolute():
        out = base_dir / out

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        corpus=corpus,
        window=window,
        tokenizer=tokenizer,
        trigram_count=trigram_count,
        closeness_direction=direction,
        labels=labels,
        lexicon=lexicon,
        topical_keywords=tuple(keywords),
        thresholds=thresholds,
        out=out,
        seed=scalars["seed"],
        threads=scalars["threads"],
        warnings=tuple(warnings),
    )


def validate_config(path: str | Path, strict: bool = True, environ: Mapping[str, str] | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError([f"config is not valid YAML: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError(["configuration must be a mapping"])
    data = apply_env(data, environ)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return normalize(data, base_dir=path.resolve().parent, strict=strict)
