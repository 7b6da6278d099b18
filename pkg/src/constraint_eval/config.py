"""Run configuration.

A config is a YAML or JSON document::

    schema_version: 1
    bank: bank.json              # relative paths resolve against the config file
    output_dir: out
    global_seed: 42
    max_in_flight: 4
    conditions: [control, e_prime, no_have, elaborated_prompt, neutral_ban]
    trials_per_item: 4
    temperatures: [0.0, 0.7]
    max_tokens: 2048
    policy: full                 # full | above90 | itt
    models:
      - id: mock-1
        backend: mock            # mock | openai | anthropic
        script: mock_script.json
      - id: gpt
        backend: openai
        model: gpt-4o
        base_url: https://api.openai.com/v1
        api_key_env: OPENAI_API_KEY

API keys are read from the named environment variables at request time and
never stored in the config or in any output.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from constraint_eval.conditions import ALL_CONDITIONS, ConditionId
from constraint_eval.runner import GLOBAL_SEED, MAX_TOKENS, TEMPERATURES, TRIALS_PER_ITEM
from constraint_eval.scoring import POLICIES

CONFIG_SCHEMA_VERSION = 1
BACKEND_KINDS = ("mock", "openai", "anthropic")
_KNOWN_KEYS = {
    "schema_version", "bank", "output_dir", "global_seed", "max_in_flight", "conditions",
    "trials_per_item", "temperatures", "max_tokens", "policy", "models",
}
_SECRET_HINTS = ("api_key", "token", "secret", "password")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelDef:
    id: str
    backend: str
    options: Mapping[str, Any] = field(default_factory=dict)

    def definition(self) -> dict:
        return {"id": self.id, "backend": self.backend, **self.options}


@dataclass(frozen=True)
class RunConfig:
    bank: Path
    models: tuple[ModelDef, ...]
    output_dir: Path
    base_dir: Path
    global_seed: int = GLOBAL_SEED
    max_in_flight: int = 4
    conditions: tuple[ConditionId, ...] = ALL_CONDITIONS
    trials_per_item: int = TRIALS_PER_ITEM
    temperatures: tuple[float, float] = TEMPERATURES
    max_tokens: int = MAX_TOKENS
    policy: str = "full"
    config_hash: str = ""

    @property
    def model_ids(self) -> list[str]:
        return [m.id for m in self.models]


def config_hash(doc: Mapping[str, Any]) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _check_secrets(doc: Any, path: str = "") -> None:
    if isinstance(doc, Mapping):
        for k, v in doc.items():
            key = str(k).lower()
            if any(h in key for h in _SECRET_HINTS) and not key.endswith("_env"):
                raise ConfigError(f"{path}{k}: secrets belong in environment variables, "
                                  f"name the variable with '{k}_env' instead")
            _check_secrets(v, f"{path}{k}.")
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            _check_secrets(v, f"{path}{i}.")


def parse_config(doc: Mapping[str, Any], base_dir: Path, check_paths: bool = True) -> RunConfig:
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a mapping")
    if doc.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {doc.get('schema_version')!r}")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    _check_secrets(doc)
    if "bank" not in doc:
        raise ConfigError("config needs a bank path")

    models = []
    for i, m in enumerate(doc.get("models") or []):
        if not isinstance(m, Mapping) or "id" not in m or "backend" not in m:
            raise ConfigError(f"models[{i}] needs 'id' and 'backend'")
        if m["backend"] not in BACKEND_KINDS:
            raise ConfigError(f"models[{i}]: backend must be one of {BACKEND_KINDS}")
        if m["backend"] == "mock" and "script" not in m:
            raise ConfigError(f"models[{i}]: mock backend needs a script path")
        options = {k: v for k, v in m.items() if k not in ("id", "backend")}
        models.append(ModelDef(str(m["id"]), m["backend"], options))
    if not models:
        raise ConfigError("config needs at least one model")
    ids = [m.id for m in models]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate model ids in {ids}")

    try:
        conditions = tuple(ConditionId(c) for c in doc.get("conditions", [c.value for c in ALL_CONDITIONS]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    policy = doc.get("policy", "full")
    if policy not in POLICIES:
        raise ConfigError(f"policy must be one of {sorted(POLICIES)}")
    temps = tuple(float(t) for t in doc.get("temperatures", TEMPERATURES))
    if len(temps) != 2:
        raise ConfigError("temperatures needs exactly two values (first trial, later trials)")
    max_in_flight = int(doc.get("max_in_flight", 4))
    if max_in_flight < 1:
        raise ConfigError("max_in_flight must be >= 1")

    cfg = RunConfig(
        bank=(base_dir / doc["bank"]),
        models=tuple(models),
        output_dir=base_dir / doc.get("output_dir", "out"),
        base_dir=base_dir,
        global_seed=int(doc.get("global_seed", GLOBAL_SEED)),
        max_in_flight=max_in_flight,
        conditions=conditions,
        trials_per_item=int(doc.get("trials_per_item", TRIALS_PER_ITEM)),
        temperatures=temps,  # type: ignore[arg-type]
        max_tokens=int(doc.get("max_tokens", MAX_TOKENS)),
        policy=policy,
        config_hash=config_hash(doc),
    )
    if check_paths:
        if not cfg.bank.is_file():
            raise ConfigError(f"bank file not found: {cfg.bank}")
        for m in cfg.models:
            if m.backend == "mock" and not (base_dir / m.options["script"]).is_file():
                raise ConfigError(f"mock script not found: {base_dir / m.options['script']}")
    return cfg


def load_config(path: str | Path, check_paths: bool = True) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parse_config(doc, path.resolve().parent, check_paths=check_paths)


def default_config_doc(bank: str, script: Optional[str] = None, **overrides) -> dict:
    """A minimal single-mock-model config document."""
    doc = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "bank": bank,
        "output_dir": "out",
        "global_seed": GLOBAL_SEED,
        "max_in_flight": 4,
        "models": [{"id": "mock", "backend": "mock", "script": script or "mock_script.json"}],
    }
    doc.update(overrides)
    return doc
