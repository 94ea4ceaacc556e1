"""Flat key=value configuration with command-line overrides (flags win)."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class AppConfig:
    # paths
    triples_path: str = "data/kg.tsv"
    aliases_path: str = ""  # "" -> <triples_path>.aliases when present
    snapshot_path: str = "models/graph.tsv"
    embeddings_path: str = "models/transe.txt"
    gcn_params_path: str = "models/gcn.txt"
    template_path: str = ""  # "" -> packaged default template
    report_dir: str = "reports"
    # transe
    dim: int = 100
    learning_rate: float = 0.01
    margin: float = 1.0
    norm: str = "L2"
    epochs: int = 500
    batch_size: int = 64
    seed: int = 7
    # gcn
    gcn_learning_rate: float = 0.05
    gcn_epochs: int = 400
    gcn_margin: float = 1.0
    gcn_hidden: int = 0  # 0 -> dim
    gcn_anchor: float = 2.0
    self_loops: bool = False
    final_activation: bool = False
    # retrieval
    hop: int = 2
    budget: int = 12
    alpha: float = 0.5
    encoder_seed: int = 13
    encoder_dim: int = 256
    kge_top_n: int = 8
    # gateway
    gateway_mock: bool = True
    gateway_url: str = ""
    gateway_model: str = "chat"
    gateway_timeout: float = 30.0
    gateway_retries: int = 2
    gateway_token_env: str = "GRAPHQA_API_TOKEN"
    # service
    bind: str = "127.0.0.1"
    port: int = 8042
    cors_origin: str = "*"
    # synthetic graph
    synth_entities: int = 200
    synth_relations: int = 5
    synth_noise: float = 0.0
    synth_triples_per_relation: int = 0
    # synthetic benchmark dataset
    qa_direct: int = 100
    qa_multi_hop: int = 100
    qa_comparative: int = 100


_FIELDS = {f.name: f.type for f in fields(AppConfig)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw: str):
    kind = _FIELDS[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.casefold()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def load_config(path: str | None = None) -> AppConfig:
    """Read `key=value` lines; `#` starts a comment, blank lines ignored."""
    cfg = AppConfig()
    if path is None:
        return cfg
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    for line_no, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        setattr(cfg, key, _coerce(key, value))
    return cfg


def apply_overrides(cfg: AppConfig, overrides: dict[str, object]) -> AppConfig:
    """Flag values win over file values; None means not provided."""
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    return cfg
