"""Run configuration parsing, content digests and record serialization.

Configs are TOML (or JSON) documents with one top-level section naming
the command they drive (``[scenario]``, ``[fisher]`` or ``[sweep]``).
A seed is mandatory in every simulating config; there is no wall-clock
default, so every run is replayable.  The digest is the SHA-256 of the
canonical JSON form of the effective (post-override) config, so it
changes exactly when the config content changes.
"""

import dataclasses
import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .bayes import DEFAULT_GRID_SIZE, PriorSpec
from .errors import ConfigError, PhaseLabError
from .harness import ScenarioConfig

SCHEMA_VERSION = "phaselab/1"

SIMULATION_PROTOCOLS = ("noon", "noon-full", "mz", "hb", "squeezed-vacuum")
ANALYSIS_PROTOCOLS = ("chi2-demo", "matched-squeezed")
FISHER_PROTOCOLS = SIMULATION_PROTOCOLS


def load_config(path) -> dict:
    """Parse a TOML or JSON config file into a plain dict."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(raw.decode("utf-8"))
        return tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_digest(payload: dict) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def _require(section: dict, field: str, where: str):
    if field not in section:
        raise ConfigError(f"missing field {field!r} in [{where}]")
    return section[field]


def parse_prior(section: dict, where: str = "prior") -> PriorSpec:
    try:
        return PriorSpec(
            lo=float(_require(section, "lo", where)),
            hi=float(_require(section, "hi", where)),
            topology=str(section.get("topology", "linear")),
        )
    except PhaseLabError as exc:
        raise ConfigError(f"invalid [{where}]: {exc}") from exc


def normalized_scenario(document: dict, seed_override: int | None = None) -> dict:
    """Validate a [scenario] document and return its effective form."""
    if "scenario" not in document:
        raise ConfigError("config must contain a [scenario] section")
    section = dict(document["scenario"])
    protocol = str(_require(section, "protocol", "scenario"))
    if protocol not in SIMULATION_PROTOCOLS + ANALYSIS_PROTOCOLS:
        raise ConfigError(
            f"unknown protocol {protocol!r}; expected one of "
            f"{SIMULATION_PROTOCOLS + ANALYSIS_PROTOCOLS}"
        )
    if seed_override is not None:
        section["seed"] = int(seed_override)
    if "seed" not in section:
        raise ConfigError("scenario configs must carry an explicit seed")
    section["seed"] = int(section["seed"])
    section["protocol"] = protocol
    section.setdefault("params", {})
    return {"scenario": section}


def parse_scenario(document: dict, seed_override: int | None = None):
    """Build a ScenarioConfig (or analysis descriptor) from a document.

    Returns ``(kind, payload, normalized)`` where kind is 'experiment',
    'chi2-demo' or 'matched-squeezed'.
    """
    normalized = normalized_scenario(document, seed_override)
    section = normalized["scenario"]
    protocol = section["protocol"]
    params = dict(section.get("params", {}))
    seed = section["seed"]
    if protocol in ANALYSIS_PROTOCOLS:
        payload = dict(params)
        payload["master_seed"] = seed
        payload["trials"] = int(section.get("trials", payload.pop("trials", 100_000)))
        if protocol == "chi2-demo":
            payload.setdefault("theta_true", 0.0)
        return protocol, payload, normalized
    prior = parse_prior(_require(section, "prior", "scenario"), "scenario.prior")
    sampling = str(section.get("phase_sampling", "fixed"))
    if sampling not in ("fixed", "prior"):
        raise ConfigError("phase_sampling must be 'fixed' or 'prior'")
    true_phase = None
    if sampling == "fixed":
        true_phase = float(_require(section, "true_phase", "scenario"))
        if not math.isfinite(true_phase):
            raise ConfigError("true_phase must be finite")
    elif "true_phase" in section:
        raise ConfigError("true_phase conflicts with phase_sampling='prior'")
    try:
        config = ScenarioConfig(
            protocol=protocol,
            params=params,
            prior=prior,
            repetitions=int(section.get("repetitions", 1)),
            trials=int(section.get("trials", 1)),
            master_seed=seed,
            true_phase=true_phase,
            grid_size=int(section.get("grid_size", DEFAULT_GRID_SIZE)),
            estimator=str(section.get("estimator", "posterior_mean")),
        )
    except PhaseLabError as exc:
        raise ConfigError(f"invalid [scenario]: {exc}") from exc
    return "experiment", config, normalized


def build_manifest(
    normalized: dict,
    version: str,
    seed: int,
    outputs: list,
    no_timestamp: bool = False,
) -> dict:
    manifest = {
        "schema": SCHEMA_VERSION,
        "artifact_version": version,
        "config_digest": config_digest(normalized),
        "master_seed": seed,
        "outputs": [str(p) for p in outputs],
    }
    if not no_timestamp:
        manifest["created_at"] = datetime.now(timezone.utc).isoformat()
    return manifest


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def report_payload(report) -> dict:
    """Serialize a report dataclass into JSON-ready primitives."""
    payload = _jsonable(report)
    if isinstance(payload, dict):
        ledger = getattr(report, "ledger", None)
        if ledger is not None:
            payload["ledger"]["total_resources"] = ledger.total_resources
            payload["ledger"]["signal_yield"] = ledger.signal_yield
    return payload


def format_float(value: float) -> str:
    """17 significant digits: lossless float64 round-trip in CSV."""
    return f"{value:.17g}"


def write_csv(path_or_handle, header: list, rows) -> None:
    """Comma-separated output, LF line endings, numbers at full precision."""

    def _cell(value):
        if isinstance(value, (float, np.floating)):
            return format_float(float(value))
        return str(value)

    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_handle, "write"):
        path_or_handle.write(text)
    else:
        with open(path_or_handle, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
