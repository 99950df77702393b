"""Run configuration: one TOML/JSON file drives the whole pipeline.

Each command reads its own section; flags override config values. All
randomness flows from the single root ``seed``, with per-component
sub-seeds derived by hashing, and every command writes a manifest
(config hash, seed, input/output hashes) sufficient to reproduce its
outputs byte for byte.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .arrivals import ArrivalModel, build_arrival_model
from .boosting import BoostParams
from .errors import ConfigError
from .records import BookingRecord
from .value_function import RevenueSpec

DEFAULTS: dict = {
    "seed": 0,
    "paths": {
        "input_csv": "",
        "run_dir": "",
        "output_root": "runs",
        "dmv_directory": "",
        "model": "",
        "value_table": "",
    },
    "ingest": {
        "columns": {},
    },
    "dmv": {
        "frequency_threshold": 0.0001,
        "entropy_buckets": 16,
        "bucket_mode": "width",
        "g1_threshold": 16.0,
        "g2_threshold": 0.9,
    },
    "predictor": {
        "num_trees": 300,
        "max_depth": 20,
        "learning_rate": 0.05,
        "colsample": 0.9,
        "min_samples_leaf": 1,
        "folds": 3,
    },
    "value_function": {
        "horizon": 60,
        "num_intervals": 6,
        "capacities": [],
        "offload_rate": 1.0,
        "delta": 0.0,  # 0 -> quarter of the smallest type volume
        "max_volume": 0.0,  # 0 -> largest type volume
        "kind": "scalar",  # scalar | vector | both
        "state_cap": 1_000_000,
    },
    "revenue": {
        "mode": "rate",
        "amount": 1.0,
        "amounts": {},  # per-type overrides
    },
    "arrival": {
        "source": "records",  # records | inline
        "types": [],
        "type_probs": [],
        "mean_volumes": [],
        "step_probs": [],
        "arrival_rate": 0.0,  # inline shorthand: flat step probability
    },
    "simulation": {
        "campaign": "D1SvsFCFS",  # D1SvsFCFS | BKDvsPRED | BKDtoRCS | PREDtoRCS
        "generator": "",  # defaults per campaign; mean-volume | distorted-bkvol | dataset
        "dispersions": [0.8, 1.0],
        "num_flights": 1000,
        "bkvol_factor": 1.0,
        "bkvol_factors": {},  # per-type overrides
    },
}


def _deep_merge(base: dict, override: dict, crumb: str = "") -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{crumb}.{key}" if crumb else key
        if key not in merged:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(merged[key], dict) and key not in ("columns", "amounts", "bkvol_factors"):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a table")
            merged[key] = _deep_merge(merged[key], value, where)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def component_seed(root_seed: int, component: str) -> int:
    """Stable per-component sub-seed derived from the root seed."""
    digest = hashlib.sha256(f"{root_seed}/{component}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class RunConfig:
    def __init__(self, raw: dict, base_dir: Path | None = None):
        self.raw = _deep_merge(DEFAULTS, raw)
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        self._run_dir: Path | None = None

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if path.suffix.lower() == ".toml":
            try:
                raw = tomllib.loads(text.decode("utf-8"))
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        elif path.suffix.lower() == ".json":
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        else:
            raise ConfigError(f"config must be .toml or .json, got {path.name}")
        return cls(raw, base_dir=path.resolve().parent)

    # -- identity ---------------------------------------------------------
    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    def sub_seed(self, component: str) -> int:
        return component_seed(self.seed, component)

    def config_hash(self) -> str:
        return sha256_text(canonical_json(self.raw))

    # -- paths ------------------------------------------------------------
    def _resolve(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def input_csv(self) -> Path:
        value = self.raw["paths"]["input_csv"]
        if not value:
            raise ConfigError("paths.input_csv is required for this command")
        path = self._resolve(value)
        if not path.exists():
            raise ConfigError(f"input CSV does not exist: {path}")
        return path

    def run_dir(self) -> Path:
        """Explicit paths.run_dir, else output_root/<timestamp>-<confighash>."""
        if self._run_dir is None:
            configured = self.raw["paths"]["run_dir"]
            if configured:
                self._run_dir = self._resolve(configured)
            else:
                stamp = time.strftime("%Y%m%dT%H%M%S")
                name = f"{stamp}-{self.config_hash()[:8]}"
                self._run_dir = self._resolve(self.raw["paths"]["output_root"]) / name
        self._run_dir.mkdir(parents=True, exist_ok=True)
        return self._run_dir

    def set_run_dir(self, path: str | Path) -> None:
        self.raw["paths"]["run_dir"] = str(path)
        self._run_dir = None

    def artifact_path(self, key: str, default_name: str) -> Path:
        configured = self.raw["paths"][key]
        if configured:
            return self._resolve(configured)
        return self.run_dir() / default_name

    def dmv_directory_path(self) -> Path:
        return self.artifact_path("dmv_directory", "dmv_directory.json")

    def model_path(self) -> Path:
        return self.artifact_path("model", "model.json")

    def value_table_stem(self, capacity: float) -> Path:
        stem = self.artifact_path("value_table", "value_table")
        return stem.parent / f"{stem.name}_kv{capacity:g}"

    # -- sections ---------------------------------------------------------
    def schema_options(self) -> dict[str, str] | None:
        columns = self.raw["ingest"]["columns"]
        return dict(columns) if columns else None

    def dmv_kwargs(self) -> dict:
        section = self.raw["dmv"]
        return {
            "frequency_threshold": float(section["frequency_threshold"]),
            "num_buckets": int(section["entropy_buckets"]),
            "bucket_mode": str(section["bucket_mode"]),
            "g1_threshold": float(section["g1_threshold"]),
            "g2_threshold": float(section["g2_threshold"]),
        }

    def boost_params(self) -> BoostParams:
        section = self.raw["predictor"]
        return BoostParams(
            num_trees=int(section["num_trees"]),
            max_depth=int(section["max_depth"]),
            learning_rate=float(section["learning_rate"]),
            colsample=float(section["colsample"]),
            min_samples_leaf=int(section["min_samples_leaf"]),
        )

    def folds(self) -> int:
        return int(self.raw["predictor"]["folds"])

    def horizon(self) -> int:
        return int(self.raw["value_function"]["horizon"])

    def capacities(self) -> list[float]:
        capacities = [float(v) for v in self.raw["value_function"]["capacities"]]
        if not capacities:
            raise ConfigError("value_function.capacities must list at least one capacity")
        return capacities

    def offload_rate(self) -> float:
        return float(self.raw["value_function"]["offload_rate"])

    def delta(self) -> float | None:
        value = float(self.raw["value_function"]["delta"])
        return value if value > 0.0 else None

    def max_volume(self) -> float | None:
        value = float(self.raw["value_function"]["max_volume"])
        return value if value > 0.0 else None

    def table_kind(self) -> str:
        kind = self.raw["value_function"]["kind"]
        if kind not in ("scalar", "vector", "both"):
            raise ConfigError(f"value_function.kind must be scalar, vector or both, got {kind!r}")
        return kind

    def state_cap(self) -> int:
        return int(self.raw["value_function"]["state_cap"])

    def arrival_model(self, records: list[BookingRecord] | None = None) -> ArrivalModel:
        section = self.raw["arrival"]
        if section["source"] == "records":
            if records is None:
                raise ConfigError("arrival.source is 'records' but no records were supplied")
            return build_arrival_model(
                records,
                num_steps=self.horizon(),
                num_intervals=int(self.raw["value_function"]["num_intervals"]),
            )
        if section["source"] != "inline":
            raise ConfigError("arrival.source must be 'records' or 'inline'")
        types = tuple(section["types"])
        if not types:
            raise ConfigError("inline arrival model needs arrival.types")
        step_probs = section["step_probs"]
        if not step_probs:
            rate = float(section["arrival_rate"])
            if rate <= 0.0:
                raise ConfigError("inline arrival model needs step_probs or arrival_rate")
            step_probs = [rate] * self.horizon()
        return ArrivalModel(
            types=types,
            type_probs=np.array([float(v) for v in section["type_probs"]]),
            step_probs=np.array([float(v) for v in step_probs]),
            mean_volumes=np.array([float(v) for v in section["mean_volumes"]]),
        )

    def revenue_spec(self, types: tuple[str, ...]) -> RevenueSpec:
        section = self.raw["revenue"]
        overrides = {str(k): float(v) for k, v in section["amounts"].items()}
        base = float(section["amount"])
        unknown = set(overrides) - set(types)
        if unknown:
            raise ConfigError(f"revenue.amounts names unknown types: {sorted(unknown)}")
        amounts = np.array([overrides.get(name, base) for name in types])
        return RevenueSpec(mode=str(section["mode"]), amounts=amounts)

    def bkvol_factors(self, types: tuple[str, ...]) -> np.ndarray:
        section = self.raw["simulation"]
        overrides = {str(k): float(v) for k, v in section["bkvol_factors"].items()}
        base = float(section["bkvol_factor"])
        unknown = set(overrides) - set(types)
        if unknown:
            raise ConfigError(f"simulation.bkvol_factors names unknown types: {sorted(unknown)}")
        return np.array([overrides.get(name, base) for name in types])

    def campaign(self) -> str:
        value = self.raw["simulation"]["campaign"]
        if value not in ("D1SvsFCFS", "BKDvsPRED", "BKDtoRCS", "PREDtoRCS"):
            raise ConfigError(f"unknown campaign {value!r}")
        return value

    def generator(self) -> str:
        configured = self.raw["simulation"]["generator"]
        if configured:
            return str(configured)
        return "mean-volume" if self.campaign() == "D1SvsFCFS" else "distorted-bkvol"

    def dispersions(self) -> list[float]:
        values = [float(v) for v in self.raw["simulation"]["dispersions"]]
        if not values:
            raise ConfigError("simulation.dispersions must list at least one value")
        return values

    def num_flights(self) -> int:
        value = int(self.raw["simulation"]["num_flights"])
        if value < 1:
            raise ConfigError("simulation.num_flights must be >= 1")
        return value
