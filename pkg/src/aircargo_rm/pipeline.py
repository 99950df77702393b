"""Pipeline commands shared by the CLI and the HTTP service.

Each command is a plain function of a :class:`RunConfig` returning a
JSON-serializable summary; outputs land in the configured run directory
together with a ``<command>_manifest.json`` recording the config hash,
the seed, and SHA-256 digests of every input and output.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import __version__
from .config import RunConfig, sha256_file
from .dmv import DmvDirectory, build_directory
from .errors import ConfigError
from .policies import Policy
from .prediction import (
    cross_validated_flight_error,
    identity_predictor,
    model_predictor,
    train_on_records,
)
from .boosting import BoostedModel, split_gain_importances
from .records import ingest_csv, write_records_csv
from .simulate import SimulationConfig, run_campaign
from .value_function import (
    ScalarValueTable,
    build_scalar_table,
    build_vector_table,
    load_table,
)


def _dump_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _write_manifest(
    command: str,
    cfg: RunConfig,
    inputs: list[Path],
    outputs: list[Path],
) -> Path:
    manifest = {
        "command": command,
        "config": cfg.raw,
        "config_sha256": cfg.config_hash(),
        "seed": cfg.seed,
        "inputs": {str(p): sha256_file(p) for p in sorted(inputs)},
        "outputs": {str(p): sha256_file(p) for p in sorted(outputs)},
        "versions": {"aircargo-rm": __version__},
    }
    path = cfg.run_dir() / f"{command}_manifest.json"
    _dump_json(manifest, path)
    return path


def run_ingest(cfg: RunConfig) -> dict:
    source = cfg.input_csv()
    records, report = ingest_csv(source, cfg.schema_options())
    run_dir = cfg.run_dir()
    records_path = run_dir / "records.csv"
    report_path = run_dir / "ingest_report.json"
    write_records_csv(records, records_path)
    _dump_json(report.to_dict(), report_path)
    manifest = _write_manifest("ingest", cfg, [source], [records_path, report_path])
    return {
        "command": "ingest",
        "report": report.to_dict(),
        "records_csv": str(records_path),
        "report_json": str(report_path),
        "manifest": str(manifest),
    }


def run_dmv(cfg: RunConfig) -> dict:
    source = cfg.input_csv()
    records, _ = ingest_csv(source, cfg.schema_options())
    directory = build_directory(records, **cfg.dmv_kwargs())
    path = cfg.dmv_directory_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    directory.save(path)
    manifest = _write_manifest("dmv", cfg, [source], [path])
    flagged = directory.flagged_values()
    return {
        "command": "dmv",
        "entries": len(directory),
        "flagged": len(flagged),
        "flagged_values": flagged,
        "directory": str(path),
        "manifest": str(manifest),
    }


def _load_directory_if_any(cfg: RunConfig) -> tuple[DmvDirectory | None, list[Path]]:
    path = cfg.dmv_directory_path()
    if path.exists():
        return DmvDirectory.load(path), [path]
    return None, []


def run_train(cfg: RunConfig) -> dict:
    source = cfg.input_csv()
    records, _ = ingest_csv(source, cfg.schema_options())
    directory, extra_inputs = _load_directory_if_any(cfg)
    params = cfg.boost_params()
    seed = cfg.sub_seed("train")
    model = train_on_records(records, directory, params, seed=seed)
    model_path = cfg.model_path()
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model.save(model_path)
    report = cross_validated_flight_error(
        records, directory, params, seed=seed, num_folds=cfg.folds()
    )
    importances = split_gain_importances(model)
    names = model.vocabulary.feature_names()
    ranked = sorted(zip(names, importances), key=lambda kv: -kv[1])
    top_features = [
        {"feature": name, "gain": float(gain)} for name, gain in ranked[:10] if gain > 0.0
    ]
    report_path = cfg.run_dir() / "train_report.json"
    _dump_json({**report.to_dict(), "top_features": top_features}, report_path)
    manifest = _write_manifest(
        "train", cfg, [source, *extra_inputs], [model_path, report_path]
    )
    return {
        "command": "train",
        "model": str(model_path),
        "dmv_directory_used": directory is not None,
        "training_mse_final": model.training_mse[-1],
        "cv_mean_flight_error": report.mean_error,
        "cv_frac_under_5pct": report.frac_under_5pct,
        "cv_frac_under_10pct": report.frac_under_10pct,
        "top_features": top_features,
        "report": str(report_path),
        "manifest": str(manifest),
    }


def _arrival_and_revenue(cfg: RunConfig, records):
    arrival = cfg.arrival_model(records)
    revenue = cfg.revenue_spec(arrival.types)
    return arrival, revenue


def _records_if_needed(cfg: RunConfig):
    if cfg.raw["arrival"]["source"] != "records":
        return None, []
    source = cfg.input_csv()
    records, _ = ingest_csv(source, cfg.schema_options())
    return records, [source]


def run_build_vf(cfg: RunConfig) -> dict:
    records, inputs = _records_if_needed(cfg)
    arrival, revenue = _arrival_and_revenue(cfg, records)
    kind = cfg.table_kind()
    outputs: list[Path] = []
    tables = []
    for capacity in cfg.capacities():
        stem = cfg.value_table_stem(capacity)
        stem.parent.mkdir(parents=True, exist_ok=True)
        if kind in ("scalar", "both"):
            table = build_scalar_table(
                arrival,
                revenue,
                capacity,
                cfg.offload_rate(),
                cfg.horizon(),
                delta=cfg.delta(),
                max_volume=cfg.max_volume(),
            )
            table.save(stem)
            outputs += [stem.with_suffix(".json"), stem.with_suffix(".csv")]
            tables.append(
                {"capacity": capacity, "kind": "scalar", "stem": str(stem),
                 "grid_points": table.num_points, "delta": table.delta}
            )
        if kind in ("vector", "both"):
            vstem = stem.parent / f"{stem.name}_vector"
            table = build_vector_table(
                arrival,
                revenue,
                capacity,
                cfg.offload_rate(),
                cfg.horizon(),
                state_cap=cfg.state_cap(),
            )
            table.save(vstem)
            outputs += [vstem.with_suffix(".json"), vstem.with_suffix(".csv")]
            tables.append(
                {"capacity": capacity, "kind": "vector", "stem": str(vstem),
                 "states": table.num_states}
            )
    manifest = _write_manifest("build-vf", cfg, inputs, outputs)
    return {"command": "build-vf", "tables": tables, "manifest": str(manifest)}


def _campaign_policies(cfg: RunConfig, capacity: float, table, model, directory):
    campaign = cfg.campaign()
    if campaign == "D1SvsFCFS":
        return [
            Policy(rule="D1S", table=table, label="D1S"),
            Policy(rule="FCFS", capacity=capacity, label="FCFS"),
        ]
    rows = []
    if campaign in ("BKDvsPRED", "BKDtoRCS"):
        rows.append(
            Policy(rule="D2S", table=table, predictor=identity_predictor, label="BKDtoRCS")
        )
    if campaign in ("BKDvsPRED", "PREDtoRCS"):
        if model is None:
            raise ConfigError(
                f"campaign {campaign} needs a trained model at {cfg.model_path()}"
            )
        rows.append(
            Policy(
                rule="D2S",
                table=table,
                predictor=model_predictor(model, directory),
                label="PREDtoRCS",
            )
        )
    return rows


def run_simulate(cfg: RunConfig) -> dict:
    campaign = cfg.campaign()
    generator = cfg.generator()
    records, inputs = (None, [])
    if cfg.raw["arrival"]["source"] == "records" or generator == "dataset":
        source = cfg.input_csv()
        records, _ = ingest_csv(source, cfg.schema_options())
        inputs = [source]
    arrival, revenue = _arrival_and_revenue(cfg, records)

    model = None
    directory = None
    if campaign in ("BKDvsPRED", "PREDtoRCS"):
        model_path = cfg.model_path()
        if not model_path.exists():
            raise ConfigError(f"campaign {campaign} needs a trained model at {model_path}")
        model = BoostedModel.load(model_path)
        inputs.append(model_path)
        directory, extra = _load_directory_if_any(cfg)
        inputs += extra

    policies_by_capacity = {}
    for capacity in cfg.capacities():
        stem = cfg.value_table_stem(capacity)
        if not stem.with_suffix(".json").exists():
            raise ConfigError(
                f"no value table for capacity {capacity:g} at {stem}; run build-vf first"
            )
        table = load_table(stem)
        if not isinstance(table, ScalarValueTable):
            raise ConfigError(f"campaign policies need a scalar table, found {stem}")
        inputs += [stem.with_suffix(".json"), stem.with_suffix(".csv")]
        policies_by_capacity[capacity] = _campaign_policies(
            cfg, capacity, table, model, directory
        )

    base = SimulationConfig(
        arrival=arrival,
        revenue=revenue,
        capacity=cfg.capacities()[0],
        offload_rate=cfg.offload_rate(),
        horizon=cfg.horizon(),
        dispersion=cfg.dispersions()[0],
        generator=generator,
        bkvol_factors=(
            cfg.bkvol_factors(arrival.types) if generator == "distorted-bkvol" else None
        ),
        materialize_records=(model is not None and generator != "dataset"),
        record_pool=records if generator == "dataset" else None,
    )
    report = run_campaign(
        base,
        policies_by_capacity,
        cfg.dispersions(),
        cfg.num_flights(),
        seed=cfg.sub_seed("simulate"),
    )
    csv_path = cfg.run_dir() / "campaign.csv"
    report.write_csv(csv_path)
    manifest = _write_manifest("simulate", cfg, inputs, [csv_path])
    return {
        "command": "simulate",
        "campaign": campaign,
        "generator": generator,
        "rows": [
            {
                "policy": row.policy,
                "k_v": row.capacity,
                "theta": row.dispersion,
                "mean_offload": row.mean_offload,
                "std_offload": row.std_offload,
                "mean_final_revenue": row.mean_final_revenue,
                "std_final_revenue": row.std_final_revenue,
            }
            for row in report.rows
        ],
        "campaign_csv": str(csv_path),
        "manifest": str(manifest),
    }


COMMANDS = {
    "ingest": run_ingest,
    "dmv": run_dmv,
    "train": run_train,
    "build-vf": run_build_vf,
    "simulate": run_simulate,
}
