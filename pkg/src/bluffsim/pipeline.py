"""Run orchestration: traffic -> broker -> detection -> metrics -> files.

Output files are written atomically (temp + rename) and are byte-identical
for a fixed (seed, config): events and truth carry only ints and strings,
and every float in verdicts/summary is serialized with Python's
shortest-roundtrip repr.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .broker import Broker, Campaign, ConfigError
from .config import ScenarioConfig, dump_config
from .detection import ReferenceProfile, run_detection
from .domain import AdKind, AdUnit
from .metrics import (
    Confusion,
    EconomicSummary,
    confusion,
    economics,
    f1,
    precision,
    recall,
    roc_points,
)
from .traffic import run_traffic

SUMMARY_METRICS = (
    "precision",
    "recall",
    "f1",
    "auc",
    "total_spend",
    "fraud_spend",
    "fraud_spend_flagged",
    "bluff_impression_share",
    "bluff_slot_overhead",
)


@dataclass
class RunResult:
    """In-memory outputs of one scenario run."""

    config: ScenarioConfig
    events: list
    truth: dict
    ip_regions: dict
    reports: dict
    conf: Confusion
    econ: EconomicSummary
    auc: Optional[float]
    broker: Broker

    def summary_values(self) -> dict:
        return {
            "precision": precision(self.conf),
            "recall": recall(self.conf),
            "f1": f1(self.conf),
            "auc": self.auc if self.auc is not None else float("nan"),
            "total_spend": self.econ.total_spend_micros,
            "fraud_spend": self.econ.fraud_spend_micros,
            "fraud_spend_flagged": self.econ.fraud_spend_flagged_micros,
            "bluff_impression_share": self.econ.bluff_impression_share,
            "bluff_slot_overhead": self.econ.bluff_slot_overhead_micros,
        }


@dataclass
class RunOutputs:
    out_dir: Path
    events_path: Path
    truth_path: Path
    verdicts_path: Path
    summary_path: Path
    config_path: Path


def build_broker(config: ScenarioConfig) -> Broker:
    campaigns = []
    for spec in config.campaigns:
        ad = AdUnit(
            ad_id=f"ad-{spec.advertiser_id}",
            kind=AdKind.REAL,
            targeting=spec.targeting,
            content=spec.targeting,  # honest creatives: text matches targeting
            bid_micros=spec.bid_micros,
            advertiser_id=spec.advertiser_id,
        )
        campaigns.append(
            Campaign(
                advertiser_id=spec.advertiser_id,
                ads=[ad],
                daily_budget_micros=spec.daily_budget_micros,
            )
        )
    return Broker(campaigns, config.injection, config.topic_dim, config.seed)


def run_scenario(config: ScenarioConfig) -> RunResult:
    """Execute the full pipeline in memory."""
    config.validate()
    broker = build_broker(config)
    events, truth, ip_regions = run_traffic(config, broker)
    reference = ReferenceProfile.from_config(config.diurnal, config.mix.region_count)
    reports = run_detection(
        events, config.detector, broker.catalog(), ip_regions, reference
    )
    conf = confusion(reports, truth)
    try:
        _, auc = roc_points(reports, truth)
    except ValueError:
        auc = None  # single-class population (e.g. benign-only calibration)
    econ = economics(events, broker.ledger, reports, truth, broker.overhead_micros)
    return RunResult(
        config=config,
        events=events,
        truth=truth,
        ip_regions=ip_regions,
        reports=reports,
        conf=conf,
        econ=econ,
        auc=auc,
        broker=broker,
    )


def _atomic_write(path: Path, write_fn) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        write_fn(fh)
    os.replace(tmp, path)


def _fmt(value) -> str:
    """Serialize a scalar for CSV: shortest-roundtrip floats, plain ints."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_outputs(result: RunResult, out_dir) -> RunOutputs:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events_path = out / "events.jsonl"
    truth_path = out / "truth.csv"
    verdicts_path = out / "verdicts.csv"
    summary_path = out / "summary.csv"
    config_path = out / "config.yaml"

    def write_events(fh):
        for e in result.events:
            record = {
                "t": e.t,
                "etype": e.etype.value,
                "agent_id": e.agent_id,
                "ip": e.ip,
                "page_id": e.page_id,
                "ad_id": e.ad_id,
                "ad_kind": e.ad_kind.value,
                "slot": e.slot,
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def write_truth(fh):
        fh.write("agent_id,kind\n")
        for agent_id in sorted(result.truth):
            fh.write(f"{agent_id},{result.truth[agent_id].value}\n")

    def write_verdicts(fh):
        fh.write(
            "agent_id,s_bluff,s_thresh,s_profile,fused,flagged,"
            "p_value,max_window_clicks,divergence\n"
        )
        for agent_id in sorted(result.reports):
            r = result.reports[agent_id]
            row = (
                agent_id,
                _fmt(r.s_bluff),
                _fmt(r.s_thresh),
                _fmt(r.s_profile),
                _fmt(r.fused),
                _fmt(r.flagged),
                _fmt(r.p_value),
                _fmt(r.max_window_clicks),
                _fmt(r.divergence),
            )
            fh.write(",".join(row) + "\n")

    def write_summary(fh):
        fh.write("metric,value\n")
        values = result.summary_values()
        for metric in SUMMARY_METRICS:
            fh.write(f"{metric},{_fmt(values[metric])}\n")

    def write_config(fh):
        fh.write(dump_config(result.config))

    _atomic_write(events_path, write_events)
    _atomic_write(truth_path, write_truth)
    _atomic_write(verdicts_path, write_verdicts)
    _atomic_write(summary_path, write_summary)
    _atomic_write(config_path, write_config)
    return RunOutputs(out, events_path, truth_path, verdicts_path, summary_path, config_path)


def run(config: ScenarioConfig, out_dir) -> RunOutputs:
    """Full pipeline plus file outputs."""
    result = run_scenario(config)
    return write_outputs(result, out_dir)


# -- parameter sweeps -----------------------------------------------------------


def _resolve_parent(config: ScenarioConfig, dotted: str):
    parts = dotted.split(".")
    obj = config
    for part in parts[:-1]:
        if not hasattr(obj, part):
            raise ConfigError(f"sweep parameter path {dotted!r}: no section {part!r}")
        obj = getattr(obj, part)
    leaf = parts[-1]
    if not hasattr(obj, leaf):
        raise ConfigError(f"sweep parameter path {dotted!r}: no field {leaf!r}")
    current = getattr(obj, leaf)
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(f"sweep parameter path {dotted!r} is not numeric")
    return obj, leaf, type(current)


def sweep(config: ScenarioConfig, param: str, values, out_dir=None) -> list:
    """Run the pipeline once per value of a numeric config field.

    Detector-side sweeps reuse a single traffic run and only repeat the
    detection and metrics passes.  Returns one summary dict per value; when
    ``out_dir`` is given, also writes a combined sweep_summary.csv.
    """
    config.validate()
    _resolve_parent(config, param)  # fail fast on bad paths
    detector_side = param.split(".", 1)[0] == "detector"

    rows = []
    if detector_side:
        base = copy.deepcopy(config)
        broker = build_broker(base)
        events, truth, ip_regions = run_traffic(base, broker)
        reference = ReferenceProfile.from_config(base.diurnal, base.mix.region_count)
        catalog = broker.catalog()
        for value in values:
            cfg_v = copy.deepcopy(base)
            parent, leaf, typ = _resolve_parent(cfg_v, param)
            setattr(parent, leaf, typ(value))
            cfg_v.validate()
            reports = run_detection(events, cfg_v.detector, catalog, ip_regions, reference)
            conf = confusion(reports, truth)
            try:
                _, auc = roc_points(reports, truth)
            except ValueError:
                auc = None
            econ = economics(events, broker.ledger, reports, truth, broker.overhead_micros)
            result = RunResult(cfg_v, events, truth, ip_regions, reports, conf, econ, auc, broker)
            rows.append({"param": param, "value": typ(value), **result.summary_values()})
    else:
        for value in values:
            cfg_v = copy.deepcopy(config)
            parent, leaf, typ = _resolve_parent(cfg_v, param)
            setattr(parent, leaf, typ(value))
            cfg_v.validate()
            result = run_scenario(cfg_v)
            rows.append({"param": param, "value": typ(value), **result.summary_values()})

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        def write_sweep(fh):
            fh.write("param,value," + ",".join(SUMMARY_METRICS) + "\n")
            for row in rows:
                cells = [row["param"], _fmt(row["value"])]
                cells += [_fmt(row[m]) for m in SUMMARY_METRICS]
                fh.write(",".join(cells) + "\n")

        _atomic_write(out / "sweep_summary.csv", write_sweep)
    return rows
