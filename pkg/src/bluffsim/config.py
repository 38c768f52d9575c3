"""Scenario configuration: key tree, validation, presets, echo round-trip.

Config files are YAML.  Unknown keys are hard errors (no silent typos) and
every validation failure names the offending field path.  A file may start
from a named preset via the ``preset`` key and override individual fields.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .broker import ConfigError, InjectionConfig
from .detection import DetectorConfig
from .domain import DEFAULT_TOPIC_DIM
from .traffic import BehaviorParams, TrafficMix

FLAT_DIURNAL = tuple(1.0 for _ in range(24))


@dataclass
class CampaignSpec:
    advertiser_id: str
    bid_micros: int
    daily_budget_micros: int
    targeting: tuple

    def validate(self, path: str, topic_dim: int) -> None:
        if not self.advertiser_id:
            raise ConfigError(f"{path}.advertiser_id must be non-empty")
        if self.bid_micros <= 0:
            raise ConfigError(f"{path}.bid_micros must be positive")
        if self.daily_budget_micros <= 0:
            raise ConfigError(f"{path}.daily_budget_micros must be positive")
        if len(self.targeting) != topic_dim:
            raise ConfigError(f"{path}.targeting must have length {topic_dim}")
        if any(w < 0 for w in self.targeting) or not any(w > 0 for w in self.targeting):
            raise ConfigError(f"{path}.targeting must be non-negative with positive mass")


def default_campaigns(topic_dim: int = DEFAULT_TOPIC_DIM) -> list:
    """The stock inventory: two campaigns on each of ten mainstream
    verticals, plus four cheap campaigns on the two attacked verticals.

    The attacked verticals carry low bids: the scripted botnets pose as that
    audience, and the bid ratio is what places fraudulent spend in the
    expected 10-15% share of total spend at the default mix.
    """
    if topic_dim < 12:
        raise ConfigError("default campaigns require topic_dim >= 12")

    def targeting(topic: int, neighbor: int) -> tuple:
        vec = [0.0] * topic_dim
        vec[topic] = 0.8
        vec[neighbor] = 0.2
        return tuple(vec)

    campaigns = []
    for v in range(10):
        for k, suffix in enumerate("ab"):
            campaigns.append(
                CampaignSpec(
                    advertiser_id=f"adv{v:02d}{suffix}",
                    bid_micros=400_000 + (v * 2 + k) * 60_000,
                    daily_budget_micros=500_000_000,
                    targeting=targeting(v, (v + 1) % 10),
                )
            )
    for i, v in enumerate((10, 11, 10, 11)):
        campaigns.append(
            CampaignSpec(
                advertiser_id=f"niche{i:02d}",
                bid_micros=42_000,
                daily_budget_micros=200_000_000,
                targeting=targeting(v, 21 - v),
            )
        )
    return campaigns


@dataclass
class ScenarioConfig:
    seed: int = 0
    horizon_days: int = 7
    slots_per_page: int = 4
    topic_dim: int = DEFAULT_TOPIC_DIM
    diurnal: tuple = FLAT_DIURNAL
    mix: TrafficMix = field(default_factory=TrafficMix)
    behavior: BehaviorParams = field(default_factory=BehaviorParams)
    injection: InjectionConfig = field(default_factory=InjectionConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    campaigns: list = field(default_factory=default_campaigns)

    def validate(self) -> None:
        if not 0 <= self.seed < (1 << 64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.horizon_days < 1:
            raise ConfigError("horizon_days must be >= 1")
        if self.slots_per_page < 1:
            raise ConfigError("slots_per_page must be >= 1")
        if self.topic_dim < 2:
            raise ConfigError("topic_dim must be >= 2")
        if len(self.diurnal) != 24:
            raise ConfigError("diurnal must have exactly 24 weights")
        if any(w < 0 for w in self.diurnal) or not any(w > 0 for w in self.diurnal):
            raise ConfigError("diurnal weights must be non-negative, not all zero")
        self.mix.validate("mix")
        self.behavior.validate("behavior")
        self.injection.validate("injection")
        self.detector.validate("detector")
        seen = set()
        for i, c in enumerate(self.campaigns):
            c.validate(f"campaigns[{i}]", self.topic_dim)
            if c.advertiser_id in seen:
                raise ConfigError(f"campaigns[{i}]: duplicate advertiser_id {c.advertiser_id}")
            seen.add(c.advertiser_id)


# -- parsing ------------------------------------------------------------------

_MIX_KEYS = {
    "n_benign",
    "n_random_bot",
    "n_trained_bot",
    "n_dictionary_bot",
    "n_profile_harvester",
    "n_view_bot",
    "ip_sharing_factor",
    "region_count",
    "benign_topics",
    "attack_topics",
    "harvest_topics",
    "view_bot_target",
}
_BEHAVIOR_KEYS = {
    "base_ctr",
    "accidental_rate",
    "bot_click_rate",
    "dictionary_skill",
    "harvest_threshold",
    "sessions_per_day",
    "pages_per_session",
    "bot_sessions_per_day",
    "harvester_sessions_per_day",
    "page_gap_ms",
}
_INJECTION_KEYS = {"rho", "type_b_share", "bluff_pool_size"}
_DETECTOR_KEYS = {
    "p0",
    "pvalue_threshold",
    "min_clicks",
    "window_ms",
    "click_cap",
    "blacklist_ttl_ms",
    "divergence_threshold",
    "mismatch_epsilon",
    "fusion_weights",
    "fusion_threshold",
}
_CAMPAIGN_KEYS = {"advertiser_id", "bid_micros", "daily_budget_micros", "targeting"}
_TOP_KEYS = {
    "preset",
    "seed",
    "horizon_days",
    "slots_per_page",
    "topic_dim",
    "diurnal",
    "mix",
    "behavior",
    "injection",
    "detector",
    "campaigns",
}


def _reject_unknown(d: dict, known: set, path: str) -> None:
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return value


def _apply_scalars(obj, data: dict, path: str) -> None:
    for key, value in data.items():
        current = getattr(obj, key)
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{path}.{key}: expected a boolean")
        elif isinstance(current, int) and not isinstance(current, bool):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{path}.{key}: expected an integer")
        elif isinstance(current, float):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{path}.{key}: expected a number")
            value = float(value)
        setattr(obj, key, value)


def _build_config(data: dict) -> ScenarioConfig:
    _reject_unknown(data, _TOP_KEYS, "config")
    cfg = ScenarioConfig()
    for key in ("seed", "horizon_days", "slots_per_page", "topic_dim"):
        if key in data:
            value = data[key]
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"config.{key}: expected an integer")
            setattr(cfg, key, value)
    if "diurnal" in data:
        value = data["diurnal"]
        if not isinstance(value, list):
            raise ConfigError("config.diurnal: expected a list of 24 numbers")
        cfg.diurnal = tuple(float(w) for w in value)

    if "mix" in data:
        section = _expect_mapping(data["mix"], "mix")
        _reject_unknown(section, _MIX_KEYS, "mix")
        section = dict(section)
        for range_key in ("attack_topics", "harvest_topics"):
            if range_key in section:
                rng = section[range_key]
                if not isinstance(rng, list) or len(rng) != 2:
                    raise ConfigError(f"mix.{range_key}: expected [lo, hi]")
                section[range_key] = tuple(int(x) for x in rng)
        target = section.pop("view_bot_target", None)
        _apply_scalars(cfg.mix, section, "mix")
        if target is not None:
            if not isinstance(target, str):
                raise ConfigError("mix.view_bot_target: expected an advertiser_id string")
            cfg.mix.view_bot_target = target
    if "behavior" in data:
        section = _expect_mapping(data["behavior"], "behavior")
        _reject_unknown(section, _BEHAVIOR_KEYS, "behavior")
        _apply_scalars(cfg.behavior, section, "behavior")
    if "injection" in data:
        section = _expect_mapping(data["injection"], "injection")
        _reject_unknown(section, _INJECTION_KEYS, "injection")
        _apply_scalars(cfg.injection, section, "injection")
    if "detector" in data:
        section = dict(_expect_mapping(data["detector"], "detector"))
        _reject_unknown(section, _DETECTOR_KEYS, "detector")
        weights = section.pop("fusion_weights", None)
        _apply_scalars(cfg.detector, section, "detector")
        if weights is not None:
            if not isinstance(weights, list) or len(weights) != 3:
                raise ConfigError("detector.fusion_weights: expected [w_bluff, w_thresh, w_profile]")
            cfg.detector.w_bluff = float(weights[0])
            cfg.detector.w_thresh = float(weights[1])
            cfg.detector.w_profile = float(weights[2])
    if "campaigns" in data:
        raw = data["campaigns"]
        if not isinstance(raw, list):
            raise ConfigError("campaigns: expected a list")
        campaigns = []
        for i, item in enumerate(raw):
            path = f"campaigns[{i}]"
            item = _expect_mapping(item, path)
            _reject_unknown(item, _CAMPAIGN_KEYS, path)
            for req in _CAMPAIGN_KEYS:
                if req not in item:
                    raise ConfigError(f"{path}: missing required key {req}")
            campaigns.append(
                CampaignSpec(
                    advertiser_id=str(item["advertiser_id"]),
                    bid_micros=int(item["bid_micros"]),
                    daily_budget_micros=int(item["daily_budget_micros"]),
                    targeting=tuple(float(w) for w in item["targeting"]),
                )
            )
        cfg.campaigns = campaigns

    # Range/invariant validation raises ConfigError with field paths.
    try:
        cfg.validate()
    except ConfigError:
        raise
    except ValueError as exc:  # invariant checks from nested types
        raise ConfigError(str(exc)) from exc
    return cfg


# -- presets -------------------------------------------------------------------


def _preset_default_attack() -> dict:
    return {}


def _preset_benign_only() -> dict:
    return {
        "mix": {"n_random_bot": 0, "n_trained_bot": 0},
    }


def _preset_dictionary_attack() -> dict:
    # Trained bots swapped for perfect-dictionary bots, plus a
    # profile-harvesting cohort chasing the unserved niche.
    return {
        "mix": {
            "n_trained_bot": 0,
            "n_dictionary_bot": 20,
            "n_profile_harvester": 20,
        },
        "behavior": {"dictionary_skill": 1.0},
    }


def _preset_baseline_no_bluff() -> dict:
    return {"injection": {"rho": 0.0}}


PRESETS = {
    "default-attack": _preset_default_attack,
    "benign-only": _preset_benign_only,
    "dictionary-attack": _preset_dictionary_attack,
    "baseline-no-bluff": _preset_baseline_no_bluff,
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(source: str) -> ScenarioConfig:
    """Load a scenario from a YAML file path or a preset name.

    A file may name a base preset via the ``preset`` key; its remaining keys
    override the preset.  Unknown keys anywhere are errors.
    """
    path = Path(source)
    if path.exists():
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{source}: YAML parse error: {exc}") from exc
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be a mapping")
    elif source in PRESETS:
        data = {"preset": source}
    else:
        raise ConfigError(f"config source {source!r} is neither a file nor a preset name")

    preset_name = data.pop("preset", None)
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset_name!r}; available: {sorted(PRESETS)}"
            )
        data = _deep_merge(PRESETS[preset_name](), data)
    return _build_config(data)


# -- echo ----------------------------------------------------------------------


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Fully-resolved config as a plain dict, same key tree as the input."""
    return {
        "seed": cfg.seed,
        "horizon_days": cfg.horizon_days,
        "slots_per_page": cfg.slots_per_page,
        "topic_dim": cfg.topic_dim,
        "diurnal": [float(w) for w in cfg.diurnal],
        "mix": {
            "n_benign": cfg.mix.n_benign,
            "n_random_bot": cfg.mix.n_random_bot,
            "n_trained_bot": cfg.mix.n_trained_bot,
            "n_dictionary_bot": cfg.mix.n_dictionary_bot,
            "n_profile_harvester": cfg.mix.n_profile_harvester,
            "n_view_bot": cfg.mix.n_view_bot,
            "ip_sharing_factor": cfg.mix.ip_sharing_factor,
            "region_count": cfg.mix.region_count,
            "benign_topics": cfg.mix.benign_topics,
            "attack_topics": [cfg.mix.attack_topics[0], cfg.mix.attack_topics[1]],
            "harvest_topics": [cfg.mix.harvest_topics[0], cfg.mix.harvest_topics[1]],
            "view_bot_target": cfg.mix.view_bot_target,
        },
        "behavior": {
            "base_ctr": cfg.behavior.base_ctr,
            "accidental_rate": cfg.behavior.accidental_rate,
            "bot_click_rate": cfg.behavior.bot_click_rate,
            "dictionary_skill": cfg.behavior.dictionary_skill,
            "harvest_threshold": cfg.behavior.harvest_threshold,
            "sessions_per_day": cfg.behavior.sessions_per_day,
            "pages_per_session": cfg.behavior.pages_per_session,
            "bot_sessions_per_day": cfg.behavior.bot_sessions_per_day,
            "harvester_sessions_per_day": cfg.behavior.harvester_sessions_per_day,
            "page_gap_ms": cfg.behavior.page_gap_ms,
        },
        "injection": {
            "rho": cfg.injection.rho,
            "type_b_share": cfg.injection.type_b_share,
            "bluff_pool_size": cfg.injection.bluff_pool_size,
        },
        "detector": {
            "p0": cfg.detector.p0,
            "pvalue_threshold": cfg.detector.pvalue_threshold,
            "min_clicks": cfg.detector.min_clicks,
            "window_ms": cfg.detector.window_ms,
            "click_cap": cfg.detector.click_cap,
            "blacklist_ttl_ms": cfg.detector.blacklist_ttl_ms,
            "divergence_threshold": cfg.detector.divergence_threshold,
            "mismatch_epsilon": cfg.detector.mismatch_epsilon,
            "fusion_weights": [cfg.detector.w_bluff, cfg.detector.w_thresh, cfg.detector.w_profile],
            "fusion_threshold": cfg.detector.fusion_threshold,
        },
        "campaigns": [
            {
                "advertiser_id": c.advertiser_id,
                "bid_micros": c.bid_micros,
                "daily_budget_micros": c.daily_budget_micros,
                "targeting": [float(w) for w in c.targeting],
            }
            for c in cfg.campaigns
        ],
    }


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
