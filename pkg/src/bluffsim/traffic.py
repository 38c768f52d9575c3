"""Traffic generation: populations, session plans, click decisions, events.

One scenario run is single-threaded and fully deterministic.  Every agent
draws from its own RNG substream derived from (seed, stream, agent index),
so adding or removing a cohort never perturbs the traffic of the agents that
remain -- paired-run experiments (for example adding a view-fraud cohort)
compare like with like.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

from .broker import Broker, ConfigError
from .domain import (
    MS_PER_DAY,
    MS_PER_HOUR,
    AdKind,
    Agent,
    AgentKind,
    Event,
    EventType,
    RelevanceCache,
    TopicVector,
    event_sort_key,
)
from .rng import (
    STREAM_INJECTION,
    STREAM_POPULATION,
    STREAM_TRAFFIC,
    SplitMix64,
)


@dataclass
class BehaviorParams:
    """Click and browsing behavior knobs shared by a scenario.

    ``accidental_rate`` is the floor probability with which a benign user
    clicks an ad utterly unrelated to their interests; real users misclick,
    which is what keeps the decoy hypothesis test honest.
    """

    base_ctr: float = 0.05  # benign click probability at relevance 1
    accidental_rate: float = 0.002  # benign floor (misclicks), alpha
    bot_click_rate: float = 0.3  # per-ad click probability for clicking bots
    dictionary_skill: float = 0.9  # P(dictionary bot recognizes a bluff_a ad)
    harvest_threshold: float = 0.5  # harvester clicks content at least this relevant
    sessions_per_day: float = 2.0  # benign browsing rate
    pages_per_session: int = 3
    bot_sessions_per_day: float = 15.0  # clicking-bot browsing rate
    harvester_sessions_per_day: float = 30.0  # harvesters crawl aggressively
    page_gap_ms: float = 30_000.0  # mean gap between pages within a session

    def validate(self, path: str = "behavior") -> None:
        for name in ("base_ctr", "accidental_rate", "bot_click_rate", "dictionary_skill", "harvest_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{path}.{name} must be in [0, 1], got {v}")
        if self.accidental_rate >= self.base_ctr:
            raise ConfigError(f"{path}.accidental_rate must be below {path}.base_ctr")
        for name in ("sessions_per_day", "bot_sessions_per_day", "harvester_sessions_per_day", "page_gap_ms"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{path}.{name} must be positive")
        if self.pages_per_session < 1:
            raise ConfigError(f"{path}.pages_per_session must be >= 1")


@dataclass
class TrafficMix:
    """Population sizes plus the topic geometry personas are drawn from.

    Benign interests live on the mainstream topics; clicking bots fake
    personas on the attacked verticals (a budget-depletion botnet poses as
    the victim's audience); harvesters chase a niche no campaign serves.
    """

    n_benign: int = 1000
    n_random_bot: int = 30
    n_trained_bot: int = 20
    n_dictionary_bot: int = 0
    n_profile_harvester: int = 0
    n_view_bot: int = 0
    ip_sharing_factor: int = 2  # bots per IP within a cohort
    region_count: int = 1
    benign_topics: int = 10  # benign personas mix two of topics [0, n)
    attack_topics: tuple = (10, 12)  # half-open topic range for bot personas
    harvest_topics: tuple = (12, 16)  # half-open topic range for harvesters
    view_bot_target: Optional[str] = None  # advertiser whose audience view bots fake

    def total(self) -> int:
        return (
            self.n_benign
            + self.n_random_bot
            + self.n_trained_bot
            + self.n_dictionary_bot
            + self.n_profile_harvester
            + self.n_view_bot
        )

    def validate(self, path: str = "mix") -> None:
        for name in (
            "n_benign",
            "n_random_bot",
            "n_trained_bot",
            "n_dictionary_bot",
            "n_profile_harvester",
            "n_view_bot",
        ):
            if getattr(self, name) < 0:
                raise ConfigError(f"{path}.{name} must be non-negative")
        if self.total() <= 0:
            raise ConfigError(f"{path}: total population must be positive")
        if self.ip_sharing_factor < 1:
            raise ConfigError(f"{path}.ip_sharing_factor must be >= 1")
        if self.region_count < 1:
            raise ConfigError(f"{path}.region_count must be >= 1")
        if self.benign_topics < 2:
            raise ConfigError(f"{path}.benign_topics must be >= 2")
        for name in ("attack_topics", "harvest_topics"):
            lo, hi = getattr(self, name)
            if not 0 <= lo < hi:
                raise ConfigError(f"{path}.{name} must be a non-empty (lo, hi) range")


@dataclass(frozen=True)
class SessionPlan:
    agent_id: str
    arrivals: tuple  # page-view timestamps, strictly increasing


# Cohorts in id order.  View bots come last so that adding a view-fraud
# cohort to an existing scenario leaves every other agent's id unchanged.
_COHORT_ORDER = (
    (AgentKind.BENIGN, "n_benign"),
    (AgentKind.RANDOM_BOT, "n_random_bot"),
    (AgentKind.TRAINED_BOT, "n_trained_bot"),
    (AgentKind.DICTIONARY_BOT, "n_dictionary_bot"),
    (AgentKind.PROFILE_HARVESTER, "n_profile_harvester"),
    (AgentKind.VIEW_BOT, "n_view_bot"),
)

_MIMIC_KINDS = frozenset({AgentKind.BENIGN, AgentKind.TRAINED_BOT, AgentKind.DICTIONARY_BOT})


def _spread_profile(dim: int, dominant: dict, spread_mass: float) -> TopicVector:
    base = spread_mass / dim
    vec = [base] * dim
    for topic, mass in dominant.items():
        vec[topic] += mass
    return tuple(vec)


def build_population(
    mix: TrafficMix,
    topic_dim: int,
    seed: int,
    campaign_targeting: Optional[dict] = None,
) -> tuple:
    """Construct the agent roster and the IP -> region map.

    Benign users get unique IPs; bot cohorts share IPs in groups of
    ``ip_sharing_factor`` (NAT / botnet co-location).  View bots fake the
    audience of ``view_bot_target`` (default: first campaign) so their
    impressions land on that campaign.
    """
    mix.validate()
    if mix.benign_topics > topic_dim:
        raise ConfigError("mix.benign_topics exceeds topic_dim")
    for lo, hi in (mix.attack_topics, mix.harvest_topics):
        if hi > topic_dim:
            raise ConfigError("mix topic range exceeds topic_dim")

    agents: list[Agent] = []
    ip_regions: dict[str, int] = {}
    index = 0
    bot_ip_serial = 0

    def region_for(ip: str, rng: SplitMix64) -> int:
        if ip not in ip_regions:
            ip_regions[ip] = rng.randrange(mix.region_count) if mix.region_count > 1 else 0
        return ip_regions[ip]

    view_target_vec = None
    if campaign_targeting:
        if mix.view_bot_target is not None:
            if mix.view_bot_target not in campaign_targeting:
                raise ConfigError(f"mix.view_bot_target {mix.view_bot_target!r} not in campaigns")
            view_target_vec = campaign_targeting[mix.view_bot_target]
        else:
            view_target_vec = next(iter(campaign_targeting.values()))
    if mix.n_view_bot > 0 and view_target_vec is None:
        raise ConfigError("view bots require at least one campaign to target")

    for kind, attr in _COHORT_ORDER:
        count = getattr(mix, attr)
        for i in range(count):
            rng = SplitMix64.for_stream(seed, STREAM_POPULATION, instance=index)
            if kind is AgentKind.BENIGN:
                a = rng.randrange(mix.benign_topics)
                b = rng.randrange(mix.benign_topics - 1)
                if b >= a:
                    b += 1
                profile = _spread_profile(topic_dim, {a: 0.6, b: 0.3}, 0.1)
                ip = f"10.{(index >> 16) & 0xFF}.{(index >> 8) & 0xFF}.{index & 0xFF}"
            else:
                if kind is AgentKind.PROFILE_HARVESTER:
                    # Mostly mass on the harvested niche plus a whisper of
                    # spread: slates must still fill (zero-relevance users
                    # get no ads at all, hence no decoy exposure).
                    lo, hi = mix.harvest_topics
                    span = hi - lo
                    profile = _spread_profile(
                        topic_dim, {t: 0.98 / span for t in range(lo, hi)}, 0.02
                    )
                elif kind is AgentKind.VIEW_BOT:
                    profile = view_target_vec
                else:
                    # Clicking bots pose narrowly as the attacked vertical's
                    # audience.  The off-vertical spread is kept tiny so that
                    # no mainstream ad can outscore the attacked campaigns in
                    # a bot's slate even at a cold-start quality of 1.0
                    # (otherwise bots bleed spend onto high-bid campaigns
                    # whenever early quality estimates are lucky).
                    lo, hi = mix.attack_topics
                    span = hi - lo
                    if span == 1:
                        profile = _spread_profile(topic_dim, {lo: 0.98}, 0.02)
                    else:
                        a_off = rng.randrange(span)
                        b_off = rng.randrange(span - 1)
                        if b_off >= a_off:
                            b_off += 1
                        profile = _spread_profile(
                            topic_dim, {lo + a_off: 0.49, lo + b_off: 0.49}, 0.02
                        )
                group = bot_ip_serial // mix.ip_sharing_factor
                ip = f"172.16.{(group >> 8) & 0xFF}.{group & 0xFF}"
                bot_ip_serial += 1
            region = region_for(ip, rng)
            agents.append(
                Agent(
                    agent_id=f"u{index:06d}",
                    kind=kind,
                    profile=profile,
                    ip=ip,
                    region=region,
                    index=index,
                )
            )
            index += 1
    return agents, ip_regions


def benign_click_prob(r: float, behavior: BehaviorParams) -> float:
    """Benign per-ad click probability, affine in relevance.

    Floor is the accidental rate, ceiling is base_ctr.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"relevance must be in [0, 1], got {r}")
    a = behavior.accidental_rate
    return a + (behavior.base_ctr - a) * r


def decide_clicks(
    agent: Agent,
    served: list,
    behavior: BehaviorParams,
    rng: SplitMix64,
    rel: RelevanceCache,
) -> set:
    """Which slots of the served slate this agent clicks.

    Benign users click by content relevance to their true interests.
    Random and trained bots click every ad at the bot rate.  Dictionary bots
    do the same but recognize (and skip) a profile-targeted decoy with
    probability ``dictionary_skill``; specialized untargeted decoys read like
    real ads to a dictionary lookup, so they get no such treatment.
    Harvesters click exactly the ads whose content matches their persona at
    or above the harvest threshold.  View bots never click.
    """
    clicked: set[int] = set()
    kind = agent.kind
    for slot, ad in enumerate(served):
        if kind is AgentKind.BENIGN:
            p = benign_click_prob(rel.get(agent.profile, ad.content), behavior)
            if rng.random() < p:
                clicked.add(slot)
        elif kind in (AgentKind.RANDOM_BOT, AgentKind.TRAINED_BOT):
            if rng.random() < behavior.bot_click_rate:
                clicked.add(slot)
        elif kind is AgentKind.DICTIONARY_BOT:
            if ad.kind is AdKind.BLUFF_A:
                p = (
                    behavior.accidental_rate
                    if rng.random() < behavior.dictionary_skill
                    else behavior.bot_click_rate
                )
            else:
                p = behavior.bot_click_rate
            if rng.random() < p:
                clicked.add(slot)
        elif kind is AgentKind.PROFILE_HARVESTER:
            if rel.get(agent.profile, ad.content) >= behavior.harvest_threshold:
                if rng.random() < behavior.bot_click_rate:
                    clicked.add(slot)
        elif kind is AgentKind.VIEW_BOT:
            continue
        else:
            raise ValueError(f"unknown agent kind {kind}")
    return clicked


def _session_rate(kind: AgentKind, behavior: BehaviorParams) -> float:
    if kind is AgentKind.BENIGN:
        return behavior.sessions_per_day
    if kind is AgentKind.PROFILE_HARVESTER:
        return behavior.harvester_sessions_per_day
    return behavior.bot_sessions_per_day


def plan_sessions(
    agents: list,
    behavior: BehaviorParams,
    horizon_ms: int,
    diurnal: tuple,
    seed: int,
) -> list:
    """Session plans for every agent over the horizon.

    Benign (and mimicking bot) session starts follow a per-day Poisson count
    placed by the diurnal hour weights; random bots, harvesters and view bots
    arrive uniformly over the horizon.  Pages within a session are spaced by
    exponential gaps.  Plans are sorted by first arrival.
    """
    if not agents:
        raise ConfigError("cannot plan sessions for an empty population")
    if len(diurnal) != 24 or any(w < 0 for w in diurnal) or not any(w > 0 for w in diurnal):
        raise ConfigError("diurnal curve must be 24 non-negative weights, not all zero")
    if horizon_ms <= 0:
        return []
    days = horizon_ms // MS_PER_DAY
    plans: list[SessionPlan] = []
    for agent in agents:
        rng = SplitMix64.for_stream(seed, STREAM_TRAFFIC, instance=agent.index)
        rate = _session_rate(agent.kind, behavior)
        starts: list[int] = []
        if agent.kind in _MIMIC_KINDS:
            for day in range(days):
                n = rng.poisson(rate)
                for _ in range(n):
                    hour = rng.weighted_index(diurnal)
                    offset = rng.randrange(MS_PER_HOUR)
                    starts.append(day * MS_PER_DAY + hour * MS_PER_HOUR + offset)
        else:
            n = rng.poisson(rate * (horizon_ms / MS_PER_DAY))
            starts = [rng.randrange(horizon_ms) for _ in range(n)]
        starts.sort()
        for start in starts:
            arrivals = [start]
            t = start
            for _ in range(behavior.pages_per_session - 1):
                t += max(1, int(round(rng.expovariate(behavior.page_gap_ms))))
                arrivals.append(t)
            plans.append(SessionPlan(agent_id=agent.agent_id, arrivals=tuple(arrivals)))
    plans.sort(key=lambda p: (p.arrivals[0], p.agent_id))
    return plans


def run_traffic(
    config,
    broker: Broker,
    agents: Optional[list] = None,
    ip_regions: Optional[dict] = None,
    blacklist=None,
) -> tuple:
    """Drive the serve -> decide -> record loop for a whole scenario.

    Returns (events sorted by the documented tie order, truth map
    agent_id -> AgentKind, ip_regions).  Billing happens in strict timestamp
    order: clicks are queued with their dwell delay and billed before any
    later page is served, so daily budget resets see monotone time.
    """
    if agents is None:
        campaign_targeting = {c.advertiser_id: c.targeting for c in config.campaigns}
        agents, ip_regions = build_population(
            config.mix, config.topic_dim, config.seed, campaign_targeting
        )
    assert ip_regions is not None
    behavior = config.behavior
    behavior.validate()
    horizon_ms = config.horizon_days * MS_PER_DAY
    plans = plan_sessions(agents, behavior, horizon_ms, config.diurnal, config.seed)

    by_id = {a.agent_id: a for a in agents}
    # Assign per-agent page counters in chronological order.
    page_views: list[tuple] = []  # (t, agent_index, agent_id)
    for plan in plans:
        for t in plan.arrivals:
            page_views.append((t, by_id[plan.agent_id].index, plan.agent_id))
    page_views.sort()
    page_counters: dict[str, int] = {}

    click_rngs = {
        a.agent_id: SplitMix64.for_stream(config.seed, STREAM_TRAFFIC, instance=(1 << 32) + a.index)
        for a in agents
    }

    events: list[Event] = []
    pending: list = []  # heap of (t_click, serial, agent_id, page_id, ad_id, ad_kind, slot)
    serial = 0

    def flush_pending(upto: int) -> None:
        while pending and pending[0][0] <= upto:
            tc, _, aid, page_id, ad_id, ad_kind, slot = heapq.heappop(pending)
            agent = by_id[aid]
            broker.record_click(ad_id, tc, aid, page_id, ip=agent.ip, blacklist=blacklist)
            events.append(
                Event(tc, EventType.CLICK, aid, agent.ip, page_id, ad_id, ad_kind, slot)
            )

    for t, _, agent_id in page_views:
        flush_pending(t)
        agent = by_id[agent_id]
        counter = page_counters.get(agent_id, 0)
        page_counters[agent_id] = counter + 1
        page_id = agent.index * 1_000_000 + counter
        inj_rng = SplitMix64.for_stream(
            config.seed, STREAM_INJECTION, instance=agent.index * 1_048_576 + counter
        )
        slate = broker.serve_page(
            agent.profile, config.slots_per_page, inj_rng, t, agent_id, page_id
        )
        if not slate:
            continue
        for slot, ad in enumerate(slate):
            events.append(
                Event(t, EventType.IMPRESSION, agent_id, agent.ip, page_id, ad.ad_id, ad.kind, slot)
            )
        rng = click_rngs[agent_id]
        clicked = decide_clicks(agent, slate, behavior, rng, broker.rel)
        for slot in sorted(clicked):
            ad = slate[slot]
            delay = 1 + rng.randrange(4000)
            heapq.heappush(pending, (t + delay, serial, agent_id, page_id, ad.ad_id, ad.kind, slot))
            serial += 1
    flush_pending(1 << 62)

    events.sort(key=event_sort_key)
    truth = {a.agent_id: a.kind for a in agents}
    return events, truth, ip_regions
