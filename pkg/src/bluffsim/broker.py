"""The ad brokerage: ranking, decoy injection, billing, budgets, quality.

The broker ranks real ads by bid x quality x relevance, replaces each slot
with a decoy ad with probability ``rho``, charges first-price per click with
daily-budget clamping, and keeps Laplace-smoothed quality scores per ad.

Decoy ads are house ads: zero bid, no advertiser, and never a ledger entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .domain import (
    EPSILON_BLUFF,
    MS_PER_DAY,
    AdKind,
    AdUnit,
    RelevanceCache,
    TopicVector,
    basis_vector,
)
from .rng import SplitMix64


class ConfigError(ValueError):
    """Raised when a configuration cannot produce a valid artifact."""


@dataclass
class QualityScore:
    """Click-through counters with Laplace smoothing: q = (c+1)/(n+2)."""

    impressions: int = 0
    clicks: int = 0

    @property
    def q(self) -> float:
        return (self.clicks + 1) / (self.impressions + 2)


@dataclass
class InjectionConfig:
    rho: float = 0.10  # per-slot probability the slot carries a decoy
    type_b_share: float = 0.5  # fraction of decoy slots that are untargeted
    bluff_pool_size: int = 64

    def validate(self, path: str = "injection") -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"{path}.rho must be in [0, 1], got {self.rho}")
        if not 0.0 <= self.type_b_share <= 1.0:
            raise ConfigError(f"{path}.type_b_share must be in [0, 1], got {self.type_b_share}")
        if self.bluff_pool_size <= 0:
            raise ConfigError(f"{path}.bluff_pool_size must be positive")


@dataclass
class Campaign:
    advertiser_id: str
    ads: list  # list[AdUnit], all REAL
    daily_budget_micros: int
    spent_today_micros: int = 0

    def remaining_micros(self) -> int:
        return self.daily_budget_micros - self.spent_today_micros


@dataclass(frozen=True)
class LedgerEntry:
    t: int
    advertiser_id: str
    ad_id: str
    amount_micros: int
    # Not part of the billing record proper; retained so economics can
    # attribute spend to traffic sources without re-joining on timestamps.
    agent_id: str


class BillingLedger:
    """Append-only sequence of per-click charges (real ads only)."""

    def __init__(self):
        self.entries: list[LedgerEntry] = []

    def append(self, entry: LedgerEntry) -> None:
        self.entries.append(entry)

    def total_micros(self) -> int:
        return sum(e.amount_micros for e in self.entries)

    def per_advertiser_day(self) -> dict:
        """Map (advertiser_id, day_index) -> total charged that day."""
        out: dict = {}
        for e in self.entries:
            key = (e.advertiser_id, e.t // MS_PER_DAY)
            out[key] = out.get(key, 0) + e.amount_micros
        return out


class Broker:
    """Single-run broker state: inventory, quality, budgets, decoy machinery.

    All mutation happens from the single-threaded simulation loop; reads for
    metric computation take place after the run.
    """

    def __init__(
        self,
        campaigns: list,
        injection: InjectionConfig,
        topic_dim: int,
        seed: int,
        relevance_cache: Optional[RelevanceCache] = None,
    ):
        injection.validate()
        self.injection = injection
        self.topic_dim = topic_dim
        self.campaigns: dict[str, Campaign] = {}
        self.ads: dict[str, AdUnit] = {}
        self._ad_owner: dict[str, str] = {}
        self.quality: dict[str, QualityScore] = {}
        self.ledger = BillingLedger()
        self.rel = relevance_cache or RelevanceCache()
        self.overhead_micros = 0  # score value of real ads displaced by decoys
        self.bluff_clicks: dict[str, int] = {}
        self._served: set = set()  # (agent_id, page_id, ad_id)
        self._day = 0

        for c in campaigns:
            if c.advertiser_id in self.campaigns:
                raise ConfigError(f"duplicate advertiser_id {c.advertiser_id}")
            self.campaigns[c.advertiser_id] = c
            for ad in c.ads:
                if ad.kind is not AdKind.REAL:
                    raise ConfigError("campaigns may contain only real ads")
                if ad.ad_id in self.ads:
                    raise ConfigError(f"duplicate ad_id {ad.ad_id}")
                self.ads[ad.ad_id] = ad
                self._ad_owner[ad.ad_id] = c.advertiser_id
                self.quality[ad.ad_id] = QualityScore()

        pool_rng = SplitMix64.for_stream(seed, stream=3)  # STREAM_BLUFF_POOL
        self._bluff_pool = self._build_bluff_pool(pool_rng)
        self._bluff_b_units = self._build_bluff_b_units()
        # Decoy units share ad_ids with fixed content, so the catalog the
        # detector consumes stays consistent across impressions.
        for unit in self._bluff_b_units:
            self.ads[unit.ad_id] = unit
        self._bluff_a_ids = {ad_id for ad_id, _ in self._bluff_pool}
        self._bluff_a_ids.update(f"ba-basis{t:02d}" for t in range(topic_dim))

    # -- decoy construction -------------------------------------------------

    def _build_bluff_pool(self, rng: SplitMix64) -> list:
        """Content vectors for profile-targeted decoys: one heavy topic with
        a thin spread, so almost any realistic (sparse-ish) profile admits a
        pool vector with relevance below the decoy bound.
        """
        pool = []
        d = self.topic_dim
        spread = 0.05 / (d - 1)
        for i in range(self.injection.bluff_pool_size):
            topic = rng.randrange(d)
            vec = tuple(0.95 if j == topic else spread for j in range(d))
            pool.append((f"ba{i:03d}", vec))
        return pool

    def _build_bluff_b_units(self) -> list:
        d = self.topic_dim
        uniform = tuple(1.0 / d for _ in range(d))
        # Spread mass 0.09 keeps the dominant topic's share of mass >= 0.9
        # with slack, immune to float-summation rounding.
        spread = 0.09 / (d - 1)
        units = []
        for j in range(d):
            content = tuple(0.9 if i == j else spread for i in range(d))
            units.append(
                AdUnit(ad_id=f"bb{j:02d}", kind=AdKind.BLUFF_B, targeting=uniform, content=content)
            )
        return units

    def make_bluff_a(self, profile: TopicVector, rng: SplitMix64) -> AdUnit:
        """Decoy targeted at this profile with content unrelated to it.

        Draws from the pool until the relevance bound holds; falls back to a
        basis vector in the profile's minimum-weight coordinate.  A profile so
        dense that even the fallback is related is a configuration error.
        """
        for _ in range(self.injection.bluff_pool_size):
            ad_id, content = self._bluff_pool[rng.randrange(len(self._bluff_pool))]
            if self.rel.get(profile, content) < EPSILON_BLUFF:
                return AdUnit(ad_id=ad_id, kind=AdKind.BLUFF_A, targeting=profile, content=content)
        min_topic = min(range(len(profile)), key=lambda i: (profile[i], i))
        content = basis_vector(len(profile), min_topic)
        if self.rel.get(profile, content) >= EPSILON_BLUFF:
            raise ConfigError(
                "profile is too dense to admit an unrelated decoy "
                f"(best achievable relevance {self.rel.get(profile, content):.4f})"
            )
        return AdUnit(
            ad_id=f"ba-basis{min_topic:02d}",
            kind=AdKind.BLUFF_A,
            targeting=profile,
            content=content,
        )

    def make_bluff_b(self, rng: SplitMix64) -> AdUnit:
        """Untargeted decoy with specialized (single-topic-dominant) content."""
        return self._bluff_b_units[rng.randrange(self.topic_dim)]

    # -- serving ------------------------------------------------------------

    def _advance_day(self, t: int) -> None:
        day = t // MS_PER_DAY
        if day != self._day:
            for c in self.campaigns.values():
                c.spent_today_micros = 0
            self._day = day

    def score(self, profile: TopicVector, ad: AdUnit) -> float:
        return ad.bid_micros * self.quality[ad.ad_id].q * self.rel.get(profile, ad.targeting)

    def rank_ads(self, profile: TopicVector, slots: int) -> list:
        """Top ``slots`` budget-eligible real ads by bid x quality x relevance.

        Zero-score ads (no targeting overlap) are not served.  Ties break by
        ascending ad_id.  May return fewer than ``slots`` ads.
        """
        if slots < 1:
            raise ValueError("slots must be >= 1")
        scored = []
        for c in self.campaigns.values():
            if c.remaining_micros() <= 0:
                continue
            for ad in c.ads:
                s = self.score(profile, ad)
                if s > 0.0:
                    scored.append((-s, ad.ad_id, ad))
        scored.sort(key=lambda x: (x[0], x[1]))
        return [ad for _, _, ad in scored[:slots]]

    def serve_page(
        self,
        profile: TopicVector,
        slots: int,
        rng: SplitMix64,
        t: int,
        agent_id: str,
        page_id: int,
    ) -> list:
        """Build the slate for one page view and meter impressions.

        Starts from the ranked real slate; each slot is independently
        replaced by a decoy with probability rho (untargeted decoy with
        probability type_b_share, else one built for this profile).
        Replaced real ads receive no impression.
        """
        self._advance_day(t)
        slate = self.rank_ads(profile, slots)
        inj = self.injection
        for i in range(len(slate)):
            if inj.rho > 0.0 and rng.random() < inj.rho:
                displaced = slate[i]
                self.overhead_micros += int(round(self.score(profile, displaced)))
                if rng.random() < inj.type_b_share:
                    slate[i] = self.make_bluff_b(rng)
                else:
                    slate[i] = self.make_bluff_a(profile, rng)
        for ad in slate:
            if ad.kind is AdKind.REAL:
                self.quality[ad.ad_id].impressions += 1
            self._served.add((agent_id, page_id, ad.ad_id))
        return slate

    # -- billing ------------------------------------------------------------

    def record_click(
        self,
        ad_id: str,
        t: int,
        agent_id: str,
        page_id: int,
        ip: Optional[str] = None,
        blacklist=None,
    ) -> int:
        """Meter a click and charge the advertiser; returns micros charged.

        Decoy clicks are never charged.  Clicks from blacklisted IPs are
        metered but excluded from billing.  The charge is clamped to the
        campaign's remaining daily budget.
        """
        self._advance_day(t)
        ad = self.ads.get(ad_id)
        if ad is None and ad_id not in self._bluff_a_ids:
            raise ValueError(f"click on unknown ad_id {ad_id}")
        if (agent_id, page_id, ad_id) not in self._served:
            raise ValueError(
                f"click without a served impression: agent={agent_id} page={page_id} ad={ad_id}"
            )
        if ad is None or ad.kind is not AdKind.REAL:
            self.bluff_clicks[ad_id] = self.bluff_clicks.get(ad_id, 0) + 1
            return 0
        self.quality[ad_id].clicks += 1
        if blacklist is not None and ip is not None and blacklist.check(ip, t):
            return 0
        campaign = self.campaigns[self._ad_owner[ad_id]]
        charge = min(ad.bid_micros, campaign.remaining_micros())
        if charge <= 0:
            return 0
        campaign.spent_today_micros += charge
        assert campaign.spent_today_micros <= campaign.daily_budget_micros
        self.ledger.append(LedgerEntry(t, campaign.advertiser_id, ad_id, charge, agent_id))
        return charge

    def get_quality(self, ad_id: str) -> float:
        return self.quality[ad_id].q

    # -- views for downstream consumers --------------------------------------

    def catalog(self) -> dict:
        """ad_id -> (AdKind, content vector); what the broker knows about its
        own inventory and decoys, legitimately available to detection.
        """
        cat = {ad_id: (ad.kind, ad.content) for ad_id, ad in self.ads.items()}
        for ad_id, content in self._bluff_pool:
            cat[ad_id] = (AdKind.BLUFF_A, content)
        d = self.topic_dim
        for topic in range(d):
            cat[f"ba-basis{topic:02d}"] = (AdKind.BLUFF_A, basis_vector(d, topic))
        return cat
