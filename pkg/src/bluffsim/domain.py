"""Core vocabulary shared by every other module: topics, ads, agents, events.

Conventions used throughout the simulator:

* Topic vectors are plain tuples of non-negative floats of length D
  (``topic_dim``).  They are immutable and hashable, which makes relevance
  caching trivial.
* Money is an ``int`` number of micro-currency units (1 micro = 1e-6 of a
  currency unit).  All billing arithmetic is exact integer arithmetic.
* Timestamps are ``int`` simulated milliseconds since scenario start.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

DEFAULT_TOPIC_DIM = 16

# A decoy of the profile-targeted kind must have content this unrelated to
# the profile it is served against (cosine relevance strictly below).
EPSILON_BLUFF = 0.05

MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000

TopicVector = tuple  # tuple[float, ...] of length D


class AdKind(enum.Enum):
    REAL = "real"
    BLUFF_A = "bluff_a"  # targeted at the profile, content unrelated to it
    BLUFF_B = "bluff_b"  # specialized content, untargeted


class AgentKind(enum.Enum):
    BENIGN = "benign"
    RANDOM_BOT = "random_bot"
    TRAINED_BOT = "trained_bot"
    DICTIONARY_BOT = "dictionary_bot"
    PROFILE_HARVESTER = "profile_harvester"
    VIEW_BOT = "view_bot"


class EventType(enum.Enum):
    IMPRESSION = "impression"
    CLICK = "click"


def make_topic_vector(weights: Iterable[float], dim: Optional[int] = None) -> TopicVector:
    """Validate and freeze a topic vector.

    Raises ValueError if any weight is negative, all weights are zero, or the
    length does not match ``dim`` when given.
    """
    vec = tuple(float(w) for w in weights)
    if dim is not None and len(vec) != dim:
        raise ValueError(f"topic vector must have length {dim}, got {len(vec)}")
    if any(w < 0.0 for w in vec):
        raise ValueError("topic vector weights must be non-negative")
    if not any(w > 0.0 for w in vec):
        raise ValueError("topic vector must have at least one positive weight")
    return vec


def basis_vector(dim: int, topic: int) -> TopicVector:
    return tuple(1.0 if i == topic else 0.0 for i in range(dim))


def relevance(a: TopicVector, b: TopicVector) -> float:
    """Cosine similarity of two topic vectors, in [0, 1].

    Symmetric and scale-invariant.  Zero vectors are a caller error.
    """
    if len(a) != len(b):
        raise ValueError("topic vectors must have equal length")
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    if na <= 0.0 or nb <= 0.0:
        raise ValueError("relevance of a zero vector is undefined")
    r = dot / math.sqrt(na * nb)
    # Guard against rounding drifting a hair past 1.0.
    return min(1.0, max(0.0, r))


class RelevanceCache:
    """Memoizes relevance over (vector, vector) pairs.

    Topic vectors are hashable tuples, so the cache key is just the pair.
    Profiles and ad vectors are static for the life of a run, which makes the
    hit rate very high in the serving loop.
    """

    __slots__ = ("_cache",)

    def __init__(self):
        self._cache: dict = {}

    def get(self, a: TopicVector, b: TopicVector) -> float:
        key = (a, b)
        r = self._cache.get(key)
        if r is None:
            r = relevance(a, b)
            self._cache[key] = r
        return r


@dataclass(frozen=True)
class AdUnit:
    """A single creative: targeting decides who sees it, content is what the
    user actually reads.  Bluff ads are house ads: no advertiser, zero bid.
    """

    ad_id: str
    kind: AdKind
    targeting: TopicVector
    content: TopicVector
    bid_micros: int = 0
    advertiser_id: Optional[str] = None
    created_at: int = 0

    def __post_init__(self):
        if self.kind is AdKind.REAL:
            if self.advertiser_id is None:
                raise ValueError(f"real ad {self.ad_id} requires an advertiser_id")
            if self.bid_micros <= 0:
                raise ValueError(f"real ad {self.ad_id} requires a positive bid")
        else:
            if self.advertiser_id is not None:
                raise ValueError(f"bluff ad {self.ad_id} must not have an advertiser")
            if self.bid_micros != 0:
                raise ValueError(f"bluff ad {self.ad_id} must have zero bid")
        if self.kind is AdKind.BLUFF_A:
            r = relevance(self.targeting, self.content)
            if r >= EPSILON_BLUFF:
                raise ValueError(
                    f"bluff_a ad {self.ad_id} has relevance {r:.4f} >= {EPSILON_BLUFF}"
                )


@dataclass(frozen=True)
class Agent:
    """A traffic source.  ``profile`` is the user's true interests for benign
    agents and the faked/target persona for bots.  The kind is ground truth
    and never reaches the detection pipeline.
    """

    agent_id: str
    kind: AgentKind
    profile: TopicVector
    ip: str
    region: int
    index: int  # stable numeric key used to derive per-agent RNG substreams


@dataclass(frozen=True)
class Event:
    t: int
    etype: EventType
    agent_id: str
    ip: str
    page_id: int
    ad_id: str
    ad_kind: AdKind
    slot: int


def event_sort_key(e: Event):
    """Documented total order: (t, agent_id, ad_id, impression-before-click)."""
    return (e.t, e.agent_id, e.ad_id, 0 if e.etype is EventType.IMPRESSION else 1)


@dataclass
class StreamViolation:
    index: int
    reason: str


def validate_event_stream(events: Sequence[Event]) -> list[StreamViolation]:
    """Check ordering and click/impression pairing.

    Returns a list of violations (empty means the stream is well formed).
    Every click must reference an impression with the same
    (agent_id, page_id, ad_id) at an earlier-or-equal timestamp, and
    timestamps must be non-decreasing.
    """
    violations: list[StreamViolation] = []
    seen_impressions: set = set()
    prev_t = None
    for i, e in enumerate(events):
        if prev_t is not None and e.t < prev_t:
            violations.append(StreamViolation(i, f"timestamp {e.t} decreases from {prev_t}"))
        prev_t = e.t
        key = (e.agent_id, e.page_id, e.ad_id)
        if e.etype is EventType.IMPRESSION:
            seen_impressions.add(key)
        else:
            if key not in seen_impressions:
                violations.append(
                    StreamViolation(i, f"click without matching impression: {key}")
                )
        if e.slot < 0:
            violations.append(StreamViolation(i, f"negative slot index {e.slot}"))
    return violations
