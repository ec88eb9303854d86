"""Seeded synthetic corpora standing in for labeled bot datasets.

Every account is drawn by the same sampler from a parameter profile. Humans
use ``HUMAN_PROFILE``; a bot uses the profile of its archetype blended
toward the human profile by ``separation``:

    params = human + separation**3 * (archetype - human)

The cubic keeps the class overlap graded across the whole [0, 1] range
(the archetypes differ from humans in many features at once, so a linear
blend saturates early). ``separation = 0`` makes both classes identically
distributed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from botcal.data import BOT, HUMAN, Account, LabeledCorpus, NeighborSummary, Post
from botcal.errors import ValidationError

ARCHETYPES = ("spam", "fake_follower", "porn_like", "political")

COLLECTED_AT = datetime(2019, 6, 1, tzinfo=timezone.utc)

HUMAN_PROFILE = {
    "log_age_days": 7.2,          # ~3.6 years
    "log_followers": 5.5,
    "log_friends": 5.6,
    "log_lifetime_rate": 1.0,     # posts/day
    "recent_rate_mult": 1.0,      # recent rate / lifetime rate
    "posts_mean": 80.0,
    "gap_shape": 0.5,             # gamma shape; large = clockwork
    "diurnal": 0.9,               # share of posts pulled to waking hours
    "automation_source": 0.03,    # prob. a post comes from an automation client
    "primary_source": 0.6,
    "url_prob": 0.2,
    "repost_prob": 0.3,
    "mention_rate": 0.7,
    "hashtag_rate": 0.3,
    "duplicate_prob": 0.02,
    "words_mean": 14.0,
    "valence_bias": 0.2,          # >0 leans positive
    "sentiment_density": 0.15,
    "post_lang_match": 0.95,
    "neighbor_mean": 25.0,
    "neighbor_lang_match": 0.9,
    "neighbor_tz_match": 0.85,
    "follower_share": 0.5,
    "has_tz": 0.8,
    "has_description": 0.85,
    "description_words": 10.0,
    "name_digits": 0.5,
    "name_length": 10.0,
}

ARCHETYPE_PROFILES = {
    "spam": {
        "log_age_days": 6.0, "log_followers": 4.0, "log_friends": 6.5,
        "log_lifetime_rate": 0.5, "recent_rate_mult": 40.0, "posts_mean": 180.0,
        "gap_shape": 6.0, "diurnal": 0.0, "automation_source": 0.95, "primary_source": 1.0,
        "url_prob": 0.95, "repost_prob": 0.05, "mention_rate": 0.2, "hashtag_rate": 2.5,
        "duplicate_prob": 0.5, "words_mean": 8.0, "valence_bias": 0.6, "sentiment_density": 0.2,
        "name_digits": 3.0, "has_description": 0.5, "description_words": 4.0,
    },
    "fake_follower": {
        "log_age_days": 5.0, "log_followers": 1.5, "log_friends": 7.5,
        "log_lifetime_rate": -3.0, "posts_mean": 2.0, "gap_shape": 1.0, "diurnal": 0.3,
        "neighbor_mean": 60.0, "follower_share": 0.05, "neighbor_lang_match": 0.4,
        "has_tz": 0.2, "has_description": 0.15, "description_words": 2.0,
        "name_digits": 5.0, "name_length": 14.0, "automation_source": 0.5,
    },
    "porn_like": {
        "log_age_days": 4.5, "log_followers": 3.0, "log_friends": 4.5,
        "log_lifetime_rate": -1.0, "posts_mean": 4.0, "gap_shape": 3.0, "diurnal": 0.2,
        "url_prob": 0.9, "hashtag_rate": 1.0, "automation_source": 0.8, "primary_source": 1.0,
        "has_description": 0.97, "description_words": 14.0, "name_digits": 0.3,
        "duplicate_prob": 0.4, "mention_rate": 0.1,
    },
    "political": {
        "log_age_days": 6.5, "log_lifetime_rate": 3.0, "recent_rate_mult": 2.0,
        "posts_mean": 150.0, "gap_shape": 2.5, "diurnal": 0.2, "automation_source": 0.6,
        "repost_prob": 0.85, "mention_rate": 1.5, "hashtag_rate": 1.2, "valence_bias": -0.7,
        "sentiment_density": 0.3, "post_lang_match": 0.6, "neighbor_lang_match": 0.25,
        "neighbor_tz_match": 0.15, "has_tz": 0.95, "follower_share": 0.7,
    },
}

HUMAN_SOURCES = ("Twitter for iPhone", "Twitter for Android", "Twitter Web Client",
                 "TweetDeck", "Twitter for iPad", "Instagram")
AUTOMATION_SOURCES = ("IFTTT", "dlvr.it", "twittbot.net", "Buffer", "API client")
LANGS = ("en", "es", "fr", "de", "pt", "ru", "ja")
LANG_WEIGHTS = (0.7, 0.08, 0.06, 0.05, 0.04, 0.04, 0.03)
TZ_OFFSETS = (-480, -420, -360, -300, -180, 0, 60, 120, 180, 330, 480, 540)

NEUTRAL_WORDS = tuple("""
the a to of and in is it you that for on with this was at be have are my
just so but not all about today time people new now one more what out up
day get like will can your from they we see know think back going still
news video check via follow read world city week game home work music team
""".split())
POSITIVE_WORDS = ("good", "great", "love", "happy", "best", "awesome", "thanks",
                  "amazing", "win", "fun", "perfect", "proud", "joy", "congrats")
NEGATIVE_WORDS = ("bad", "hate", "sad", "angry", "terrible", "fail", "fake",
                  "corrupt", "liar", "crisis", "disaster", "shame", "traitor", "evil")
NAME_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_humans: int = 500
    n_bots: int = 500
    mix: dict = field(default_factory=lambda: {a: 1.0 for a in ARCHETYPES})
    separation: float = 1.0
    name: str = "synthetic"

    def __post_init__(self):
        if self.n_humans < 0 or self.n_bots < 0:
            raise ValidationError("account counts must be nonnegative")
        if self.n_humans + self.n_bots < 1:
            raise ValidationError("synthetic corpus must contain at least one account")
        if not 0.0 <= self.separation <= 1.0:
            raise ValidationError("separation must lie in [0, 1]")
        for k, w in self.mix.items():
            if k not in ARCHETYPES:
                raise ValidationError(f"unknown archetype {k!r}; expected one of {ARCHETYPES}")
            if w < 0:
                raise ValidationError("archetype weights must be nonnegative")
        if self.n_bots > 0 and sum(self.mix.values()) <= 0:
            raise ValidationError("archetype weights must sum to a positive value")


def blended_profile(archetype: str | None, separation: float) -> dict:
    if archetype is None:
        return dict(HUMAN_PROFILE)
    target = {**HUMAN_PROFILE, **ARCHETYPE_PROFILES[archetype]}
    strength = separation ** 3
    return {k: HUMAN_PROFILE[k] + strength * (target[k] - HUMAN_PROFILE[k]) for k in HUMAN_PROFILE}


def _clip01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def _other(rng: np.random.Generator, options, exclude):
    pool = [o for o in options if o != exclude]
    return pool[rng.integers(len(pool))]


def _screen_name(rng, length: float, digits: float) -> str:
    n_digits = int(rng.poisson(digits))
    n_letters = max(3, int(rng.poisson(length)) - n_digits)
    letters = "".join(NAME_LETTERS[i] for i in rng.integers(0, 26, size=n_letters))
    return letters + "".join(str(d) for d in rng.integers(0, 10, size=n_digits))


def _post_text(rng, p: dict, n_words: int) -> str:
    words = []
    for _ in range(max(n_words, 1)):
        if rng.random() < p["sentiment_density"]:
            positive = rng.random() < _clip01(0.5 + 0.5 * p["valence_bias"])
            pool = POSITIVE_WORDS if positive else NEGATIVE_WORDS
        else:
            pool = NEUTRAL_WORDS
        words.append(pool[rng.integers(len(pool))])
    return " ".join(words)


def sample_account(rng: np.random.Generator, account_id: str, p: dict) -> Account:
    """Draw one account from parameter profile ``p``."""
    now = COLLECTED_AT
    age_days = float(np.clip(rng.lognormal(p["log_age_days"], 0.5), 2.0, 4000.0))
    created = now - timedelta(days=age_days)
    lifetime_rate = float(rng.lognormal(p["log_lifetime_rate"], 0.7))
    recent = lifetime_rate * max(p["recent_rate_mult"], 1e-3) * float(rng.lognormal(0.0, 0.3))
    n_posts = int(min(rng.poisson(p["posts_mean"]), 200))

    # post timestamps walk backward from the crawl time
    mean_gap = 86400.0 / max(recent, 1e-3)
    shape = max(p["gap_shape"], 0.05)
    gaps = rng.gamma(shape, mean_gap / shape, size=n_posts)
    offsets = np.cumsum(gaps) + rng.uniform(0, 3600)
    times = []
    for off in offsets:
        t = now - timedelta(seconds=float(off))
        if rng.random() < p["diurnal"]:
            hour = int(np.clip(rng.normal(15.0, 3.5), 7, 23))
            t = t.replace(hour=hour)
            if t > now:
                t -= timedelta(days=1)
        times.append(t)
    times.sort(reverse=True)
    if times and times[-1] <= created:
        created = times[-1] - timedelta(days=float(rng.uniform(1, 30)))
        age_days = (now - created).total_seconds() / 86400.0
    statuses = max(n_posts, int(round(lifetime_rate * age_days)))

    lang = LANGS[rng.choice(len(LANGS), p=LANG_WEIGHTS)]
    use_automation = rng.random() < p["automation_source"]
    source_pool = AUTOMATION_SOURCES if use_automation else HUMAN_SOURCES
    primary = source_pool[rng.integers(len(source_pool))]

    posts = []
    last_text = None
    for t in times:
        if last_text is not None and rng.random() < p["duplicate_prob"]:
            text = last_text
        else:
            text = _post_text(rng, p, int(rng.poisson(p["words_mean"])))
        if rng.random() < p["primary_source"]:
            source = primary
        else:
            pool = AUTOMATION_SOURCES if rng.random() < p["automation_source"] else HUMAN_SOURCES
            source = pool[rng.integers(len(pool))]
        url_count = int(rng.random() < p["url_prob"]) + int(rng.random() < p["url_prob"] * 0.2)
        post_lang = lang if rng.random() < p["post_lang_match"] else _other(rng, LANGS, lang)
        posts.append(Post(
            text=text,
            created_at=t,
            source=source,
            lang=post_lang,
            url_count=url_count,
            hashtag_count=int(rng.poisson(p["hashtag_rate"])),
            mention_count=int(rng.poisson(p["mention_rate"])),
            is_repost=bool(rng.random() < p["repost_prob"]),
        ))
        last_text = text

    tz = int(TZ_OFFSETS[rng.integers(len(TZ_OFFSETS))]) if rng.random() < p["has_tz"] else None
    neighbors = []
    for _ in range(int(min(rng.poisson(p["neighbor_mean"]), 100))):
        n_lang = lang if rng.random() < p["neighbor_lang_match"] else _other(rng, LANGS, lang)
        if rng.random() < 0.3:
            n_tz = None
        elif tz is not None and rng.random() < p["neighbor_tz_match"]:
            n_tz = tz + int(rng.choice((-60, 0, 0, 60)))
        else:
            n_tz = int(TZ_OFFSETS[rng.integers(len(TZ_OFFSETS))])
        relation = "follower" if rng.random() < p["follower_share"] else "friend"
        neighbors.append(NeighborSummary(relation=relation, lang=n_lang, tz_offset_minutes=n_tz))

    description = ""
    if rng.random() < p["has_description"]:
        description = _post_text(rng, p, int(rng.poisson(p["description_words"])) + 1)

    return Account(
        id=account_id,
        screen_name=_screen_name(rng, p["name_length"], p["name_digits"]),
        created_at=created,
        followers_count=int(rng.lognormal(p["log_followers"], 1.0)),
        friends_count=int(rng.lognormal(p["log_friends"], 1.0)),
        statuses_count=statuses,
        description=description,
        lang=lang,
        tz_offset_minutes=tz,
        posts=posts,
        neighbors=neighbors,
        collected_at=now,
    )


def generate_synthetic(cfg: SynthConfig) -> LabeledCorpus:
    """Deterministic labeled corpus: humans first, then bots, ids ``<name>-NNNNNN``."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    names = [a for a in ARCHETYPES if cfg.mix.get(a, 0.0) > 0]
    weights = np.array([cfg.mix[a] for a in names], dtype=float)
    entries = []
    for i in range(cfg.n_humans + cfg.n_bots):
        is_bot = i >= cfg.n_humans
        archetype = names[rng.choice(len(names), p=weights / weights.sum())] if is_bot else None
        profile = blended_profile(archetype, cfg.separation)
        account = sample_account(rng, f"{cfg.name}-{i:06d}", profile)
        entries.append((account, BOT if is_bot else HUMAN))
    return LabeledCorpus(cfg.name, tuple(entries))
