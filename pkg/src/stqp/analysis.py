"""Statistics over collected ratings and the encode manifest.

Conventions pinned for reproducible fixtures: sample (n-1) standard
deviation everywhere, inclusive interval bounds for the agreement
percentage, and pooled-variance Student's t by default (Welch behind a
flag). All functions are pure over an immutable RatingSet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import betainc

from .study import Rating, RatingSet

__all__ = [
    "MosEntry",
    "ObserverReliability",
    "AnalysisError",
    "mos",
    "agreement_percentage",
    "intra_observer_distance",
    "repeat_stimulus_stats",
    "screen_observers",
    "two_sample_t",
    "bitrate_report",
    "derive_repeated_stimuli",
]


class AnalysisError(ValueError):
    """Ratings or manifest do not support the requested statistic."""


@dataclass(frozen=True)
class MosEntry:
    stimulus: str
    mean: float
    sd: float
    n: int


@dataclass(frozen=True)
class ObserverReliability:
    observer: str
    agreement: float
    intra_distance: float
    low_agreement: bool
    high_distance: bool


def _mean(xs) -> float:
    return sum(xs) / len(xs)


def _sample_sd(xs) -> float:
    """Sample standard deviation (n-1 denominator); 0 for n == 1."""
    n = len(xs)
    if n <= 1:
        return 0.0
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (n - 1))


def mos(ratings: RatingSet, stimulus: str) -> MosEntry:
    """Mean opinion score and sample SD for one stimulus."""
    scores = [r.score for r in ratings.for_stimulus(stimulus)]
    if not scores:
        raise AnalysisError(f"no ratings for stimulus {stimulus!r}")
    return MosEntry(stimulus, _mean(scores), _sample_sd(scores), len(scores))


def agreement_percentage(ratings: RatingSet, observer: str) -> float:
    """Fraction of the observer's ratings falling inside mu +/- sigma of
    all other observers' scores on the same stimulus (bounds inclusive).

    Every stimulus this observer rated must have at least two other
    raters so the leave-one-out moments exist.
    """
    own = ratings.for_observer(observer)
    if not own:
        raise AnalysisError(f"observer {observer!r} has no ratings")
    short = sorted(
        {
            r.stimulus
            for r in own
            if len([o for o in ratings.for_stimulus(r.stimulus) if o.observer != observer]) < 2
        }
    )
    if short:
        raise AnalysisError(
            f"stimuli with fewer than 3 raters (cannot leave {observer!r} out): {short}"
        )
    hits = 0
    for r in own:
        others = [o.score for o in ratings.for_stimulus(r.stimulus) if o.observer != observer]
        mu = _mean(others)
        sigma = _sample_sd(others)
        if mu - sigma <= r.score <= mu + sigma:
            hits += 1
    return hits / len(own)


def derive_repeated_stimuli(ratings: RatingSet) -> list[str]:
    """Stimuli presented twice to at least one observer."""
    counts: dict[tuple[str, str], int] = {}
    for r in ratings.ratings:
        key = (r.observer, r.stimulus)
        counts[key] = counts.get(key, 0) + 1
    return sorted({stim for (_, stim), n in counts.items() if n >= 2})


def _repeat_pair(ratings: RatingSet, observer: str, stimulus: str) -> tuple[Rating, Rating]:
    pair = sorted(
        (r for r in ratings.for_observer(observer) if r.stimulus == stimulus),
        key=lambda r: r.presentation_index,
    )
    if len(pair) != 2:
        raise AnalysisError(
            f"observer {observer!r} has {len(pair)} ratings for repeated "
            f"stimulus {stimulus!r}, expected 2"
        )
    return pair[0], pair[1]


def intra_observer_distance(
    ratings: RatingSet, observer: str, repeats: list[str] | None = None
) -> float:
    """Mean absolute score distance over the observer's repeat pairs.

    The repeated-stimulus set defaults to every stimulus any observer saw
    twice; the first presentation counts as the original.
    """
    repeats = derive_repeated_stimuli(ratings) if repeats is None else repeats
    if not repeats:
        raise AnalysisError("no repeated stimuli in the rating set")
    total = 0
    for stimulus in repeats:
        orig, rp = _repeat_pair(ratings, observer, stimulus)
        total += abs(orig.score - rp.score)
    return total / len(repeats)


def repeat_stimulus_stats(
    ratings: RatingSet, stimulus: str
) -> tuple[float, float, tuple[int, int]]:
    """Cross-observer view of one repeated stimulus: mean, sample SD, and
    range of the per-observer absolute score differences."""
    observers = sorted({r.observer for r in ratings.for_stimulus(stimulus)})
    if not observers:
        raise AnalysisError(f"no ratings for stimulus {stimulus!r}")
    diffs = []
    for obs in observers:
        orig, rp = _repeat_pair(ratings, obs, stimulus)
        diffs.append(abs(orig.score - rp.score))
    return _mean(diffs), _sample_sd(diffs), (min(diffs), max(diffs))


def screen_observers(
    ratings: RatingSet,
    agreement_threshold: float = 0.5,
    distance_threshold: float = 2.0,
) -> list[ObserverReliability]:
    """Flag unreliable observers; reporting only, no data is removed.

    Retention follows the study rule: agreement must exceed the threshold
    and mean opinion distance must not exceed the distance threshold.
    """
    out = []
    repeats = derive_repeated_stimuli(ratings)
    for observer in ratings.observers():
        agreement = agreement_percentage(ratings, observer)
        distance = intra_observer_distance(ratings, observer, repeats)
        out.append(
            ObserverReliability(
                observer=observer,
                agreement=agreement,
                intra_distance=distance,
                low_agreement=agreement <= agreement_threshold,
                high_distance=distance > distance_threshold,
            )
        )
    return out


def two_sample_t(
    group_a, group_b, equal_variance: bool = True
) -> tuple[float, float, float]:
    """Two-sample t test: (t, df, two-tailed p).

    Pooled-variance Student's t by default; equal_variance=False switches
    to Welch. Zero variance with equal means degenerates to (0, df, 1).
    """
    a = [float(x) for x in group_a]
    b = [float(x) for x in group_b]
    if len(a) < 2 or len(b) < 2:
        raise AnalysisError("both groups need at least 2 observations")
    na, nb = len(a), len(b)
    ma, mb = _mean(a), _mean(b)
    va = _sample_sd(a) ** 2
    vb = _sample_sd(b) ** 2

    if equal_variance:
        df = float(na + nb - 2)
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        denom = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    else:
        denom = math.sqrt(va / na + vb / nb)
        if denom > 0:
            df = (va / na + vb / nb) ** 2 / (
                (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)
            )
        else:
            df = float(na + nb - 2)

    if denom == 0.0:
        if ma == mb:
            return 0.0, df, 1.0
        raise AnalysisError("zero variance in both groups with unequal means")
    t = (ma - mb) / denom
    # two-tailed p from the regularized incomplete beta
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, df, p


def bitrate_report(manifest_rows: list[dict]) -> list[dict]:
    """Pair each spatiotemporal row with its constant-QP baseline and
    compute Mbps (4 decimals) plus the size ratio; the lowest bitrate per
    source is flagged on whichever side holds it.

    Rows follow the pipeline manifest schema (see pipeline.py).
    """
    by_id = {row["stimulus_id"]: row for row in manifest_rows}
    report = []
    for row in manifest_rows:
        if row["kind"] != "spatiotemporal":
            continue
        baseline = by_id.get(row["paired_id"])
        if baseline is None:
            raise AnalysisError(
                f"stimulus {row['stimulus_id']} has no paired baseline row"
            )
        b_stim = float(row["bitrate"]) / 1e6
        b_base = float(baseline["bitrate"]) / 1e6
        report.append(
            {
                "source": row["source"],
                "config": row["config"],
                "stimulus_id": row["stimulus_id"],
                "baseline_id": baseline["stimulus_id"],
                "stimulus_mbps": round(b_stim, 4),
                "baseline_mbps": round(b_base, 4),
                "ratio": round(b_base / b_stim, 4) if b_stim else float("nan"),
                "min_flag": "",
            }
        )
    for source in sorted({r["source"] for r in report}):
        rows = [r for r in report if r["source"] == source]
        best = min(
            (min(r["stimulus_mbps"], r["baseline_mbps"]) for r in rows), default=None
        )
        for r in rows:
            if r["stimulus_mbps"] == best:
                r["min_flag"] = "stimulus"
                break
            if r["baseline_mbps"] == best:
                r["min_flag"] = "baseline"
                break
    return report
