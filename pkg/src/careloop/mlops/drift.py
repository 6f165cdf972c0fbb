"""Input drift detection over numeric features and label distributions.

Numeric drift compares the current window's mean against the baseline in
baseline standard deviations (|z| above 3 flags drift). Label drift is the
total variation distance between frequency distributions (above 0.5 flags
drift). Baselines below 30 observations are refused rather than guessed at.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass

from ..errors import EmptyWindow, InsufficientBaseline

MIN_BASELINE = 30
NUMERIC_Z_THRESHOLD = 3.0
LABEL_DISTANCE_THRESHOLD = 0.5


@dataclass(frozen=True)
class DriftReport:
    metric: str
    value: float
    threshold: float
    drifted: bool
    baseline_n: int
    current_n: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": self.value,
            "threshold": self.threshold,
            "drifted": self.drifted,
            "baseline_n": self.baseline_n,
            "current_n": self.current_n,
        }


def detect_numeric_drift(baseline, current) -> DriftReport:
    baseline = [float(v) for v in baseline]
    current = [float(v) for v in current]
    if len(baseline) < MIN_BASELINE:
        raise InsufficientBaseline(
            "numeric baseline too small", have=len(baseline), need=MIN_BASELINE
        )
    if not current:
        raise EmptyWindow("no current observations")
    spread = statistics.pstdev(baseline)
    if spread == 0:
        z = 0.0 if statistics.mean(current) == statistics.mean(baseline) else float("inf")
    else:
        z = (statistics.mean(current) - statistics.mean(baseline)) / spread
    return DriftReport(
        metric="numeric_z",
        value=z,
        threshold=NUMERIC_Z_THRESHOLD,
        drifted=abs(z) > NUMERIC_Z_THRESHOLD,
        baseline_n=len(baseline),
        current_n=len(current),
    )


def detect_label_drift(baseline, current) -> DriftReport:
    baseline = list(baseline)
    current = list(current)
    if len(baseline) < MIN_BASELINE:
        raise InsufficientBaseline(
            "label baseline too small", have=len(baseline), need=MIN_BASELINE
        )
    if not current:
        raise EmptyWindow("no current observations")
    base_freq = Counter(baseline)
    curr_freq = Counter(current)
    labels = set(base_freq) | set(curr_freq)
    distance = 0.5 * sum(
        abs(base_freq[label] / len(baseline) - curr_freq[label] / len(current))
        for label in labels
    )
    return DriftReport(
        metric="label_tv_distance",
        value=distance,
        threshold=LABEL_DISTANCE_THRESHOLD,
        drifted=distance > LABEL_DISTANCE_THRESHOLD,
        baseline_n=len(baseline),
        current_n=len(current),
    )
