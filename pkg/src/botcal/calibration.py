"""Platt scaling, reliability curves, the [0, 5] display scale and the
accuracy-maximising binary cutoff."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from botcal.errors import ConvergenceError, ValidationError

N_BINS = 20
DISPLAY_MAX = 5.0


def _scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape or s.ndim != 1:
        raise ValidationError("scores and labels must be aligned 1-d sequences")
    if not np.isfinite(s).all():
        raise ValidationError("scores must be finite")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 (human) or 1 (bot)")
    return s, y


def _require_both_classes(y: np.ndarray) -> None:
    if y.size == 0 or y.min() == y.max():
        raise ValidationError("single class: both humans and bots are required")


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class Calibrator:
    """Logistic map ``s -> sigmoid(slope * s + intercept)``."""

    slope: float
    intercept: float
    provenance: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ValidationError("calibrator parameters must be finite")

    @property
    def midpoint(self) -> float:
        """Raw score mapped to exactly 0.5 (requires slope != 0)."""
        return -self.intercept / self.slope

    def __call__(self, s):
        return calibrate(self, s)

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: dict) -> "Calibrator":
        return cls(float(d["slope"]), float(d["intercept"]), str(d.get("provenance", "")))


def calibrate(cal: Calibrator, s):
    """Calibrated score(s); scalar in, float out."""
    out = sigmoid(cal.slope * np.asarray(s, dtype=float) + cal.intercept)
    return float(out) if out.ndim == 0 else out


def fit_platt(scores: Sequence[float], labels: Sequence[int], smooth_targets: bool = True,
              tol: float = 1e-10, max_iter: int = 200, provenance: str = "") -> Calibrator:
    """Maximum-likelihood logistic fit of labels on scores (Platt scaling).

    With ``smooth_targets`` the 0/1 labels are replaced by Platt's targets
    ``(N+ + 1)/(N+ + 2)`` and ``1/(N- + 2)``. Newton's method with step
    halving; stops when the parameter step falls below ``tol``.
    """
    s, y = _scores_labels(scores, labels)
    _require_both_classes(y)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if smooth_targets:
        t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    else:
        t = y.astype(float)

    def nll(a, b):
        z = a * s + b
        # -sum t*log(p) + (1-t)*log(1-p) with p = sigmoid(z)
        return float(np.sum(np.logaddexp(0.0, z) - t * z))

    a, b = 0.0, math.log((n_pos + 1.0) / (n_neg + 1.0))
    f = nll(a, b)
    grad_norm = float("inf")
    for _ in range(max_iter):
        p = sigmoid(a * s + b)
        r = p - t
        g = np.array([np.dot(r, s), r.sum()])
        w = p * (1.0 - p)
        H = np.array([[np.dot(w, s * s), np.dot(w, s)], [np.dot(w, s), w.sum()]])
        H[0, 0] += 1e-12
        H[1, 1] += 1e-12
        grad_norm = float(np.linalg.norm(g))
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Hessian; gradient norm {grad_norm:.3g}") from exc
        slope = float(np.dot(g, step))
        lam = 1.0
        while True:
            a_new, b_new = a + lam * step[0], b + lam * step[1]
            f_new = nll(a_new, b_new)
            if f_new <= f + 1e-4 * lam * slope:
                break
            lam /= 2.0
            if lam < 1e-12:
                # no descent left at float resolution: accept if stationary
                if grad_norm <= 1e-6 * max(1.0, len(s)):
                    return Calibrator(float(a), float(b), provenance)
                raise ConvergenceError(f"Platt line search stalled; gradient norm {grad_norm:.3g}")
        delta = max(abs(a_new - a), abs(b_new - b))
        a, b, f = a_new, b_new, f_new
        if delta < tol:
            return Calibrator(float(a), float(b), provenance)
    raise ConvergenceError(f"Platt fit did not converge in {max_iter} iterations; gradient norm {grad_norm:.3g}")


def to_display(calibrated: float) -> float:
    """Linear [0, 1] -> [0, 5] display scale."""
    if not 0.0 <= calibrated <= 1.0:
        raise ValidationError(f"calibrated score {calibrated!r} outside [0, 1]")
    return DISPLAY_MAX * calibrated


@dataclass(frozen=True)
class ReliabilityBin:
    lo: float
    hi: float
    count: int
    mean_score: float | None
    positive_fraction: float | None

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class ReliabilityCurve:
    bins: tuple[ReliabilityBin, ...]

    @property
    def n(self) -> int:
        return sum(b.count for b in self.bins)

    def mean_gap(self) -> float:
        """Count-weighted mean |positive fraction - mean score| over nonempty bins."""
        total = sum(b.count * abs(b.positive_fraction - b.mean_score) for b in self.bins if not b.empty)
        return total / self.n

    def max_gap(self) -> float:
        return max(abs(b.positive_fraction - b.mean_score) for b in self.bins if not b.empty)

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,mean_score,tp_fraction,count"]
        for b in self.bins:
            ms = "" if b.empty else repr(b.mean_score)
            pf = "" if b.empty else repr(b.positive_fraction)
            lines.append(f"{b.lo!r},{b.hi!r},{ms},{pf},{b.count}")
        return "\n".join(lines) + "\n"


def bin_index(s: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    """Bin i covers [i/n, (i+1)/n); the last bin also holds 1.0."""
    return np.minimum(np.floor(np.asarray(s, dtype=float) * n_bins).astype(np.int64), n_bins - 1)


def reliability(scores: Sequence[float], labels: Sequence[int], n_bins: int = N_BINS) -> ReliabilityCurve:
    s, y = _scores_labels(scores, labels)
    if s.size == 0:
        raise ValidationError("reliability curve needs at least one score")
    if (s < 0).any() or (s > 1).any():
        raise ValidationError("reliability scores must lie in [0, 1]")
    idx = bin_index(s, n_bins)
    bins = []
    for i in range(n_bins):
        m = idx == i
        c = int(m.sum())
        bins.append(ReliabilityBin(
            lo=i / n_bins,
            hi=(i + 1) / n_bins,
            count=c,
            mean_score=float(s[m].mean()) if c else None,
            positive_fraction=float(y[m].mean()) if c else None,
        ))
    return ReliabilityCurve(tuple(bins))


def ml_threshold(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Cutoff maximising accuracy of the rule ``score > t -> bot``.

    Candidate cuts lie between consecutive distinct scores, below all of
    them, and above all of them; the outer intervals are taken as
    half a unit wide. Among accuracy-maximising intervals the midpoint of the
    one with the lowest lower edge is returned.
    """
    s, y = _scores_labels(scores, labels)
    _require_both_classes(y)
    values = np.unique(s)
    # correct[k]: correctly classified when the first k distinct values are called human
    hum_le = np.searchsorted(np.sort(s[y == 0]), values, side="right")
    bot_le = np.searchsorted(np.sort(s[y == 1]), values, side="right")
    n_bot = int(y.sum())
    correct = np.concatenate([[n_bot], hum_le + (n_bot - bot_le)])
    k = int(np.argmax(correct))
    edges = np.concatenate([[values[0] - 0.5], values, [values[-1] + 0.5]])
    return float((edges[k] + edges[k + 1]) / 2.0)


def threshold_accuracy(scores, labels, threshold: float) -> float:
    s, y = _scores_labels(scores, labels)
    return float(np.mean((s > threshold).astype(np.int64) == y))
