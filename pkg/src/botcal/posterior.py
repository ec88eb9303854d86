"""Bernstein-polynomial likelihood densities and the complete automation
probability (CAP), the posterior P(bot | raw score).

The density estimator smooths the empirical CDF with Bernstein polynomials:

    f(x) = m * sum_{j=0}^{m-1} w_j * C(m-1, j) * x^j * (1-x)^(m-1-j)
    w_j  = F(( j+1)/m) - F(j/m)

where F is the right-continuous empirical CDF and the first cell is closed
on the left so that mass sitting exactly at 0 is kept. The weights are
nonnegative and sum to one, so f is a proper density on [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from botcal.errors import ValidationError

DEFAULT_DEGREE = 40
DEFAULT_PRIOR = 0.15
RAW = "raw"


def bernstein_basis(x, degree: int) -> np.ndarray:
    """Matrix B[i, j] = C(n, j) x_i^j (1 - x_i)^(n - j) with n = degree."""
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    j = np.arange(degree + 1)[None, :]
    coef = np.array([comb(degree, k) for k in range(degree + 1)], dtype=float)[None, :]
    return coef * x ** j * (1.0 - x) ** (degree - j)


@dataclass(frozen=True, eq=False)
class BernsteinDensity:
    weights: np.ndarray      # m nonnegative cell probabilities
    label: str               # "bot" or "human"
    n_samples: int
    score_space: str = RAW

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValidationError("density needs at least one weight")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValidationError("density weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError(f"density weights sum to {w.sum()!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def degree(self) -> int:
        return len(self.weights)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        m = self.degree
        out = m * (bernstein_basis(x.ravel(), m - 1) @ self.weights)
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "label": self.label,
            "n_samples": self.n_samples,
            "score_space": self.score_space,
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BernsteinDensity":
        dens = cls(np.asarray(d["weights"], dtype=float), str(d["label"]), int(d["n_samples"]),
                   str(d.get("score_space", RAW)))
        if dens.degree != int(d["degree"]):
            raise ValidationError("density degree does not match its weight count")
        return dens


def fit_density(scores: Sequence[float], degree: int = DEFAULT_DEGREE, label: str = "",
                score_space: str = RAW) -> BernsteinDensity:
    s = np.sort(np.asarray(scores, dtype=float).ravel())
    if s.size < 2:
        raise ValidationError("density estimation needs at least 2 samples")
    if degree < 1:
        raise ValidationError("Bernstein degree must be >= 1")
    if not np.isfinite(s).all() or s[0] < 0.0 or s[-1] > 1.0:
        raise ValidationError("scores must lie in [0, 1]")
    knots = np.arange(degree + 1) / degree
    cdf = np.searchsorted(s, knots, side="right") / s.size
    cdf[0] = 0.0
    cdf[-1] = 1.0
    weights = np.diff(cdf)
    return BernsteinDensity(weights, label, int(s.size), score_space)


def validate_prior(prior: float) -> float:
    prior = float(prior)
    if not 0.0 <= prior <= 1.0:
        raise ValidationError(f"prior {prior!r} outside [0, 1]")
    return prior


class CapResult(NamedTuple):
    value: float
    prior: float
    degenerate: bool


@dataclass(frozen=True, eq=False)
class CapModel:
    density_bot: BernsteinDensity
    density_human: BernsteinDensity
    prior: float = DEFAULT_PRIOR
    prior_source: str = "default-published"

    def __post_init__(self):
        validate_prior(self.prior)
        spaces = {self.density_bot.score_space, self.density_human.score_space}
        if spaces != {RAW}:
            raise ValidationError(f"CAP densities must both be fit on raw scores, got {sorted(spaces)}")

    def to_dict(self) -> dict:
        return {
            "prior": self.prior,
            "prior_source": self.prior_source,
            "density_bot": self.density_bot.to_dict(),
            "density_human": self.density_human.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CapModel":
        return cls(BernsteinDensity.from_dict(d["density_bot"]), BernsteinDensity.from_dict(d["density_human"]),
                   float(d["prior"]), str(d.get("prior_source", "default-published")))


def fit_cap(scores: Sequence[float], labels: Sequence[int], degree: int = DEFAULT_DEGREE,
            prior: float = DEFAULT_PRIOR) -> CapModel:
    """Fit both likelihood densities from held-out raw scores and labels."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValidationError("scores and labels must be aligned")
    return CapModel(fit_density(s[y == 1], degree, "bot"), fit_density(s[y == 0], degree, "human"),
                    validate_prior(prior))


def posterior(prior: float, like_bot: float, like_human: float) -> CapResult:
    """Bayes' rule with the evidence denominator expanded over both classes."""
    prior = validate_prior(prior)
    if prior == 0.0 or prior == 1.0:
        return CapResult(prior, prior, like_bot == 0.0 and like_human == 0.0)
    if like_bot == like_human:
        return CapResult(prior, prior, like_bot == 0.0)
    num = prior * like_bot
    return CapResult(num / (num + (1.0 - prior) * like_human), prior, False)


def cap_detail(model: CapModel, s: float, prior: float | None = None) -> CapResult:
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"raw score {s!r} outside [0, 1]")
    p = model.prior if prior is None else prior
    return posterior(p, model.density_bot(s), model.density_human(s))


def cap(model: CapModel, s: float, prior: float | None = None) -> float:
    """P(bot | s); ``prior`` overrides the model's prior."""
    return cap_detail(model, s, prior).value


def cap_curve(model: CapModel, priors: Sequence[float], resolution: int = 101) -> list[tuple[float, float, float]]:
    """(s, prior, cap) over an even grid of raw scores, for each prior."""
    if not priors:
        raise ValidationError("cap_curve needs at least one prior")
    if resolution < 2:
        raise ValidationError("grid resolution must be >= 2")
    priors = [validate_prior(p) for p in priors]
    grid = np.linspace(0.0, 1.0, resolution)
    lb, lh = model.density_bot(grid), model.density_human(grid)
    rows = []
    for p in priors:
        for s, b, h in zip(grid.tolist(), lb.tolist(), lh.tolist()):
            rows.append((s, p, posterior(p, b, h).value))
    return rows


def curve_csv(model: CapModel, priors: Sequence[float] = (0.05, 0.15, 0.30, 0.50), resolution: int = 101) -> str:
    """Wide table: s, f_bot, f_human, then one cap column per prior."""
    grid = np.linspace(0.0, 1.0, resolution)
    lb, lh = model.density_bot(grid), model.density_human(grid)
    lines = ["s,f_bot,f_human," + ",".join(f"cap@{p:.2f}" for p in priors)]
    for s, b, h in zip(grid.tolist(), lb.tolist(), lh.tolist()):
        caps = [posterior(p, b, h).value for p in priors]
        lines.append(",".join(repr(v) for v in (s, b, h, *caps)))
    return "\n".join(lines) + "\n"
