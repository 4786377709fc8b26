"""Evaluation metrics: Pearson and Spearman correlations and their average.

Everything here runs in numpy float64; these numbers are the challenge
objective and must not inherit model precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedCorrelationError


@dataclass(frozen=True)
class EvalReport:
    plcc: float
    srocc: float
    main_score: float
    n: int

    def __post_init__(self):
        if abs(self.main_score - (abs(self.plcc) + abs(self.srocc)) / 2.0) > 1e-12:
            raise ValueError("main_score must equal (|plcc| + |srocc|) / 2")

    def to_dict(self) -> dict:
        return {
            "plcc": self.plcc,
            "srocc": self.srocc,
            "main_score": self.main_score,
            "n": self.n,
        }


def _validated(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise UndefinedCorrelationError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise UndefinedCorrelationError(f"correlation needs n >= 2, got {x.shape[0]}")
    return x, y


def plcc(x, y) -> float:
    """Pearson linear correlation coefficient."""
    x, y = _validated(x, y)
    vx = x - x.mean()
    vy = y - y.mean()
    sx = np.sqrt(vx @ vx)
    sy = np.sqrt(vy @ vy)
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("constant input; Pearson correlation undefined")
    return float((vx @ vy) / (sx * sy))


def fractional_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank positions."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.shape[0], dtype=np.float64)
    i = 0
    while i < x.shape[0]:
        j = i
        while j + 1 < x.shape[0] and x[order[j + 1]] == x[order[i]]:
            j += 1
        # positions i..j (0-based) share the average 1-based rank
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def srocc(x, y) -> float:
    """Spearman rank-order correlation.

    Tie-free inputs use the closed form 1 - 6*sum(d^2)/(n(n^2-1)); ties fall
    back to Pearson over fractional ranks (the closed form is only exact
    without ties).
    """
    x, y = _validated(x, y)
    if np.unique(x).size < 2 or np.unique(y).size < 2:
        raise UndefinedCorrelationError("all values tied; rank correlation undefined")
    rx = fractional_ranks(x)
    ry = fractional_ranks(y)
    n = x.shape[0]
    tie_free = np.unique(x).size == n and np.unique(y).size == n
    if tie_free:
        d = rx - ry
        return float(1.0 - 6.0 * (d @ d) / (n * (n * n - 1.0)))
    return plcc(rx, ry)


def main_score(x, y) -> float:
    """(|PLCC| + |SROCC|) / 2, the challenge objective."""
    return main_score_value(plcc(x, y), srocc(x, y))


def main_score_value(plcc_value: float, srocc_value: float) -> float:
    return (abs(plcc_value) + abs(srocc_value)) / 2.0


def eval_report(pred, target) -> EvalReport:
    x = np.asarray(pred, dtype=np.float64).reshape(-1)
    p = plcc(x, target)
    s = srocc(x, target)
    return EvalReport(plcc=p, srocc=s, main_score=main_score_value(p, s), n=x.shape[0])
