"""Weighted combination of per-model prediction files, plus a least-squares
weight fitter for when targets are available.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import read_score_csv
from .errors import AlignmentError, ConfigError, FitError
from .metrics import srocc


@dataclass(frozen=True)
class EnsembleSpec:
    members: tuple[tuple[str, float], ...]  # (prediction csv path, weight)
    normalize_scores: bool = False

    def __post_init__(self):
        if not self.members:
            raise ConfigError("ensemble needs at least one member")
        if sum(w for _, w in self.members) == 0.0:
            raise ConfigError("ensemble weights sum to zero")


def load_member_matrix(paths) -> tuple[list[str], np.ndarray]:
    """Stack member prediction files into (names, matrix of shape (n, m)).

    Row order follows the first member; every file must cover the same names.
    """
    paths = [Path(p) for p in paths]
    first = read_score_csv(paths[0])
    names = [name for name, _ in first]
    name_set = set(names)
    columns = [np.array([s for _, s in first], dtype=np.float64)]
    for path in paths[1:]:
        rows = dict(read_score_csv(path))
        if set(rows) != name_set:
            only_first = sorted(name_set - set(rows))
            only_here = sorted(set(rows) - name_set)
            raise AlignmentError(
                f"{path} covers a different video set than {paths[0]}; "
                f"missing: {only_first}, extra: {only_here}"
            )
        columns.append(np.array([rows[n] for n in names], dtype=np.float64))
    return names, np.stack(columns, axis=1)


def _zscore_columns(matrix: np.ndarray) -> np.ndarray:
    mean = matrix.mean(axis=0, keepdims=True)
    std = matrix.std(axis=0, keepdims=True)
    # constant member carries no ordering information; it centers to zero
    return (matrix - mean) / np.where(std == 0.0, 1.0, std)


def ensemble_predictions(spec: EnsembleSpec) -> list[tuple[str, float]]:
    """Per-video weighted mean of member scores (weights normalized by sum)."""
    names, matrix = load_member_matrix([p for p, _ in spec.members])
    weights = np.array([w for _, w in spec.members], dtype=np.float64)
    if spec.normalize_scores:
        matrix = _zscore_columns(matrix)
    combined = matrix @ weights / weights.sum()
    return list(zip(names, combined.tolist()))


@dataclass(frozen=True)
class FitReport:
    weights: tuple[float, ...]
    rank: int
    member_srocc: tuple[float, ...]
    ensemble_srocc: float


def fit_ensemble_weights(member_files, target_csv) -> FitReport:
    """Least-squares weights for the raw weighted sum against targets.

    Rank-deficient designs are legitimate (e.g. collinear members); lstsq
    returns the minimum-norm solution for them.  Only a rank-0 design (all
    members identically zero) is unfittable.
    """
    member_files = list(member_files)
    if len(member_files) < 2:
        raise ConfigError(f"weight fitting needs >= 2 members, got {len(member_files)}")
    names, matrix = load_member_matrix(member_files)
    target_rows = dict(read_score_csv(target_csv))
    if set(target_rows) != set(names):
        only_members = sorted(set(names) - set(target_rows))
        only_target = sorted(set(target_rows) - set(names))
        raise AlignmentError(
            f"target file covers a different video set; missing: {only_members}, "
            f"extra: {only_target}"
        )
    target = np.array([target_rows[n] for n in names], dtype=np.float64)

    weights, _, rank, _ = np.linalg.lstsq(matrix, target, rcond=None)
    if rank == 0:
        raise FitError("design matrix has rank 0; no member carries any signal")

    fitted = matrix @ weights
    return FitReport(
        weights=tuple(weights.tolist()),
        rank=int(rank),
        member_srocc=tuple(srocc(matrix[:, j], target) for j in range(matrix.shape[1])),
        ensemble_srocc=srocc(fitted, target),
    )
