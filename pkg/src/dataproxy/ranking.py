"""Ranking-agreement evaluation between accuracy tables.

A proxy is good when training on it ranks architecture configurations the
same way the full data does. This module compares a reference accuracy table
against candidates pairwise (preserved / flipped / tied), computes Pearson
and Spearman correlations, checks best-configuration preservation, and
renders the agreement heatmap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .exceptions import ConfigMismatch, DegenerateInput, ZeroVariance

# Agreement cell codes. Self-pairs carry no information and are marked
# preserved so the rendered grid has a uniform diagonal.
PRESERVED = 1
TIED = 0
FLIPPED = -1

_GRID_CHARS = {PRESERVED: ".", TIED: "=", FLIPPED: "x"}


@dataclass(frozen=True)
class ConfigAccuracy:
    """One configuration's test accuracy under one data variant."""

    config_id: str
    accuracy: float
    params: Mapping[str, str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params or {}))
        if not self.config_id:
            raise DegenerateInput("config_id must be non-empty")
        if not (0.0 <= self.accuracy <= 1.0):
            raise DegenerateInput(
                f"accuracy of {self.config_id!r} must be in [0, 1], got {self.accuracy}"
            )


@dataclass(frozen=True)
class AccuracyTable:
    """Accuracies of every configuration under one data variant."""

    variant_name: str
    entries: tuple[ConfigAccuracy, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.variant_name:
            raise DegenerateInput("variant_name must be non-empty")
        if not self.entries:
            raise DegenerateInput("accuracy table must have at least one entry")
        ids = [e.config_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise DegenerateInput(f"duplicate config ids in variant {self.variant_name!r}")

    def config_ids(self) -> tuple[str, ...]:
        return tuple(e.config_id for e in self.entries)

    def accuracies(self) -> np.ndarray:
        return np.array([e.accuracy for e in self.entries], dtype=float)

    def by_id(self) -> dict[str, ConfigAccuracy]:
        return {e.config_id: e for e in self.entries}


@dataclass(frozen=True)
class RankingReport:
    """Everything one reference-vs-candidate comparison produces."""

    reference_name: str
    candidate_name: str
    config_ids: tuple[str, ...]
    agreement: np.ndarray
    correlation_pearson: float
    correlation_spearman: float
    best_preserved: bool
    reference_best_id: str
    candidate_best_id: str
    flipped_pair_count: int


def _align(reference: AccuracyTable, candidate: AccuracyTable, min_entries: int = 2):
    """Return (ids, ref accuracies, cand accuracies) in reference order."""
    ref_ids = set(reference.config_ids())
    cand_ids = set(candidate.config_ids())
    if ref_ids != cand_ids:
        only_ref = sorted(ref_ids - cand_ids)
        only_cand = sorted(cand_ids - ref_ids)
        raise ConfigMismatch(
            f"config ids differ between {reference.variant_name!r} and "
            f"{candidate.variant_name!r}: only-reference={only_ref[:5]}, "
            f"only-candidate={only_cand[:5]}"
        )
    if len(reference.entries) < min_entries:
        raise DegenerateInput(f"need at least {min_entries} configs, got {len(reference.entries)}")
    ids = reference.config_ids()
    cand_by_id = candidate.by_id()
    ref = reference.accuracies()
    cand = np.array([cand_by_id[cid].accuracy for cid in ids], dtype=float)
    return ids, ref, cand


def agreement_matrix(reference: AccuracyTable, candidate: AccuracyTable) -> np.ndarray:
    """Pairwise agreement grid between two aligned accuracy tables.

    Cell (i, j) is PRESERVED when both tables order configs i and j the same
    way, FLIPPED when they order them oppositely, and TIED when either table
    has them exactly equal. The matrix is symmetric with a PRESERVED diagonal.
    """
    _, ref, cand = _align(reference, candidate)
    n = ref.size
    ref_diff = ref[:, None] - ref[None, :]
    cand_diff = cand[:, None] - cand[None, :]
    matrix = np.where(
        np.sign(ref_diff) == np.sign(cand_diff), PRESERVED, FLIPPED
    ).astype(np.int8)
    matrix[(ref_diff == 0) | (cand_diff == 0)] = TIED
    matrix[np.diag_indices(n)] = PRESERVED
    return matrix


def flipped_pair_count(matrix: np.ndarray) -> int:
    """Number of unordered config pairs whose ordering flipped."""
    return int(np.count_nonzero(matrix == FLIPPED)) // 2


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=float)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(xm @ xm)
    syy = float(ym @ ym)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation undefined for a constant accuracy vector")
    return float((xm @ ym) / np.sqrt(sxx * syy))


def correlation_score(
    reference: AccuracyTable, candidate: AccuracyTable, method: str = "pearson"
) -> float:
    """Pearson or Spearman correlation between two aligned accuracy vectors.

    Spearman uses average ranks for ties.
    """
    if method not in ("pearson", "spearman"):
        raise DegenerateInput(f"method must be 'pearson' or 'spearman', got {method!r}")
    _, ref, cand = _align(reference, candidate)
    if method == "spearman":
        ref, cand = average_ranks(ref), average_ranks(cand)
    return _pearson(ref, cand)


def best_config_preserved(
    reference: AccuracyTable, candidate: AccuracyTable
) -> tuple[bool, str, str]:
    """Whether both tables crown the same configuration.

    Returns (preserved, reference best id, candidate best id). An exact tie
    for the top spot in either table counts as not preserved, with a warning,
    because the argmax is then not unique.
    """
    ids, ref, cand = _align(reference, candidate, min_entries=1)
    result = True
    for name, acc in ((reference.variant_name, ref), (candidate.variant_name, cand)):
        if np.count_nonzero(acc == acc.max()) > 1:
            warnings.warn(f"variant {name!r} has a tied best accuracy", stacklevel=2)
            result = False
    ref_best = ids[int(np.argmax(ref))]
    cand_best = ids[int(np.argmax(cand))]
    return (result and ref_best == cand_best), ref_best, cand_best


def rank_report(reference: AccuracyTable, candidate: AccuracyTable) -> RankingReport:
    """Full comparison: agreement grid, both correlations, best-config flag."""
    ids, _, _ = _align(reference, candidate)
    matrix = agreement_matrix(reference, candidate)
    preserved, ref_best, cand_best = best_config_preserved(reference, candidate)
    return RankingReport(
        reference_name=reference.variant_name,
        candidate_name=candidate.variant_name,
        config_ids=ids,
        agreement=matrix,
        correlation_pearson=correlation_score(reference, candidate, "pearson"),
        correlation_spearman=correlation_score(reference, candidate, "spearman"),
        best_preserved=preserved,
        reference_best_id=ref_best,
        candidate_best_id=cand_best,
        flipped_pair_count=flipped_pair_count(matrix),
    )


def agreement_grid_text(matrix: np.ndarray, config_ids) -> str:
    """Diff-able text rendering of an agreement matrix.

    One row per config: the id, a tab, then one character per cell
    (``.`` preserved, ``x`` flipped, ``=`` tied).
    """
    config_ids = tuple(config_ids)
    if matrix.shape != (len(config_ids), len(config_ids)):
        raise DegenerateInput(
            f"matrix shape {matrix.shape} does not fit {len(config_ids)} config ids"
        )
    lines = ["# dpx-agreement v1", "configs:\t" + "\t".join(config_ids)]
    for cid, row in zip(config_ids, matrix):
        lines.append(cid + "\t" + "".join(_GRID_CHARS[int(cell)] for cell in row))
    return "\n".join(lines) + "\n"


def render_agreement_figure(
    matrix: np.ndarray,
    config_ids,
    best_config_id: str | None = None,
    path: str | None = None,
    title: str | None = None,
) -> dict:
    """Render the agreement heatmap; light cells preserved, dark cells flipped.

    The best reference config's row and column get a green outline. Returns
    the cell counts, the text grid, and the output path (image written only
    when ``path`` is given; suffix selects the format).
    """
    config_ids = tuple(config_ids)
    counts = {
        "preserved": int(np.count_nonzero(matrix == PRESERVED)),
        "tied": int(np.count_nonzero(matrix == TIED)),
        "flipped": int(np.count_nonzero(matrix == FLIPPED)),
    }
    grid = agreement_grid_text(matrix, config_ids)
    if path is not None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        from matplotlib.colors import ListedColormap
        from matplotlib.patches import Rectangle

        plt.rcParams["svg.hashsalt"] = "dataproxy"
        n = len(config_ids)
        # FLIPPED=-1 -> dark, TIED=0 -> gray, PRESERVED=1 -> light yellow.
        cmap = ListedColormap(["#3a3a3a", "#b0b0b0", "#f2e34c"])
        fig, ax = plt.subplots(figsize=(0.5 * n + 2.0, 0.5 * n + 2.0))
        ax.imshow(matrix, cmap=cmap, vmin=-1, vmax=1)
        ax.set_xticks(range(n), config_ids, rotation=90)
        ax.set_yticks(range(n), config_ids)
        ax.set_xlabel("configuration")
        ax.set_ylabel("configuration")
        if title:
            ax.set_title(title)
        if best_config_id is not None:
            if best_config_id not in config_ids:
                raise DegenerateInput(f"best config {best_config_id!r} not in config ids")
            b = config_ids.index(best_config_id)
            for x, y, w, h in (
                (-0.5, b - 0.5, n, 1),
                (b - 0.5, -0.5, 1, n),
            ):
                ax.add_patch(
                    Rectangle((x, y), w, h, fill=False, edgecolor="#1f9e32", linewidth=2.4)
                )
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
        plt.close(fig)
    return {"counts": counts, "grid": grid, "path": path}
