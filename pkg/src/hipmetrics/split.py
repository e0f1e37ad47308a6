"""Patient-level train/val/test splitting balanced on alpha-angle distributions.

The split assigns whole patients (all images of a patient land in one
partition) and searches random restarts for the assignment whose three
image-level alpha-angle samples are closest in distribution, measured by the
maximum pairwise two-sample Kolmogorov-Smirnov statistic. KS is used purely
as a balance objective; no p-value is attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import SplitError, StatsError

PARTITIONS = ("train", "val", "test")


@dataclass(frozen=True)
class PatientImages:
    """One patient: their id and the alpha angle of each of their images."""

    patient_id: str
    image_keys: tuple[str, ...]
    alphas: tuple[float, ...]

    def __post_init__(self):
        if len(self.image_keys) != len(self.alphas):
            raise SplitError(f"{self.patient_id}: image/alpha count mismatch")
        if len(self.image_keys) == 0:
            raise SplitError(f"{self.patient_id}: patient has no images")


@dataclass(frozen=True)
class SplitAssignment:
    partition_of: Mapping[str, str]  # patient_id -> partition name
    achieved_ratios: tuple[float, float, float]  # patient fractions
    ks_stats: Mapping[tuple[str, str], float]  # pairwise partition KS on alphas
    objective: float  # max pairwise KS
    restart_index: int

    def partition_for_image(self, patient_id: str) -> str:
        return self.partition_of[patient_id]


def ks_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sample KS statistic: sup over x of |ECDF_a(x) - ECDF_b(x)|."""
    xa = np.sort(np.asarray(a, dtype=np.float64))
    xb = np.sort(np.asarray(b, dtype=np.float64))
    if xa.size == 0 or xb.size == 0:
        raise StatsError("KS statistic needs two non-empty samples")
    # the supremum is attained at a sample point of either sample
    grid = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, grid, side="right") / xa.size
    cdf_b = np.searchsorted(xb, grid, side="right") / xb.size
    return float(np.abs(cdf_a - cdf_b).max())


def partition_counts(n_patients: int, ratios: Sequence[float]) -> tuple[int, ...]:
    """Patient counts per partition.

    The leading quotas are floored and the remainder goes to the final
    partition, so the counts always sum to n. 89 patients at 65:10:25 gives
    (57, 8, 24).
    """
    if not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise SplitError(f"ratios must sum to 1, got {tuple(ratios)}")
    if any(r <= 0 for r in ratios):
        raise SplitError(f"ratios must be positive, got {tuple(ratios)}")
    counts = [math.floor(n_patients * r) for r in ratios[:-1]]
    counts.append(n_patients - sum(counts))
    if any(c < 1 for c in counts):
        raise SplitError(
            f"infeasible split: {n_patients} patients at {tuple(ratios)} "
            f"leaves an empty partition {tuple(counts)}"
        )
    return tuple(counts)


def balanced_split(
    patients: Sequence[PatientImages],
    ratios: Sequence[float] = (0.65, 0.10, 0.25),
    seed: Union[int, np.random.Generator] = 0,
    restarts: int = 1000,
) -> SplitAssignment:
    """Search ``restarts`` random patient partitions, keep the KS-flattest one.

    Deterministic for a fixed (input order, seed, restarts): ties on the
    objective resolve to the lowest restart index.
    """
    if len(patients) < 3:
        raise SplitError("need at least 3 patients to form three partitions")
    if restarts < 1:
        raise SplitError("restarts must be >= 1")
    ids = [p.patient_id for p in patients]
    if len(set(ids)) != len(ids):
        raise SplitError("duplicate patient_id in split input")
    counts = partition_counts(len(patients), ratios)

    alphas = [np.asarray(p.alphas, dtype=np.float64) for p in patients]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    best_perm: np.ndarray | None = None
    best_obj = math.inf
    best_index = -1
    for i in range(restarts):
        perm = rng.permutation(len(patients))
        obj = _max_pairwise_ks(perm, counts, alphas)
        if obj < best_obj:
            best_obj, best_perm, best_index = obj, perm, i

    assert best_perm is not None
    partition_of: dict[str, str] = {}
    start = 0
    for name, count in zip(PARTITIONS, counts):
        for idx in best_perm[start : start + count]:
            partition_of[ids[idx]] = name
        start += count

    ks = _pairwise_ks_table(best_perm, counts, alphas)
    n = len(patients)
    return SplitAssignment(
        partition_of=partition_of,
        achieved_ratios=tuple(c / n for c in counts),  # type: ignore[arg-type]
        ks_stats=ks,
        objective=best_obj,
        restart_index=best_index,
    )


def _partition_alpha_samples(
    perm: np.ndarray, counts: Sequence[int], alphas: Sequence[np.ndarray]
) -> list[np.ndarray]:
    samples = []
    start = 0
    for count in counts:
        members = perm[start : start + count]
        samples.append(np.concatenate([alphas[i] for i in members]))
        start += count
    return samples


def _max_pairwise_ks(perm, counts, alphas) -> float:
    s = _partition_alpha_samples(perm, counts, alphas)
    return max(
        ks_statistic(s[i], s[j]) for i in range(3) for j in range(i + 1, 3)
    )


def _pairwise_ks_table(perm, counts, alphas) -> dict[tuple[str, str], float]:
    s = _partition_alpha_samples(perm, counts, alphas)
    return {
        (PARTITIONS[i], PARTITIONS[j]): ks_statistic(s[i], s[j])
        for i in range(3)
        for j in range(i + 1, 3)
    }
