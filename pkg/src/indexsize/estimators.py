"""Population-size estimators: capture-recapture and ratio projection.

All functions are pure. Counts cross the API as integers rounded half-up;
intermediate arithmetic stays in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import AbstractSet, Iterable

from .universe import ValidationError

OVERLAP_KINDS = ("jaccard", "containment-in-A", "containment-in-B")


class UndefinedEstimateError(ArithmeticError):
    """The estimator has no finite value for these inputs (e.g. zero overlap)."""


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def whole_count(x: float) -> int:
    """Population estimates are reported as whole documents, fractions dropped."""
    return int(math.floor(x))


@dataclass(frozen=True)
class EstimateResult:
    method: str
    estimate: int
    inputs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    provenance: str = ""

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "estimate": self.estimate,
            "inputs": dict(self.inputs),
            "diagnostics": dict(self.diagnostics),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EstimateResult":
        return cls(**data)


@dataclass(frozen=True)
class OverlapStatistic:
    kind: str
    value: float
    degenerate: bool = False

    def __post_init__(self):
        if self.kind not in OVERLAP_KINDS:
            raise ValidationError("kind", f"must be one of {OVERLAP_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValidationError("value", f"overlap must be in [0, 1], got {self.value!r}")


@dataclass(frozen=True)
class CaptureRecaptureInput:
    M: int
    C: int
    R: int

    def __post_init__(self):
        for name in ("M", "C", "R"):
            if getattr(self, name) < 0:
                raise ValidationError(name, "must be non-negative")
        if self.R > min(self.M, self.C):
            raise ValidationError("R", f"recaptures ({self.R}) cannot exceed min(M, C) = {min(self.M, self.C)}")

    @classmethod
    def from_sets(cls, first: AbstractSet, second: AbstractSet) -> "CaptureRecaptureInput":
        first, second = set(first), set(second)
        return cls(M=len(first), C=len(second), R=len(first & second))


def jaccard(a: Iterable, b: Iterable) -> float:
    """|A ∩ B| / |A ∪ B|; two empty sets give 0.0 (see :func:`overlap`)."""
    return overlap(a, b, "jaccard").value


def overlap(a: Iterable, b: Iterable, kind: str = "jaccard") -> OverlapStatistic:
    a, b = set(a), set(b)
    inter = len(a & b)
    if kind == "jaccard":
        denom = len(a | b)
    elif kind == "containment-in-A":
        # share of A also found in B
        denom = len(a)
    elif kind == "containment-in-B":
        denom = len(b)
    else:
        raise ValidationError("kind", f"must be one of {OVERLAP_KINDS}, got {kind!r}")
    if denom == 0:
        return OverlapStatistic(kind, 0.0, degenerate=True)
    return OverlapStatistic(kind, inter / denom)


def chapman(M: int, C: int, R: int) -> float:
    return (M + 1) * (C + 1) / (R + 1) - 1


def lincoln_petersen(data: CaptureRecaptureInput) -> EstimateResult:
    """N̂ = M·C/R for two captures of one closed population."""
    if data.R == 0:
        raise UndefinedEstimateError("no recaptures: the population size is unbounded")
    return EstimateResult(
        method="lincoln-petersen",
        estimate=data.M * data.C // data.R,
        inputs={"M": data.M, "C": data.C, "R": data.R},
        diagnostics={
            "exact": data.M * data.C / data.R,
            "chapman": chapman(data.M, data.C, data.R),
            "label": "population under Lincoln-Petersen assumptions",
            "assumptions": ["closed population", "equal catchability", "independent captures"],
        },
    )


def khabsa_giles_estimate(C: int, overlap: OverlapStatistic) -> EstimateResult:
    """Population estimate N̂ = C / overlap, with the overlap statistic made explicit."""
    if overlap.value <= 0:
        raise UndefinedEstimateError(f"{overlap.kind} overlap is zero; population undefined")
    return EstimateResult(
        method="khabsa-giles",
        estimate=whole_count(C / overlap.value),
        inputs={"C": C, "overlap": overlap.value},
        diagnostics={
            "overlap_kind": overlap.kind,
            "label": "population under Lincoln-Petersen assumptions",
        },
    )


def english_correction(raw: int, factor: float) -> int:
    if not 0 < factor <= 1:
        raise ValidationError("factor", f"must be in (0, 1], got {factor!r}")
    return round_half_up(raw * factor)


@dataclass(frozen=True)
class RatioModel:
    factor: float
    wos_size: int
    wos_english_share: float = 0.9
    gs_english_share: float = 0.65

    def __post_init__(self):
        if not self.factor > 0:
            raise ValidationError("factor", "must be positive")
        if self.wos_size < 0:
            raise ValidationError("wos_size", "must be non-negative")
        for name in ("wos_english_share", "gs_english_share"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(name, f"must be in [0, 1], got {value!r}")


def ratio_project(model: RatioModel) -> EstimateResult:
    return EstimateResult(
        method="ratio-projection",
        estimate=round_half_up(model.factor * model.wos_size),
        inputs={"factor": model.factor, "wos_size": model.wos_size},
        diagnostics={"assumption": f"target index holds {model.factor:g}x the reference index"},
    )


def _split(total: int, share: float) -> tuple[int, int]:
    """Split ``total`` by ``share``; the rounding residue goes to the larger part."""
    part = total * share
    rest = total - part
    if part >= rest:
        other = round_half_up(rest)
        return total - other, other
    first = round_half_up(part)
    return first, total - first


def language_decompose(model: RatioModel) -> dict[str, int]:
    gs = ratio_project(model).estimate
    gse, gso = _split(gs, model.gs_english_share)
    wose, woso = _split(model.wos_size, model.wos_english_share)
    return {"GS": gs, "GSe": gse, "GSo": gso, "WoS": model.wos_size, "WoSe": wose, "WoSo": woso}


def scale_by_english_share(english_estimate: int, share: float) -> int:
    """Total size implied by an English-only estimate."""
    if not 0 < share <= 1:
        raise ValidationError("share", f"must be in (0, 1], got {share!r}")
    return round_half_up(english_estimate / share)


def error_adjust(value: int, error_rate: float) -> int:
    if not 0 <= error_rate < 1:
        raise ValidationError("error_rate", f"must be in [0, 1), got {error_rate!r}")
    return round_half_up(value * (1 - error_rate))
