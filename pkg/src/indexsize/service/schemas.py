"""Request and response bodies of the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..engine import MAX_PAGE_SIZE


class QueryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    term: str = ""
    excluded_site: str | None = None
    year_range: tuple[int, int] | None = None
    include_citations: bool = True
    include_patents: bool = True
    category: Literal["articles", "case-law"] = "articles"
    page: int = Field(1, ge=1)
    page_size: int = Field(10, ge=1, le=MAX_PAGE_SIZE)


class HitCountModel(BaseModel):
    value: int
    rounded: bool
    raw_true_count: int | None = None
    diagnostics: dict = Field(default_factory=dict)


class PageModel(BaseModel):
    ids: list[int]
    hce: HitCountModel
    capped: bool
    false_serp: bool


class CaptureRecaptureRequest(BaseModel):
    """Either the three counts or the two sets they are computed from."""

    M: int | None = Field(None, ge=0)
    C: int | None = Field(None, ge=0)
    R: int | None = Field(None, ge=0)
    a: list[int] | None = None
    b: list[int] | None = None

    @model_validator(mode="after")
    def _one_form(self):
        counts = (self.M, self.C, self.R)
        if all(v is not None for v in counts) == (self.a is not None and self.b is not None):
            raise ValueError("give either M, C and R or both sets a and b")
        return self


class KhabsaGilesRequest(BaseModel):
    C: int = Field(ge=0)
    overlap: float = Field(ge=0.0, le=1.0)
    overlap_kind: Literal["jaccard", "containment-in-A", "containment-in-B"] = "jaccard"


class RatioRequest(BaseModel):
    factor: float = Field(gt=0)
    wos_size: int = Field(ge=0)
    wos_english_share: float = Field(0.9, ge=0.0, le=1.0)
    gs_english_share: float = Field(0.65, ge=0.0, le=1.0)


class EstimateModel(BaseModel):
    method: str
    estimate: int
    inputs: dict = Field(default_factory=dict)
    diagnostics: dict = Field(default_factory=dict)
    provenance: str = ""
