"""FastAPI application exposing an engine backend and the estimators.

Run against a simulated engine this is the counterpart of the ``mock-live``
backend: :class:`indexsize.live.LiveEngineClient` talks to these routes.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..engine import EngineBackend, EngineServerError, Query
from ..estimators import (CaptureRecaptureInput, OverlapStatistic, RatioModel, UndefinedEstimateError,
                          khabsa_giles_estimate, language_decompose, lincoln_petersen, ratio_project)
from ..universe import ValidationError
from .schemas import (CaptureRecaptureRequest, EstimateModel, HitCountModel, KhabsaGilesRequest, PageModel,
                      QueryModel, RatioRequest)


def _hce(h) -> HitCountModel:
    return HitCountModel(value=h.value, rounded=h.rounded, raw_true_count=h.raw_true_count,
                         diagnostics=h.diagnostics)


def create_app(engine: EngineBackend | None = None) -> FastAPI:
    """Build the app; engine routes answer 503 when no engine is attached."""
    app = FastAPI(title="indexsize", version="0.1.0")
    app.state.engine = engine

    def backend() -> EngineBackend:
        if app.state.engine is None:
            raise HTTPException(503, detail="no engine attached")
        return app.state.engine

    def to_query(body: QueryModel) -> Query:
        try:
            return Query.from_dict(body.model_dump())
        except ValidationError as exc:
            raise HTTPException(422, detail=str(exc)) from exc

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "engine": app.state.engine is not None}

    @app.get("/engine/capabilities")
    def capabilities() -> dict:
        return backend().capabilities()

    @app.post("/engine/count", response_model=HitCountModel)
    def count(body: QueryModel):
        try:
            return _hce(backend().count(to_query(body)))
        except EngineServerError as exc:
            raise HTTPException(503, detail=str(exc)) from exc

    @app.post("/engine/page", response_model=PageModel)
    def page(body: QueryModel):
        try:
            result = backend().fetch_page(to_query(body))
        except EngineServerError as exc:
            raise HTTPException(503, detail=str(exc)) from exc
        except NotImplementedError as exc:
            raise HTTPException(501, detail=str(exc)) from exc
        return PageModel(ids=list(result.ids), hce=_hce(result.hce), capped=result.capped,
                         false_serp=result.false_serp)

    @app.post("/estimate/lincoln-petersen", response_model=EstimateModel)
    def estimate_lp(body: CaptureRecaptureRequest):
        try:
            if body.a is not None:
                data = CaptureRecaptureInput.from_sets(body.a, body.b)
            else:
                data = CaptureRecaptureInput(body.M, body.C, body.R)
            return lincoln_petersen(data).to_dict()
        except (ValidationError, UndefinedEstimateError) as exc:
            raise HTTPException(422, detail=str(exc)) from exc

    @app.post("/estimate/khabsa-giles", response_model=EstimateModel)
    def estimate_kg(body: KhabsaGilesRequest):
        try:
            return khabsa_giles_estimate(body.C, OverlapStatistic(body.overlap_kind, body.overlap)).to_dict()
        except UndefinedEstimateError as exc:
            raise HTTPException(422, detail=str(exc)) from exc

    @app.post("/estimate/ratio", response_model=EstimateModel)
    def estimate_ratio(body: RatioRequest):
        model = RatioModel(**body.model_dump())
        result = ratio_project(model).to_dict()
        result["diagnostics"]["language_decomposition"] = language_decompose(model)
        return result

    return app
