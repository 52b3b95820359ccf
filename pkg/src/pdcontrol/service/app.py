"""HTTP front end: ``uvicorn pdcontrol.service.app:app``."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigurationError, InvalidGridError, InvalidParameterError, PDControlError
from . import handlers
from .schemas import (BenchRequest, BenchResponse, EvalRequest, EvalResponse, SolveRequest,
                      SolveResponse, TrainRequest, TrainResponse)

_CLIENT_ERRORS = (ConfigurationError, InvalidGridError, InvalidParameterError, ValueError)


def create_app() -> FastAPI:
    app = FastAPI(title="pdcontrol", version=__version__)

    @app.exception_handler(PDControlError)
    async def domain_error(request: Request, exc: PDControlError):
        status = 422 if isinstance(exc, _CLIENT_ERRORS) else 500
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    # plain ``def`` routes: the numerics run in the worker threadpool
    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest):
        return handlers.handle_solve(req)

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest):
        return handlers.handle_bench(req)

    @app.post("/train", response_model=TrainResponse)
    def train(req: TrainRequest):
        return handlers.handle_train(req)

    @app.post("/eval", response_model=EvalResponse)
    def evaluate(req: EvalRequest):
        return handlers.handle_eval(req)

    return app


app = create_app()
