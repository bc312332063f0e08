"""FastAPI app serving hard-label classifications per PROTOCOL.md."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .weights import Model, classify

DEFAULT_SIZE_LIMIT = 8 * 1024 * 1024


class ClassifyRequest(BaseModel):
    sample: list[float] = Field(min_length=1)
    shape: list[int] = Field(min_length=3, max_length=3)


class ClassifyResponse(BaseModel):
    label: int


class HealthResponse(BaseModel):
    status: str
    shape: list[int]
    classes: int


def create_app(model: Model, squeeze_bits: int | None = None,
               size_limit: int = DEFAULT_SIZE_LIMIT) -> FastAPI:
    app = FastAPI(title="oracle-server", docs_url=None, redoc_url=None)
    h, w, c = model.input_shape

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        # The protocol wants 400 for malformed JSON and bad fields, not 422.
        return JSONResponse(status_code=400, content={"detail": "malformed request"})

    @app.middleware("http")
    async def enforce_size_limit(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and length.isdigit() and int(length) > size_limit:
            return JSONResponse(status_code=413, content={"detail": "request too large"})
        return await call_next(request)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", shape=[h, w, c],
                              classes=model.num_classes)

    @app.post("/classify", response_model=ClassifyResponse)
    def classify_sample(body: ClassifyRequest):
        if body.shape != [h, w, c] or len(body.sample) != model.input_dim:
            return JSONResponse(status_code=400,
                                content={"detail": "shape mismatch"})
        label = classify(model, body.sample, squeeze_bits=squeeze_bits)
        return ClassifyResponse(label=label)

    return app
