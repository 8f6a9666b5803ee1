"""HTTP facade over the deblurring pipeline.

Every domain error maps to one envelope shape
``{"error": {"type": ..., "message": ...}}`` with type argument,
format, or numeric, so clients dispatch on a stable field rather than
on messages. Argument and format problems are 400s, numeric failures
are 500s.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ArgumentError, FormatError, NumericError
from ..imaging import generate_image
from ..kron import decompose, truncation_error
from ..pipeline import BenchCase, make_data, parse_bc, restore, run_case
from ..psf import psf_disk, psf_gaussian, psf_shake
from . import models


def _error_response(kind: str, status: int, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"type": kind, "message": str(exc)}},
    )


def create_app() -> FastAPI:
    app = FastAPI(title="kronblur", version=__version__)

    @app.exception_handler(ArgumentError)
    async def _argument_handler(request: Request, exc: ArgumentError):
        return _error_response("argument", 400, exc)

    @app.exception_handler(FormatError)
    async def _format_handler(request: Request, exc: FormatError):
        return _error_response("format", 400, exc)

    @app.exception_handler(NumericError)
    async def _numeric_handler(request: Request, exc: NumericError):
        return _error_response("numeric", 500, exc)

    @app.get("/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/generate/image", response_model=models.ImageResponse)
    def generate_image_route(req: models.GenerateImageRequest) -> models.ImageResponse:
        image = generate_image(req.kind, req.m, req.n, req.seed)
        return models.ImageResponse(image=image.tolist())

    @app.post("/generate/psf", response_model=models.PsfModel)
    def generate_psf_route(req: models.GeneratePsfRequest) -> models.PsfModel:
        if req.kind == "gaussian":
            psf = psf_gaussian(req.size, req.sigma)
        elif req.kind == "disk":
            psf = psf_disk(req.size, req.radius)
        elif req.kind == "shake":
            psf = psf_shake(req.size, req.steps, req.seed)
        else:
            raise ArgumentError(f"unknown PSF kind {req.kind!r}")
        return models.PsfModel.from_psf(psf)

    @app.post("/blur", response_model=models.BlurResponse)
    def blur_route(req: models.BlurRequest) -> models.BlurResponse:
        image = models.to_array(req.image, "image")
        _, noisy = make_data(
            image,
            req.psf.to_psf(),
            parse_bc(req.bc),
            noise=req.noise,
            noise_level=req.noise_level,
            seed=req.seed,
        )
        return models.BlurResponse(blurred=noisy.tolist())

    @app.post("/decompose", response_model=models.DecomposeResponse)
    def decompose_route(req: models.DecomposeRequest) -> models.DecomposeResponse:
        op = decompose(req.psf.to_psf(), parse_bc(req.bc), s=req.s, shape=req.shape)
        sigma = [float(v) for v in op.sigma]
        eps = [truncation_error(op.sigma, i) for i in range(1, len(sigma) + 1)]
        return models.DecomposeResponse(sigma=sigma, eps=eps, rank=op.rank, s=op.s)

    @app.post("/restore", response_model=models.RestoreResponse)
    def restore_route(req: models.RestoreRequest) -> models.RestoreResponse:
        result = restore(
            models.to_array(req.blurred, "blurred image"),
            req.psf.to_psf(),
            parse_bc(req.bc),
            method=req.method,
            s=req.s,
            lam=req.lam,
            iters=req.iters,
            tol=req.tol,
            truth=None if req.truth is None else models.to_array(req.truth, "truth image"),
            noise_level=req.noise_level,
            seed=req.seed,
            record_history=req.record_history,
        )
        history = [
            models.HistoryRow(
                iter=rec.k, t=rec.t, objective=rec.objective, eta=rec.eta, gamma=rec.gamma, ms=rec.ms
            )
            for rec in result.history
        ]
        return models.RestoreResponse(
            restored=result.restored.tolist(),
            method=result.method,
            s=result.s,
            rank=result.rank,
            eps=result.eps,
            lambda_used=result.lambda_used,
            lipschitz=result.lipschitz,
            iterations=result.iterations,
            setup_ms=result.setup_ms,
            solve_ms=result.solve_ms,
            gamma=result.gamma,
            eta=result.eta,
            history=history,
        )

    @app.post("/bench/case", response_model=models.BenchCaseResponse)
    def bench_case_route(req: models.BenchCaseRequest) -> models.BenchCaseResponse:
        case = BenchCase(
            id=req.id,
            image=req.image,
            blur=req.blur,
            level=req.level,
            noise=req.noise,
            noise_level=req.noise_level,
            s_list=tuple(req.s),
            iters=req.iters,
            seeds=tuple(req.seeds),
            size=req.size,
            bc=req.bc,
            lam=req.lam,
        )
        rows = [models.BenchRow(**row) for row in run_case(case)]
        return models.BenchCaseResponse(rows=rows)

    return app
