"""Request/response schemas for the HTTP service.

Arrays travel as nested lists of floats; JSON float serialization is
shortest-round-trip, so numeric payloads survive the wire bit-exact.
Field validation here covers shapes and types only; domain rules
(normalization, ranges, guards) stay in the core library so the same
errors surface no matter how it is driven.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel

from ..errors import ArgumentError
from ..psf import Psf


def to_array(values: list[list[float]], what: str = "array") -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except ValueError as exc:
        raise ArgumentError(f"{what} must be rectangular: {exc}") from exc
    if arr.ndim != 2 or arr.size == 0:
        raise ArgumentError(f"{what} must be a nonempty 2-D array")
    return arr


class PsfModel(BaseModel):
    values: list[list[float]]
    center: tuple[int, int] | None = None

    def to_psf(self) -> Psf:
        values = to_array(self.values, "PSF")
        center = self.center
        if center is None:
            center = (values.shape[0] // 2 + 1, values.shape[1] // 2 + 1)
        return Psf(values, center)

    @classmethod
    def from_psf(cls, psf: Psf) -> "PsfModel":
        return cls(values=psf.values.tolist(), center=psf.center)


class GenerateImageRequest(BaseModel):
    kind: str
    m: int = 64
    n: int = 64
    seed: int = 0


class ImageResponse(BaseModel):
    image: list[list[float]]


class GeneratePsfRequest(BaseModel):
    kind: str
    size: int = 5
    sigma: float = 1.0
    radius: float = 2.0
    steps: int = 30
    seed: int = 0


class BlurRequest(BaseModel):
    image: list[list[float]]
    psf: PsfModel
    bc: str = "reflective"
    noise: str = "none"
    noise_level: float = 0.0
    seed: int = 0


class BlurResponse(BaseModel):
    blurred: list[list[float]]


class DecomposeRequest(BaseModel):
    psf: PsfModel
    bc: str = "reflective"
    s: int | None = None
    shape: tuple[int, int] | None = None


class DecomposeResponse(BaseModel):
    sigma: list[float]
    eps: list[float]
    rank: int
    s: int


class RestoreRequest(BaseModel):
    blurred: list[list[float]]
    psf: PsfModel
    bc: str = "reflective"
    method: str = "sfista"
    s: int | None = None
    lam: float | None = None
    iters: int = 50
    tol: float = 0.0
    truth: list[list[float]] | None = None
    noise_level: float | None = None
    seed: int = 0
    record_history: bool = True


class HistoryRow(BaseModel):
    iter: int
    t: float
    objective: float
    eta: float | None = None
    gamma: float | None = None
    ms: float


class RestoreResponse(BaseModel):
    restored: list[list[float]]
    method: str
    s: int
    rank: int
    eps: float
    lambda_used: float
    lipschitz: float
    iterations: int
    setup_ms: float
    solve_ms: float
    gamma: float
    eta: float | None = None
    history: list[HistoryRow]


class BenchCaseRequest(BaseModel):
    id: str = "case"
    image: str = "pattern1"
    blur: str = "defocus"
    level: str = "medium"
    noise: str = "gauss"
    noise_level: float = 0.01
    s: list[int] = [5]
    iters: int = 50
    seeds: list[int] = [0]
    size: int = 64
    bc: str = "reflective"
    lam: float | None = None


class BenchRow(BaseModel):
    case: str
    seed: int
    method: str
    s: int
    iters: int
    eta: float
    gamma: float
    ms: float
    setup_ms: float
    tratio: float | None = None


class BenchCaseResponse(BaseModel):
    rows: list[BenchRow]


class HealthResponse(BaseModel):
    status: str
    version: str
