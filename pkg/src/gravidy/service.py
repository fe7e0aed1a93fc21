"""HTTP service exposing the solvers and the benchmark harness.

POST /bench runs a full multi-seed sweep and returns per-iteration records
plus the summary; POST /solve runs a single seed and additionally returns a
convergence report.  GET /methods lists what runs where.  The CLI in
gravidy.cli is a thin client of these endpoints.
"""

from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .bench import DEFAULT_INNER, METHODS, ExperimentSpec, run_experiment, run_trial


class BenchRequest(BaseModel):
    geometry: str
    method: str
    inner: str | None = None
    n: int = 40
    m: int | None = None
    p: int = 2
    eta: float = 100.0
    seeds: list[int] = Field(default_factory=lambda: list(range(10)))
    max_outer: int = 400
    kkt_tol: float = 1e-8
    cond: float = 100.0
    sparsity: float = 0.2
    active_frac: float = 0.3
    trace_every: int = 1
    time_budget: float | None = None

    def to_spec(self) -> ExperimentSpec:
        data = self.model_dump()
        data["seeds"] = tuple(data["seeds"])
        return ExperimentSpec(**data)


class SolveRequest(BenchRequest):
    seeds: list[int] = Field(default_factory=lambda: [0])


class RecordModel(BaseModel):
    geometry: str
    method: str
    seed: int
    outer_iter: int
    f_value: float
    kkt: float
    feasibility: float
    cum_seconds: float
    inner_iters: int


class BenchResponse(BaseModel):
    records: list[RecordModel]
    summary: dict


class SolveReport(BaseModel):
    status: str
    iterations: int
    final_f: float
    final_kkt: float
    final_feasibility: float
    seconds: float


class SolveResponse(BaseModel):
    records: list[RecordModel]
    report: SolveReport


def create_app() -> FastAPI:
    app = FastAPI(title="gravidy", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/methods")
    def methods():
        return {
            "methods": {g: {m: list(i) for m, i in t.items()} for g, t in METHODS.items()},
            "default_inner": DEFAULT_INNER,
        }

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        try:
            spec = req.to_spec()
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        records, summary = run_experiment(spec)
        return BenchResponse(
            records=[RecordModel(**asdict(r)) for r in records], summary=summary
        )

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> SolveResponse:
        try:
            spec = req.to_spec()
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        seed = spec.seeds[0]
        rows, status = run_trial(spec, seed)
        last = rows[-1]
        report = SolveReport(
            status=status,
            iterations=last.outer_iter,
            final_f=last.f_value,
            final_kkt=last.kkt,
            final_feasibility=last.feasibility,
            seconds=last.cum_seconds,
        )
        return SolveResponse(records=[RecordModel(**asdict(r)) for r in rows], report=report)

    return app


def serve_main(argv=None):
    """Entry point of gravidy-serve: run the service under uvicorn."""
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="gravidy-serve")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)
    uvicorn.run(create_app(), host=args.host, port=args.port)
