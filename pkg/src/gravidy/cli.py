"""Benchmark CLI: a thin client of the HTTP service.

Without --server the request is served by the app in-process over an ASGI
transport (no socket involved); with --server it is POSTed to a running
gravidy-serve instance.  Either way the client writes the CSV and summary
files locally, so the on-disk formats are identical.

Exit code 0 on a completed sweep, 1 on a spec validation error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .bench import BenchRecord, summarize, write_csv


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gravidy-bench", description="Run one benchmark sweep and write CSV/JSON."
    )
    p.add_argument("--geometry", required=True, choices=["pos", "simplex", "box", "stiefel"])
    p.add_argument("--method", required=True)
    p.add_argument("--inner", default=None)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--eta", type=float, default=100.0)
    p.add_argument("--seeds", type=_parse_seeds, default=list(range(10)),
                   help="comma-separated seed values, default 0..9")
    p.add_argument("--max-outer", type=int, default=400)
    p.add_argument("--kkt-tol", type=float, default=1e-8)
    p.add_argument("--cond", type=float, default=100.0)
    p.add_argument("--sparsity", type=float, default=0.2)
    p.add_argument("--active-frac", type=float, default=0.3)
    p.add_argument("--trace-every", type=int, default=1)
    p.add_argument("--time-budget", type=float, default=None)
    p.add_argument("--out", required=True, help="per-iteration CSV path")
    p.add_argument("--summary", default=None, help="summary JSON path")
    p.add_argument("--server", default=None, help="base URL of a running service")
    return p


def _post_bench(server: str | None, payload: dict) -> httpx.Response:
    if server is not None:
        return httpx.post(f"{server.rstrip('/')}/bench", json=payload, timeout=None)

    from .service import create_app

    async def go():
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://gravidy.internal", timeout=None
        ) as client:
            return await client.post("/bench", json=payload)

    return asyncio.run(go())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    payload = {
        "geometry": args.geometry,
        "method": args.method,
        "inner": args.inner,
        "n": args.n,
        "m": args.m,
        "p": args.p,
        "eta": args.eta,
        "seeds": args.seeds,
        "max_outer": args.max_outer,
        "kkt_tol": args.kkt_tol,
        "cond": args.cond,
        "sparsity": args.sparsity,
        "active_frac": args.active_frac,
        "trace_every": args.trace_every,
        "time_budget": args.time_budget,
    }
    resp = _post_bench(args.server, payload)
    if resp.status_code in (400, 422):
        print(f"spec error: {resp.json().get('detail')}", file=sys.stderr)
        return 1
    resp.raise_for_status()
    body = resp.json()
    records = [BenchRecord(**row) for row in body["records"]]
    write_csv(records, args.out)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump(body["summary"], fh, indent=2)
            fh.write("\n")
    for method, stats in summarize(records, args.kkt_tol)["methods"].items():
        ttt = stats["median_time_to_tol"]
        print(
            f"{method}: median final kkt {stats['median_final_kkt']:.3e}, "
            f"median time-to-tol {'n/a' if ttt is None else f'{ttt:.3f}s'} "
            f"({stats['n_reached_tol']}/{stats['n_seeds']} seeds reached tol)"
        )
    failures = body["summary"].get("failures", [])
    for f in failures:
        print(f"trial failed: {f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
