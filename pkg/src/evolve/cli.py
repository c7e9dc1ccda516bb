"""Command line: ``evolve run | report | stg | serve``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional

from .evaluator import ConfigError
from .orchestrator import EXIT_BACKEND, EXIT_CONFIG, RunConfig


def _periods(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated periods in ns, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evolve", description="LLM-driven evolutionary search over Verilog designs")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="search for a design")
    r.add_argument("--problem", help="problem directory (problem.md, golden.v, problem.json)")
    r.add_argument("--strategy", choices=["mcts", "igr", "random"], default="mcts")
    r.add_argument("--max-nodes", type=int, help="node budget (default: the problem's, usually 300)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--backend", choices=["open-source", "synthetic"], default="open-source")
    r.add_argument("--llm", choices=["remote", "mock"], default="remote")
    r.add_argument("--clock-sweep", type=_periods, default=(), metavar="P1,P2,...")
    r.add_argument("--directive", choices=["balanced", "opt-area", "opt-cycle"])
    r.add_argument("--out", help="run directory (default: runs/<problem>-<strategy>-s<seed>)")
    r.add_argument("--resume", action="store_true", help="continue a checkpointed run in --out")
    g = r.add_argument_group("search")
    g.add_argument("--k", type=int, default=60, help="IGR: number of ideas")
    g.add_argument("--m", type=int, default=5, help="IGR: nodes per chain")
    g.add_argument("--expansion-rate", type=int, default=3, help="MCTS: children per node")
    g.add_argument("--c", type=float, default=1.4, help="MCTS: exploration constant")
    g.add_argument("--binary-feedback", action="store_true", help="all-or-nothing scores, no mismatch list")
    g.add_argument("--no-summaries", action="store_true", help="use the code head instead of LLM summaries")
    s = r.add_argument_group("synthetic backend")
    s.add_argument("--landscape", choices=["hamming", "ppa"], default="hamming")
    s.add_argument("--width", type=int, default=8)
    m = r.add_argument_group("model")
    m.add_argument("--fixtures", help="replay-mock fixture file (JSON keyed by prompt hash)")
    m.add_argument("--lenient", action="store_true", help="replay mock answers unknown prompts with a canned reply")
    m.add_argument("--endpoint", help="chat-completion base URL")
    m.add_argument("--model", dest="model_name")
    m.add_argument("--api-key-env", help="name of the env var holding the API key")
    m.add_argument("--temperature", type=float)
    m.add_argument("--max-tokens", type=int)
    r.add_argument("--server", help="submit to an evolve service at this URL instead of running locally")

    rep = sub.add_parser("report", help="summarize a run directory")
    rep.add_argument("run_dir")

    t = sub.add_parser("stg", help="emit a self-checking testbench")
    t.add_argument("dut", help="DUT source (its port list drives the testbench)")
    t.add_argument("--golden", required=True, help="reference source containing <top>_ref")
    t.add_argument("--top", help="DUT module name (default: first module in the DUT file)")
    t.add_argument("--clock", type=float, default=10.0, help="clock period in ns")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--random-vectors", type=int, default=16)
    t.add_argument("-o", "--output", help="write here instead of stdout")

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--runs-root", default="runs")
    return p


def _llm_config(args):
    from .llm import LlmConfig

    overrides = {k: getattr(args, k) for k in ("endpoint", "model_name", "api_key_env", "temperature", "max_tokens")
                 if getattr(args, k) is not None}
    return LlmConfig(**overrides)


def _config(args) -> RunConfig:
    return RunConfig(
        strategy=args.strategy, max_nodes=args.max_nodes, k=args.k, m=args.m, expansion_rate=args.expansion_rate,
        c=args.c, clock_sweep=args.clock_sweep, seed=args.seed, backend=args.backend, llm=args.llm,
        directive=args.directive, binary_feedback=args.binary_feedback, summaries=not args.no_summaries,
        problem=args.problem, landscape=args.landscape, width=args.width,
    )


def _default_out(args) -> Path:
    name = Path(args.problem).name if args.problem else f"synthetic-{args.landscape}"
    return Path("runs") / f"{name}-{args.strategy}-s{args.seed}"


def cmd_run(args) -> int:
    if args.server:
        return _remote_run(args)
    from .orchestrator import run_from_config

    try:
        config = _config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else _default_out(args)
    code = run_from_config(config, out, resume=args.resume, llm_config=_llm_config(args), fixtures=args.fixtures,
                           lenient=args.lenient)
    summary = out / ("sweep.json" if config.clock_sweep else "summary.json")
    if summary.exists():
        print(summary.read_text().rstrip())
    print(f"run directory: {out}", file=sys.stderr)
    return code


def _remote_run(args, poll_s: float = 1.0) -> int:
    import httpx

    body = {
        "problem": str(Path(args.problem).resolve()) if args.problem else None,
        "strategy": args.strategy, "max_nodes": args.max_nodes, "seed": args.seed, "backend": args.backend,
        "llm": args.llm, "clock_sweep": list(args.clock_sweep), "directive": args.directive, "k": args.k,
        "m": args.m, "expansion_rate": args.expansion_rate, "c": args.c, "binary_feedback": args.binary_feedback,
        "summaries": not args.no_summaries, "landscape": args.landscape, "width": args.width,
        "out_dir": args.out, "resume": args.resume, "fixtures": args.fixtures, "lenient": args.lenient,
        "endpoint": args.endpoint, "model_name": args.model_name, "api_key_env": args.api_key_env,
        "temperature": args.temperature, "max_tokens": args.max_tokens,
    }
    base = args.server.rstrip("/")
    try:
        with httpx.Client(timeout=30) as http:
            resp = http.post(f"{base}/runs", json=body)
            if resp.status_code == 422:
                print(f"error: {resp.json().get('detail')}", file=sys.stderr)
                return EXIT_CONFIG
            resp.raise_for_status()
            run_id = resp.json()["id"]
            print(f"submitted run {run_id}", file=sys.stderr)
            while True:
                status = http.get(f"{base}/runs/{run_id}").json()
                if status["status"] in ("done", "error"):
                    break
                time.sleep(poll_s)
            report = http.get(f"{base}/runs/{run_id}/report")
            if report.status_code == 200:
                print(json.dumps(report.json(), indent=2, sort_keys=True))
            if status.get("error"):
                print(f"error: {status['error']}", file=sys.stderr)
            return int(status["exit_code"])
    except httpx.HTTPError as exc:
        print(f"error: cannot reach {base}: {exc}", file=sys.stderr)
        return EXIT_BACKEND


def cmd_report(args) -> int:
    from .report import write_report

    d = Path(args.run_dir)
    if not (d / "nodes.jsonl").exists():
        print(f"error: {d} is not a run directory (no nodes.jsonl)", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(write_report(d), indent=2, sort_keys=True))
    return 0


def cmd_stg(args) -> int:
    from .stg import StgError, generate_testbench
    from .stg.ports import module_names

    try:
        dut = Path(args.dut).read_text()
        golden = Path(args.golden).read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    top = args.top or next(iter(module_names(dut)), None)
    if top is None:
        print(f"error: no module found in {args.dut}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        bundle = generate_testbench(golden, top, args.clock, seed=args.seed, dut_source=dut,
                                    random_vectors=args.random_vectors)
    except (StgError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        Path(args.output).write_text(bundle.source)
        print(f"wrote {args.output} ({bundle.total_vectors} vectors)", file=sys.stderr)
    else:
        sys.stdout.write(bundle.source)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(Path(args.runs_root)), host=args.host, port=args.port)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "report": cmd_report, "stg": cmd_stg, "serve": cmd_serve}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
