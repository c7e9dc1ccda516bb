"""Run summaries: best node, nodes-to-first-solve, token totals, scaling curve."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional


def read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    out = []
    for line in path.read_text().splitlines():
        if line.strip():
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError:
                pass
    return out


def nodes_to_solve(nodes: list[dict], is_gen: bool = True) -> Optional[int]:
    """1-based index of the first node scoring 1.0 on a generation task."""
    if not is_gen:
        return None
    for i, n in enumerate(nodes, 1):
        if n["score"] >= 1.0:
            return i
    return None


def summarize(nodes: list[dict], usage: list[dict], is_gen: bool = True) -> dict:
    best = None
    for n in nodes:
        if best is None or n["score"] > best["score"]:
            best = n
    prompt = sum(u.get("prompt_tokens", 0) for u in usage)
    completion = sum(u.get("completion_tokens", 0) for u in usage)
    return {
        "node_count": len(nodes),
        "best_score": best["score"] if best else None,
        "best_node_id": best["id"] if best else None,
        "nodes_to_solve": nodes_to_solve(nodes, is_gen),
        "llm_calls": len(usage),
        "tokens": {"prompt": prompt, "completion": completion, "total": prompt + completion},
    }


def scaling_csv(nodes: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node_index", "node_id", "score", "best_so_far"])
    running = None
    for i, n in enumerate(nodes, 1):
        running = n["score"] if running is None else max(running, n["score"])
        w.writerow([i, n["id"], repr(float(n["score"])), repr(float(running))])
    return buf.getvalue()


def write_report(run_dir) -> dict:
    """(Re)write ``summary.json`` and ``scaling.csv`` from a run directory."""
    d = Path(run_dir)
    nodes = read_jsonl(d / "nodes.jsonl")
    usage = read_jsonl(d / "usage.jsonl")
    is_gen = True
    meta_path = d / "run.json"
    if meta_path.exists():
        is_gen = json.loads(meta_path.read_text()).get("problem", {}).get("task", "gen") == "gen"
    summary = summarize(nodes, usage, is_gen)
    (d / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (d / "scaling.csv").write_text(scaling_csv(nodes))
    return summary
