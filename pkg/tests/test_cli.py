import json
import socket
import threading
import time

import pytest

from evolve.cli import main

from conftest import ADDER, FIXTURES


def test_run_synthetic_mock(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--backend", "synthetic", "--llm", "mock", "--strategy", "mcts", "--max-nodes", "25",
                 "--seed", "3", "--c", "0.2", "--no-summaries", "--out", str(out)])
    summary = json.loads(capsys.readouterr().out)
    assert code in (0, 2)
    assert summary["node_count"] <= 25
    assert (out / "nodes.jsonl").exists() and (out / "tree.json").exists()


def test_run_igr_and_report(tmp_path, capsys):
    out = tmp_path / "igr"
    code = main(["run", "--backend", "synthetic", "--llm", "mock", "--strategy", "igr", "--k", "4", "--m", "3",
                 "--max-nodes", "12", "--landscape", "ppa", "--out", str(out)])
    assert code == 0
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["node_count"] == 12 and report["nodes_to_solve"] is None


def test_clock_sweep_flag(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(["run", "--backend", "synthetic", "--llm", "mock", "--landscape", "ppa", "--max-nodes", "5",
                 "--clock-sweep", "3,4,5,6,7", "--directive", "opt-area", "--out", str(out)])
    assert code == 0
    sweep = json.loads(capsys.readouterr().out)
    assert len(sweep) == 5
    assert json.loads((out / "clk-5ns" / "run.json").read_text())["problem"]["directive"] == "opt-area"


def test_config_errors_exit_3(tmp_path, capsys):
    assert main(["run", "--backend", "open-source", "--llm", "mock", "--out", str(tmp_path / "x")]) == 3
    assert main(["run", "--backend", "synthetic", "--llm", "mock", "--max-nodes", "0",
                 "--out", str(tmp_path / "y")]) == 3
    assert main(["run", "--problem", str(tmp_path / "nope"), "--llm", "mock", "--out", str(tmp_path / "z")]) == 3
    assert main(["report", str(tmp_path)]) == 3


def test_remote_llm_auth_failure_exits_3(tmp_path, monkeypatch, capsys):
    import httpx

    from evolve.llm import client

    real = httpx.Client

    def fake_client(*a, **kw):
        kw["transport"] = httpx.MockTransport(lambda r: httpx.Response(401, text="denied"))
        return real(*a, **kw)

    monkeypatch.setattr(client.httpx, "Client", fake_client)
    out = tmp_path / "auth"
    code = main(["run", "--backend", "synthetic", "--llm", "remote", "--endpoint", "http://llm.invalid/v1",
                 "--out", str(out)])
    assert code == 3
    assert json.loads((out / "summary.json").read_text())["node_count"] == 0


def test_stg_command(tmp_path, capsys):
    target = tmp_path / "tb.v"
    code = main(["stg", str(ADDER / "good.v"), "--golden", str(ADDER / "golden.v"), "--seed", "2",
                 "-o", str(target)])
    assert code == 0
    src = target.read_text()
    assert "adder4 stg_dut" in src and "adder4_ref stg_ref" in src and "seed=2" in src
    assert main(["stg", str(ADDER / "good.v"), "--golden", str(ADDER / "golden.v"), "--seed", "2"]) == 0
    assert capsys.readouterr().out == src


def test_stg_command_port_mismatch(tmp_path, capsys):
    dut = tmp_path / "dut.v"
    dut.write_text("module adder4(input [3:0] a, output y); endmodule\n")
    assert main(["stg", str(dut), "--golden", str(ADDER / "golden.v")]) == 3
    assert "port mismatch" in capsys.readouterr().err


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_thin_client_against_live_service(tmp_path, capsys):
    import uvicorn

    from evolve.service import create_app

    port = _free_port()
    server = uvicorn.Server(uvicorn.Config(create_app(tmp_path / "runs"), host="127.0.0.1", port=port,
                                           log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        for _ in range(100):
            if server.started:
                break
            time.sleep(0.05)
        out = tmp_path / "remote-run"
        code = main(["run", "--server", f"http://127.0.0.1:{port}", "--backend", "synthetic", "--llm", "mock",
                     "--max-nodes", "10", "--no-summaries", "--out", str(out)])
        assert code in (0, 2)
        report = json.loads(capsys.readouterr().out)
        assert report["node_count"] == len((out / "nodes.jsonl").read_text().splitlines())
    finally:
        server.should_exit = True
        thread.join(timeout=10)


def test_thin_client_unreachable_server(capsys):
    port = _free_port()
    assert main(["run", "--server", f"http://127.0.0.1:{port}", "--backend", "synthetic", "--llm", "mock"]) == 4
