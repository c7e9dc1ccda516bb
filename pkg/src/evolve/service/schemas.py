from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    problem: Optional[str] = Field(None, description="problem directory on the server")
    strategy: Literal["mcts", "igr", "random"] = "mcts"
    max_nodes: Optional[int] = Field(None, ge=1)
    seed: int = 0
    backend: Literal["open-source", "synthetic"] = "open-source"
    llm: Literal["remote", "mock"] = "mock"
    clock_sweep: list[float] = Field(default_factory=list)
    directive: Optional[Literal["balanced", "opt-area", "opt-cycle"]] = None
    k: int = Field(60, ge=1)
    m: int = Field(5, ge=1)
    expansion_rate: int = Field(3, ge=1)
    c: float = Field(1.4, ge=0)
    binary_feedback: bool = False
    summaries: bool = True
    landscape: Literal["hamming", "ppa"] = "hamming"
    width: int = Field(8, ge=2)
    out_dir: Optional[str] = None
    resume: bool = False
    fixtures: Optional[str] = None
    lenient: bool = False
    endpoint: Optional[str] = None
    model_name: Optional[str] = None
    api_key_env: Optional[str] = None
    temperature: Optional[float] = None
    max_tokens: Optional[int] = None


class RunStatus(BaseModel):
    id: str
    status: Literal["queued", "running", "done", "error"]
    out_dir: str
    exit_code: Optional[int] = None
    error: Optional[str] = None


class StgRequest(BaseModel):
    dut: Optional[str] = Field(None, description="candidate source; ports come from the reference if omitted")
    golden: str
    top_module: str
    clock_period_ns: float = Field(10.0, gt=0)
    seed: int = 0
    random_vectors: int = Field(16, ge=0)


class PortInfo(BaseModel):
    name: str
    direction: str
    width: int
    category: str


class StgResponse(BaseModel):
    testbench: str
    total_vectors: int
    ports: list[PortInfo]
