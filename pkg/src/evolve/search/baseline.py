"""Uniform-random parent selection, the no-search control for MCTS."""

from __future__ import annotations

import random
from typing import Optional

from ..llm.prompts import initial_prompt, refine_prompt


class RandomParentStrategy:
    """Extends a parent drawn uniformly from every node evaluated so far."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def run(self, engine) -> None:
        if not engine.nodes and not engine.should_stop():
            engine.generate(initial_prompt(engine.spec, engine.budget_info()), None)
        while not engine.should_stop():
            parent = self.rng.choice(engine.nodes)
            bundle = refine_prompt(engine.spec, parent.code, parent.score, parent.feedback.render(),
                                   engine.budget_info())
            engine.generate(bundle, parent)

    def snapshot(self) -> Optional[dict]:
        return None
