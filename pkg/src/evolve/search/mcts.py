"""Monte Carlo tree search over candidate designs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..core import Node
from ..llm.prompts import initial_prompt, refine_prompt

DEFAULT_C = 1.4
DEFAULT_EXPANSION_RATE = 3


@dataclass
class TreeNode:
    node: Node
    visits: int = 0
    quality: float = 0.0
    children: list[str] = field(default_factory=list)
    depth: int = 0
    parent: Optional[str] = None

    @property
    def id(self) -> str:
        return self.node.id


def uct_score(parent: TreeNode, child: TreeNode, c: float = DEFAULT_C) -> float:
    if child.visits == 0:
        return math.inf
    return child.quality / child.visits + c * math.sqrt(max(1, parent.visits)) / (1 + child.visits)


class MctsTree:
    """Tree with visit counts C and quality sums Q per node.

    Every node, the root included, starts at C=0, Q=0. Each expansion adds one
    visit and the new score to the expanded node and all of its ancestors, so
    the root's C is exactly the number of expansions performed.
    """

    def __init__(self, root: Node, c: float = DEFAULT_C, expansion_rate: int = DEFAULT_EXPANSION_RATE):
        if expansion_rate < 1:
            raise ValueError("expansion rate must be at least 1")
        self.c = c
        self.expansion_rate = expansion_rate
        self.root_id = root.id
        self.nodes: dict[str, TreeNode] = {root.id: TreeNode(root, depth=0)}
        self.backprops = 0

    @property
    def root(self) -> TreeNode:
        return self.nodes[self.root_id]

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, node_id: str) -> TreeNode:
        return self.nodes[node_id]

    def select_leaf(self) -> TreeNode:
        """Descend by UCT until a node that can still take children.

        Ties go to the earliest-inserted child.
        """
        cur = self.root
        while len(cur.children) >= self.expansion_rate:
            best, best_score = None, -math.inf
            for cid in cur.children:
                s = uct_score(cur, self.nodes[cid], self.c)
                if best is None or s > best_score:
                    best, best_score = self.nodes[cid], s
            cur = best
        return cur

    def path_to_root(self, node_id: str) -> list[TreeNode]:
        out = []
        cur: Optional[str] = node_id
        while cur is not None:
            tn = self.nodes[cur]
            out.append(tn)
            cur = tn.parent
        return out

    def expand_and_backprop(self, leaf: TreeNode, new_node: Node) -> TreeNode:
        if leaf.id not in self.nodes or self.nodes[leaf.id] is not leaf:
            raise KeyError(f"{leaf.id} is not in this tree")
        if len(leaf.children) >= self.expansion_rate:
            raise ValueError(f"{leaf.id} already has {len(leaf.children)} children")
        if new_node.id in self.nodes:
            raise ValueError(f"duplicate node id {new_node.id}")
        child = TreeNode(new_node, depth=leaf.depth + 1, parent=leaf.id)
        self.nodes[new_node.id] = child
        leaf.children.append(new_node.id)
        for anc in self.path_to_root(leaf.id):
            anc.visits += 1
            anc.quality += new_node.score
        self.backprops += 1
        return child

    def to_json(self) -> dict:
        return {
            "c": self.c,
            "expansion_rate": self.expansion_rate,
            "root": self.root_id,
            "backprops": self.backprops,
            "nodes": [
                {"id": tn.id, "parent": tn.parent, "C": tn.visits, "Q": tn.quality, "score": tn.node.score,
                 "depth": tn.depth, "children": list(tn.children)}
                for tn in self.nodes.values()
            ],
        }

    @classmethod
    def replay(cls, nodes: list[Node], c: float = DEFAULT_C, expansion_rate: int = DEFAULT_EXPANSION_RATE) -> "MctsTree":
        """Rebuild a tree from an archive in creation order (used on resume)."""
        tree = cls(nodes[0], c, expansion_rate)
        for n in nodes[1:]:
            tree.expand_and_backprop(tree.nodes[n.parent_id], n)
        return tree


class MctsStrategy:
    name = "mcts"

    def __init__(self, c: float = DEFAULT_C, expansion_rate: int = DEFAULT_EXPANSION_RATE):
        self.c = c
        self.expansion_rate = expansion_rate
        self.tree: Optional[MctsTree] = None

    def run(self, engine) -> None:
        if engine.nodes:
            self.tree = MctsTree.replay(engine.nodes, self.c, self.expansion_rate)
        elif not engine.should_stop():
            root = engine.generate(initial_prompt(engine.spec, engine.budget_info()), None)
            self.tree = MctsTree(root, self.c, self.expansion_rate)
        while self.tree is not None and not engine.should_stop():
            leaf = self.tree.select_leaf()
            parent = leaf.node
            bundle = refine_prompt(engine.spec, parent.code, parent.score, parent.feedback.render(),
                                   engine.budget_info())
            child = engine.generate(bundle, parent)
            self.tree.expand_and_backprop(leaf, child)

    def snapshot(self) -> Optional[dict]:
        return self.tree.to_json() if self.tree is not None else None
