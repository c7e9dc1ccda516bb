"""Parent-selection strategies."""

from .baseline import RandomParentStrategy
from .edits import EditError, EditScript, Hunk, apply_edits, parse_edit_script
from .igr import Chain, ChainStatus, Idea, IgrStrategy, generate_ideas
from .mcts import MctsStrategy, MctsTree, TreeNode, uct_score

__all__ = [
    "RandomParentStrategy", "EditError", "EditScript", "Hunk", "apply_edits", "parse_edit_script", "Chain",
    "ChainStatus", "Idea", "IgrStrategy", "generate_ideas", "MctsStrategy", "MctsTree", "TreeNode", "uct_score",
]
