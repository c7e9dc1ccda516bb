"""SEARCH/REPLACE edit scripts.

A reply may hold any number of blocks::

    <<<SEARCH
    exact text from the parent
    ====
    replacement text
    >>>REPLACE

Marker lines must stand alone; anything outside the blocks is ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

SEARCH_MARK = "<<<SEARCH"
DIVIDER = "===="
REPLACE_MARK = ">>>REPLACE"


class EditError(ValueError):
    pass


@dataclass(frozen=True)
class Hunk:
    search: str
    replace: str


@dataclass(frozen=True)
class EditScript:
    hunks: tuple[Hunk, ...] = ()

    def __len__(self):
        return len(self.hunks)


def parse_edit_script(text: str) -> EditScript:
    hunks = []
    state, search, replace = None, [], []
    for lineno, line in enumerate((text or "").splitlines(), 1):
        mark = line.strip()
        if state is None:
            if mark == SEARCH_MARK:
                state, search, replace = "search", [], []
        elif state == "search":
            if mark == DIVIDER:
                state = "replace"
            elif mark in (SEARCH_MARK, REPLACE_MARK):
                raise EditError(f"line {lineno}: expected '{DIVIDER}' before '{mark}'")
            else:
                search.append(line)
        else:
            if mark == REPLACE_MARK:
                if not "".join(search).strip():
                    raise EditError(f"line {lineno}: empty SEARCH block")
                hunks.append(Hunk("\n".join(search), "\n".join(replace)))
                state = None
            elif mark == SEARCH_MARK:
                raise EditError(f"line {lineno}: SEARCH block opened before '{REPLACE_MARK}'")
            else:
                replace.append(line)
    if state is not None:
        raise EditError("unterminated edit block")
    return EditScript(tuple(hunks))


def apply_edits(code: str, script: EditScript) -> str:
    """Apply hunks in order; each SEARCH text must occur exactly once."""
    for i, hunk in enumerate(script.hunks, 1):
        n = code.count(hunk.search)
        if n == 0:
            raise EditError(f"hunk {i}: search text not found:\n{hunk.search}")
        if n > 1:
            raise EditError(f"hunk {i}: ambiguous match ({n} occurrences):\n{hunk.search}")
        code = code.replace(hunk.search, hunk.replace, 1)
    return code
