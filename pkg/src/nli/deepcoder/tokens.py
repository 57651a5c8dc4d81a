"""Whitespace tokenizer over the fixed 153-entry program vocabulary.

Layout (ids are frozen): PAD=0, <BOS>=1, <EOS>=2, then the line separator and
structural tokens, the 15 operations, the 19 lambdas, variables x0-x9, and the
101 integer literals -50..50.
"""

from __future__ import annotations

from .dsl import INT_MAX, INT_MIN, LAMBDAS, OPERATIONS

PAD, BOS, EOS = "PAD", "<BOS>", "<EOS>"

PAD_ID, BOS_ID, EOS_ID = 0, 1, 2


class LexicalError(ValueError):
    def __init__(self, token: str, position: int):
        self.token = token
        self.position = position
        super().__init__(f"unknown token {token!r} at position {position}")


def build_token_table() -> tuple[str, ...]:
    table = [PAD, BOS, EOS, "|"]
    table += ["=", "INPUT", "[", "]"]
    table += [op.name for op in OPERATIONS]
    table += [lam.name for lam in LAMBDAS]
    table += [f"x{i}" for i in range(10)]
    table += [str(v) for v in range(INT_MIN, INT_MAX + 1)]
    return tuple(table)


TOKEN_TABLE: tuple[str, ...] = build_token_table()
TOKEN_TO_ID: dict[str, int] = {tok: i for i, tok in enumerate(TOKEN_TABLE)}
VOCAB_SIZE = len(TOKEN_TABLE)

assert VOCAB_SIZE == 153, f"program vocabulary must have 153 entries, got {VOCAB_SIZE}"
assert TOKEN_TO_ID[PAD] == PAD_ID and TOKEN_TO_ID[BOS] == BOS_ID
assert TOKEN_TO_ID[EOS] == EOS_ID


def tokenize(text: str) -> list[int]:
    """Whitespace-split program text to ids, framed by <BOS>/<EOS>."""
    ids = [BOS_ID]
    for pos, tok in enumerate(text.split()):
        tid = TOKEN_TO_ID.get(tok)
        if tid is None:
            raise LexicalError(tok, pos)
        ids.append(tid)
    ids.append(EOS_ID)
    return ids


def detokenize(ids: list[int]) -> str:
    """Inverse of tokenize up to whitespace normalization; frame and padding
    tokens are dropped."""
    toks = []
    for tid in ids:
        if tid in (PAD_ID, BOS_ID, EOS_ID):
            continue
        if not (0 <= tid < VOCAB_SIZE):
            raise LexicalError(str(tid), len(toks))
        toks.append(TOKEN_TABLE[tid])
    return " ".join(toks)
