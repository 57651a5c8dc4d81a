"""Parser from token sequences to checked straight-line programs.

Checks variable scoping (use before definition), operation arity, lambda
presence and family, and argument types. Integer literals are accepted where
an int argument is expected; bracketed literals form constant lists.
"""

from __future__ import annotations

from .dsl import (
    DSLProgram,
    IntLit,
    LAMBDA_KINDS,
    LAMBDAS_BY_NAME,
    ListLit,
    OPERATIONS_BY_NAME,
    Statement,
    VarRef,
)
from .tokens import BOS_ID, EOS_ID, PAD_ID, TOKEN_TABLE, VOCAB_SIZE


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _is_int_token(tok: str) -> bool:
    try:
        int(tok)
        return True
    except ValueError:
        return False


def parse(tokens: list[int] | list[str] | str) -> DSLProgram:
    """Parse ids, token strings, or raw program text into a DSLProgram."""
    if isinstance(tokens, str):
        toks = tokens.split()
    elif tokens and isinstance(tokens[0], int):
        toks = []
        for tid in tokens:
            if tid in (BOS_ID, EOS_ID, PAD_ID):
                continue
            if not (0 <= tid < VOCAB_SIZE):
                raise ParseError(f"token id {tid} out of range", 1)
            toks.append(TOKEN_TABLE[tid])
    else:
        toks = list(tokens)

    lines: list[list[str]] = [[]]
    for tok in toks:
        if tok == "|":
            lines.append([])
        else:
            lines[-1].append(tok)

    statements: list[Statement] = []
    var_types: dict[int, str] = {}
    inputs_done = False

    for lineno, line in enumerate(lines, start=1):
        if not line:
            raise ParseError("empty line", lineno)
        if len(line) < 3 or not line[0].startswith("x") or line[1] != "=":
            raise ParseError(f"expected 'xN = ...', got {' '.join(line)!r}", lineno)
        try:
            var = int(line[0][1:])
        except ValueError:
            raise ParseError(f"bad variable name {line[0]!r}", lineno) from None
        if var in var_types:
            raise ParseError(f"variable x{var} rebound", lineno)
        rhs = line[2:]

        if rhs == ["INPUT"]:
            if inputs_done:
                raise ParseError("INPUT after an operation line", lineno)
            var_types[var] = "list"
            statements.append(Statement(var=var, op="INPUT"))
            continue
        inputs_done = True

        op_name = rhs[0]
        spec = OPERATIONS_BY_NAME.get(op_name)
        if spec is None:
            raise ParseError(f"unknown operation {op_name!r}", lineno)
        rest = rhs[1:]

        lam = None
        if spec.lambda_kind is not None:
            if not rest or rest[0] not in LAMBDAS_BY_NAME:
                raise ParseError(f"{op_name} requires a lambda argument", lineno)
            lam = LAMBDAS_BY_NAME[rest[0]]
            if lam not in LAMBDA_KINDS[spec.lambda_kind]:
                raise ParseError(
                    f"lambda {lam.name} not admissible for {op_name}", lineno
                )
            rest = rest[1:]
        elif rest and rest[0] in LAMBDAS_BY_NAME:
            raise ParseError(f"{op_name} takes no lambda", lineno)

        args, rest = _parse_args(rest, lineno)
        if len(args) != len(spec.arg_types):
            raise ParseError(
                f"{op_name} expects {len(spec.arg_types)} arguments, got {len(args)}",
                lineno,
            )
        for arg, want in zip(args, spec.arg_types):
            got = _arg_type(arg, var_types, lineno)
            if got != want:
                raise ParseError(
                    f"{op_name} argument type mismatch: expected {want}, got {got}",
                    lineno,
                )
        var_types[var] = spec.return_type
        statements.append(Statement(var=var, op=op_name, lam=lam, args=tuple(args)))

    if not statements:
        raise ParseError("empty program", 1)
    if not any(s.op == "INPUT" for s in statements):
        raise ParseError("program has no INPUT line", 1)
    if statements[-1].op == "INPUT":
        raise ParseError("program ends on an INPUT line", len(lines))
    return DSLProgram(statements=tuple(statements))


def _parse_args(rest: list[str], lineno: int):
    args = []
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok.startswith("x") and _is_int_token(tok[1:]):
            args.append(VarRef(int(tok[1:])))
            i += 1
        elif _is_int_token(tok):
            args.append(IntLit(int(tok)))
            i += 1
        elif tok == "[":
            j = i + 1
            vals = []
            while j < len(rest) and rest[j] != "]":
                if not _is_int_token(rest[j]):
                    raise ParseError(f"bad list literal element {rest[j]!r}", lineno)
                vals.append(int(rest[j]))
                j += 1
            if j >= len(rest):
                raise ParseError("unterminated list literal", lineno)
            args.append(ListLit(tuple(vals)))
            i = j + 1
        else:
            raise ParseError(f"unexpected token {tok!r}", lineno)
    return args, []


def _arg_type(arg, var_types: dict[int, str], lineno: int) -> str:
    if isinstance(arg, VarRef):
        if arg.index not in var_types:
            raise ParseError(f"use of x{arg.index} before definition", lineno)
        return var_types[arg.index]
    if isinstance(arg, IntLit):
        return "int"
    return "list"
