"""List-manipulation DSL: values, lambdas, operations, and the interpreter.

Programs are straight-line assignment sequences. Each variable binds either an
input or the result of one operation over previously bound variables. Values
are integers or integer lists; every intermediate must stay inside the
tokenizable range [-50, 50] and the configured maximum list length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

INT_MIN, INT_MAX = -50, 50
DEFAULT_MAX_LIST_LEN = 20

Value = Union[int, list]


class ExecutionError(ValueError):
    """Raised when a partial operation is applied outside its domain."""


class ValueRangeError(ExecutionError):
    """Intermediate value left the tokenizable range or length budget."""


@dataclass(frozen=True)
class LambdaFn:
    """Named function argument for the higher-order operations.

    ``arity`` is 1 for int->int and int->bool lambdas, 2 for int,int->int.
    """

    name: str
    arity: int
    fn: Callable

    def __call__(self, *args):
        return self.fn(*args)


def _trunc_div(a: int, b: int) -> int:
    # integer division truncating toward zero
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


LAMBDAS: tuple[LambdaFn, ...] = (
    LambdaFn("(+1)", 1, lambda v: v + 1),
    LambdaFn("(-1)", 1, lambda v: v - 1),
    LambdaFn("(*2)", 1, lambda v: v * 2),
    LambdaFn("(/2)", 1, lambda v: _trunc_div(v, 2)),
    LambdaFn("(*-1)", 1, lambda v: -v),
    LambdaFn("(**2)", 1, lambda v: v * v),
    LambdaFn("(*3)", 1, lambda v: v * 3),
    LambdaFn("(/3)", 1, lambda v: _trunc_div(v, 3)),
    LambdaFn("(*4)", 1, lambda v: v * 4),
    LambdaFn("(/4)", 1, lambda v: _trunc_div(v, 4)),
    LambdaFn("(>0)", 1, lambda v: v > 0),
    LambdaFn("(<0)", 1, lambda v: v < 0),
    LambdaFn("(even)", 1, lambda v: v % 2 == 0),
    LambdaFn("(odd)", 1, lambda v: v % 2 != 0),
    LambdaFn("(+)", 2, lambda a, b: a + b),
    LambdaFn("(-)", 2, lambda a, b: a - b),
    LambdaFn("(*)", 2, lambda a, b: a * b),
    LambdaFn("(min)", 2, min),
    LambdaFn("(max)", 2, max),
)

LAMBDAS_BY_NAME = {lam.name: lam for lam in LAMBDAS}

INT_TO_INT = tuple(l for l in LAMBDAS if l.arity == 1 and l.name not in ("(>0)", "(<0)", "(even)", "(odd)"))
INT_TO_BOOL = tuple(LAMBDAS_BY_NAME[n] for n in ("(>0)", "(<0)", "(even)", "(odd)"))
INT_INT_TO_INT = tuple(l for l in LAMBDAS if l.arity == 2)


def comparison(op: str, c: int) -> LambdaFn:
    """Ad-hoc comparison predicate (e.g. greater-than-3) for direct AST use.

    Not part of the token vocabulary; the sampler never emits these.
    """
    fns = {
        ">": lambda v: v > c,
        "<": lambda v: v < c,
        ">=": lambda v: v >= c,
        "<=": lambda v: v <= c,
    }
    return LambdaFn(f"({op}{c})", 1, fns[op])


# operation signatures: argument types are "int" or "list"; "lambda_kind" names
# the admissible lambda family for higher-order operations
@dataclass(frozen=True)
class OpSpec:
    name: str
    arg_types: tuple[str, ...]
    return_type: str
    lambda_kind: str | None  # None, "int_int", "int_bool", "int_int_int"
    fn: Callable


def _head(l):
    if not l:
        raise ExecutionError("Head of empty list")
    return l[0]


def _last(l):
    if not l:
        raise ExecutionError("Last of empty list")
    return l[-1]


def _access(n, l):
    if not (0 <= n < len(l)):
        raise ExecutionError(f"Access index {n} out of bounds for length {len(l)}")
    return l[n]


def _minimum(l):
    if not l:
        raise ExecutionError("Minimum of empty list")
    return min(l)


def _maximum(l):
    if not l:
        raise ExecutionError("Maximum of empty list")
    return max(l)


def _scanl1(f, l):
    if not l:
        return []
    out = [l[0]]
    for v in l[1:]:
        out.append(f(out[-1], v))
    return out


OPERATIONS: tuple[OpSpec, ...] = (
    OpSpec("Head", ("list",), "int", None, _head),
    OpSpec("Last", ("list",), "int", None, _last),
    OpSpec("Take", ("int", "list"), "list", None, lambda n, l: l[: max(n, 0)]),
    OpSpec("Drop", ("int", "list"), "list", None, lambda n, l: l[max(n, 0) :]),
    OpSpec("Access", ("int", "list"), "int", None, _access),
    OpSpec("Minimum", ("list",), "int", None, _minimum),
    OpSpec("Maximum", ("list",), "int", None, _maximum),
    OpSpec("Reverse", ("list",), "list", None, lambda l: l[::-1]),
    OpSpec("Sort", ("list",), "list", None, sorted),
    OpSpec("Sum", ("list",), "int", None, sum),
    OpSpec("Map", ("list",), "list", "int_int", lambda f, l: [f(v) for v in l]),
    OpSpec("Filter", ("list",), "list", "int_bool", lambda f, l: [v for v in l if f(v)]),
    OpSpec("Count", ("list",), "int", "int_bool", lambda f, l: sum(1 for v in l if f(v))),
    OpSpec(
        "ZipWith",
        ("list", "list"),
        "list",
        "int_int_int",
        lambda f, a, b: [f(u, v) for u, v in zip(a, b)],
    ),
    OpSpec("Scanl1", ("list",), "list", "int_int_int", _scanl1),
)

OPERATIONS_BY_NAME = {op.name: op for op in OPERATIONS}

FIRST_ORDER_OPS = tuple(op.name for op in OPERATIONS if op.lambda_kind is None)
HIGHER_ORDER_OPS = tuple(op.name for op in OPERATIONS if op.lambda_kind is not None)

LAMBDA_KINDS = {
    "int_int": INT_TO_INT,
    "int_bool": INT_TO_BOOL,
    "int_int_int": INT_INT_TO_INT,
}


# ---------------------------------------------------------------------------
# program AST


@dataclass(frozen=True)
class VarRef:
    index: int


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class ListLit:
    values: tuple[int, ...]


Arg = Union[VarRef, IntLit, ListLit]


@dataclass(frozen=True)
class Statement:
    """One assignment: variable := INPUT, or variable := op(args)."""

    var: int
    op: str  # operation name, or "INPUT"
    lam: LambdaFn | None = None
    args: tuple[Arg, ...] = ()


@dataclass(frozen=True)
class DSLProgram:
    statements: tuple[Statement, ...]

    @property
    def num_inputs(self) -> int:
        return sum(1 for s in self.statements if s.op == "INPUT")

    @property
    def num_op_lines(self) -> int:
        return sum(1 for s in self.statements if s.op != "INPUT")

    @property
    def output_var(self) -> int:
        return self.statements[-1].var

    def operation_names(self) -> list[str]:
        return [s.op for s in self.statements if s.op != "INPUT"]

    def to_text(self) -> str:
        parts = []
        for s in self.statements:
            if s.op == "INPUT":
                parts.append(f"x{s.var} = INPUT")
                continue
            toks = [f"x{s.var}", "=", s.op]
            if s.lam is not None:
                toks.append(s.lam.name)
            for a in s.args:
                if isinstance(a, VarRef):
                    toks.append(f"x{a.index}")
                elif isinstance(a, IntLit):
                    toks.append(str(a.value))
                else:
                    toks.append("[ " + " ".join(str(v) for v in a.values) + " ]")
            parts.append(" ".join(toks))
        return " | ".join(parts)


def check_value(v: Value, max_list_len: int = DEFAULT_MAX_LIST_LEN) -> Value:
    if isinstance(v, bool):
        raise ExecutionError("boolean is not a first-class value")
    if isinstance(v, int):
        if not (INT_MIN <= v <= INT_MAX):
            raise ValueRangeError(f"integer {v} outside [{INT_MIN}, {INT_MAX}]")
        return v
    if isinstance(v, list):
        if len(v) > max_list_len:
            raise ValueRangeError(f"list length {len(v)} exceeds {max_list_len}")
        for e in v:
            if not (INT_MIN <= e <= INT_MAX):
                raise ValueRangeError(f"element {e} outside [{INT_MIN}, {INT_MAX}]")
        return v
    raise ExecutionError(f"unsupported value type {type(v).__name__}")


def execute(
    prog: DSLProgram,
    inputs: Value | Sequence[Value],
    max_list_len: int = DEFAULT_MAX_LIST_LEN,
    trace: list | None = None,
) -> Value:
    """Run a program on its inputs; returns the last variable's value.

    ``inputs`` may be a single value or a sequence matching the program's
    INPUT statements in order. Every intermediate is range-checked. When
    ``trace`` is given, each statement's value is appended to it.
    """
    if isinstance(inputs, (int,)) or (
        isinstance(inputs, list) and all(isinstance(e, int) for e in inputs)
    ):
        inputs = [inputs]
    inputs = list(inputs)
    if len(inputs) != prog.num_inputs:
        raise ExecutionError(
            f"program expects {prog.num_inputs} inputs, got {len(inputs)}"
        )
    env: dict[int, Value] = {}
    input_iter = iter(inputs)

    def resolve(a: Arg) -> Value:
        if isinstance(a, VarRef):
            return env[a.index]
        if isinstance(a, IntLit):
            return a.value
        return list(a.values)

    for st in prog.statements:
        if st.op == "INPUT":
            val = check_value(next(input_iter), max_list_len)
        else:
            spec = OPERATIONS_BY_NAME[st.op]
            args = [resolve(a) for a in st.args]
            if spec.lambda_kind is not None:
                val = spec.fn(st.lam, *args)
            else:
                val = spec.fn(*args)
            val = check_value(val, max_list_len)
        env[st.var] = val
        if trace is not None:
            trace.append(val)
    return env[prog.output_var]
