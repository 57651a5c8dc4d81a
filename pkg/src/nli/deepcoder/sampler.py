"""Constraint-checked task sampler for the five compositional splits.

Programs are chains: each operation line consumes the most recent list value,
so every step is a transformation of an intermediate result. A candidate task
is rejected when execution fails on any sampled input, any value leaves the
tokenizable range, or the program is indistinguishable from the identity on
all sampled pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tasks import (
    SPLIT_TEST_ID,
    SPLIT_TEST_OOD,
    SPLIT_TRAIN,
    DatasetHeader,
    IOPair,
    TaskRecord,
)
from .dsl import (
    DSLProgram,
    ExecutionError,
    FIRST_ORDER_OPS,
    IntLit,
    LAMBDA_KINDS,
    LAMBDAS_BY_NAME,
    OPERATIONS_BY_NAME,
    Statement,
    VarRef,
    execute,
)

SPLIT_NAMES = (
    "length",
    "compose-different-concepts",
    "switch-concept-order",
    "compose-new-operation",
    "add-operation-functionality",
)

# concept groups: all first-order operations plus Map, versus the remaining
# higher-order operations
GROUP_A = tuple(FIRST_ORDER_OPS) + ("Map",)
GROUP_B = ("Filter", "Count", "ZipWith", "Scanl1")

# I/O symbol encoding: PAD, SEP, then the 101 integers
IO_PAD, IO_SEP = 0, 1
V_IO = 103
L_MAX = 20


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class DeepCoderConfig:
    spec_size: int = 3
    max_list_len: int = 20
    input_len_range: tuple[int, int] = (1, 8)
    input_value_range: tuple[int, int] = (-10, 10)
    max_program_tries: int = 200
    max_input_tries: int = 30


def encode_value(value, l_max: int = L_MAX) -> tuple[int, ...]:
    """Map an int or int list to the padded neural I/O token encoding."""
    if isinstance(value, int):
        value = [value]
    toks = [v + 52 for v in value]
    if len(toks) > l_max:
        raise ValueError(f"encoded value length {len(toks)} exceeds l_max")
    return tuple(toks + [IO_PAD] * (l_max - len(toks)))


def encode_inputs(inputs: list, l_max: int = L_MAX) -> tuple[int, ...]:
    """Concatenate the (1 or 2) input lists with a separator, then pad."""
    toks: list[int] = []
    for i, value in enumerate(inputs):
        if i > 0:
            toks.append(IO_SEP)
        toks.extend(v + 52 for v in value)
    if len(toks) > l_max:
        raise ValueError(f"encoded inputs length {len(toks)} exceeds l_max")
    return tuple(toks + [IO_PAD] * (l_max - len(toks)))


def dataset_header() -> DatasetHeader:
    return DatasetHeader(l_max=L_MAX, v_io=V_IO, alphabet="pad,sep,int[-50,50]")


def _program_length(split: str, is_train: bool, rng) -> int:
    if split == "length":
        return int(rng.integers(1, 5)) if is_train else 5
    if split == "compose-new-operation" and not is_train:
        return int(rng.integers(2, 5))
    if split in ("compose-different-concepts", "switch-concept-order"):
        lo = 1 if is_train and split == "compose-different-concepts" else 2
        return int(rng.integers(lo, 5))
    return int(rng.integers(1, 5))


def _op_pool(split: str, is_train: bool, rng) -> list[str] | None:
    """The op pool for splits that restrict by group; None means per-op rules."""
    if split == "compose-different-concepts":
        if is_train:
            return list(GROUP_A) if rng.random() < 0.5 else list(GROUP_B)
        return None
    if split == "compose-new-operation" and is_train:
        return [op for op in OPERATIONS_BY_NAME if op != "Scanl1"]
    return None


def _choose(rng, seq):
    return seq[int(rng.integers(0, len(seq)))]


def _sample_lambda(op_name: str, split: str, is_train: bool, rng):
    spec = OPERATIONS_BY_NAME[op_name]
    if spec.lambda_kind is None:
        return None
    pool = list(LAMBDA_KINDS[spec.lambda_kind])
    if op_name == "Scanl1" and split == "add-operation-functionality":
        if is_train:
            pool = [LAMBDAS_BY_NAME["(-)"], LAMBDAS_BY_NAME["(min)"]]
        else:
            pool = [LAMBDAS_BY_NAME["(+)"], LAMBDAS_BY_NAME["(*)"], LAMBDAS_BY_NAME["(max)"]]
    return _choose(rng, pool)


def _sample_ops(split: str, is_train: bool, rng, iso_branch: bool | None = None) -> list[str]:
    n = _program_length(split, is_train, rng)
    if split == "compose-new-operation":
        if is_train:
            # the isolation/exclusion branch is decided once per record so the
            # isolation fraction is exact regardless of rejection asymmetry
            if iso_branch if iso_branch is not None else rng.random() < 0.25:
                return ["Scanl1"]
            pool = [op for op in OPERATIONS_BY_NAME if op != "Scanl1"]
            return [_choose(rng, pool) for _ in range(int(rng.integers(1, 5)))]
        # test: Scanl1 composed with at least one other operation
        pool = list(OPERATIONS_BY_NAME)
        ops = [_choose(rng, pool) for _ in range(n)]
        ops[int(rng.integers(0, n))] = "Scanl1"
        if all(op == "Scanl1" for op in ops):
            other = [op for op in pool if op != "Scanl1"]
            ops[0] = _choose(rng, other)
        return ops
    if split == "compose-different-concepts":
        pool = _op_pool(split, is_train, rng)
        if is_train:
            return [_choose(rng, pool) for _ in range(n)]
        # test: mix across groups, at least one op from each
        ops = [_choose(rng, list(GROUP_A) + list(GROUP_B)) for _ in range(n)]
        i, j = 0, int(rng.integers(1, n))
        ops[i] = _choose(rng, list(GROUP_A))
        ops[j] = _choose(rng, list(GROUP_B))
        return ops
    if split == "switch-concept-order":
        n = max(n, 2)
        n_a = int(rng.integers(1, n))
        a_part = [_choose(rng, list(GROUP_A)) for _ in range(n_a)]
        b_part = [_choose(rng, list(GROUP_B)) for _ in range(n - n_a)]
        return a_part + b_part if is_train else b_part + a_part
    if split == "add-operation-functionality":
        ops = [_choose(rng, list(OPERATIONS_BY_NAME)) for _ in range(n)]
        if not is_train and "Scanl1" not in ops:
            ops[int(rng.integers(0, n))] = "Scanl1"
        if is_train and split == "add-operation-functionality":
            return ops
        return ops
    # length split
    return [_choose(rng, list(OPERATIONS_BY_NAME)) for _ in range(n)]


def _build_program(split: str, is_train: bool, rng, iso_branch: bool | None = None) -> DSLProgram | None:
    """Assemble a chain program over the sampled op sequence; None if the op
    sequence cannot be realized (e.g. needs an int that never appears)."""
    ops = _sample_ops(split, is_train, rng, iso_branch)
    use_two_inputs = "ZipWith" in ops and rng.random() < 0.5
    statements: list[Statement] = [Statement(var=0, op="INPUT")]
    if use_two_inputs:
        statements.append(Statement(var=1, op="INPUT"))
    next_var = len(statements)
    var_types = {i: "list" for i in range(next_var)}
    last_list = 0
    int_vars: list[int] = []
    zipwith_used_second_input = False

    for op_name in ops:
        if next_var > 9:
            return None
        spec = OPERATIONS_BY_NAME[op_name]
        lam = _sample_lambda(op_name, split, is_train, rng)
        args: list = []
        for want in spec.arg_types:
            if want == "int":
                if int_vars and rng.random() < 0.5:
                    args.append(VarRef(_choose(rng, int_vars)))
                else:
                    hi = 8 if op_name != "Access" else 7
                    args.append(IntLit(int(rng.integers(0, hi + 1))))
            else:
                args.append(VarRef(last_list))
        if op_name == "ZipWith":
            # second list argument: another input or an earlier list variable
            candidates = [v for v, t in var_types.items() if t == "list" and v != last_list]
            if use_two_inputs and not zipwith_used_second_input:
                args[1] = VarRef(1)
                zipwith_used_second_input = True
            elif candidates:
                args[1] = VarRef(_choose(rng, candidates))
        statements.append(Statement(var=next_var, op=op_name, lam=lam, args=tuple(args)))
        var_types[next_var] = spec.return_type
        if spec.return_type == "list":
            last_list = next_var
        else:
            int_vars.append(next_var)
        next_var += 1

    if use_two_inputs and not zipwith_used_second_input:
        return None
    return DSLProgram(statements=tuple(statements))


def _sample_inputs(prog: DSLProgram, cfg: DeepCoderConfig, rng) -> list:
    lo, hi = cfg.input_len_range
    vlo, vhi = cfg.input_value_range
    out = []
    for _ in range(prog.num_inputs):
        n = int(rng.integers(lo, hi + 1))
        out.append([int(v) for v in rng.integers(vlo, vhi + 1, size=n)])
    return out


def _satisfies_split(prog: DSLProgram, split: str, is_train: bool) -> bool:
    ops = prog.operation_names()
    if split == "length":
        return (1 <= len(ops) <= 4) if is_train else len(ops) == 5
    if split == "compose-different-concepts":
        in_a = any(op in GROUP_A for op in ops)
        in_b = any(op in GROUP_B for op in ops)
        return (not (in_a and in_b)) if is_train else (in_a and in_b)
    if split == "switch-concept-order":
        groups = ["A" if op in GROUP_A else "B" for op in ops]
        if "A" not in groups or "B" not in groups:
            return False
        joined = "".join(groups)
        return joined == "A" * groups.count("A") + "B" * groups.count("B") if is_train else (
            joined == "B" * groups.count("B") + "A" * groups.count("A")
        )
    if split == "compose-new-operation":
        if is_train:
            return ops == ["Scanl1"] or "Scanl1" not in ops
        return "Scanl1" in ops and len(ops) >= 2
    if split == "add-operation-functionality":
        scan_lams = [
            s.lam.name
            for s in prog.statements
            if s.op == "Scanl1" and s.lam is not None
        ]
        if is_train:
            return all(name in ("(-)", "(min)") for name in scan_lams)
        return any(name in ("(+)", "(*)", "(max)") for name in scan_lams)
    raise SamplerError(f"unknown split {split!r}")


@dataclass
class RejectionStats:
    programs_tried: int = 0
    input_rejections: int = 0
    identity_rejections: int = 0


def sample_task(
    split: str,
    cfg: DeepCoderConfig,
    seed: int,
    index: int,
    record_split: str,
    stats: RejectionStats | None = None,
) -> TaskRecord:
    """Sample one interpreter-validated task for a split.

    ``record_split`` is the dataset split tag (train/test_id/test_ood); the
    program constraints follow the compositional split definition with the
    train-side rules for train and test_id, test-side rules for test_ood.
    """
    if split not in SPLIT_NAMES:
        raise SamplerError(f"unknown split {split!r}, expected one of {SPLIT_NAMES}")
    is_train = record_split != SPLIT_TEST_OOD
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, _split_tag(record_split), index)))
    )
    stats = stats if stats is not None else RejectionStats()
    iso_branch = None
    if split == "compose-new-operation" and is_train:
        iso_branch = bool(rng.random() < 0.25)
    for _ in range(cfg.max_program_tries):
        stats.programs_tried += 1
        prog = _build_program(split, is_train, rng, iso_branch)
        if prog is None or not _satisfies_split(prog, split, is_train):
            continue
        rec = _try_inputs(prog, split, cfg, rng, record_split, index, stats)
        if rec is not None:
            return rec
    raise SamplerError(
        f"retry budget exhausted for {split}/{record_split} index {index}: "
        f"{stats.programs_tried} programs, {stats.input_rejections} input "
        f"rejections, {stats.identity_rejections} identity rejections"
    )


def _try_inputs(prog, split, cfg, rng, record_split, index, stats):
    m1 = cfg.spec_size + 1
    for _ in range(cfg.max_input_tries):
        pairs = []
        seen: set[tuple] = set()
        ok = True
        identity = True
        for _ in range(m1):
            inputs = _sample_inputs(prog, cfg, rng)
            key = tuple(tuple(v) for v in inputs)
            if key in seen:
                ok = False
                break
            seen.add(key)
            try:
                out = execute(prog, inputs, max_list_len=cfg.max_list_len)
            except ExecutionError:
                ok = False
                break
            x = encode_inputs(inputs)
            y = encode_value(out)
            if y != x:
                identity = False
            pairs.append(IOPair(x=x, y=y))
        if not ok:
            stats.input_rejections += 1
            continue
        if identity:
            stats.identity_rejections += 1
            continue
        return TaskRecord(
            split=record_split,
            pairs=tuple(pairs),
            program=prog.to_text(),
            task_id=f"deepcoder-{split}-{record_split}-{index}",
        )
    return None


def _split_tag(record_split: str) -> int:
    return {SPLIT_TRAIN: 0, SPLIT_TEST_ID: 1, SPLIT_TEST_OOD: 2}[record_split]


def generate_deepcoder(split: str, cfg: DeepCoderConfig, seed: int, train_count: int, test_count: int):
    """Yield train, in-distribution test, and OOD test records for a split."""
    for tag, count in (
        (SPLIT_TRAIN, train_count),
        (SPLIT_TEST_ID, test_count),
        (SPLIT_TEST_OOD, test_count),
    ):
        for i in range(count):
            yield sample_task(split, cfg, seed, i, tag)


def validate_record(rec: TaskRecord, max_list_len: int = 20) -> bool:
    """Re-execute the record's program on its decoded inputs; True when every
    pair's output matches. Used as the oracle for emitted datasets."""
    from .parser import parse

    if rec.program is None:
        return False
    prog = parse(rec.program)
    for pair in rec.pairs:
        inputs = decode_inputs(pair.x)
        try:
            out = execute(prog, inputs, max_list_len=max_list_len)
        except ExecutionError:
            return False
        if encode_value(out, len(pair.y)) != pair.y:
            return False
    return True


def decode_inputs(x: tuple[int, ...]) -> list:
    """Invert encode_inputs: split on SEP, strip padding, shift to ints."""
    toks = list(x)
    while toks and toks[-1] == IO_PAD:
        toks.pop()
    inputs: list[list[int]] = [[]]
    for t in toks:
        if t == IO_SEP:
            inputs.append([])
        else:
            inputs[-1].append(t - 52)
    return inputs
