"""Generators for the custom compositional suite: shift-length extrapolation
(shift_l), primitive extraction from long shifts (shift_p), and composition of
primitives seen only in isolation (comp_i).

All tasks operate on fixed-length token sequences over a small alphabet.
Generation is deterministic: each record's RNG is derived from
(seed, split, record index), so output does not depend on generation order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .tasks import (
    SPLIT_TEST_ID,
    SPLIT_TEST_OOD,
    SPLIT_TRAIN,
    DatasetHeader,
    IOPair,
    TaskRecord,
)

TASK_NAMES = ("shift_l", "shift_p", "comp_i")


class GenerationConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PrimitiveOp:
    """A total function on fixed-length sequences over the alphabet."""

    kind: str
    k: int | None = None

    def apply(self, x: tuple[int, ...], alphabet: int) -> tuple[int, ...]:
        n = len(x)
        if self.kind == "shift_left":
            s = self.k % n if n else 0
            return x[s:] + x[:s]
        if self.kind == "shift_right":
            s = self.k % n if n else 0
            return x[n - s :] + x[: n - s]
        if self.kind == "increment":
            return tuple((v + self.k) % alphabet for v in x)
        if self.kind == "decrement":
            return tuple((v - self.k) % alphabet for v in x)
        if self.kind == "reverse":
            return x[::-1]
        if self.kind == "swap_halves":
            mid = n // 2
            return x[mid:] + x[:mid]
        if self.kind == "rotate_pairs":
            out = list(x)
            for i in range(0, n - 1, 2):
                out[i], out[i + 1] = out[i + 1], out[i]
            return tuple(out)
        if self.kind == "map_constant":
            return tuple(self.k for _ in x)
        raise GenerationConfigError(f"unknown primitive kind {self.kind!r}")

    def name(self) -> str:
        return self.kind if self.k is None else f"{self.kind}({self.k})"


def build_primitive_library() -> tuple[PrimitiveOp, ...]:
    """The fixed 24-primitive library used by the composition task."""
    ops: list[PrimitiveOp] = []
    ops += [PrimitiveOp("shift_left", k) for k in range(1, 6)]
    ops += [PrimitiveOp("shift_right", k) for k in range(1, 6)]
    ops += [PrimitiveOp("increment", k) for k in range(1, 4)]
    ops += [PrimitiveOp("decrement", k) for k in range(1, 4)]
    ops += [
        PrimitiveOp("reverse"),
        PrimitiveOp("swap_halves"),
        PrimitiveOp("rotate_pairs"),
    ]
    ops += [PrimitiveOp("map_constant", k) for k in range(5)]
    return tuple(ops)


PRIMITIVE_LIBRARY = build_primitive_library()


@dataclass(frozen=True)
class ProgramDescriptor:
    """Ordered primitive composition; the latent program behind a task."""

    ops: tuple[PrimitiveOp, ...]

    def name(self) -> str:
        return "+".join(op.name() for op in self.ops)

    def to_obj(self) -> dict:
        return {"ops": [{"kind": op.kind, "k": op.k} for op in self.ops]}

    @staticmethod
    def from_obj(obj: dict) -> "ProgramDescriptor":
        return ProgramDescriptor(
            ops=tuple(PrimitiveOp(o["kind"], o.get("k")) for o in obj["ops"])
        )


def apply_descriptor(
    desc: ProgramDescriptor, x: tuple[int, ...], alphabet: int = 10
) -> tuple[int, ...]:
    """Apply ops left to right; output length equals input length."""
    for op in desc.ops:
        x = op.apply(x, alphabet)
    return x


@dataclass(frozen=True)
class GenerationConfig:
    seq_len: int = 20
    alphabet_size: int = 10
    spec_size: int = 5
    train_count: int = 1000
    test_count: int = 200
    # shift task split definitions; None picks the per-task defaults below
    train_shifts: tuple[int, ...] | None = None
    ood_shifts: tuple[int, ...] | None = None
    # comp_i composition depths for the OOD split
    comp_depths: tuple[int, ...] = (2, 3)

    def validate(self) -> None:
        if self.train_count <= 0 or self.test_count <= 0:
            raise GenerationConfigError("record counts must be positive")
        if self.alphabet_size < 2:
            raise GenerationConfigError("alphabet must have at least 2 symbols")
        if self.seq_len < 1:
            raise GenerationConfigError("sequence length must be positive")
        if self.spec_size < 2:
            raise GenerationConfigError("spec_size must be at least 2")
        if self.alphabet_size**self.seq_len < self.spec_size + 1:
            raise GenerationConfigError(
                "alphabet^length too small to guarantee distinct inputs"
            )


SHIFT_DEFAULTS = {
    "shift_l": (tuple(range(1, 6)), tuple(range(6, 11))),
    "shift_p": ((7, 8, 9), (1, 2, 3)),
}


def shift_sets(task: str, cfg: GenerationConfig) -> tuple[tuple[int, ...], tuple[int, ...]]:
    train, ood = SHIFT_DEFAULTS[task]
    if cfg.train_shifts is not None:
        train = tuple(cfg.train_shifts)
    if cfg.ood_shifts is not None:
        ood = tuple(cfg.ood_shifts)
    if set(train) & set(ood):
        raise GenerationConfigError("train and OOD shift sets must be disjoint")
    return train, ood


def sample_input(cfg: GenerationConfig, rng: np.random.Generator) -> tuple[int, ...]:
    """One uniform token sequence of the configured length."""
    return tuple(int(t) for t in rng.integers(0, cfg.alphabet_size, size=cfg.seq_len))


def _sample_distinct_inputs(
    cfg: GenerationConfig, rng: np.random.Generator, n: int
) -> list[tuple[int, ...]]:
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[int, ...]] = []
    while len(out) < n:
        x = sample_input(cfg, rng)
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _record_rng(seed: int, split: str, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence((seed, SPLITS_INDEX[split], index))
    return np.random.Generator(np.random.PCG64(ss))


SPLITS_INDEX = {SPLIT_TRAIN: 0, SPLIT_TEST_ID: 1, SPLIT_TEST_OOD: 2}


def _sample_descriptor(
    task: str, split: str, cfg: GenerationConfig, rng: np.random.Generator
) -> ProgramDescriptor:
    if task in ("shift_l", "shift_p"):
        train, ood = shift_sets(task, cfg)
        pool = ood if split == SPLIT_TEST_OOD else train
        k = int(pool[rng.integers(0, len(pool))])
        return ProgramDescriptor(ops=(PrimitiveOp("shift_left", k),))
    if task == "comp_i":
        lib = PRIMITIVE_LIBRARY
        if split == SPLIT_TEST_OOD:
            depth = int(cfg.comp_depths[rng.integers(0, len(cfg.comp_depths))])
        else:
            depth = 1
        idx = rng.integers(0, len(lib), size=depth)
        return ProgramDescriptor(ops=tuple(lib[i] for i in idx))
    raise GenerationConfigError(f"unknown task {task!r}")


def _make_record(
    task: str, split: str, cfg: GenerationConfig, seed: int, index: int
) -> TaskRecord:
    rng = _record_rng(seed, split, index)
    for _ in range(64):
        desc = _sample_descriptor(task, split, cfg, rng)
        xs = _sample_distinct_inputs(cfg, rng, cfg.spec_size + 1)
        ys = [apply_descriptor(desc, x, cfg.alphabet_size) for x in xs]
        # a composition collapsing to the identity on every sampled pair gives
        # a task no model can be scored on; redraw
        if all(y == x for x, y in zip(xs, ys)):
            continue
        pairs = tuple(IOPair(x=x, y=y) for x, y in zip(xs, ys))
        return TaskRecord(
            split=split,
            pairs=pairs,
            descriptor=desc.to_obj(),
            task_id=f"{task}-{split}-{index}",
        )
    raise GenerationConfigError(
        f"could not sample a non-identity task for {task}/{split} at index {index}"
    )


def dataset_header(cfg: GenerationConfig) -> DatasetHeader:
    if cfg.alphabet_size <= 10:
        alphabet = "0123456789"[: cfg.alphabet_size]
    else:
        alphabet = f"sym[{cfg.alphabet_size}]"
    return DatasetHeader(l_max=cfg.seq_len, v_io=cfg.alphabet_size, alphabet=alphabet)


def generate_dataset(task: str, cfg: GenerationConfig, seed: int):
    """Yield records for all three splits of one task, reproducibly.

    Emits cfg.train_count train records, then cfg.test_count in-distribution
    and cfg.test_count out-of-distribution test records.
    """
    if task not in TASK_NAMES:
        raise GenerationConfigError(f"unknown task {task!r}, expected {TASK_NAMES}")
    cfg.validate()
    if task in ("shift_l", "shift_p"):
        shift_sets(task, cfg)  # fail fast on overlapping split definitions
    counts = (
        (SPLIT_TRAIN, cfg.train_count),
        (SPLIT_TEST_ID, cfg.test_count),
        (SPLIT_TEST_OOD, cfg.test_count),
    )
    for split, count in counts:
        for i in range(count):
            yield _make_record(task, split, cfg, seed, i)


def descriptor_family(rec: TaskRecord) -> str:
    """Human-readable family label for grouping tasks in reports."""
    if rec.descriptor is None:
        return "unknown"
    return ProgramDescriptor.from_obj(rec.descriptor).name()
