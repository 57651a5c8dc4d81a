"""Task/specification data model and the line-delimited on-disk task format.

A task is a set of input-output pairs over a fixed token alphabet. The first
``m`` pairs form the specification a model conditions on; the last pair is the
held-out query used for evaluation. Files are UTF-8 JSON Lines with a single
header line carrying dataset-level constants (``l_max``, ``v_io``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

FORMAT_NAME = "nli-tasks-v1"

SPLIT_TRAIN = "train"
SPLIT_TEST_ID = "test_id"
SPLIT_TEST_OOD = "test_ood"
SPLITS = (SPLIT_TRAIN, SPLIT_TEST_ID, SPLIT_TEST_OOD)


class TaskFormatError(ValueError):
    """Malformed dataset file or record."""


class DegenerateSpecificationError(ValueError):
    """Specification too small for leave-one-out (m < 2)."""


@dataclass(frozen=True)
class IOPair:
    """One input-output example, both sides padded to the dataset's l_max."""

    x: tuple[int, ...]
    y: tuple[int, ...]

    def validate(self, l_max: int, v_io: int) -> None:
        for name, seq in (("x", self.x), ("y", self.y)):
            if len(seq) != l_max:
                raise TaskFormatError(
                    f"pair {name} has length {len(seq)}, expected l_max={l_max}"
                )
            for tok in seq:
                if not (0 <= tok < v_io):
                    raise TaskFormatError(
                        f"pair {name} token {tok} outside [0, {v_io})"
                    )


@dataclass(frozen=True)
class Specification:
    """An unordered collection of example pairs defining one induction task.

    Pair order carries no meaning; operations consuming a Specification must be
    invariant to permutations of ``pairs``.
    """

    pairs: tuple[IOPair, ...]
    task_id: str = ""

    @property
    def size(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class TaskRecord:
    """On-disk unit: split tag, optional ground truth, and m+1 pairs.

    The final pair is the held-out query; the preceding pairs are the
    specification. ``program`` holds DSL program text when the generating
    program is textual; ``descriptor`` holds a structured description for the
    custom benchmark suite. Either may be absent.
    """

    split: str
    pairs: tuple[IOPair, ...]
    program: str | None = None
    descriptor: dict | None = None
    task_id: str = ""

    def spec(self) -> Specification:
        """Specification view: all pairs except the held-out query."""
        return Specification(pairs=self.pairs[:-1], task_id=self.task_id)

    def query(self) -> IOPair:
        return self.pairs[-1]


@dataclass(frozen=True)
class DatasetHeader:
    l_max: int
    v_io: int
    alphabet: str
    format: str = FORMAT_NAME

    def to_line(self) -> str:
        return json.dumps(
            {
                "format": self.format,
                "l_max": self.l_max,
                "v_io": self.v_io,
                "alphabet": self.alphabet,
            },
            separators=(",", ":"),
        )


def leave_one_out_views(
    spec: Specification,
) -> list[tuple[Specification, IOPair]]:
    """All m (context, held-out) views of a specification.

    View ``i`` holds out pair ``i`` and keeps the remaining m-1 pairs as
    context. Requires m >= 2, otherwise a context would be empty.
    """
    m = spec.size
    if m < 2:
        raise DegenerateSpecificationError(
            f"degenerate specification: need at least 2 pairs, got {m}"
        )
    views = []
    for i in range(m):
        context = Specification(
            pairs=spec.pairs[:i] + spec.pairs[i + 1 :], task_id=spec.task_id
        )
        views.append((context, spec.pairs[i]))
    return views


def record_to_line(rec: TaskRecord) -> str:
    """Serialize one record to its canonical single-line form.

    Key order and separators are fixed so that serialization is injective on
    the record space (distinct records produce distinct lines).
    """
    obj = {
        "split": rec.split,
        "program": rec.program,
        "descriptor": rec.descriptor,
        "pairs": [{"x": list(p.x), "y": list(p.y)} for p in rec.pairs],
    }
    if rec.task_id:
        obj["task_id"] = rec.task_id
    return json.dumps(obj, separators=(",", ":"))


def record_from_obj(obj: dict) -> TaskRecord:
    try:
        pairs = tuple(
            IOPair(x=tuple(int(t) for t in p["x"]), y=tuple(int(t) for t in p["y"]))
            for p in obj["pairs"]
        )
        return TaskRecord(
            split=obj["split"],
            program=obj.get("program"),
            descriptor=obj.get("descriptor"),
            pairs=pairs,
            task_id=obj.get("task_id", ""),
        )
    except (KeyError, TypeError) as exc:
        raise TaskFormatError(f"record missing or malformed field: {exc}") from exc


def parse_header(line: str) -> DatasetHeader:
    obj = json.loads(line)
    if obj.get("format") != FORMAT_NAME:
        raise TaskFormatError(
            f"unsupported dataset format {obj.get('format')!r}, expected {FORMAT_NAME!r}"
        )
    return DatasetHeader(
        l_max=int(obj["l_max"]), v_io=int(obj["v_io"]), alphabet=str(obj["alphabet"])
    )


def write_dataset(
    path: str | Path, header: DatasetHeader, records: Iterable[TaskRecord]
) -> int:
    """Write header plus records; returns the number of records written.

    Writing is line-atomic from the reader's perspective only if the file is
    not read while being written; writers must not interleave partial lines.
    """
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header.to_line() + "\n")
        for rec in records:
            fh.write(record_to_line(rec) + "\n")
            n += 1
    return n


def read_dataset(
    path: str | Path, validate: bool = True
) -> tuple[DatasetHeader, list[TaskRecord]]:
    header, it = open_dataset(path, validate=validate)
    return header, list(it)


def open_dataset(
    path: str | Path, validate: bool = True
) -> tuple[DatasetHeader, Iterator[TaskRecord]]:
    """Streaming reader. Parse errors name the byte offset of the bad line."""
    fh = open(path, "r", encoding="utf-8")
    offset = 0
    first = fh.readline()
    if not first:
        fh.close()
        raise TaskFormatError(f"{path}: empty dataset file")
    try:
        header = parse_header(first)
    except (json.JSONDecodeError, TaskFormatError) as exc:
        fh.close()
        raise TaskFormatError(f"{path}: bad header at byte 0: {exc}") from exc
    offset += len(first.encode("utf-8"))

    def _iter() -> Iterator[TaskRecord]:
        nonlocal offset
        with fh:
            for line in fh:
                line_offset = offset
                offset += len(line.encode("utf-8"))
                if not line.strip():
                    continue
                try:
                    rec = record_from_obj(json.loads(line))
                    if validate:
                        for p in rec.pairs:
                            p.validate(header.l_max, header.v_io)
                        if rec.split not in SPLITS:
                            raise TaskFormatError(f"unknown split {rec.split!r}")
                except (json.JSONDecodeError, TaskFormatError) as exc:
                    raise TaskFormatError(
                        f"{path}: bad record at byte {line_offset}: {exc}"
                    ) from exc
                yield rec

    return header, _iter()


def roundtrip_record(rec: TaskRecord) -> TaskRecord:
    """Serialize then deserialize; identity on valid records."""
    return record_from_obj(json.loads(record_to_line(rec)))
