"""Dataset file to tensor bridging for training and evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .tasks import DatasetHeader, TaskRecord, open_dataset


@dataclass
class SplitTensors:
    """All records of one split as stacked tensors; pairs axis is m+1."""

    x: torch.Tensor  # (N, m+1, L) long
    y: torch.Tensor
    task_ids: list[str]
    programs: list[str | None]
    descriptors: list[dict | None]

    @property
    def count(self) -> int:
        return self.x.shape[0]

    @property
    def spec_size(self) -> int:
        return self.x.shape[1] - 1


def load_split_tensors(path) -> tuple[DatasetHeader, dict[str, SplitTensors]]:
    header, records = open_dataset(path)
    by_split: dict[str, list[TaskRecord]] = {}
    for rec in records:
        by_split.setdefault(rec.split, []).append(rec)
    out = {}
    for split, recs in by_split.items():
        sizes = {len(r.pairs) for r in recs}
        if len(sizes) != 1:
            raise ValueError(f"{path}: split {split} mixes pair counts {sorted(sizes)}")
        x = torch.tensor([[list(p.x) for p in r.pairs] for r in recs], dtype=torch.long)
        y = torch.tensor([[list(p.y) for p in r.pairs] for r in recs], dtype=torch.long)
        out[split] = SplitTensors(
            x=x,
            y=y,
            task_ids=[r.task_id for r in recs],
            programs=[r.program for r in recs],
            descriptors=[r.descriptor for r in recs],
        )
    return header, out
