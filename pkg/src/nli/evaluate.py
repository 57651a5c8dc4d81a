"""Evaluation harness: exact-match accuracy over splits, compute sweeps, and
inspection of the learned token programs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .benchgen import ProgramDescriptor
from .data import SplitTensors, load_split_tensors
from .model import GumbelConfig
from .model.baselines import ttt_adapt_predict
from .search import SearchConfig, gradient_search, lpn_gradient_search, prior_search
from .train import derive_seed, load_model_from_checkpoint, make_generator

REPORT_FORMAT = "nli-eval-v1"

EVAL_MODES = ("base", "prior", "gradient")


class HeaderMismatch(RuntimeError):
    pass


@dataclass
class TaskResult:
    task_id: str
    split: str
    predicted: list[int]
    target: list[int]
    correct: bool
    loglik_before: float | None = None
    loglik_after: float | None = None


@dataclass
class EvalReport:
    mode: str
    model_kind: str
    fingerprint: str
    seeds: list[int]
    search: dict
    accuracy: dict[str, float]
    counts: dict[str, int]
    records: list[TaskResult] = field(default_factory=list)

    def recompute_accuracy(self) -> dict[str, float]:
        totals: dict[str, list[int]] = {}
        for r in self.records:
            totals.setdefault(r.split, []).append(int(r.correct))
        return {s: sum(v) / len(v) for s, v in totals.items()}

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(
                json.dumps(
                    {
                        "report": REPORT_FORMAT,
                        "mode": self.mode,
                        "model": self.model_kind,
                        "fingerprint": self.fingerprint,
                        "seeds": self.seeds,
                        "search": self.search,
                    }
                )
                + "\n"
            )
            for r in self.records:
                fh.write(
                    json.dumps(
                        {
                            "task_id": r.task_id,
                            "split": r.split,
                            "predicted": r.predicted,
                            "target": r.target,
                            "correct": r.correct,
                            "loglik_before": r.loglik_before,
                            "loglik_after": r.loglik_after,
                        }
                    )
                    + "\n"
                )
            fh.write(
                json.dumps({"summary": {"accuracy": self.accuracy, "counts": self.counts}})
                + "\n"
            )


def load_report_jsonl(path) -> dict:
    header = None
    records = []
    summary = None
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            if "report" in obj:
                header = obj
            elif "summary" in obj:
                summary = obj["summary"]
            else:
                records.append(obj)
    if header is None or summary is None:
        raise ValueError(f"{path}: not a complete evaluation report")
    return {"header": header, "records": records, "summary": summary}


def final_temperatures(payload: dict) -> tuple[float, float]:
    tc = payload["train_config"]
    return (
        tc["inductor_gumbel"]["end_temperature"],
        tc["interpreter_gumbel"]["end_temperature"],
    )


def check_header(payload: dict, header) -> None:
    want = payload["data_header"]
    if want["l_max"] != header.l_max or want["v_io"] != header.v_io:
        raise HeaderMismatch(
            f"dataset header (l_max={header.l_max}, v_io={header.v_io}) does not "
            f"match checkpoint (l_max={want['l_max']}, v_io={want['v_io']})"
        )


def _batched_base_programs(model, data: SplitTensors, tau_e: float) -> torch.Tensor:
    """Noise-free induced programs for every task of a split: (N, T, K)."""
    n, m1, l = data.x.shape
    m = m1 - 1
    emb = model.inductor.encode_pairs(
        data.x[:, :m].reshape(n * m, l), data.y[:, :m].reshape(n * m, l)
    ).reshape(n, m, model.cfg.program_length, -1)
    pooled = torch.sort(emb, dim=1).values.sum(dim=1) / m
    logits = model.inductor.logits_from_pooled(pooled)
    return torch.softmax(logits / tau_e, dim=-1)


def evaluate(
    checkpoint_path,
    data_path,
    mode: str = "base",
    search: SearchConfig | None = None,
    seed: int = 0,
    splits: tuple[str, ...] | None = None,
    ttt_steps: int = 0,
    max_tasks: int | None = None,
) -> EvalReport:
    """Predict the held-out pair of every record, conditioning on the m spec
    pairs only. Deterministic given the seed."""
    if mode not in EVAL_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    model, payload = load_model_from_checkpoint(checkpoint_path)
    header, data = load_split_tensors(data_path)
    check_header(payload, header)
    search = search or SearchConfig()
    tau_e_end, tau_d_end = final_temperatures(payload)
    search_cfg = search
    kind = payload["kind"]

    results: list[TaskResult] = []
    wanted = splits or tuple(sorted(data.keys()))
    for split in wanted:
        if split not in data:
            continue
        tensors = data[split]
        n = tensors.count if max_tasks is None else min(max_tasks, tensors.count)
        results.extend(
            _evaluate_split(
                model, kind, tensors, n, split, mode, search_cfg, seed,
                tau_e_end, tau_d_end, ttt_steps,
            )
        )

    report = EvalReport(
        mode=mode if not (kind == "incontext" and ttt_steps > 0) else "ttt",
        model_kind=kind,
        fingerprint=payload["fingerprint"],
        seeds=[seed],
        search={
            "num_starts": search_cfg.num_starts,
            "grad_steps": search_cfg.grad_steps,
            "init_std": search_cfg.init_std,
            "ttt_steps": ttt_steps,
        },
        accuracy={},
        counts={},
        records=results,
    )
    report.accuracy = report.recompute_accuracy()
    report.counts = {
        s: sum(1 for r in results if r.split == s) for s in {r.split for r in results}
    }
    return report


def _evaluate_split(
    model, kind, tensors, n, split, mode, search_cfg, seed,
    tau_e_end, tau_d_end, ttt_steps,
):
    m = tensors.spec_size
    results = []
    with torch.no_grad():
        if kind in ("nli", "dlpn") and mode == "base":
            z = _batched_base_programs(model, tensors, tau_e_end)
            preds = model.executor.predict(tensors.x[:n, m], z[:n], tau_d_end)
            for i in range(n):
                results.append(_result(tensors, i, split, preds[i], None, None))
            return results
    for i in range(n):
        spec_x, spec_y = tensors.x[i, :m], tensors.y[i, :m]
        qx, qy = tensors.x[i, m], tensors.y[i, m]
        task_seed = derive_seed(seed, split, i)
        before = after = None
        if kind in ("nli", "dlpn"):
            if mode == "prior":
                res = prior_search(model, spec_x, spec_y, search_cfg, seed=task_seed)
                pred = model.executor.predict(
                    qx.unsqueeze(0), res.best_program.unsqueeze(0), tau_d_end
                ).squeeze(0)
                before, after = res.base_score, res.best_score
            else:
                res = gradient_search(model, spec_x, spec_y, search_cfg, seed=task_seed)
                pred = model.executor.predict(
                    qx.unsqueeze(0), res.best_program.unsqueeze(0), tau_d_end
                ).squeeze(0)
                before, after = res.base_score, res.best_score
        elif kind == "incontext":
            if ttt_steps > 0:
                pred, _ = ttt_adapt_predict(model, spec_x, spec_y, qx, steps=ttt_steps)
            else:
                pred = model.predict(spec_x, spec_y, qx)
        elif kind == "lpn":
            if mode == "gradient":
                latent, after, before = lpn_gradient_search(
                    model, spec_x, spec_y, search_cfg, seed=task_seed
                )
                pred = model.predict_from_latent(latent, qx.unsqueeze(0)).squeeze(0)
            else:
                with torch.no_grad():
                    latent = model.pooled_latent(spec_x, spec_y)
                pred = model.predict_from_latent(latent, qx.unsqueeze(0)).squeeze(0)
        else:
            raise ValueError(f"cannot evaluate model kind {kind!r}")
        results.append(_result(tensors, i, split, pred, before, after))
    return results


def _result(tensors, i, split, pred, before, after) -> TaskResult:
    target = tensors.y[i, tensors.spec_size]
    pred_list = [int(v) for v in pred]
    target_list = [int(v) for v in target]
    return TaskResult(
        task_id=tensors.task_ids[i],
        split=split,
        predicted=pred_list,
        target=target_list,
        correct=pred_list == target_list,
        loglik_before=before,
        loglik_after=after,
    )


def sweep(
    checkpoint_path,
    data_path,
    grad_steps_grid: tuple[int, ...],
    num_starts_grid: tuple[int, ...],
    seeds: tuple[int, ...],
    split: str = "test_ood",
    base_search: SearchConfig | None = None,
    max_tasks: int | None = None,
) -> list[dict]:
    """Accuracy for every (grad_steps, num_starts, seed) cell; plot-ready."""
    from dataclasses import replace

    base = base_search or SearchConfig()
    rows = []
    for gs in grad_steps_grid:
        for ns in num_starts_grid:
            for seed in seeds:
                cfg = replace(base, grad_steps=gs, num_starts=ns)
                report = evaluate(
                    checkpoint_path,
                    data_path,
                    mode="gradient",
                    search=cfg,
                    seed=seed,
                    splits=(split,),
                    max_tasks=max_tasks,
                )
                rows.append(
                    {
                        "grad_steps": gs,
                        "num_starts": ns,
                        "seed": seed,
                        "split": split,
                        "accuracy": report.accuracy.get(split, float("nan")),
                    }
                )
    return rows


def task_family(tensors: SplitTensors, i: int) -> str:
    desc = tensors.descriptors[i]
    if desc is not None:
        return ProgramDescriptor.from_obj(desc).name()
    prog = tensors.programs[i]
    return prog if prog is not None else "unknown"


@dataclass
class FamilyCodes:
    family: str
    split: str
    token_rows: list[list[int]]  # argmax token ids per inspected task
    effective_lengths: list[int]

    def distinct_tokens(self, skip_index: int) -> set[int]:
        out: set[int] = set()
        for row in self.token_rows:
            out |= {t for t in row if t != skip_index}
        return out


def inspect_codes(
    checkpoint_path,
    data_path,
    mode: str = "base",
    search: SearchConfig | None = None,
    seed: int = 0,
    tasks_per_family: int = 3,
    splits: tuple[str, ...] | None = None,
) -> dict:
    """Argmax token sequences of induced programs, grouped by task family.

    Returns per-family code rows plus reuse statistics: distinct non-skip
    tokens per family and across all families. With ``mode='gradient'`` the
    inspected program is the one found by search, which is how out-of-
    distribution families are normally examined.
    """
    model, payload = load_model_from_checkpoint(checkpoint_path)
    if payload["kind"] not in ("nli", "dlpn"):
        raise ValueError("code inspection requires a token-program model")
    header, data = load_split_tensors(data_path)
    check_header(payload, header)
    tau_e_end, tau_d_end = final_temperatures(payload)
    search = search or SearchConfig()
    skip = model.cfg.skip_index

    families: dict[str, FamilyCodes] = {}
    wanted = splits or tuple(sorted(data.keys()))
    for split in wanted:
        if split not in data:
            continue
        tensors = data[split]
        m = tensors.spec_size
        for i in range(tensors.count):
            fam = task_family(tensors, i)
            entry = families.setdefault(
                fam, FamilyCodes(family=fam, split=split, token_rows=[], effective_lengths=[])
            )
            if len(entry.token_rows) >= tasks_per_family:
                continue
            spec_x, spec_y = tensors.x[i, :m], tensors.y[i, :m]
            if mode == "gradient":
                res = gradient_search(
                    model, spec_x, spec_y, search, seed=derive_seed(seed, fam, i)
                )
                z = res.best_program
            else:
                with torch.no_grad():
                    z = model.induce(
                        spec_x, spec_y, GumbelConfig(tau_e_end, use_noise=False)
                    )
            tokens = [int(t) for t in z.argmax(dim=-1)]
            entry.token_rows.append(tokens)
            entry.effective_lengths.append(sum(1 for t in tokens if t != skip))

    all_tokens: set[int] = set()
    per_family = {}
    for fam, entry in families.items():
        toks = entry.distinct_tokens(skip)
        all_tokens |= toks
        per_family[fam] = {
            "split": entry.split,
            "token_rows": entry.token_rows,
            "effective_lengths": entry.effective_lengths,
            "distinct_nonskip": sorted(toks),
        }
    return {
        "skip_index": skip,
        "families": per_family,
        "num_families": len(per_family),
        "distinct_nonskip_across_families": sorted(all_tokens),
        "num_distinct_nonskip": len(all_tokens),
    }
