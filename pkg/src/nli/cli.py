"""Command line: dataset generation, training, evaluation, reports."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nli", description="learned token-program induction toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a custom-suite dataset")
    p.add_argument("--task", required=True, choices=["shift_l", "shift_p", "comp_i"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-count", type=int, default=1000)
    p.add_argument("--test-count", type=int, default=200)
    p.add_argument("--seq-len", type=int, default=20)
    p.add_argument("--spec-size", type=int, default=5)
    p.add_argument("--alphabet-size", type=int, default=10)
    p.add_argument("--train-shifts", type=_int_list, default=None)
    p.add_argument("--ood-shifts", type=_int_list, default=None)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("gen-deepcoder", help="generate a DSL split dataset")
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--test-count", type=int, default=None)
    p.add_argument("--spec-size", type=int, default=3)
    p.set_defaults(func=cmd_gen_deepcoder)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", default=None, help="YAML hyperparameter file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=["nli", "lpn", "dlpn", "incontext"], default=None)
    p.add_argument("--ablate", action="append", default=[], metavar="FLAG")
    p.add_argument("--with-program-encoder", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=["nli", "lpn", "dlpn", "incontext"], default=None,
                   help="assert the checkpoint holds this model kind")
    p.add_argument("--mode", choices=["base", "prior", "gradient"], default="base")
    p.add_argument("--num-starts", type=int, default=64)
    p.add_argument("--grad-steps", type=int, default=50)
    p.add_argument("--init-std", type=float, default=7.5)
    p.add_argument("--step-size", type=float, default=0.5)
    p.add_argument("--noise-samples", type=int, default=2)
    p.add_argument("--program-length", type=int, default=None)
    p.add_argument("--ttt-steps", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", type=_str_list, default=None)
    p.add_argument("--max-tasks", type=int, default=None)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over search budgets")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--grad-steps", type=_int_list, default=[0, 25, 100])
    p.add_argument("--num-starts", type=_int_list, default=[1, 64, 256])
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    p.add_argument("--split", default="test_ood")
    p.add_argument("--max-tasks", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="combine evaluation reports")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--format", choices=["table", "csv"], default="table")
    p.add_argument("--out", default=None, help="output directory (default: stdout table only)")
    p.add_argument("--reference", default=None, metavar="BENCH",
                   help="attach published comparison rows for shift_l/shift_p/comp_i")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("inspect", help="inspect learned token programs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["base", "gradient"], default="base")
    p.add_argument("--num-starts", type=int, default=64)
    p.add_argument("--grad-steps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", type=_str_list, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("validate", help="re-execute ground truth over a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


def _int_list(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def _str_list(text):
    return [v for v in str(text).replace(",", " ").split()]


def cmd_gen_data(args) -> int:
    from .benchgen import GenerationConfig, dataset_header, generate_dataset
    from .tasks import write_dataset

    cfg = GenerationConfig(
        seq_len=args.seq_len,
        alphabet_size=args.alphabet_size,
        spec_size=args.spec_size,
        train_count=args.train_count,
        test_count=args.test_count,
        train_shifts=tuple(args.train_shifts) if args.train_shifts else None,
        ood_shifts=tuple(args.ood_shifts) if args.ood_shifts else None,
    )
    n = write_dataset(args.out, dataset_header(cfg), generate_dataset(args.task, cfg, args.seed))
    print(f"wrote {n} records to {args.out}")
    return 0


def cmd_gen_deepcoder(args) -> int:
    from .deepcoder.sampler import DeepCoderConfig, dataset_header, generate_deepcoder
    from .tasks import write_dataset

    cfg = DeepCoderConfig(spec_size=args.spec_size)
    test_count = args.test_count if args.test_count is not None else max(args.count // 5, 1)
    n = write_dataset(
        args.out,
        dataset_header(),
        generate_deepcoder(args.split, cfg, args.seed, args.count, test_count),
    )
    print(f"wrote {n} records to {args.out}")
    return 0


def cmd_train(args) -> int:
    from .train import TrainConfig, run_training

    cfg = TrainConfig.from_yaml(args.config) if args.config else TrainConfig()
    if args.model:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), "model": args.model})
    if args.with_program_encoder:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), "with_program_encoder": True})
    if args.ablate:
        cfg = cfg.ablated(*args.ablate)
    path = run_training(cfg, args.data, args.out, args.seed, quiet=args.quiet)
    print(f"checkpoint: {path}")
    return 0


def _search_config(args):
    from .search import SearchConfig

    return SearchConfig(
        num_starts=args.num_starts,
        grad_steps=args.grad_steps,
        init_std=getattr(args, "init_std", 7.5),
        step_size=getattr(args, "step_size", 0.5),
        noise_samples=getattr(args, "noise_samples", 2),
        program_length=getattr(args, "program_length", None),
    )


def cmd_eval(args) -> int:
    from .evaluate import evaluate

    if args.model:
        from .train import load_checkpoint

        kind = load_checkpoint(args.checkpoint)["kind"]
        if kind != args.model:
            print(f"checkpoint holds a {kind!r} model, not {args.model!r}", file=sys.stderr)
            return 1
    report = evaluate(
        args.checkpoint,
        args.data,
        mode=args.mode,
        search=_search_config(args),
        seed=args.seed,
        splits=tuple(args.splits) if args.splits else None,
        ttt_steps=args.ttt_steps,
        max_tasks=args.max_tasks,
    )
    report.write_jsonl(args.report)
    print(json.dumps({"accuracy": report.accuracy, "counts": report.counts}))
    return 0


def cmd_sweep(args) -> int:
    from .evaluate import sweep
    from .reporting import sweep_figure, write_sweep_csv

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep(
        args.checkpoint,
        args.data,
        tuple(args.grad_steps),
        tuple(args.num_starts),
        tuple(args.seeds),
        split=args.split,
        max_tasks=args.max_tasks,
    )
    write_sweep_csv(rows, out / "sweep.csv")
    sweep_figure(rows, out / "sweep.png")
    print(f"wrote {out / 'sweep.csv'} and {out / 'sweep.png'}")
    return 0


def cmd_report(args) -> int:
    from .reporting import (
        accuracy_figure,
        collect_rows,
        reference_rows,
        render_table,
        write_csv,
    )

    rows = collect_rows(args.inputs)
    if args.reference:
        rows += reference_rows(args.reference)
    table = render_table(rows)
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.format == "csv":
            write_csv(rows, out / "report.csv")
        (out / "report.txt").write_text(table + "\n")
        accuracy_figure(rows, out / "accuracy.png")
        print(f"wrote report files to {out}")
    return 0


def cmd_inspect(args) -> int:
    from .evaluate import inspect_codes
    from .reporting import render_code_report

    codes = inspect_codes(
        args.checkpoint,
        args.data,
        mode=args.mode,
        search=_search_config(args),
        seed=args.seed,
        splits=tuple(args.splits) if args.splits else None,
    )
    text = render_code_report(codes)
    print(text)
    if args.out:
        Path(args.out).write_text(json.dumps(codes, indent=2) + "\n")
    return 0


def cmd_validate(args) -> int:
    from .benchgen import ProgramDescriptor, apply_descriptor
    from .deepcoder.sampler import validate_record
    from .tasks import open_dataset

    header, records = open_dataset(args.data)
    checked = mismatches = 0
    for i, rec in enumerate(records):
        if args.limit is not None and i >= args.limit:
            break
        ok = True
        if rec.program is not None:
            ok = validate_record(rec)
        elif rec.descriptor is not None:
            desc = ProgramDescriptor.from_obj(rec.descriptor)
            ok = all(
                apply_descriptor(desc, p.x, header.v_io) == p.y for p in rec.pairs
            )
        else:
            continue
        checked += 1
        if not ok:
            mismatches += 1
            print(f"mismatch: record {i} ({rec.task_id})", file=sys.stderr)
    print(json.dumps({"checked": checked, "mismatches": mismatches}))
    return 0 if mismatches == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
