"""Command-line entry point: parse, fragment, split, train, eval, explain.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .brics import fragment
from .chem import ChemError, canonical_smiles, parse_smiles
from .config import ConfigError, load_config
from .data import DataError, Split, featurize_all, load_csv, make_split
from .explain import explain
from .metrics import NoValidTask
from .model import CheckpointError, HignnModel, load_checkpoint, save_checkpoint
from .tensor import BACKEND
from .train import NumericFailure, Scaler, evaluate, history_csv, train_model

logger = logging.getLogger("hignn")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read_smiles(path: str) -> list[tuple[int, str]]:
    """(line number, SMILES) for each non-blank line; text after whitespace is ignored."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return [(i, line.split()[0]) for i, line in enumerate(lines, start=1) if line.strip()]


def _parse_line(path: str, lineno: int, smiles: str):
    try:
        return parse_smiles(smiles)
    except ChemError as exc:
        raise DataError(f"{path} line {lineno}: {exc}") from None


def _write(path: str | None, lines: list[str]):
    text = "".join(line + "\n" for line in lines)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_parse(args) -> int:
    out = []
    for lineno, smi in _read_smiles(args.input):
        mol = _parse_line(args.input, lineno, smi)
        canon = canonical_smiles(mol)
        if args.canonical:
            out.append(canon)
        else:
            out.append(json.dumps({
                "smiles": smi, "canonical": canon, "n_atoms": mol.n_atoms,
                "n_bonds": len(mol.bonds), "n_rings": len(mol.rings),
                "n_aromatic_atoms": sum(a.aromatic for a in mol.atoms),
            }, sort_keys=True))
    _write(args.out, out)
    return EXIT_OK


def cmd_fragment(args) -> int:
    out = []
    for lineno, smi in _read_smiles(args.input):
        out.append(fragment(_parse_line(args.input, lineno, smi)).to_json())
    _write(args.out, out)
    return EXIT_OK


def cmd_split(args) -> int:
    dataset = load_csv(args.input)
    try:
        ratio = tuple(float(v) for v in args.ratio.split(","))
    except ValueError:
        raise UsageError(f"--ratio: cannot read {args.ratio!r}") from None
    if len(ratio) != 3:
        raise UsageError("--ratio needs three comma-separated values")
    try:
        split = make_split(dataset, args.method, ratio, args.seed)
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(str(exc)) from None
    logger.info("split %s seed=%d: %d/%d/%d", args.method, args.seed,
                len(split.train), len(split.val), len(split.test))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(split.to_json())
    return EXIT_OK


def _load_split(path: str, n_rows: int) -> Split:
    try:
        with open(path, encoding="utf-8") as fh:
            return Split.from_json(fh.read(), n_rows)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def cmd_train(args) -> int:
    run = load_config(args.config)
    task_type = None if run.task_type == "auto" else run.task_type
    dataset = load_csv(args.data, task_type)
    split = _load_split(args.split, len(dataset))
    model_cfg = replace(run.model, n_tasks=dataset.n_tasks, task_type=dataset.task_type)
    logger.info("backend=%s resolved config: %s", BACKEND, json.dumps(
        {"model": model_cfg.to_dict(), "train": run.to_dict()["train"],
         "tasks": dataset.tasks}, sort_keys=True))
    samples = featurize_all(dataset.smiles, model_cfg.extras)
    model = HignnModel(model_cfg)
    result = train_model(model, dataset, samples, split, run.train,
                         on_epoch=lambda row: logger.info(
                             "epoch %d loss %.6f val %.6f test %.6f", row["epoch"],
                             row["train_loss"], row["val_metric"], row["test_metric"]))
    best = result.history[result.best_epoch - 1] if result.history else None
    extra = result.checkpoint_extra(run.train, dataset.tasks)
    if best is not None:
        extra.update(val_metric=best["val_metric"], test_metric=best["test_metric"])
    save_checkpoint(args.out, result.model, extra)
    with open(args.history, "w", encoding="utf-8") as fh:
        fh.write(history_csv(result.history))
    summary = {"best_epoch": result.best_epoch, "metric": result.metric,
               "val_metric": extra.get("val_metric"), "test_metric": extra.get("test_metric")}
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def _load_model(path: str) -> tuple[HignnModel, dict]:
    try:
        return load_checkpoint(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except (CheckpointError, KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad checkpoint: {exc}") from None


def cmd_eval(args) -> int:
    model, config = _load_model(args.ckpt)
    dataset = load_csv(args.data, model.config.task_type, config.get("tasks"))
    split = _load_split(args.split, len(dataset))
    idx = split.partition(args.partition)
    samples = featurize_all([dataset.smiles[i] for i in idx], model.config.extras)
    scaler = Scaler.from_dict(config["scaler"]) if "scaler" in config else None
    metric = config.get("train", {}).get("metric", "auto")
    scores = evaluate(model, samples, dataset.labels[idx], dataset.mask[idx], scaler, metric)
    scores["partition"] = args.partition
    sys.stdout.write(json.dumps(scores, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_explain(args) -> int:
    model, config = _load_model(args.ckpt)
    scaler = Scaler.from_dict(config["scaler"]) if "scaler" in config else None
    out = []
    for lineno, smi in _read_smiles(args.input):
        try:
            out.append(explain(model, smi, scaler).to_json())
        except ChemError as exc:
            raise DataError(f"{args.input} line {lineno}: {exc}") from None
    _write(args.out, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hignn", description=__doc__.splitlines()[0])
    p.add_argument("--log-level", default="INFO",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("parse", help="parse SMILES, print canonical forms")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--canonical", action="store_true", help="print only canonical SMILES")
    s.add_argument("--out")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("fragment", help="BRICS fragments as JSONL")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fragment)

    s = sub.add_parser("split", help="write a train/val/test index file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--method", choices=["random", "scaffold"], default="random")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--ratio", default="0.8,0.1,0.1")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", help="train and save the best-validation checkpoint")
    s.add_argument("--config", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--history", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a checkpoint on one partition")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", required=True)
    s.add_argument("--partition", choices=["train", "val", "test"], default="test")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("explain", help="fragment cosine explanations as JSONL")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_explain)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("hignn").setLevel(args.log_level)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except (DataError, ChemError, NoValidTask) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except FileNotFoundError as exc:
        logger.error("%s: %s", exc.filename, exc.strerror)
        return EXIT_DATA
    except NumericFailure as exc:
        logger.error("numeric failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
