# -*- coding: utf-8 -*-
"""
Command-line interface.

    hoi gen-synth   --seed 7 --images 8 --out data/
    hoi train-toy   --data data/ --config desk --out runs/desk/
    hoi predict     --data data/ --checkpoint runs/desk/checkpoint.jsonl --out preds.jsonl
    hoi match       --gt data/ --pred queries.jsonl --out match.json
    hoi loss        --gt data/ --pred queries.jsonl
    hoi eval-hico   --gt data/ --pred preds.jsonl --counts data/ --report out.txt
    hoi eval-vcoco  --gt data/ --pred preds.jsonl --report out.txt
    hoi bin-analysis --gt data/ --pred preds.jsonl --mode distance --out bins.csv
    hoi gradcheck   --config tiny --tol 1e-3

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
Settings precedence: flags > --config (profile or JSON file) > built-in defaults.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import torch

from . import __version__
from .assignment import HungarianMatcher, build_cost_matrix
from .checkpoint import load_checkpoint, save_checkpoint
from .data.dataset_file import HoiDataset, read_dataset, write_dataset
from .data.prediction_file import DetectionFile, QueryPredictionFile
from .data.synthetic import generate_synthetic
from .errors import HoiError, NumericalError, ValidationError
from .evaluation.binned import BinMode, binned_ap_analysis
from .evaluation.decoding import detect
from .evaluation.hico import eval_hico
from .evaluation.vcoco import eval_vcoco
from .gradcheck import run_gradcheck
from .logging_setup import LEVELS, configure_logging
from .losses import total_loss
from .models.configs import BACKBONE_STRIDE, ExperimentConfig, HoiSettings, load_experiment_config
from .trainer import train
from .tracking import TrainingTracker

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as validation failures (exit code 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ValidationError(f"{self.prog}: {message}")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed override")
    common.add_argument("--config", default=None, help="profile name (full, desk, tiny) or JSON experiment file")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--report", default=None, help="report path")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="hoi", description="Query-based HOI detection toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen-synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--images", type=int, default=None)
    p.add_argument("--objects", type=int, default=None, help="number of object classes")
    p.add_argument("--size", type=int, default=None, help="square image size in pixels")
    p.set_defaults(handler=cmd_gen_synth)

    p = sub.add_parser("train-toy", parents=[common], help="train the network on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(handler=cmd_train_toy)

    p = sub.add_parser("predict", parents=[common], help="decode detections with a trained checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--queries-out", default=None, help="also write the raw per-query predictions")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("match", parents=[common], help="dump cost matrices and assignments")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True, help="query-prediction file")
    p.set_defaults(handler=cmd_match)

    p = sub.add_parser("loss", parents=[common], help="print the loss breakdown per image")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True, help="query-prediction file")
    p.set_defaults(handler=cmd_loss)

    for name, handler in (("eval-hico", cmd_eval_hico), ("eval-vcoco", cmd_eval_vcoco)):
        p = sub.add_parser(name, parents=[common], help=f"{name[5:].upper()} mAP report")
        p.add_argument("--gt", required=True)
        p.add_argument("--pred", required=True, help="detection file")
        p.add_argument("--iou-threshold", type=float, default=None)
        if name == "eval-hico":
            p.add_argument("--counts", default=None, help="dataset whose header holds the training counts")
            p.add_argument("--rare-threshold", type=int, default=None)
        else:
            p.add_argument("--scenario", type=int, choices=(1, 2), default=None)
            p.add_argument("--exclude", type=int, nargs="*", default=None, help="action ids left out of the mAP")
        p.set_defaults(handler=handler)

    p = sub.add_parser("bin-analysis", parents=[common], help="AP per distance or area bin, as CSV")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True, help="detection file")
    p.add_argument("--mode", choices=[m.value for m in BinMode], default=BinMode.DISTANCE.value)
    p.add_argument("--bin-width", type=float, default=None)
    p.add_argument("--min-instances", type=int, default=None)
    p.set_defaults(handler=cmd_bin_analysis)

    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    p.add_argument("--tol", type=float, default=1e-3, help="relative tolerance")
    p.add_argument("--atol", type=float, default=1e-6)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--samples", type=int, default=None, help="coordinates per parameter (default: all)")
    p.set_defaults(handler=cmd_gradcheck)
    return parser


# --- helpers -------------------------------------------------------------------

def _experiment(args: argparse.Namespace, default_profile: Optional[str] = None,
                overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> ExperimentConfig:
    config = load_experiment_config(args.config or default_profile)
    return config.with_overrides(overrides or {})


def _output_path(args: argparse.Namespace, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(HoiSettings().output_dir) / default_name


def _write_json(path: Optional[str], payload: Any) -> None:
    text = json.dumps(payload, indent=2)
    if path is None:
        print(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")


def _model_overrides_for(dataset: HoiDataset) -> Dict[str, Any]:
    header = dataset.header
    if header.image_h % BACKBONE_STRIDE or header.image_w % BACKBONE_STRIDE:
        raise ValidationError(f"image size {header.image_h}x{header.image_w} is not a multiple of {BACKBONE_STRIDE}")
    return {
        "n_obj_classes": header.n_obj_classes,
        "n_act_classes": header.n_act_classes,
        "image_h": header.image_h,
        "image_w": header.image_w,
        "grid_h": header.image_h // BACKBONE_STRIDE,
        "grid_w": header.image_w // BACKBONE_STRIDE,
    }


def _paired_queries(dataset: HoiDataset, queries: QueryPredictionFile):
    gts = dataset.gts_per_image()
    missing = [image_id for image_id in queries.predictions if image_id not in gts]
    if missing:
        raise ValidationError(f"query predictions for unknown images: {', '.join(missing[:5])}")
    return [(image_id, gts[image_id], preds) for image_id, preds in queries.predictions.items()]


# --- subcommands ---------------------------------------------------------------

def cmd_gen_synth(args: argparse.Namespace) -> int:
    synth = {"seed": args.seed, "n_images": args.images, "n_obj_classes": args.objects,
             "image_h": args.size, "image_w": args.size}
    config = _experiment(args, overrides={"synth": synth})
    dataset = generate_synthetic(config.synth)
    write_dataset(dataset, _output_path(args, "data"))
    return 0


def cmd_train_toy(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    train_overrides = {"steps": args.steps, "lr": args.lr, "batch_size": args.batch_size, "seed": args.seed}
    model_overrides = dict(_model_overrides_for(dataset), seed=args.seed)
    config = _experiment(args, "desk", {"train": train_overrides, "model": model_overrides})

    out_dir = _output_path(args, "train")
    tracker = TrainingTracker(log_every=config.train.log_every, record_time=False)
    result = train(dataset.images_tensor(), [record.instances for record in dataset.records], config,
                   tracker=tracker)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, out_dir / "checkpoint.jsonl")
    tracker.export_to_json(str(out_dir / "history.json"))
    (out_dir / "experiment.json").write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Loss {result.initial_loss:.6f} -> {result.final_loss:.6f}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    model = load_checkpoint(args.checkpoint)
    config = _experiment(args, overrides={"eval": {"top_k": args.top_k}})
    images = dataset.images_tensor()

    detections = detect(model, images, dataset.image_ids, config.eval)
    DetectionFile(dataset.header.n_obj_classes, dataset.header.n_act_classes, detections).write(
        _output_path(args, "predictions.jsonl"))

    if args.queries_out:
        queries = {image_id: model.predict(image)[0].to_predictions()
                   for image_id, image in zip(dataset.image_ids, images)}
        QueryPredictionFile(dataset.header.n_obj_classes, dataset.header.n_act_classes, queries).write(
            args.queries_out)
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    config = _experiment(args)
    matcher = HungarianMatcher(config.cost_weights)
    payload: List[Dict[str, Any]] = []
    for image_id, gts, preds in _paired_queries(read_dataset(args.gt, load_rasters=False),
                                                QueryPredictionFile.read(args.pred)):
        cost = build_cost_matrix(gts, preds, config.cost_weights)
        assignment = matcher.match(gts, preds)
        payload.append({"image_id": image_id, "cost_matrix": cost.tolist(), **assignment.to_dict()})
    _write_json(args.out, payload)
    return 0


def cmd_loss(args: argparse.Namespace) -> int:
    config = _experiment(args)
    matcher = HungarianMatcher(config.cost_weights)
    rows = []
    for image_id, gts, preds in _paired_queries(read_dataset(args.gt, load_rasters=False),
                                                QueryPredictionFile.read(args.pred)):
        breakdown = total_loss(gts, preds, matcher.match(gts, preds), config.loss_weights)
        print(f"{image_id}\ttotal={breakdown.total:.6f}\tbox={breakdown.box:.6f}\tgiou={breakdown.giou:.6f}"
              f"\tclass={breakdown.obj_class:.6f}\taction={breakdown.action:.6f}")
        rows.append({"image_id": image_id, **breakdown.to_dict()})
    if args.out:
        _write_json(args.out, rows)
    return 0


def _evaluation_inputs(args: argparse.Namespace):
    dataset = read_dataset(args.gt, load_rasters=False)
    predictions = DetectionFile.read(args.pred)
    header = dataset.header
    if (predictions.n_obj_classes, predictions.n_act_classes) != (header.n_obj_classes, header.n_act_classes):
        raise ValidationError("prediction file vocabulary does not match the dataset header")
    return dataset, predictions.detections


def _write_report(report, args: argparse.Namespace, default_name: str) -> None:
    for line in report.lines():
        if "\tmAP\t" in line:
            print(line)
    report.write(args.report or _output_path(args, default_name))


def cmd_eval_hico(args: argparse.Namespace) -> int:
    config = _experiment(args, overrides={"eval": {"iou_threshold": args.iou_threshold,
                                                   "rare_threshold": args.rare_threshold}})
    dataset, detections = _evaluation_inputs(args)
    counts_source = read_dataset(args.counts, load_rasters=False) if args.counts else dataset
    counts = counts_source.header.hoi_counts
    report = eval_hico(detections, dataset.gts_per_image(), counts, dataset.header.n_obj_classes,
                       dataset.header.n_act_classes, config.eval)
    _write_report(report, args, "hico_report.txt")
    return 0


def cmd_eval_vcoco(args: argparse.Namespace) -> int:
    excluded = tuple(args.exclude) if args.exclude is not None else None
    config = _experiment(args, overrides={"eval": {"iou_threshold": args.iou_threshold, "vcoco_scenario": args.scenario,
                                                   "vcoco_excluded_actions": excluded}})
    dataset, detections = _evaluation_inputs(args)
    report = eval_vcoco(detections, dataset.gts_per_image(), dataset.header.n_obj_classes,
                        dataset.header.n_act_classes, config.eval)
    _write_report(report, args, "vcoco_report.txt")
    return 0


def cmd_bin_analysis(args: argparse.Namespace) -> int:
    config = _experiment(args, overrides={"eval": {"bin_width": args.bin_width,
                                                   "min_bin_instances": args.min_instances}})
    dataset, detections = _evaluation_inputs(args)
    table = binned_ap_analysis(detections, dataset.gts_per_image(), dataset.header.n_obj_classes,
                               dataset.header.n_act_classes, BinMode(args.mode), config.eval)
    out = _output_path(args, f"bins_{args.mode}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False, float_format="%.6f")
    logger.info(f"Wrote {len(table)} bins to {out}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    config = _experiment(args, "tiny")
    report = run_gradcheck(config, n_instances=args.instances, seed=args.seed or 0, step=args.step,
                           rtol=args.tol, atol=args.atol, samples_per_param=args.samples)
    print(f"checked {report.n_checked} coordinates ({report.n_skipped} skipped on ReLU kinks), "
          f"{len(report.failures)} mismatches, "
          f"max relative error {report.max_rel_error:.3e}")
    if args.report:
        _write_json(args.report, {"n_checked": report.n_checked, "n_skipped": report.n_skipped,
                                  "max_rel_error": report.max_rel_error,
                                  "max_abs_error": report.max_abs_error,
                                  "failures": [vars(f) for f in report.failures]})
    if not report.passed:
        first = report.failures[0]
        raise NumericalError(f"gradient mismatch at {first.parameter}[{first.index}]: analytic {first.analytic:.6e} "
                             f"vs numeric {first.numeric:.6e}", component=first.parameter)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = HoiSettings()
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level or settings.log_level)
        torch.set_num_threads(settings.num_threads)
        return args.handler(args)
    except HoiError as e:
        configure_logging(settings.log_level if settings.log_level.upper() in LEVELS else "INFO")
        logger.error(str(e))
        return e.exit_code
    except OSError as e:
        configure_logging(settings.log_level if settings.log_level.upper() in LEVELS else "INFO")
        logger.error(f"I/O error: {e}")
        return ValidationError.exit_code


if __name__ == "__main__":
    sys.exit(main())
