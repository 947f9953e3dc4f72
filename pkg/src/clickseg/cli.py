"""Command line interface.

Subcommands:
  synth     generate a synthetic suite directory
  simulate  emit training click records for a dataset
  eval      run the click-count benchmark, write a JSON report
  merge     join general+fine annotation sources by overlap
  train     fit the featherweight model on a dataset
  serve     start the HTTP session service

Predictor specs: oracle | geodesic | featherweight:MODEL.json |
remote:http://host:port. Encoding specs: disk[:radius] | dt[:cap].
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .datasets import (
    SYNTHETIC_KINDS,
    MergeConfig,
    load_dataset,
    make_synthetic_suite,
    merge_sources,
    save_dataset,
)
from .encoding import parse_encoding_spec
from .evaluation import EvalConfig, report_json, run_noc, write_report_csv
from .losses import LOSS_KINDS, LossConfig
from .predictors import (
    GeodesicPredictor,
    OraclePredictor,
    RemotePredictor,
    TrainConfig,
    load_featherweight,
    save_featherweight,
    train_featherweight,
)
from .rle import encode_mask_rle
from .sampling import SamplingConfig, generate_training_interaction


def resolve_predictor(spec: str):
    """Spec string -> (factory instance->predictor, label)."""
    name, _, arg = spec.partition(":")
    if name == "oracle":
        return (lambda inst: OraclePredictor(inst.mask)), "oracle"
    if name == "geodesic":
        shared = GeodesicPredictor()
        return (lambda inst: shared), "geodesic"
    if name == "featherweight":
        if not arg:
            raise ValueError("featherweight predictor needs a model file: "
                             "featherweight:model.json")
        model = load_featherweight(arg)
        return (lambda inst: model), spec
    if name == "remote":
        if not arg:
            raise ValueError("remote predictor needs a URL: remote:http://...")
        shared = RemotePredictor(arg)
        return (lambda inst: shared), spec
    raise ValueError(f"unknown predictor spec {spec!r}")


def _cmd_synth(args) -> int:
    records = make_synthetic_suite(args.kind, args.n, args.seed, size=args.size)
    save_dataset(records, args.out)
    print(f"wrote {len(records)} instances to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    dataset = load_dataset(args.dataset)
    factory, _ = resolve_predictor(args.predictor)
    encoder = parse_encoding_spec(args.encoding)
    cfg = SamplingConfig(n_iters_max=args.n_iters, rng_seed=args.seed)
    rng = np.random.default_rng(args.seed)
    n = 0
    with open(args.out, "w") as f:
        for inst in dataset:
            clicks, prev = generate_training_interaction(
                inst.mask, inst.image, factory(inst), encoder, cfg, rng
            )
            record = {
                "instance_id": inst.instance_id,
                "clicks": [
                    {"row": c.row, "col": c.col, "polarity": c.polarity,
                     "order": c.order}
                    for c in clicks
                ],
                "prev_mask": encode_mask_rle(prev),
            }
            f.write(json.dumps(record, sort_keys=True) + "\n")
            n += 1
    print(f"wrote {n} interaction records to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    dataset = load_dataset(args.dataset)
    factory, label = resolve_predictor(args.predictor)
    thresholds = tuple(float(t) for t in args.iou_thr.split(","))
    cfg = EvalConfig(
        iou_thresholds=thresholds,
        max_clicks=args.max_clicks,
        encoder=parse_encoding_spec(args.encoding),
        use_prev_mask=not args.no_prev_mask,
    )
    report = run_noc(dataset, factory, cfg)
    text = report_json(report, predictor_label=label)
    with open(args.out, "w") as f:
        f.write(text)
    if args.csv:
        write_report_csv(report, args.csv)
    for theta in cfg.iou_thresholds:
        print(f"NoC@{theta:g} = {report.noc_mean(theta):.3f}")
    print(f"not reached within 20: {report.count_not_reached(20)}, "
          f"within 100: {report.count_not_reached(100)} "
          f"(of {len(report.instances)})")
    return 0


def _cmd_merge(args) -> int:
    general = load_dataset(args.general)
    fine = load_dataset(args.fine)
    for rec in general:
        rec.source = "general"
    for rec in fine:
        rec.source = "fine"
    merged = merge_sources(general, fine, MergeConfig(iou_threshold=args.iou))
    save_dataset(merged, args.out)
    print(f"kept {len(merged)} of {len(general) + len(fine)} instances "
          f"({len(fine)} fine, {len(merged) - len(fine)} general)")
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    encoder = parse_encoding_spec(args.encoding)
    sampling = SamplingConfig(n_iters_max=args.n_iters, rng_seed=args.seed)
    loss = LossConfig(kind=args.loss, gamma=args.gamma)
    train = TrainConfig(lr=args.lr, epochs=args.epochs)
    rng = np.random.default_rng(args.seed)
    model, log = train_featherweight(dataset, sampling, loss, train, encoder, rng)
    save_featherweight(model, args.out)
    for epoch, value in enumerate(log, start=1):
        print(f"epoch {epoch}: mean {args.loss} {value:.4f}")
    print(f"wrote model to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import make_app

    predictors = {}
    name, _, arg = args.predictor.partition(":")
    if name == "geodesic":
        predictors["geodesic"] = GeodesicPredictor()
        default = "geodesic"
    elif name == "featherweight":
        predictors["featherweight"] = load_featherweight(arg)
        predictors["geodesic"] = GeodesicPredictor()
        default = "featherweight"
    elif name == "remote":
        predictors["remote"] = RemotePredictor(arg)
        predictors["geodesic"] = GeodesicPredictor()
        default = "remote"
    elif name == "oracle":
        predictors["geodesic"] = GeodesicPredictor()
        default = "oracle"
    else:
        raise ValueError(f"unknown predictor spec {args.predictor!r}")
    app = make_app(
        predictors,
        default,
        encoder=parse_encoding_spec(args.encoding),
        static_dir=args.static_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clickseg",
                                     description="interactive segmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--kind", choices=SYNTHETIC_KINDS, default="two_color_shapes")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("simulate", help="emit training interactions as JSONL")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictor", default="geodesic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-iters", type=int, default=3)
    p.add_argument("--encoding", default="disk:5")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("eval", help="run the click-count benchmark")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictor", required=True)
    p.add_argument("--iou-thr", default="0.85,0.90")
    p.add_argument("--max-clicks", type=int, default=20)
    p.add_argument("--encoding", default="disk:5")
    p.add_argument("--no-prev-mask", action="store_true",
                   help="ablation: feed an all-zero previous mask every click")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("merge", help="merge general+fine annotation sources")
    p.add_argument("--general", required=True)
    p.add_argument("--fine", required=True)
    p.add_argument("--iou", type=float, default=0.8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("train", help="train the featherweight model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", choices=LOSS_KINDS, default="nfl")
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--n-iters", type=int, default=3)
    p.add_argument("--encoding", default="disk:5")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("serve", help="start the annotation HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8911)
    p.add_argument("--predictor", default="geodesic")
    p.add_argument("--encoding", default="disk:5")
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
