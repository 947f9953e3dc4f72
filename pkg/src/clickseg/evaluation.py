"""Click-count benchmark: how many simulated clicks until a predictor's
mask reaches an IoU threshold.

The loop per instance: simulate the deterministic correction click
against the current binarized prediction (starting from all-zero), encode
the full click history, predict with the previous binarized mask as
guidance, record IoU. Stops at the highest configured threshold or at the
click cap. Instances that never reach a threshold score the cap value, so
aggregate means stay comparable across predictors that fail on different
subsets.

Reports are canonical: instances sorted by id, keys sorted, floats in
shortest-repr form. Two runs over the same inputs produce byte-identical
JSON.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .core import Click, as_mask, binarize
from .encoding import ClickEncoder
from .imageproc import iou
from .predictors import PredictorInput
from .sampling import simulate_eval_click

logger = logging.getLogger(__name__)


def threshold_key(theta: float) -> str:
    """Dict key for a threshold: shortest decimal form, '0.9' not '0.90'."""
    return f"{theta:g}"


@dataclass
class EvalConfig:
    iou_thresholds: tuple[float, ...] = (0.85, 0.90)
    max_clicks: int = 20
    binarize_threshold: float = 0.5
    encoder: ClickEncoder = field(default_factory=ClickEncoder)
    use_prev_mask: bool = True

    def __post_init__(self):
        self.iou_thresholds = tuple(sorted(self.iou_thresholds))
        if not self.iou_thresholds:
            raise ValueError("need at least one IoU threshold")
        for t in self.iou_thresholds:
            if not 0.0 < t < 1.0:
                raise ValueError(f"threshold must be in (0, 1), got {t}")
        if self.max_clicks < 1:
            raise ValueError(f"max_clicks must be >= 1, got {self.max_clicks}")


@dataclass
class InstanceEval:
    instance_id: str
    noc: dict[str, int]
    iou_trace: list[float]
    clicks: list[Click]
    error: str | None = None

    def reached(self, theta: float, within: int) -> bool:
        """True if IoU hit theta in the first `within` recorded clicks."""
        return any(v >= theta for v in self.iou_trace[:within])


@dataclass
class EvalReport:
    config: EvalConfig
    instances: list[InstanceEval]

    def noc_mean(self, theta: float) -> float:
        key = threshold_key(theta)
        return float(np.mean([rec.noc[key] for rec in self.instances]))

    def count_not_reached(self, within: int) -> int:
        """Instances that never hit the highest threshold in the first
        min(within, max_clicks) clicks."""
        theta = self.config.iou_thresholds[-1]
        lim = min(within, self.config.max_clicks)
        return sum(1 for rec in self.instances if not rec.reached(theta, lim))


def evaluate_instance(image: np.ndarray, gt: np.ndarray, predictor,
                      cfg: EvalConfig, instance_id: str = "") -> InstanceEval:
    """Run the click loop on one instance.

    A predictor exception aborts the instance: it is logged, recorded on
    the result, and scored as never reaching any threshold.
    """
    gt = as_mask(gt)
    if not gt.any():
        raise ValueError(f"empty ground truth for instance {instance_id!r}")
    h, w = gt.shape
    clicks: list[Click] = []
    trace: list[float] = []
    pred = np.zeros((h, w), dtype=np.uint8)
    prev = np.zeros((h, w), dtype=np.uint8)
    error: str | None = None
    top = cfg.iou_thresholds[-1]
    while len(clicks) < cfg.max_clicks:
        click = simulate_eval_click(pred, gt)
        if click is None:
            break
        clicks.append(dc_replace(click, order=len(clicks)))
        inp = PredictorInput(
            image=image,
            guidance=cfg.encoder(clicks, h, w),
            prev_mask=prev if cfg.use_prev_mask else np.zeros((h, w), dtype=np.uint8),
        )
        try:
            prob = predictor.predict(inp)
        except Exception as exc:
            error = f"{type(exc).__name__}: {exc}"
            logger.warning("instance %s failed at click %d: %s",
                           instance_id, len(clicks), error)
            break
        pred = binarize(prob, cfg.binarize_threshold)
        prev = pred
        trace.append(iou(pred, gt))
        if trace[-1] >= top:
            break
    noc = {}
    for theta in cfg.iou_thresholds:
        hit = next((k + 1 for k, v in enumerate(trace) if v >= theta), None)
        noc[threshold_key(theta)] = hit if hit is not None else cfg.max_clicks
    return InstanceEval(instance_id=instance_id, noc=noc, iou_trace=trace,
                        clicks=clicks, error=error)


def run_noc(dataset, predictor, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Evaluate every instance and assemble a report.

    predictor is either a predictor object or a callable
    instance -> predictor (needed when the predictor depends on the
    instance, as the harness-verification oracle does).
    """
    if not dataset:
        raise ValueError("empty dataset")
    if hasattr(predictor, "predict"):
        factory = lambda inst: predictor
    elif callable(predictor):
        factory = predictor
    else:
        raise TypeError("predictor must expose .predict or be a factory callable")
    records = []
    for inst in sorted(dataset, key=lambda r: r.instance_id):
        records.append(
            evaluate_instance(inst.image, inst.mask, factory(inst), cfg,
                              instance_id=inst.instance_id)
        )
    return EvalReport(config=cfg, instances=records)


def mean_iou_curve(report: EvalReport) -> list[float]:
    """Mean IoU after k clicks, k = 1..max_clicks.

    Instances that stopped early (converged or errored) carry their final
    IoU forward; an instance with no recorded IoU contributes 0.
    """
    if not report.instances:
        raise ValueError("empty report")
    cap = report.config.max_clicks
    rows = []
    for rec in report.instances:
        t = list(rec.iou_trace)
        last = t[-1] if t else 0.0
        rows.append(t + [last] * (cap - len(t)))
    return [float(v) for v in np.mean(np.asarray(rows), axis=0)]


def report_to_dict(report: EvalReport, predictor_label: str = "") -> dict:
    noc_agg = {
        threshold_key(t): report.noc_mean(t) for t in report.config.iou_thresholds
    }
    instances = []
    for rec in report.instances:
        row = {"id": rec.instance_id, "noc": rec.noc, "iou_trace": rec.iou_trace}
        if rec.error is not None:
            row["error"] = rec.error
        instances.append(row)
    return {
        "config": {
            "iou_thresholds": list(report.config.iou_thresholds),
            "max_clicks": report.config.max_clicks,
            "binarize_threshold": report.config.binarize_threshold,
            "encoding": report.config.encoder.spec,
            "use_prev_mask": report.config.use_prev_mask,
            "predictor": predictor_label,
        },
        "instances": instances,
        "aggregates": {
            "noc": noc_agg,
            "ge20": report.count_not_reached(20),
            "ge100": report.count_not_reached(100),
            "mean_iou_curve": mean_iou_curve(report),
        },
    }


def report_json(report: EvalReport, predictor_label: str = "") -> str:
    """Canonical serialization: byte-identical for identical runs."""
    return json.dumps(report_to_dict(report, predictor_label),
                      sort_keys=True, indent=2) + "\n"


def write_report_csv(report: EvalReport, path) -> None:
    keys = [threshold_key(t) for t in report.config.iou_thresholds]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["instance_id"] + [f"noc@{k}" for k in keys]
                        + ["clicks_used", "final_iou", "error"])
        for rec in report.instances:
            final = rec.iou_trace[-1] if rec.iou_trace else 0.0
            writer.writerow([rec.instance_id] + [rec.noc[k] for k in keys]
                            + [len(rec.clicks), f"{final:.6f}", rec.error or ""])
