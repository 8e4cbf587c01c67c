"""Full-chain evaluation into one report row: emergency recall and F1 before
the delay, FP/FN ratios after it, both confusion matrices, and latency stats.

Recall and F1 are computed on the raw (pre-delay) predictions; the delay only
moves the FP/FN columns. Undefined ratios (0/0) are reported as 0 with an
explicit flag so reports stay machine-diffable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calibration import Calibration
from .classifiers import TrainedModel
from .data import Dataset
from .metrics import confusion, emergency_counts, micro_metrics
from .pipeline import VideoTrace, trace_video
from .sampling import NO_LABEL
from .stream import EmergencyEvent, detect_events, run_delay_filter, stability_latency

EMERGENCY = 1


@dataclass(frozen=True)
class EvaluationReport:
    model_name: str
    mode: str
    recall: float
    f1: float
    threshold: Optional[float]
    delay_ms: int
    fp_ratio: float
    fn_ratio: float
    fp_ratio_defined: bool
    fn_ratio_defined: bool
    confusion_no_delay: list
    confusion_with_delay: list
    latency: dict
    micro_all: dict
    micro_emergency: dict
    recall_argmax: float            # recall of plain argmax, before threshold moving
    threshold_recall_delta: float   # recall - recall_argmax
    n_frames_evaluated: int
    n_events: int

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "mode": self.mode,
            "recall": self.recall,
            "f1": self.f1,
            "threshold": self.threshold,
            "delay_ms": self.delay_ms,
            "fp_ratio": self.fp_ratio,
            "fn_ratio": self.fn_ratio,
            "fp_ratio_defined": self.fp_ratio_defined,
            "fn_ratio_defined": self.fn_ratio_defined,
            "confusion_no_delay": self.confusion_no_delay,
            "confusion_with_delay": self.confusion_with_delay,
            "latency": self.latency,
            "micro_all": self.micro_all,
            "micro_emergency": self.micro_emergency,
            "recall_argmax": self.recall_argmax,
            "threshold_recall_delta": self.threshold_recall_delta,
            "n_frames_evaluated": self.n_frames_evaluated,
            "n_events": self.n_events,
        }


def _ratio(post: int, pre: int) -> tuple[float, bool]:
    if pre == 0:
        return 0.0, False
    return post / pre, True


def evaluate_traces(
    traces: list[VideoTrace],
    n_classes: int,
    delay_ms: int,
    model_name: str,
    mode: str,
    threshold: Optional[float],
) -> tuple[EvaluationReport, list[EmergencyEvent], list]:
    """Build the report plus the post-delay event log and per-frame records."""
    pre_parts, post_parts, truth_parts, argmax_parts = [], [], [], []
    events: list[EmergencyEvent] = []
    latencies: list[float] = []
    undetected = 0
    frame_records = []
    for trace in traces:
        committed = run_delay_filter(trace.raw, delay_ms, trace.frame_period_ms)
        usable = (trace.truth != NO_LABEL) & (trace.raw != NO_LABEL)
        pre_parts.append(trace.raw[usable])
        post_parts.append(committed[usable])
        truth_parts.append(trace.truth[usable])
        argmax_parts.append(trace.argmax[usable])
        events.extend(detect_events(trace.timestamps, trace.raw, committed, trace.video_id))
        stats = stability_latency(trace.timestamps, trace.raw, trace.truth)
        latencies.extend(stats["latencies_ms"])
        undetected += stats["undetected_count"]
        for pos in range(trace.timestamps.size):
            frame_records.append(
                {
                    "video": trace.video_id,
                    "t": int(trace.timestamps[pos]),
                    "truth": int(trace.truth[pos]),
                    "raw": int(trace.raw[pos]),
                    "argmax": int(trace.argmax[pos]),
                    "committed": int(committed[pos]),
                }
            )
    preds = np.concatenate(pre_parts) if pre_parts else np.empty(0, dtype=np.int64)
    post = np.concatenate(post_parts) if post_parts else np.empty(0, dtype=np.int64)
    truths = np.concatenate(truth_parts) if truth_parts else np.empty(0, dtype=np.int64)
    argmaxes = np.concatenate(argmax_parts) if argmax_parts else np.empty(0, dtype=np.int64)

    cm_pre = confusion(preds, truths, n_classes)
    cm_post = confusion(post, truths, n_classes)
    emergency = micro_metrics(cm_pre, [EMERGENCY])
    overall = micro_metrics(cm_pre, range(n_classes))
    argmax_emergency = micro_metrics(confusion(argmaxes, truths, n_classes), [EMERGENCY])
    fp_pre, fn_pre = emergency_counts(preds, truths)
    fp_post, fn_post = emergency_counts(post, truths)
    fp_ratio, fp_defined = _ratio(fp_post, fp_pre)
    fn_ratio, fn_defined = _ratio(fn_post, fn_pre)

    latency = {
        "mean_ms": float(np.mean(latencies)) if latencies else 0.0,
        "std_ms": float(np.std(latencies)) if latencies else 0.0,
        "max_ms": float(np.max(latencies)) if latencies else 0.0,
        "detected_count": len(latencies),
        "undetected_count": undetected,
    }
    report = EvaluationReport(
        model_name=model_name,
        mode=mode,
        recall=emergency["recall"],
        f1=emergency["f1"],
        threshold=threshold,
        delay_ms=delay_ms,
        fp_ratio=fp_ratio,
        fn_ratio=fn_ratio,
        fp_ratio_defined=fp_defined,
        fn_ratio_defined=fn_defined,
        confusion_no_delay=cm_pre.to_lists(),
        confusion_with_delay=cm_post.to_lists(),
        latency=latency,
        micro_all=overall,
        micro_emergency=emergency,
        recall_argmax=argmax_emergency["recall"],
        threshold_recall_delta=emergency["recall"] - argmax_emergency["recall"],
        n_frames_evaluated=int(truths.size),
        n_events=len(events),
    )
    return report, events, frame_records


def evaluate(
    model: TrainedModel,
    calibration: Optional[Calibration],
    delay_ms: int,
    test_dataset: Dataset,
    model_name: str = "model",
) -> tuple[EvaluationReport, list[EmergencyEvent], list]:
    traces = [trace_video(model, calibration, video) for video in test_dataset.sequences]
    threshold = calibration.threshold if calibration is not None else None
    return evaluate_traces(
        traces,
        n_classes=model.n_classes,
        delay_ms=delay_ms,
        model_name=model_name,
        mode=test_dataset.mode,
        threshold=threshold,
    )


_COLUMNS = ("Application", "Model", "Recall", "F1-score", "t_hat", "d_hat [ms]", "FPd/FP", "FNd/FN")


def render_table(reports: list[EvaluationReport]) -> str:
    rows = [_COLUMNS]
    for r in reports:
        rows.append(
            (
                r.mode,
                r.model_name,
                f"{r.recall:.3f}",
                f"{r.f1:.3f}",
                "-" if r.threshold is None else f"{r.threshold:.3f}",
                str(r.delay_ms),
                f"{r.fp_ratio:.3f}" if r.fp_ratio_defined else "0/0",
                f"{r.fn_ratio:.3f}" if r.fn_ratio_defined else "0/0",
            )
        )
    widths = [max(len(row[c]) for row in rows) for c in range(len(_COLUMNS))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines) + "\n"
