"""Corpus evaluation service.

evaluate_corpus() scores every manifest record against its prediction file
and folds the results into a MetricsReport. Records are scored in a worker
pool; results are gathered back in manifest order so reports are
byte-stable regardless of pool size.

Per-record failures (missing prediction, shape mismatch, unreadable file)
are collected as RecordFailure entries rather than aborting the run.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError
from tqdm import tqdm

import metrics
from compositor import make_trimap, unknown_band
from config import RegionMode, Settings, get_settings
from data_loader import load_alpha
from errors import MattingError, MissingPrediction
from file_storage import read_matte, write_text_atomic
from models import CorpusManifest, ImageMetrics, ManifestRecord, MetricsReport, RecordFailure
from raster_utils import apply_policy, resize_bilinear

logger = logging.getLogger(__name__)


def prediction_path(pred_dir: Path, record: ManifestRecord) -> Path:
    return pred_dir / f"{record.record_id}.png"


def evaluate_record(
    record: ManifestRecord,
    base_dir: Path,
    pred_dir: Path,
    region_mode: RegionMode,
    settings: Settings,
    resize: Optional[str] = None,
) -> ImageMetrics:
    """Score one record.

    Raises:
        MissingPrediction: no prediction file for the record id
        MattingError: unreadable or incompatible inputs
    """
    path = prediction_path(pred_dir, record)
    if not path.is_file():
        raise MissingPrediction(f"no prediction at {path}")

    gt = load_alpha(base_dir, record)
    pred = read_matte(path)
    if resize:
        gt = apply_policy(gt, resize)
        pred = resize_bilinear(pred, *gt.size)

    region = None
    if region_mode == RegionMode.UNKNOWN:
        region = unknown_band(make_trimap(gt, settings.trimap.radius))

    m = settings.metrics
    result = ImageMetrics(
        id=record.record_id,
        sad=metrics.sad(pred, gt, region, m),
        mse=metrics.mse(pred, gt, region, m),
        grad=metrics.grad_error(pred, gt, region, m),
        conn=metrics.conn_error(pred, gt, region, m),
    )
    logger.debug("Scored %s: %s", record.record_id, result.model_dump())
    return result


def evaluate_corpus(
    manifest: CorpusManifest,
    base_dir: Union[str, Path],
    pred_dir: Union[str, Path],
    region_mode: Optional[RegionMode] = None,
    settings: Optional[Settings] = None,
    resize: Optional[str] = None,
) -> MetricsReport:
    """Evaluate every record of a manifest against predictions in pred_dir.

    Args:
        manifest: corpus records, evaluated in order
        base_dir: directory the manifest's relative paths resolve against
        pred_dir: directory holding <record id>.png predictions
        region_mode: whole image or trimap unknown band (default from settings)
        settings: effective settings (embedded in the report)
        resize: optional preprocessing policy token applied to gt and pred

    Returns:
        MetricsReport with per-image entries, aggregates and failures
    """
    settings = settings or get_settings()
    region_mode = region_mode or settings.metrics.region
    base_dir, pred_dir = Path(base_dir), Path(pred_dir)
    records = manifest.records

    def _score(record: ManifestRecord) -> Union[ImageMetrics, RecordFailure]:
        try:
            return evaluate_record(record, base_dir, pred_dir, region_mode, settings, resize)
        except (MattingError, ValidationError, OSError) as e:
            logger.error("Evaluation failed for %s: %s", record.record_id, e)
            return RecordFailure(id=record.record_id, error=str(e).splitlines()[0])

    with ThreadPoolExecutor(max_workers=settings.batch.workers) as pool:
        outcomes = list(tqdm(pool.map(_score, records), total=len(records), desc="eval", disable=None))

    per_image = [o for o in outcomes if isinstance(o, ImageMetrics)]
    failures = [o for o in outcomes if isinstance(o, RecordFailure)]
    config = settings.effective()
    config["metrics"]["region"] = region_mode.value
    config["resize"] = resize or "original"

    report = MetricsReport.from_records(per_image, failures, config)
    logger.info("Evaluated %d records, %d failed", report.count, len(failures))
    return report


# --- Report output ---

def summary_table(report: MetricsReport) -> str:
    """Human-readable table: one row per image plus the mean row."""
    header = f"{'id':<24} {'SAD':>10} {'MSE':>10} {'Grad':>10} {'Conn':>10}"
    rule = "-" * len(header)
    rows = [header, rule]
    for m in report.per_image:
        rows.append(f"{m.id:<24} {m.sad:>10.3f} {m.mse:>10.3f} {m.grad:>10.3f} {m.conn:>10.3f}")
    a = report.aggregate
    rows.append(rule)
    rows.append(
        f"{'mean (n=' + str(report.count) + ')':<24} "
        f"{a.mean_sad:>10.3f} {a.mean_mse:>10.3f} {a.mean_grad:>10.3f} {a.mean_conn:>10.3f}"
    )
    for f in report.failures:
        rows.append(f"FAILED {f.id}: {f.error}")
    rows.append("")
    rows.append("config: " + json.dumps(report.config, sort_keys=True))
    return "\n".join(rows) + "\n"


def write_report(report: MetricsReport, out_dir: Union[str, Path]) -> list[Path]:
    """Write metrics.jsonl, summary.json and summary.txt into out_dir."""
    out_dir = Path(out_dir)
    per_image = "".join(m.model_dump_json() + "\n" for m in report.per_image)
    summary = json.dumps(
        {
            "aggregate": report.aggregate.model_dump(),
            "count": report.count,
            "failures": [f.model_dump() for f in report.failures],
            "config": report.config,
        },
        indent=2,
        sort_keys=True,
    )
    return [
        write_text_atomic(out_dir / "metrics.jsonl", per_image),
        write_text_atomic(out_dir / "summary.json", summary + "\n"),
        write_text_atomic(out_dir / "summary.txt", summary_table(report)),
    ]
