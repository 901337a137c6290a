"""Batch compositing service.

compose_corpus() turns manifest records into training/testing composites:

1. Load foreground + alpha (optionally flip, crop and resize them together)
2. Pick the background: the record's own, else a seeded draw from the
   manifest's background pool
3. Resize the background to the foreground and composite
4. Optionally harmonize the composite using the binarized alpha as mask
5. Write composite/<id>.png and alpha/<id>.png atomically; an alpha that was
   not flipped, cropped or resized is copied byte for byte

Every record draws from its own generator seeded with (seed, record index),
so outputs do not depend on worker count or scheduling.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from tqdm import tqdm

from compositor import binarize_alpha, composite
from config import Settings, get_settings
from data_loader import load_background, load_foreground, resolve
from errors import ManifestError, MattingError, ShapeMismatch
from file_storage import copy_file_atomic, read_matte_with_depth, write_png
from harmony import harmonize as harmonize_composite
from models import CorpusManifest, ManifestRecord, RecordFailure
from raster_utils import apply_policy, crop, crop_box, flip_horizontal, resize_bilinear, to_channels

logger = logging.getLogger(__name__)


class ComposeOptions(BaseModel):
    harmonize: bool = False
    flip: bool = False
    # Seeded crop×crop patch of fg + alpha, applied before any resize
    crop: Optional[int] = Field(default=None, ge=1)
    resize: Optional[str] = None


class ComposeResult(BaseModel):
    """Outcome of a batch run, in manifest order."""
    composed: list[str] = Field(default_factory=list)
    failures: list[RecordFailure] = Field(default_factory=list)
    files: list[str] = Field(default_factory=list)

    def summary(self) -> str:
        return f"composed {len(self.composed)} records ({len(self.failures)} failed)"


def background_pool(manifest: CorpusManifest) -> list[str]:
    """Distinct background paths in first-seen order."""
    seen: dict[str, None] = {}
    for r in manifest.records:
        if r.background_path:
            seen.setdefault(r.background_path, None)
    return list(seen)


def compose_record(
    index: int,
    record: ManifestRecord,
    base_dir: Path,
    out_dir: Path,
    pool: list[str],
    settings: Settings,
    options: ComposeOptions,
) -> list[Path]:
    """Compose one record and write its two output files."""
    rng = np.random.default_rng([settings.batch.seed, index])

    fg = load_foreground(base_dir, record)
    alpha_src = resolve(base_dir, record.alpha_path)
    alpha, alpha_depth = read_matte_with_depth(alpha_src)
    if fg.size != alpha.size:
        raise ShapeMismatch(f"foreground {fg.size} vs alpha {alpha.size}")

    bg_path = record.background_path
    if bg_path is None:
        if not pool:
            raise ManifestError("record has no background_path and the manifest has no backgrounds")
        bg_path = pool[int(rng.integers(len(pool)))]

    source_size = alpha.size
    flipped = options.flip and rng.random() < 0.5
    if flipped:
        fg, alpha = flip_horizontal(fg), flip_horizontal(alpha)
    if options.crop:
        box = crop_box(*fg.size, options.crop, rng)
        fg, alpha = crop(fg, box), crop(alpha, box)
    if options.resize:
        fg = apply_policy(fg, options.resize)
        alpha = resize_bilinear(alpha, *fg.size)
    untouched = not flipped and alpha.size == source_size and not options.resize

    bg = load_background(base_dir, bg_path)
    bg = resize_bilinear(bg, *fg.size)
    channels = max(fg.channels, bg.channels)
    image = composite(to_channels(fg, channels), to_channels(bg, channels), alpha)

    if options.harmonize:
        image = harmonize_composite(image, binarize_alpha(alpha), settings.harmony)

    rid = record.record_id
    alpha_out = out_dir / "alpha" / f"{rid}.png"
    if untouched:
        alpha_out = copy_file_atomic(alpha_src, alpha_out)
    else:
        alpha_out = write_png(alpha_out, alpha, alpha_depth)
    return [
        write_png(out_dir / "composite" / f"{rid}.png", image, settings.io.bit_depth),
        alpha_out,
    ]


def compose_corpus(
    manifest: CorpusManifest,
    base_dir: Union[str, Path],
    out_dir: Union[str, Path],
    settings: Optional[Settings] = None,
    options: Optional[ComposeOptions] = None,
) -> ComposeResult:
    """Compose every record; per-record errors are logged and collected."""
    settings = settings or get_settings()
    options = options or ComposeOptions()
    base_dir, out_dir = Path(base_dir), Path(out_dir)
    pool = background_pool(manifest)
    records = manifest.records

    def _run(item: tuple[int, ManifestRecord]):
        index, record = item
        try:
            return compose_record(index, record, base_dir, out_dir, pool, settings, options)
        except (MattingError, ValidationError, OSError) as e:
            logger.error("Compose failed for %s: %s", record.record_id, e)
            return RecordFailure(id=record.record_id, error=str(e).splitlines()[0])

    with ThreadPoolExecutor(max_workers=settings.batch.workers) as executor:
        outcomes = list(
            tqdm(executor.map(_run, enumerate(records)), total=len(records), desc="compose", disable=None)
        )

    result = ComposeResult()
    for record, outcome in zip(records, outcomes):
        if isinstance(outcome, RecordFailure):
            result.failures.append(outcome)
        else:
            result.composed.append(record.record_id)
            result.files.extend(str(p) for p in outcome)
    logger.info(result.summary())
    return result
