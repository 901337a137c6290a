"""Corpus manifest loading.

Manifest format: JSON Lines, one record per line. Fields:

    foreground_path   required, relative to the manifest's directory
    alpha_path        required
    background_path   optional (required by `compose` unless a pool exists)
    split             "train" | "val" | "test"
    id                optional; defaults to the foreground file stem

Blank lines and lines starting with '#' are skipped.
"""
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from errors import ManifestError
from file_storage import read_image, read_matte
from models import AlphaMatte, CorpusManifest, ImageBuffer, ManifestRecord

logger = logging.getLogger(__name__)


def parse_manifest(text: str) -> CorpusManifest:
    """Parse manifest text into a CorpusManifest.

    Raises:
        ManifestError: naming the offending line
    """
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            records.append(ManifestRecord.model_validate_json(line))
        except ValidationError as e:
            raise ManifestError(f"line {lineno}: {e.errors()[0]['msg']}") from e
    ids = [r.record_id for r in records]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ManifestError(f"duplicate record ids: {', '.join(dupes)}")
    return CorpusManifest(records=records)


def serialize_manifest(manifest: CorpusManifest) -> str:
    lines = [r.model_dump_json(exclude_none=True) for r in manifest.records]
    return "".join(f"{line}\n" for line in lines)


def load_manifest(path: Union[str, Path]) -> CorpusManifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ManifestError(f"cannot read {path}: {e}") from e
    manifest = parse_manifest(text)
    logger.info("Loaded %d records from %s", len(manifest.records), path)
    return manifest


# --- Record assets ---

def resolve(base_dir: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base_dir / p


def load_foreground(base_dir: Path, record: ManifestRecord) -> ImageBuffer:
    return read_image(resolve(base_dir, record.foreground_path))


def load_alpha(base_dir: Path, record: ManifestRecord) -> AlphaMatte:
    return read_matte(resolve(base_dir, record.alpha_path))


def load_background(base_dir: Path, rel: Optional[str]) -> ImageBuffer:
    if rel is None:
        raise ManifestError("record has no background_path")
    return read_image(resolve(base_dir, rel))
