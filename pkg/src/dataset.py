# src/dataset.py
"""
Texture sheets, patch sampling and dataset manifests.

Images are read as (K, L, 3) float64 fields in [0, 1]. Binary PPM (P6) is
parsed directly; PNG goes through Pillow.
"""
import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.errors import DatasetIOError, ParameterError
from src.logger import log_message
from src.sigcore import ImageField, as_field

IMAGE_SUFFIXES = (".ppm", ".png")

_PPM_HEADER = re.compile(rb"\AP6\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


# --- image IO ---

def _read_ppm(path: Path, raw: bytes) -> ImageField:
    match = _PPM_HEADER.match(raw)
    if not match:
        raise DatasetIOError(path, "not a binary PPM (P6) file")
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise DatasetIOError(path, f"unsupported bit depth (maxval {maxval}); only 8-bit PPM is read")
    if width < 1 or height < 1:
        raise DatasetIOError(path, f"invalid PPM size {width}x{height}")
    body = raw[match.end() :]
    expected = width * height * 3
    if len(body) < expected:
        raise DatasetIOError(path, f"truncated PPM: {len(body)} of {expected} pixel bytes")
    pixels = np.frombuffer(body, dtype=np.uint8, count=expected)
    return pixels.reshape(height, width, 3).astype(np.float64) / 255.0


def _read_png(path: Path) -> ImageField:
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise DatasetIOError(path, f"unsupported bit depth (mode {mode}); only 8-bit PNG is read")
            if mode in ("L", "LA", "1"):
                gray = np.asarray(img.convert("L"), dtype=np.float64)
                rgb = np.repeat(gray[:, :, np.newaxis], 3, axis=2)
            else:
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        if isinstance(e, DatasetIOError):
            raise
        raise DatasetIOError(path, f"cannot decode PNG: {e}", e) from e
    return rgb / 255.0


def load_image(path) -> ImageField:
    """
    Reads an 8-bit PNG or binary PPM (P6) file.

    Args:
        path: Image file path.

    Returns:
        A (K, L, 3) field normalized to [0, 1]; grayscale inputs are replicated
        to three channels.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DatasetIOError(path, f"cannot read image: {e}", e) from e
    if raw.startswith(b"P6"):
        return as_field(_read_ppm(path, raw))
    if raw.startswith(b"\x89PNG"):
        return as_field(_read_png(path))
    raise DatasetIOError(path, "unsupported image format (expected PNG or binary PPM)")


def to_bytes(x: ImageField) -> np.ndarray:
    return np.clip(np.rint(np.asarray(x) * 255.0), 0, 255).astype(np.uint8)


def save_ppm(path, x: ImageField):
    """Writes a (K, L, 3) field in [0, 1] as an 8-bit binary PPM."""
    path = Path(path)
    pixels = to_bytes(x)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ParameterError(f"PPM output needs a (K, L, 3) field, got {pixels.shape}")
    height, width = pixels.shape[:2]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(b"P6\n%d %d\n255\n" % (width, height) + pixels.tobytes())
    except OSError as e:
        raise DatasetIOError(path, f"cannot write image: {e}", e) from e


# --- patch sampling ---

def crop(sheet: ImageField, row: int, col: int, size: int) -> ImageField:
    return sheet[row : row + size, col : col + size].copy()


def _check_sheet(sheet: ImageField, size: int):
    if size < 2:
        raise ParameterError(f"patch size must be >= 2, got {size}")
    if sheet.shape[0] < size or sheet.shape[1] < size:
        raise ParameterError(f"sheet {sheet.shape[0]}x{sheet.shape[1]} is smaller than the {size}x{size} patch")


def sample_positions(sheet: ImageField, n: int, size: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Top-left corners drawn uniformly over every position where the patch fits."""
    _check_sheet(sheet, size)
    rows = rng.integers(0, sheet.shape[0] - size + 1, size=n)
    cols = rng.integers(0, sheet.shape[1] - size + 1, size=n)
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def sample_patches(sheet: ImageField, n: int, size: int, seed: int) -> List[ImageField]:
    """n size x size patches at seeded uniform positions; overlap is allowed."""
    rng = np.random.default_rng(seed)
    return [crop(sheet, r, c, size) for r, c in sample_positions(sheet, n, size, rng)]


# --- synthetic textures ---

@dataclass(frozen=True)
class TextureVariant:
    family: str
    params: Dict[str, float]

    @property
    def name(self) -> str:
        tail = "-".join(f"{k}{v:g}" for k, v in self.params.items())
        return f"{self.family}-{tail}"


# interleaved so the first n classes cover as many families as possible
TEXTURE_VARIANTS: Tuple[TextureVariant, ...] = (
    TextureVariant("stripes", {"period": 8, "angle": 0}),
    TextureVariant("checker", {"cell": 4}),
    TextureVariant("noise", {"cutoff": 0.1}),
    TextureVariant("blobs", {"density": 0.002, "radius": 6}),
    TextureVariant("stripes", {"period": 16, "angle": 45}),
    TextureVariant("checker", {"cell": 12}),
    TextureVariant("noise", {"cutoff": 0.4}),
    TextureVariant("blobs", {"density": 0.008, "radius": 3}),
    TextureVariant("stripes", {"period": 6, "angle": 90}),
    TextureVariant("checker", {"cell": 7}),
    TextureVariant("noise", {"cutoff": 0.2}),
    TextureVariant("blobs", {"density": 0.004, "radius": 10}),
    TextureVariant("stripes", {"period": 24, "angle": 135}),
    TextureVariant("checker", {"cell": 20}),
    TextureVariant("noise", {"cutoff": 0.05}),
    TextureVariant("blobs", {"density": 0.015, "radius": 2}),
)


def _normalize(v: np.ndarray) -> np.ndarray:
    lo, hi = v.min(), v.max()
    if hi - lo <= 0:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def _stripes(size: int, period: float, angle: float) -> np.ndarray:
    k, l = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = np.deg2rad(angle)
    phase = (l * np.cos(theta) + k * np.sin(theta)) / period
    return 0.5 + 0.5 * np.cos(2.0 * np.pi * phase)


def _checker(size: int, cell: float) -> np.ndarray:
    k, l = np.mgrid[0:size, 0:size]
    return np.where((k // int(cell) + l // int(cell)) % 2 == 0, 0.15, 0.85)


def _lowpass_noise(size: int, cutoff: float, rng: np.random.Generator) -> np.ndarray:
    # cutoff is a fraction of the Nyquist frequency
    white = rng.standard_normal((size, size))
    f = np.fft.fftfreq(size)
    radius = np.hypot(f[:, np.newaxis], f[np.newaxis, :])
    spectrum = np.fft.fft2(white) * (radius <= cutoff * 0.5)
    return _normalize(np.real(np.fft.ifft2(spectrum)))


def _blobs(size: int, density: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    count = max(1, int(round(density * size * size)))
    impulses = np.zeros((size, size))
    np.add.at(impulses, (rng.integers(0, size, count), rng.integers(0, size, count)), 1.0)
    f = np.fft.fftfreq(size)
    gauss = np.exp(-2.0 * (np.pi * radius) ** 2 * (f[:, np.newaxis] ** 2 + f[np.newaxis, :] ** 2))
    field = np.real(np.fft.ifft2(np.fft.fft2(impulses) * gauss))
    return np.clip(field / max(field.max(), 1e-12), 0.0, 1.0)


def render_texture(variant: TextureVariant, size: int, seed: int, tint_index: int = 0) -> ImageField:
    """
    Renders one variant as a size x size RGB sheet. The grey pattern in [0, 1]
    is mapped per channel between two colors drawn from the seed.
    """
    rng = np.random.default_rng([seed, tint_index])
    p = variant.params
    if variant.family == "stripes":
        base = _stripes(size, p["period"], p["angle"])
    elif variant.family == "checker":
        base = _checker(size, p["cell"])
    elif variant.family == "noise":
        base = _lowpass_noise(size, p["cutoff"], rng)
    elif variant.family == "blobs":
        base = _blobs(size, p["density"], p["radius"], rng)
    else:
        raise ParameterError(f"unknown texture family {variant.family!r}")
    dark = rng.uniform(0.05, 0.45, size=3)
    light = rng.uniform(0.55, 0.95, size=3)
    return dark + (light - dark) * base[:, :, np.newaxis]


def synth_textures(n_classes: int, sheet_size: int = 256, seed: int = 0) -> List[Tuple[str, ImageField]]:
    """
    Deterministic texture sheets, one per class, from the built-in variants.

    Args:
        n_classes: Number of classes, 2 <= n_classes <= len(TEXTURE_VARIANTS).
        sheet_size: Side of each square sheet in pixels.
        seed: Master seed; class i renders with the stream (seed, i).

    Returns:
        (class name, sheet) pairs in class order.
    """
    if not 2 <= n_classes <= len(TEXTURE_VARIANTS):
        raise ParameterError(f"n_classes must be in [2, {len(TEXTURE_VARIANTS)}], got {n_classes}")
    return [
        (variant.name, render_texture(variant, sheet_size, seed, i))
        for i, variant in enumerate(TEXTURE_VARIANTS[:n_classes])
    ]


# --- manifests ---

@dataclass
class SheetRecord:
    id: str
    class_index: int
    path: Optional[str] = None
    meta: Dict[str, object] = field(default_factory=dict)


@dataclass
class ManifestEntry:
    index: int
    class_index: int
    split: str
    sheet: str
    row: int
    col: int
    path: Optional[str] = None


@dataclass
class DatasetManifest:
    classes: List[str]
    sheets: List[SheetRecord]
    entries: List[ManifestEntry]
    patch_size: int
    seed: int

    def split(self, name: str) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def counts(self) -> Dict[str, Tuple[int, int]]:
        out = {}
        for ci, name in enumerate(self.classes):
            rows = [e for e in self.entries if e.class_index == ci]
            out[name] = (sum(e.split == "train" for e in rows), sum(e.split == "test" for e in rows))
        return out

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "patch_size": self.patch_size,
            "seed": self.seed,
            "sheets": [asdict(s) for s in self.sheets],
            "entries": [asdict(e) for e in self.entries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        return cls(
            classes=list(data["classes"]),
            sheets=[SheetRecord(**s) for s in data["sheets"]],
            entries=[ManifestEntry(**e) for e in data["entries"]],
            patch_size=int(data["patch_size"]),
            seed=int(data["seed"]),
        )


@dataclass
class TextureSheet:
    class_name: str
    id: str
    field: ImageField
    path: Optional[str] = None
    meta: Dict[str, object] = field(default_factory=dict)


def _draw(rng: np.random.Generator, sheets: Sequence[TextureSheet], size: int) -> Tuple[int, int, int]:
    s = int(rng.integers(0, len(sheets))) if len(sheets) > 1 else 0
    [(row, col)] = sample_positions(sheets[s].field, 1, size, rng)
    return s, row, col


def build_manifest(
    sheets: Sequence[TextureSheet],
    n_train: int,
    n_test: int,
    patch_size: int,
    seed: int,
) -> DatasetManifest:
    """
    Samples train and test patch positions for every class.

    Each class draws from its own stream spawned from `seed`, train positions
    first. A test position equal to a train position (same sheet and corner) is
    redrawn; overlapping but distinct patches are kept.
    """
    if n_train < 1 or n_test < 0:
        raise ParameterError(f"need n_train >= 1 and n_test >= 0, got {n_train}, {n_test}")
    classes: List[str] = []
    for sheet in sheets:
        if sheet.class_name not in classes:
            classes.append(sheet.class_name)
    if len(classes) < 2:
        raise ParameterError(f"classification needs at least 2 classes, got {len(classes)}")
    by_class = {name: [s for s in sheets if s.class_name == name] for name in classes}
    for s in sheets:
        _check_sheet(s.field, patch_size)

    streams = np.random.SeedSequence(seed).spawn(len(classes))
    entries: List[ManifestEntry] = []
    for ci, name in enumerate(classes):
        rng = np.random.default_rng(streams[ci])
        own = by_class[name]
        capacity = sum((s.field.shape[0] - patch_size + 1) * (s.field.shape[1] - patch_size + 1) for s in own)
        train = [_draw(rng, own, patch_size) for _ in range(n_train)]
        taken = set(train)
        if n_test and len(taken) >= capacity:
            raise ParameterError(f"class {name!r}: no patch position left for testing")
        test = []
        resampled = 0
        for _ in range(n_test):
            pos = _draw(rng, own, patch_size)
            while pos in taken:
                resampled += 1
                pos = _draw(rng, own, patch_size)
            test.append(pos)
        if resampled:
            log_message("WARNING", f"class {name!r}: redrew {resampled} test positions that matched train patches")
        for split, positions in (("train", train), ("test", test)):
            for s, row, col in positions:
                entries.append(
                    ManifestEntry(
                        index=len(entries), class_index=ci, split=split, sheet=own[s].id, row=row, col=col
                    )
                )

    records = [
        SheetRecord(id=s.id, class_index=classes.index(s.class_name), path=s.path, meta=dict(s.meta))
        for s in sheets
    ]
    return DatasetManifest(classes=classes, sheets=records, entries=entries, patch_size=patch_size, seed=seed)


def manifest_json(manifest: DatasetManifest) -> str:
    return json.dumps(manifest.to_dict(), indent=1, sort_keys=True)


def manifest_digest(manifest: DatasetManifest) -> str:
    return hashlib.sha256(manifest_json(manifest).encode("utf-8")).hexdigest()


def save_manifest(manifest: DatasetManifest, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(manifest_json(manifest), encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(path, f"cannot write manifest: {e}", e) from e


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        return DatasetManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except OSError as e:
        raise DatasetIOError(path, f"cannot read manifest: {e}", e) from e
    except (ValueError, KeyError, TypeError) as e:
        raise DatasetIOError(path, f"malformed manifest: {e}", e) from e


def materialize_patches(manifest: DatasetManifest, root, out_dir: str = "patches"):
    """Writes every patch as a PPM under root/out_dir and records the paths in the manifest."""
    root = Path(root)
    sheets = load_sheets(manifest, root)
    counters: Dict[Tuple[int, str], int] = {}
    for entry in manifest.entries:
        key = (entry.class_index, entry.split)
        position = counters.get(key, 0)
        counters[key] = position + 1
        name = f"{manifest.classes[entry.class_index]}_{entry.split}_{position}.ppm"
        rel = f"{out_dir}/{name}"
        save_ppm(root / rel, crop(sheets[entry.sheet], entry.row, entry.col, manifest.patch_size))
        entry.path = rel


def load_sheets(manifest: DatasetManifest, root) -> Dict[str, ImageField]:
    root = Path(root)
    sheets = {}
    for record in manifest.sheets:
        if record.path is None:
            raise DatasetIOError(root, f"sheet {record.id!r} has no file path in the manifest")
        sheets[record.id] = load_image(root / record.path)
    return sheets


def load_patches(manifest: DatasetManifest, root, workers: int = 1) -> List[ImageField]:
    """
    Patch pixels in manifest order: materialized patch files when the entry has
    a path, otherwise crops of the sheet at the recorded corner.
    """
    root = Path(root)
    needs_sheets = any(e.path is None for e in manifest.entries)
    sheets = load_sheets(manifest, root) if needs_sheets else {}

    def one(entry: ManifestEntry) -> ImageField:
        if entry.path is not None:
            patch = load_image(root / entry.path)
        else:
            patch = crop(sheets[entry.sheet], entry.row, entry.col, manifest.patch_size)
        if patch.shape[:2] != (manifest.patch_size, manifest.patch_size):
            raise DatasetIOError(root / (entry.path or entry.sheet), f"patch {entry.index} has shape {patch.shape}")
        return patch

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, manifest.entries))
    return [one(e) for e in manifest.entries]


def discover_sheets(root) -> List[TextureSheet]:
    """
    Loads a user texture directory. Each sub-directory is a class holding one or
    more sheets; without sub-directories every image file is its own class.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetIOError(root, "texture directory not found")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    groups: List[Tuple[str, List[Path]]]
    if subdirs:
        groups = [(d.name, sorted(f for f in d.iterdir() if f.suffix.lower() in IMAGE_SUFFIXES)) for d in subdirs]
    else:
        groups = [(f.stem, [f]) for f in sorted(root.iterdir()) if f.suffix.lower() in IMAGE_SUFFIXES]
    sheets = []
    for class_name, files in groups:
        for f in files:
            sheets.append(
                TextureSheet(
                    class_name=class_name,
                    id=f.relative_to(root).as_posix(),
                    field=load_image(f),
                    path=f.relative_to(root).as_posix(),
                )
            )
    if not sheets:
        raise DatasetIOError(root, "no PNG or PPM textures found")
    return sheets
