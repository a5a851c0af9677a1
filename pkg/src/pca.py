# src/pca.py
"""Eigen-texture style PCA on flattened raw pixels."""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from src.errors import DatasetIOError, ParameterError
from src.logger import log_message
from src.sigcore import ImageField


@dataclass(frozen=True)
class PcaModel:
    dims: Tuple[int, int, int]
    mean: np.ndarray
    components: np.ndarray  # (n, P), rows orthonormal, descending variance
    explained_variance_ratio: np.ndarray
    rank_deficient: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def _flatten(images: Sequence[ImageField]) -> Tuple[np.ndarray, Tuple[int, int, int]]:
    dims = tuple(np.shape(images[0]))
    if len(dims) != 3:
        raise ParameterError(f"images must have shape (K, L, d), got {dims}")
    for img in images:
        if np.shape(img) != dims:
            raise ParameterError(f"all images must share dimensions {dims}, got {np.shape(img)}")
    return np.stack([np.asarray(img, dtype=np.float64).reshape(-1) for img in images]), dims


def pca_fit(images: Sequence[ImageField], n_components: int) -> PcaModel:
    """
    Fits principal components via an SVD of the mean-centered data matrix.

    Args:
        images: At least two images with identical (K, L, d).
        n_components: Number of components, 1 <= n_components <= min(#images - 1, K*L*d).

    Returns:
        A PcaModel. When the data has rank below n_components, only the
        non-degenerate components are kept and `rank_deficient` is set.
    """
    if len(images) < 2:
        raise ParameterError(f"PCA needs at least 2 images, got {len(images)}")
    data, dims = _flatten(images)
    n, p = data.shape
    if not 1 <= n_components <= min(n - 1, p):
        raise ParameterError(f"n_components must be in [1, {min(n - 1, p)}], got {n_components}")

    mean = data.mean(axis=0)
    centered = data - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)

    # relative to the data scale, so identical images read as rank 0 despite rounding in the mean
    tol = np.linalg.norm(data) * max(n, p) * np.finfo(np.float64).eps
    rank = int(np.sum(s > tol))
    keep = min(rank, n_components)
    rank_deficient = keep < n_components
    if rank_deficient:
        log_message("WARNING", f"PCA data has rank {rank}; returning {keep} of {n_components} components")

    variances = s**2 / (n - 1)
    total = variances[:rank].sum()
    components = vt[:keep].copy()
    # largest-magnitude entry of every component is positive
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(keep), pivots])
    components *= signs[:, np.newaxis]
    ratio = variances[:keep] / total if total > 0 else np.zeros(0)

    return PcaModel(
        dims=dims,
        mean=mean,
        components=components,
        explained_variance_ratio=ratio,
        rank_deficient=rank_deficient,
    )


def pca_transform(model: PcaModel, x: ImageField) -> np.ndarray:
    """Coordinates of flatten(x) - mean on every component."""
    if tuple(np.shape(x)) != model.dims:
        raise ParameterError(f"image dimensions {np.shape(x)} do not match the PCA model {model.dims}")
    return model.components @ (np.asarray(x, dtype=np.float64).reshape(-1) - model.mean)


def pca_reconstruct(model: PcaModel, coords: np.ndarray) -> np.ndarray:
    """Inverse of pca_transform on the component span, as a flattened image."""
    return model.mean + np.asarray(coords, dtype=np.float64) @ model.components


def pca_to_dict(model: PcaModel) -> dict:
    return {
        "dims": list(model.dims),
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "explained_variance_ratio": model.explained_variance_ratio.tolist(),
        "rank_deficient": model.rank_deficient,
    }


def pca_from_dict(data: dict) -> PcaModel:
    p = int(np.prod(data["dims"]))
    components = np.asarray(data["components"], dtype=np.float64).reshape(-1, p)
    return PcaModel(
        dims=tuple(data["dims"]),
        mean=np.asarray(data["mean"], dtype=np.float64),
        components=components,
        explained_variance_ratio=np.asarray(data["explained_variance_ratio"], dtype=np.float64),
        rank_deficient=bool(data.get("rank_deficient", False)),
    )


def save_pca(model: PcaModel, path: Path):
    # json writes the shortest repr that round-trips each double exactly
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(pca_to_dict(model)), encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(path, f"cannot write PCA model: {e}", e) from e


def load_pca(path: Path) -> PcaModel:
    try:
        return pca_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError) as e:
        raise DatasetIOError(path, f"cannot read PCA model: {e}", e) from e


def variance_profile(model: PcaModel, count: int = 5) -> List[str]:
    return [f"pc{j + 1}={r:.3f}" for j, r in enumerate(model.explained_variance_ratio[:count])]
