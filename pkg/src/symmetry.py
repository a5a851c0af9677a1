# src/symmetry.py
"""
The dihedral group of the square acting on image patches, and orientation
averaging of signature features.

Conventions: row 0 is the top of the image, ROT90 turns the image
counterclockwise (pixel (k, l) moves to (L-1-l, k)), FLIP_H reverses columns.
Each element is stored as (r, f): first reverse columns if f, then rotate
counterclockwise r quarter turns.
"""
import enum
from concurrent.futures import Executor
from typing import Callable, Optional

import numpy as np

from src.sigcore import (
    DifferenceScheme,
    ImageField,
    SignatureVector,
    as_field,
    full_window,
    signature_vector,
)


class D4Element(enum.Enum):
    ID = (0, False)
    ROT90 = (1, False)
    ROT180 = (2, False)
    ROT270 = (3, False)
    FLIP_H = (0, True)
    FLIP_V = (2, True)
    TRANSPOSE = (1, True)
    ANTI_TRANSPOSE = (3, True)

    @property
    def turns(self) -> int:
        return self.value[0]

    @property
    def flipped(self) -> bool:
        return self.value[1]


_BY_VALUE = {g.value: g for g in D4Element}


def compose(g: D4Element, h: D4Element) -> D4Element:
    """The element acting as `h` followed by `g`."""
    # reversing columns conjugates a rotation into its inverse
    turns = (g.turns + (-h.turns if g.flipped else h.turns)) % 4
    return _BY_VALUE[(turns, g.flipped != h.flipped)]


def inverse(g: D4Element) -> D4Element:
    if g.flipped:
        return g
    return _BY_VALUE[((-g.turns) % 4, False)]


def apply_d4(x: np.ndarray, g: D4Element) -> np.ndarray:
    """
    Transforms the pixel grid of `x` (axes 0 and 1); rotations by an odd number
    of quarter turns swap height and width. Channels are left untouched.
    """
    x = as_field(x)
    out = x[:, ::-1] if g.flipped else x
    return np.ascontiguousarray(np.rot90(out, k=g.turns, axes=(0, 1)))


def symmetrized(
    x: ImageField,
    features: Callable[[ImageField], np.ndarray],
    executor: Optional[Executor] = None,
) -> np.ndarray:
    """
    Entrywise mean of `features` over the 8 orientations of `x`, summed in
    D4Element order regardless of how the evaluations were scheduled.
    """
    images = [apply_d4(x, g) for g in D4Element]
    if executor is None:
        rows = [features(img) for img in images]
    else:
        rows = list(executor.map(features, images))
    return np.sum(np.stack(rows), axis=0) / len(rows)


def symmetrized_signature(
    x: ImageField,
    scheme: DifferenceScheme = DifferenceScheme.FORWARD,
    executor: Optional[Executor] = None,
) -> SignatureVector:
    """
    Average of the full-window signature vector under the eight orientations.

    Args:
        x: Image field of shape (K, L, d), K >= 2 and L >= 2.
        scheme: Difference scheme for hat differentials.
        executor: Optional executor to evaluate the orientations concurrently.

    Returns:
        A SignatureVector with the orientation-averaged entries.
    """

    def one(img: ImageField) -> np.ndarray:
        return signature_vector(img, full_window(img.shape[0], img.shape[1], scheme), scheme).entries

    return SignatureVector(entries=symmetrized(x, one, executor), channels=x.shape[2])
