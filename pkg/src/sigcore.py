# src/sigcore.py
"""
Discrete first- and second-order signature increments of an image window.

An image is a float64 array of shape (K, L, d) with values in [0, 1]; row 0 is
the top of the image. A window (k, k_hat, l, l_hat) addresses pixels, so the
cells it covers are [k, k_hat - 1] x [l, l_hat - 1].

Every increment is a sum over cells of a cell-level differential:

    box(k1, l1) = x[k1+1, l1+1] - x[k1, l1+1] - x[k1+1, l1] + x[k1, l1]
    hat(k1, l1) = D1 x(k1, l1) * D2 x(k1, l1)

with D1/D2 forward or half-central differences. Second-order increments pair an
inner differential A with an outer differential B over the strict simplex
k1 < k2, l1 < l2.
"""
import enum
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import numpy.typing as npt

from src.errors import MarginError, ParameterError, WindowError

ImageField = npt.NDArray[np.float64]


class DifferenceScheme(enum.Enum):
    FORWARD = "forward"
    CENTRAL = "central"


class SignatureKind(enum.Enum):
    """The six increments kept as features, in canonical column order."""

    FIRST_12 = "box"
    FIRST_HAT = "hat"
    SECOND_1122 = "boxbox"
    SECOND_HATHAT = "hathat"
    SECOND_MIX_1HAT = "boxhat"
    SECOND_MIX_HAT1 = "hatbox"

    @property
    def order(self) -> int:
        return 1 if self in (SignatureKind.FIRST_12, SignatureKind.FIRST_HAT) else 2


SECOND_ORDER_KINDS = tuple(k for k in SignatureKind if k.order == 2)

# (inner A, outer B) differential for each second-order kind
_FACTORS = {
    SignatureKind.SECOND_1122: ("box", "box"),
    SignatureKind.SECOND_HATHAT: ("hat", "hat"),
    SignatureKind.SECOND_MIX_1HAT: ("box", "hat"),
    SignatureKind.SECOND_MIX_HAT1: ("hat", "box"),
}


@dataclass(frozen=True)
class Window:
    k: int
    k_hat: int
    l: int
    l_hat: int

    @property
    def cells(self) -> Tuple[int, int]:
        return self.k_hat - self.k, self.l_hat - self.l

    def validate(self, height: int, width: int, scheme: DifferenceScheme = DifferenceScheme.FORWARD):
        """
        Raises WindowError unless 0 <= k < k_hat <= K-1 and 0 <= l < l_hat <= L-1,
        and MarginError when a central scheme would read outside the image.
        """
        if not (0 <= self.k < self.k_hat <= height - 1 and 0 <= self.l < self.l_hat <= width - 1):
            raise WindowError(f"window {self} out of range for a {height}x{width} image")
        if scheme is DifferenceScheme.CENTRAL:
            if self.k < 1 or self.l < 1 or self.k_hat > height - 2 or self.l_hat > width - 2:
                raise MarginError(
                    f"central differences need a 1-pixel margin: window {self} "
                    f"in a {height}x{width} image"
                )


def full_window(height: int, width: int, scheme: DifferenceScheme = DifferenceScheme.FORWARD) -> Window:
    """Largest window valid for the scheme: the whole image, or a 1-pixel inset for central."""
    if scheme is DifferenceScheme.CENTRAL:
        window = Window(1, height - 2, 1, width - 2)
    else:
        window = Window(0, height - 1, 0, width - 1)
    window.validate(height, width, scheme)
    return window


def as_field(x) -> ImageField:
    """Coerces to a (K, L, d) float64 array; a 2-d array becomes a single channel."""
    field = np.asarray(x, dtype=np.float64)
    if field.ndim == 2:
        field = field[:, :, np.newaxis]
    if field.ndim != 3:
        raise ParameterError(f"image must have shape (K, L, d), got {field.shape}")
    if not np.all(np.isfinite(field)):
        raise ParameterError("image contains non-finite values")
    return field


def _plane(x: ImageField, channel: int) -> np.ndarray:
    if not 0 <= channel < x.shape[2]:
        raise WindowError(f"channel {channel} out of range for {x.shape[2]} channels")
    return x[:, :, channel]


# --- cell-level differentials (vectorized) ---

def _box_cells(plane: np.ndarray, w: Window) -> np.ndarray:
    sub = plane[w.k : w.k_hat + 1, w.l : w.l_hat + 1]
    return sub[1:, 1:] - sub[:-1, 1:] - sub[1:, :-1] + sub[:-1, :-1]


def _hat_cells(plane: np.ndarray, w: Window, scheme: DifferenceScheme) -> np.ndarray:
    k, kh, l, lh = w.k, w.k_hat, w.l, w.l_hat
    if scheme is DifferenceScheme.CENTRAL:
        d1 = (plane[k + 1 : kh + 1, l:lh] - plane[k - 1 : kh - 1, l:lh]) / 2.0
        d2 = (plane[k:kh, l + 1 : lh + 1] - plane[k:kh, l - 1 : lh - 1]) / 2.0
    else:
        base = plane[k:kh, l:lh]
        d1 = plane[k + 1 : kh + 1, l:lh] - base
        d2 = plane[k:kh, l + 1 : lh + 1] - base
    return d1 * d2


def _cells(plane: np.ndarray, w: Window, which: str, scheme: DifferenceScheme) -> np.ndarray:
    return _box_cells(plane, w) if which == "box" else _hat_cells(plane, w, scheme)


# --- public operations ---

def rect_increment(x: ImageField, channel: int, w: Window) -> float:
    """Corner formula x[k_hat, l_hat] - x[k, l_hat] - x[k_hat, l] + x[k, l]."""
    w.validate(x.shape[0], x.shape[1])
    p = _plane(x, channel)
    return float(p[w.k_hat, w.l_hat] - p[w.k, w.l_hat] - p[w.k_hat, w.l] + p[w.k, w.l])


def sig_first_12(x: ImageField, channel: int, w: Window) -> float:
    """Sum of unit-cell box increments over the window; telescopes to rect_increment."""
    w.validate(x.shape[0], x.shape[1])
    return float(np.sum(_box_cells(_plane(x, channel), w)))


def sig_first_hat(
    x: ImageField,
    channel: int,
    w: Window,
    scheme: DifferenceScheme = DifferenceScheme.FORWARD,
) -> float:
    """Sum over cells of the product of the two directional differences."""
    w.validate(x.shape[0], x.shape[1], scheme)
    return float(np.sum(_hat_cells(_plane(x, channel), w, scheme)))


def _simplex_sum(a: np.ndarray, b: np.ndarray) -> float:
    # strict[k2, l2] = sum of a over k1 < k2, l1 < l2
    prefix = np.cumsum(np.cumsum(a, axis=0), axis=1)
    strict = np.zeros_like(a)
    strict[1:, 1:] = prefix[:-1, :-1]
    return float(np.sum(b * strict))


def _check_second(kind: SignatureKind):
    if kind not in _FACTORS:
        raise ParameterError(f"{kind} is not a second-order kind")


def sig_second(
    x: ImageField,
    kind: SignatureKind,
    i1: int,
    i2: int,
    w: Window,
    scheme: DifferenceScheme = DifferenceScheme.FORWARD,
) -> float:
    """
    Second-order increment sum_{k2,l2} B(k2,l2) * sum_{k1<k2, l1<l2} A(k1,l1),
    evaluated with a 2-d prefix sum in O(#cells).

    Args:
        x: Image field (K, L, d).
        kind: One of the four second-order kinds.
        i1: Channel of the inner differential A.
        i2: Channel of the outer differential B.
        w: Window.
        scheme: Difference scheme for hat differentials.

    Returns:
        The increment as a float.
    """
    _check_second(kind)
    inner, outer = _FACTORS[kind]
    w.validate(x.shape[0], x.shape[1], scheme if "hat" in (inner, outer) else DifferenceScheme.FORWARD)
    a = _cells(_plane(x, i1), w, inner, scheme)
    b = _cells(_plane(x, i2), w, outer, scheme)
    return _simplex_sum(a, b)


# --- literal quadruple-loop oracle ---

def _box_at(p: np.ndarray, k1: int, l1: int) -> float:
    return float(p[k1 + 1, l1 + 1] - p[k1, l1 + 1] - p[k1 + 1, l1] + p[k1, l1])


def _hat_at(p: np.ndarray, k1: int, l1: int, scheme: DifferenceScheme) -> float:
    if scheme is DifferenceScheme.CENTRAL:
        return float((p[k1 + 1, l1] - p[k1 - 1, l1]) / 2.0 * (p[k1, l1 + 1] - p[k1, l1 - 1]) / 2.0)
    return float((p[k1 + 1, l1] - p[k1, l1]) * (p[k1, l1 + 1] - p[k1, l1]))


def brute_force_second(
    x: ImageField,
    kind: SignatureKind,
    i1: int,
    i2: int,
    w: Window,
    scheme: DifferenceScheme = DifferenceScheme.FORWARD,
) -> float:
    """Same value as sig_second, by an explicit loop over (k1, l1, k2, l2). Small windows only."""
    _check_second(kind)
    inner, outer = _FACTORS[kind]
    w.validate(x.shape[0], x.shape[1], scheme if "hat" in (inner, outer) else DifferenceScheme.FORWARD)
    pa, pb = _plane(x, i1), _plane(x, i2)

    def diff(p: np.ndarray, which: str, k1: int, l1: int) -> float:
        return _box_at(p, k1, l1) if which == "box" else _hat_at(p, k1, l1, scheme)

    rows = range(w.k, w.k_hat)
    cols = range(w.l, w.l_hat)
    a = {(k1, l1): diff(pa, inner, k1, l1) for k1 in rows for l1 in cols}

    total = 0.0
    for k2 in rows:
        for l2 in cols:
            inner_sum = 0.0
            for k1 in range(w.k, k2):
                for l1 in range(w.l, l2):
                    inner_sum += a[(k1, l1)]
            total += diff(pb, outer, k2, l2) * inner_sum
    return total


# --- feature vectors ---

@dataclass(frozen=True)
class SignatureVector:
    """
    6 * d entries indexed (kind, channel), kind-major in SignatureKind order.
    """

    entries: np.ndarray
    channels: int

    def get(self, kind: SignatureKind, channel: int) -> float:
        return float(self.entries[list(SignatureKind).index(kind) * self.channels + channel])

    def select(self, kinds) -> np.ndarray:
        idx = [list(SignatureKind).index(k) * self.channels + c for k in kinds for c in range(self.channels)]
        return self.entries[idx]


def signature_names(channels: int = 3, symmetrized: bool = False, kinds=tuple(SignatureKind)) -> List[str]:
    suffix = ".sym" if symmetrized else ""
    return [f"sig{k.order}.{k.value}.ch{c}{suffix}" for k in kinds for c in range(channels)]


def signature_vector(
    x: ImageField,
    w: Window,
    scheme: DifferenceScheme = DifferenceScheme.FORWARD,
) -> SignatureVector:
    """
    The 2 first-order and 4 diagonal (i1 = i2) second-order increments of every channel.
    """
    x = as_field(x)
    w.validate(x.shape[0], x.shape[1], scheme)
    d = x.shape[2]
    entries = np.empty(len(SignatureKind) * d, dtype=np.float64)
    for c in range(d):
        p = x[:, :, c]
        box = _box_cells(p, w)
        hat = _hat_cells(p, w, scheme)
        cells = {"box": box, "hat": hat}
        values = {
            SignatureKind.FIRST_12: float(np.sum(box)),
            SignatureKind.FIRST_HAT: float(np.sum(hat)),
        }
        for kind, (inner, outer) in _FACTORS.items():
            values[kind] = _simplex_sum(cells[inner], cells[outer])
        for ki, kind in enumerate(SignatureKind):
            entries[ki * d + c] = values[kind]
    return SignatureVector(entries=entries, channels=d)


def cross_channel_pairs(channels: int) -> List[Tuple[int, int]]:
    return [(i1, i2) for i1 in range(channels) for i2 in range(channels) if i1 != i2]


def cross_channel_names(channels: int = 3, symmetrized: bool = False) -> List[str]:
    suffix = ".sym" if symmetrized else ""
    return [
        f"sig2.{kind.value}.ch{i1}ch{i2}{suffix}"
        for kind in SECOND_ORDER_KINDS
        for i1, i2 in cross_channel_pairs(channels)
    ]


def cross_channel_vector(
    x: ImageField,
    w: Window,
    scheme: DifferenceScheme = DifferenceScheme.FORWARD,
) -> np.ndarray:
    """Off-diagonal second-order increments, kind-major then ordered channel pair."""
    x = as_field(x)
    w.validate(x.shape[0], x.shape[1], scheme)
    d = x.shape[2]
    box = [_box_cells(x[:, :, c], w) for c in range(d)]
    hat = [_hat_cells(x[:, :, c], w, scheme) for c in range(d)]
    cells = {"box": box, "hat": hat}
    out = []
    for kind in SECOND_ORDER_KINDS:
        inner, outer = _FACTORS[kind]
        for i1, i2 in cross_channel_pairs(d):
            out.append(_simplex_sum(cells[inner][i1], cells[outer][i2]))
    return np.asarray(out, dtype=np.float64)


def max_relative_deviation(fast: float, oracle: float) -> float:
    return abs(fast - oracle) / (1.0 + abs(oracle))
