import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import MarginError, ParameterError, WindowError
from src.sigcore import (
    SECOND_ORDER_KINDS,
    DifferenceScheme,
    SignatureKind,
    Window,
    as_field,
    brute_force_second,
    cross_channel_names,
    cross_channel_vector,
    full_window,
    rect_increment,
    sig_first_12,
    sig_first_hat,
    sig_second,
    signature_names,
    signature_vector,
)


def grid(fn, size=3):
    k, l = np.mgrid[0:size, 0:size].astype(np.float64)
    return fn(k, l)[:, :, np.newaxis]


ADDITIVE = grid(lambda k, l: (k + l) / 4)
MULTIPLICATIVE = grid(lambda k, l: k * l / 4)
FULL3 = Window(0, 2, 0, 2)


@st.composite
def image_and_window(draw, min_side=2, max_side=9):
    height = draw(st.integers(min_side, max_side))
    width = draw(st.integers(min_side, max_side))
    k = draw(st.integers(0, height - 2))
    k_hat = draw(st.integers(k + 1, height - 1))
    l = draw(st.integers(0, width - 2))
    l_hat = draw(st.integers(l + 1, width - 1))
    seed = draw(st.integers(0, 2**32 - 1))
    x = np.random.default_rng(seed).random((height, width, 3))
    return x, Window(k, k_hat, l, l_hat)


# --- windows ---

def test_window_bounds():
    Window(0, 4, 0, 4).validate(5, 5)
    with pytest.raises(WindowError):
        Window(0, 5, 0, 4).validate(5, 5)
    with pytest.raises(WindowError):
        Window(2, 2, 0, 4).validate(5, 5)
    with pytest.raises(IndexError):
        Window(-1, 3, 0, 4).validate(5, 5)


def test_central_needs_margin():
    Window(1, 3, 1, 3).validate(5, 5, DifferenceScheme.CENTRAL)
    with pytest.raises(MarginError):
        Window(0, 3, 1, 3).validate(5, 5, DifferenceScheme.CENTRAL)
    with pytest.raises(MarginError):
        Window(1, 4, 1, 3).validate(5, 5, DifferenceScheme.CENTRAL)


def test_full_window_per_scheme():
    assert full_window(6, 7) == Window(0, 5, 0, 6)
    assert full_window(6, 7, DifferenceScheme.CENTRAL) == Window(1, 4, 1, 5)
    with pytest.raises(WindowError):
        full_window(3, 3, DifferenceScheme.CENTRAL)


def test_as_field():
    assert as_field(np.zeros((4, 5))).shape == (4, 5, 1)
    with pytest.raises(ParameterError):
        as_field(np.zeros(4))
    with pytest.raises(ParameterError):
        as_field(np.full((2, 2, 3), np.nan))


def test_vectors_coerce_their_input(rng):
    plane = rng.random((5, 5))
    w = full_window(5, 5)
    assert np.array_equal(signature_vector(plane, w).entries, signature_vector(plane[:, :, np.newaxis], w).entries)
    bad = np.zeros((5, 5, 3))
    bad[2, 2, 1] = np.nan
    with pytest.raises(ParameterError):
        signature_vector(bad, w)
    with pytest.raises(ParameterError):
        cross_channel_vector(bad, w)


# --- first order ---

def test_rect_increment_examples():
    assert rect_increment(ADDITIVE, 0, FULL3) == 0.0
    assert rect_increment(MULTIPLICATIVE, 0, FULL3) == 1.0
    constant = np.full((4, 4, 1), 0.3)
    assert rect_increment(constant, 0, Window(1, 3, 0, 2)) == 0.0


def test_rect_increment_rejects_bad_window():
    with pytest.raises(WindowError):
        rect_increment(ADDITIVE, 0, Window(0, 3, 0, 2))
    with pytest.raises(WindowError):
        rect_increment(ADDITIVE, 1, FULL3)


def test_sig_first_12_examples(rng):
    assert sig_first_12(MULTIPLICATIVE, 0, FULL3) == pytest.approx(1.0, abs=1e-15)
    x = rng.random((5, 5, 1))
    w = Window(1, 3, 0, 2)
    cells = [
        x[k + 1, l + 1, 0] - x[k, l + 1, 0] - x[k + 1, l, 0] + x[k, l, 0]
        for k in range(1, 3)
        for l in range(0, 2)
    ]
    assert sig_first_12(x, 0, w) == pytest.approx(sum(cells), abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(image_and_window())
def test_telescoping(case):
    x, w = case
    for channel in range(3):
        assert abs(sig_first_12(x, channel, w) - rect_increment(x, channel, w)) <= 1e-12


def test_telescoping_many_windows(rng):
    for _ in range(1000):
        height, width = rng.integers(2, 12, size=2)
        x = rng.random((height, width, 3))
        k, k_hat = sorted(rng.choice(height, size=2, replace=False))
        l, l_hat = sorted(rng.choice(width, size=2, replace=False))
        w = Window(int(k), int(k_hat), int(l), int(l_hat))
        c = int(rng.integers(0, 3))
        assert abs(sig_first_12(x, c, w) - rect_increment(x, c, w)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(image_and_window(min_side=3), st.data())
def test_first_order_is_additive_over_partitions(case, data):
    x, w = case
    if w.k_hat - w.k < 2 or w.l_hat - w.l < 2:
        return
    km = data.draw(st.integers(w.k + 1, w.k_hat - 1))
    lm = data.draw(st.integers(w.l + 1, w.l_hat - 1))
    parts = [
        Window(w.k, km, w.l, lm),
        Window(km, w.k_hat, w.l, lm),
        Window(w.k, km, lm, w.l_hat),
        Window(km, w.k_hat, lm, w.l_hat),
    ]
    total = sum(sig_first_12(x, 0, p) for p in parts)
    assert total == pytest.approx(sig_first_12(x, 0, w), abs=1e-12)


def test_sig_first_hat_examples():
    assert sig_first_hat(ADDITIVE, 0, FULL3) == pytest.approx(0.25, abs=1e-15)
    assert sig_first_hat(MULTIPLICATIVE, 0, FULL3) == pytest.approx(1 / 16, abs=1e-15)
    constant = np.full((5, 5, 1), 0.7)
    assert sig_first_hat(constant, 0, Window(1, 3, 1, 3), DifferenceScheme.CENTRAL) == 0.0
    assert sig_first_hat(constant, 0, Window(0, 4, 0, 4)) == 0.0


def test_sig_first_hat_central_values():
    x = grid(lambda k, l: k * k + 2 * l * l, size=5)
    # central differences are exact for quadratics: d1 = 2k, d2 = 4l
    expected = sum(2 * k * 4 * l for k in (1, 2) for l in (1, 2))
    assert sig_first_hat(x, 0, Window(1, 3, 1, 3), DifferenceScheme.CENTRAL) == pytest.approx(expected)
    with pytest.raises(MarginError):
        sig_first_hat(x, 0, Window(0, 3, 1, 3), DifferenceScheme.CENTRAL)


# --- second order ---

def test_sig_second_examples():
    assert sig_second(MULTIPLICATIVE, SignatureKind.SECOND_1122, 0, 0, FULL3) == pytest.approx(0.0625, abs=1e-15)
    assert brute_force_second(MULTIPLICATIVE, SignatureKind.SECOND_1122, 0, 0, FULL3) == pytest.approx(0.0625)
    constant = np.full((6, 6, 2), 0.4)
    for kind in SECOND_ORDER_KINDS:
        assert sig_second(constant, kind, 0, 1, Window(0, 5, 0, 5)) == 0.0


def test_sig_second_rejects_first_order_kind():
    with pytest.raises(ParameterError):
        sig_second(ADDITIVE, SignatureKind.FIRST_12, 0, 0, FULL3)
    with pytest.raises(ParameterError):
        brute_force_second(ADDITIVE, SignatureKind.FIRST_HAT, 0, 0, FULL3)


def test_sig_second_margin_only_for_hat_kinds(rng):
    x = rng.random((5, 5, 1))
    w = Window(0, 4, 0, 4)
    # box-box never reads outside the window
    sig_second(x, SignatureKind.SECOND_1122, 0, 0, w, DifferenceScheme.CENTRAL)
    for kind in (SignatureKind.SECOND_HATHAT, SignatureKind.SECOND_MIX_1HAT, SignatureKind.SECOND_MIX_HAT1):
        with pytest.raises(MarginError):
            sig_second(x, kind, 0, 0, w, DifferenceScheme.CENTRAL)


def test_single_cell_window_has_empty_simplex(rng):
    x = rng.random((2, 2, 3))
    for kind in SECOND_ORDER_KINDS:
        assert sig_second(x, kind, 0, 2, Window(0, 1, 0, 1)) == 0.0
        assert brute_force_second(x, kind, 0, 2, Window(0, 1, 0, 1)) == 0.0


def test_thin_windows_are_zero(rng):
    x = rng.random((8, 8, 1))
    for kind in SECOND_ORDER_KINDS:
        assert sig_second(x, kind, 0, 0, Window(2, 3, 0, 7)) == 0.0
        assert sig_second(x, kind, 0, 0, Window(0, 7, 4, 5)) == 0.0


def test_oracle_on_6x6_channel_1(rng):
    x = rng.random((6, 6, 3))
    w = full_window(6, 6)
    for kind in SECOND_ORDER_KINDS:
        fast = sig_second(x, kind, 1, 1, w)
        oracle = brute_force_second(x, kind, 1, 1, w)
        assert abs(fast - oracle) <= 1e-9 * (1 + abs(oracle))


def test_oracle_equivalence_random_8x8(rng):
    w = Window(0, 7, 0, 7)
    for _ in range(200):
        x = rng.random((8, 8, 3))
        for kind in SECOND_ORDER_KINDS:
            for i1 in range(3):
                for i2 in range(3):
                    fast = sig_second(x, kind, i1, i2, w)
                    oracle = brute_force_second(x, kind, i1, i2, w)
                    assert abs(fast - oracle) <= 1e-9 * (1 + abs(oracle))


@settings(max_examples=60, deadline=None)
@given(image_and_window(min_side=4), st.sampled_from(SECOND_ORDER_KINDS))
def test_oracle_equivalence_central_subwindows(case, kind):
    x, w = case
    height, width = x.shape[:2]
    inner = Window(max(w.k, 1), min(w.k_hat, height - 2), max(w.l, 1), min(w.l_hat, width - 2))
    if inner.k >= inner.k_hat or inner.l >= inner.l_hat:
        return
    scheme = DifferenceScheme.CENTRAL
    fast = sig_second(x, kind, 0, 2, inner, scheme)
    oracle = brute_force_second(x, kind, 0, 2, inner, scheme)
    assert abs(fast - oracle) <= 1e-9 * (1 + abs(oracle))


# --- vectors ---

def test_signature_vector_hand_values():
    x = np.concatenate([ADDITIVE, MULTIPLICATIVE, np.full((3, 3, 1), 0.5)], axis=2)
    vec = signature_vector(x, FULL3)
    expected = {
        (SignatureKind.FIRST_12, 0): 0.0,
        (SignatureKind.FIRST_HAT, 0): 0.25,
        (SignatureKind.SECOND_1122, 0): 0.0,
        (SignatureKind.SECOND_HATHAT, 0): 1 / 256,
        (SignatureKind.SECOND_MIX_1HAT, 0): 0.0,
        (SignatureKind.SECOND_MIX_HAT1, 0): 0.0,
        (SignatureKind.FIRST_12, 1): 1.0,
        (SignatureKind.FIRST_HAT, 1): 1 / 16,
        (SignatureKind.SECOND_1122, 1): 0.0625,
        (SignatureKind.SECOND_HATHAT, 1): 0.0,
        (SignatureKind.SECOND_MIX_1HAT, 1): 1 / 64,
        (SignatureKind.SECOND_MIX_HAT1, 1): 0.0,
    }
    for (kind, channel), value in expected.items():
        assert vec.get(kind, channel) == pytest.approx(value, abs=1e-15)
    for kind in SignatureKind:
        assert vec.get(kind, 2) == 0.0
    assert vec.entries.shape == (18,)


def test_signature_vector_matches_single_ops(rng):
    x = rng.random((10, 10, 3))
    w = full_window(10, 10)
    vec = signature_vector(x, w)
    for c in range(3):
        assert vec.get(SignatureKind.FIRST_12, c) == sig_first_12(x, c, w)
        assert vec.get(SignatureKind.FIRST_HAT, c) == sig_first_hat(x, c, w)
        for kind in SECOND_ORDER_KINDS:
            assert vec.get(kind, c) == sig_second(x, kind, c, c, w)


def test_constant_image_vector_is_zero():
    vec = signature_vector(np.full((7, 7, 3), 0.2), full_window(7, 7, DifferenceScheme.CENTRAL), DifferenceScheme.CENTRAL)
    assert np.all(vec.entries == 0.0)


def test_select_and_names_follow_canonical_order(rng):
    vec = signature_vector(rng.random((5, 5, 3)), full_window(5, 5))
    second = vec.select(SECOND_ORDER_KINDS)
    assert second.shape == (12,)
    assert np.array_equal(second, vec.entries[6:])
    names = signature_names(3, symmetrized=True, kinds=SECOND_ORDER_KINDS)
    assert names[0] == "sig2.boxbox.ch0.sym"
    assert names[3] == "sig2.hathat.ch0.sym"
    assert signature_names()[:3] == ["sig1.box.ch0", "sig1.box.ch1", "sig1.box.ch2"]


def test_cross_channel_vector(rng):
    x = rng.random((6, 6, 3))
    w = full_window(6, 6)
    values = cross_channel_vector(x, w)
    names = cross_channel_names(3)
    assert values.shape == (24,) and len(names) == 24
    assert names[1] == "sig2.boxbox.ch0ch2"
    assert values[1] == sig_second(x, SignatureKind.SECOND_1122, 0, 2, w)
    assert values[-1] == sig_second(x, SignatureKind.SECOND_MIX_HAT1, 2, 1, w)


# --- analytic scaling ---

def _slope(sides, values):
    return np.polyfit(np.log(sides), np.log(np.abs(values)), 1)[0]


def test_scaling_exponents_on_smooth_field():
    size = 512
    x = grid(lambda k, l: np.sin(k / size) * np.sin(l / size), size=size)
    c = size // 2
    hs = [1 / 4, 1 / 8, 1 / 16]
    # windows shrink around a fixed centre
    halves = [int(h * size) // 2 for h in hs]
    windows = [Window(c - r, c + r, c - r, c + r) for r in halves]

    for first in (lambda w: sig_first_12(x, 0, w), lambda w: sig_first_hat(x, 0, w)):
        assert _slope(hs, [first(w) for w in windows]) == pytest.approx(2.0, abs=0.5)
    for kind in SECOND_ORDER_KINDS:
        assert _slope(hs, [sig_second(x, kind, 0, 0, w) for w in windows]) == pytest.approx(4.0, abs=0.5)


# --- performance ---

def _best_time(fn, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


@pytest.mark.slow
def test_fast_path_is_near_linear(rng):
    timings = {}
    for side in (64, 128):
        x = rng.random((side + 1, side + 1, 1))
        w = full_window(side + 1, side + 1)
        timings[side] = _best_time(lambda: sig_second(x, SignatureKind.SECOND_HATHAT, 0, 0, w))
    assert timings[128] / timings[64] < 6


@pytest.mark.slow
def test_oracle_is_much_slower_at_64(rng):
    x = rng.random((64, 64, 1))
    w = full_window(64, 64)
    fast = _best_time(lambda: sig_second(x, SignatureKind.SECOND_1122, 0, 0, w))
    oracle = _best_time(lambda: brute_force_second(x, SignatureKind.SECOND_1122, 0, 0, w), repeats=1)
    assert oracle / fast >= 20
