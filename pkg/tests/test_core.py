import numpy as np
import pytest

from clickseg.core import (
    Click,
    OutOfBoundsError,
    ShapeError,
    as_mask,
    as_probmap,
    binarize,
    clone_state,
    new_session,
    push_click,
    undo,
)

SEED = 1347


def _image(h=12, w=10):
    rng = np.random.default_rng(SEED)
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def test_click_is_frozen_and_polarity_helper():
    c = Click(3, 4, "positive")
    assert c.is_positive
    assert not Click(0, 0, "negative").is_positive
    with pytest.raises(AttributeError):
        c.row = 5


def test_binarize_strictly_greater():
    p = np.array([[0.5, 0.5000001], [0.49, 1.0]])
    out = binarize(p, 0.5)
    assert out.tolist() == [[0, 1], [0, 1]]


def test_binarize_threshold_must_be_interior():
    with pytest.raises(ValueError):
        binarize(np.zeros((2, 2)), 0.0)
    with pytest.raises(ValueError):
        binarize(np.zeros((2, 2)), 1.0)


def test_as_mask_normalizes_and_rejects_bad_rank():
    m = as_mask(np.array([[0, 2], [7, 0]]))
    assert m.dtype == np.uint8
    assert m.tolist() == [[0, 1], [1, 0]]
    with pytest.raises(ShapeError):
        as_mask(np.zeros((2, 2, 2)))


def test_as_probmap_validation():
    as_probmap(np.full((3, 3), 0.5))
    with pytest.raises(ValueError):
        as_probmap(np.full((2, 2), np.nan))
    with pytest.raises(ValueError):
        as_probmap(np.full((2, 2), 1.5))
    with pytest.raises(ShapeError):
        as_probmap(np.zeros(4))


def test_new_session_promotes_grayscale():
    state = new_session(np.zeros((5, 6), dtype=np.uint8))
    assert state.image.shape == (5, 6, 3)
    assert state.prev_mask.shape == (5, 6)
    assert not state.prev_mask.any()


def test_new_session_external_mask_shape_checked():
    with pytest.raises(ShapeError):
        new_session(_image(), external_mask=np.zeros((3, 3), dtype=np.uint8))
    ext = np.zeros((12, 10), dtype=np.uint8)
    ext[2:5, 2:5] = 1
    state = new_session(_image(), external_mask=ext)
    assert np.array_equal(state.prev_mask, ext)


def test_push_click_stamps_order_and_updates_mask():
    state = new_session(_image())
    pred = np.zeros((12, 10))
    pred[4:8, 3:7] = 0.9
    push_click(state, Click(5, 5, "positive", order=99), pred)
    assert state.clicks[0].order == 0
    assert state.prev_mask[5, 5] == 1
    push_click(state, Click(1, 1, "negative"), np.zeros((12, 10)))
    assert [c.order for c in state.clicks] == [0, 1]
    assert not state.prev_mask.any()


def test_push_click_rejects_out_of_bounds_and_bad_prediction():
    state = new_session(_image())
    with pytest.raises(OutOfBoundsError):
        push_click(state, Click(12, 0, "positive"), np.zeros((12, 10)))
    with pytest.raises(ShapeError):
        push_click(state, Click(0, 0, "positive"), np.zeros((3, 3)))
    assert state.clicks == [] and not state.history


def test_undo_is_exact_inverse_of_push():
    """A random push/undo walk restores every intermediate state exactly."""
    rng = np.random.default_rng(SEED)
    state = new_session(_image())
    snapshots = []
    for k in range(6):
        snapshots.append((list(state.clicks), state.prev_mask.copy()))
        polarity = "positive" if rng.random() < 0.7 else "negative"
        click = Click(int(rng.integers(12)), int(rng.integers(10)), polarity)
        push_click(state, click, rng.random((12, 10)))
    for k in reversed(range(6)):
        undo(state)
        clicks, prev = snapshots[k]
        assert state.clicks == clicks
        assert np.array_equal(state.prev_mask, prev)
    with pytest.raises(IndexError):
        undo(state)


def test_clone_state_is_independent():
    state = new_session(_image())
    push_click(state, Click(2, 2, "positive"), np.full((12, 10), 0.8))
    twin = clone_state(state)
    push_click(state, Click(3, 3, "negative"), np.zeros((12, 10)))
    assert len(twin.clicks) == 1
    assert twin.prev_mask.all()
