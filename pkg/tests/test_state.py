import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_strike.errors import BoundsError, DomainError, ShapeError
from sparse_strike.state import FrameState, StateShape, get_pixel, push_frame

SHAPE = StateShape(84, 84, 4)


def test_zero_state_reads_zero():
    assert get_pixel(FrameState.zeros(SHAPE), 0, 0, 0) == 0


def test_write_then_read():
    px = np.zeros(SHAPE.as_tuple(), dtype=np.uint8)
    px[3, 7, 1] = 200
    assert get_pixel(FrameState(px), 3, 7, 1) == 200


@pytest.mark.parametrize("index, axis", [((84, 0, 0), "x"), ((0, -1, 0), "y"), ((0, 0, 4), "c")])
def test_get_pixel_bounds(index, axis):
    with pytest.raises(BoundsError, match=f"^{axis}="):
        get_pixel(FrameState.zeros(SHAPE), *index)


def test_state_is_immutable():
    s = FrameState.zeros(StateShape(2, 2, 1))
    with pytest.raises(ValueError):
        s.pixels[0, 0, 0] = 1


def test_rejects_out_of_domain_pixels():
    with pytest.raises(DomainError):
        FrameState(np.full((2, 2, 1), 256))
    with pytest.raises(DomainError):
        FrameState(np.full((2, 2, 1), -1))


@pytest.mark.parametrize("text", ["32x32", "0x3x3", "axbxc"])
def test_shape_parse_errors(text):
    with pytest.raises(ShapeError):
        StateShape.parse(text)


def test_shape_parse():
    assert StateShape.parse("32x16x4") == StateShape(32, 16, 4)


def _frame(value, shape=(4, 4)):
    return np.full(shape, value, dtype=np.uint8)


def test_push_frame_queue_semantics():
    s = FrameState(np.stack([_frame(v) for v in (1, 2, 3, 4)], axis=-1))
    out = push_frame(s, _frame(5))
    assert [int(out.pixels[0, 0, c]) for c in range(4)] == [2, 3, 4, 5]
    # input untouched
    assert [int(s.pixels[0, 0, c]) for c in range(4)] == [1, 2, 3, 4]


def test_push_frame_domain_and_shape_errors():
    s = FrameState.zeros(StateShape(4, 4, 4))
    with pytest.raises(DomainError):
        push_frame(s, np.full((4, 4), 256))
    with pytest.raises(ShapeError):
        push_frame(s, _frame(1, (4, 5)))


def test_push_onto_fresh_stack():
    out = push_frame(FrameState.zeros(StateShape(4, 4, 4)), _frame(9))
    assert np.count_nonzero(out.pixels[:, :, -1]) == 16
    assert not out.pixels[:, :, :-1].any()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 255), min_size=3, max_size=3))
def test_full_replacement(values):
    s = FrameState(np.full((3, 3, 3), 77, dtype=np.uint8))
    for v in values:
        s = push_frame(s, _frame(v, (3, 3)))
    assert [int(s.pixels[1, 1, c]) for c in range(3)] == values
    assert 0 <= get_pixel(s, 2, 2, 0) <= 255
