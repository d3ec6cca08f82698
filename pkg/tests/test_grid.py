import itertools

import pytest
from hypothesis import given, strategies as st

from hotspot_topics.errors import InputError
from hotspot_topics.grid import CellKey, GridConfig, cell_of, neighborhood


def test_cell_of_floor_division():
    cfg = GridConfig(5000.0, 0.0)
    assert cell_of((0.0, 12300.0, 4900.0), cfg) == (0, 2, 0)
    assert cell_of((0.0, -1.0, 0.0), cfg) == (0, -1, 0)
    assert cell_of((0.0, 0.0, 0.0), cfg) == (0, 0, 0)


def test_cell_of_time_axis():
    assert cell_of((3599.0, 0.0, 0.0), GridConfig(5000.0, 3600.0)) == (0, 0, 0)
    assert cell_of((3600.0, 0.0, 0.0), GridConfig(5000.0, 3600.0)) == (1, 0, 0)
    # time ignored without a temporal cell size
    assert cell_of((1e9, 0.0, 0.0), GridConfig(5000.0, 0.0)).t_idx == 0


def test_cell_of_rejects_non_finite():
    with pytest.raises(InputError):
        cell_of((0.0, float("nan"), 0.0), GridConfig())
    with pytest.raises(InputError):
        cell_of((float("inf"), 0.0, 0.0), GridConfig())


@pytest.mark.parametrize("kwargs", [dict(cell_size_m=0), dict(cell_size_m=-1), dict(cell_size_s=-1),
                                    dict(neighborhood_depth=-1), dict(neighborhood_depth=1.5)])
def test_grid_config_validation(kwargs):
    with pytest.raises(InputError):
        GridConfig(**kwargs)


def test_von_neumann_spatial():
    cfg = GridConfig(5000.0, 0.0, 1)
    assert neighborhood((0, 2, 3), cfg) == {(0, 2, 3), (0, 1, 3), (0, 3, 3), (0, 2, 2), (0, 2, 4)}


def test_depth_zero_is_identity():
    assert neighborhood((4, 5, 6), GridConfig(neighborhood_depth=0)) == {(4, 5, 6)}


def test_von_neumann_temporal():
    nb = neighborhood((1, 0, 0), GridConfig(5000.0, 60.0, 1))
    assert len(nb) == 7
    assert (0, 0, 0) in nb and (2, 0, 0) in nb


@pytest.mark.parametrize("depth,temporal", list(itertools.product([0, 1, 2, 3], [False, True])))
def test_neighborhood_size_matches_manhattan_ball(depth, temporal):
    cfg = GridConfig(1.0, 1.0 if temporal else 0.0, depth)
    nb = neighborhood((0, 0, 0), cfg)
    r = range(-depth, depth + 1)
    t_range = r if temporal else [0]
    expected = {(t, e, n) for t in t_range for e in r for n in r if abs(t) + abs(e) + abs(n) <= depth}
    assert nb == expected


small = st.integers(-4, 4)


@given(st.tuples(small, small, small), st.tuples(small, small, small), st.integers(0, 3), st.booleans())
def test_neighborhood_symmetry(a, b, depth, temporal):
    cfg = GridConfig(1.0, 1.0 if temporal else 0.0, depth)
    if not temporal:
        a, b = (0,) + a[1:], (0,) + b[1:]
    assert (b in neighborhood(a, cfg)) == (a in neighborhood(b, cfg))


def test_cellkey_string_roundtrip():
    c = CellKey(-1, 20, -300)
    assert CellKey.from_str(c.to_str()) == c
