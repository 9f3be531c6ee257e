import json

import numpy as np
import pytest

from partialchan.envmap import (DimensionMismatch, EnvironmentMap, FloorplanParams, InvalidParams,
                                ObservedRegion, OutOfBounds, WorldPoint, fill_free_space, flood_fill,
                                free_cell_fraction, generate_floorplan, load_map, load_region, map_from_dict,
                                map_to_dict, point_is_indoor, region_from_dict, region_to_dict, save_map,
                                save_region)

from conftest import F, W, X, boxed, two_rooms


def test_generation_is_deterministic():
    a = generate_floorplan(7)
    b = generate_floorplan(7)
    assert np.array_equal(a.cells, b.cells)
    assert not np.array_equal(a.cells, generate_floorplan(8).cells)


def test_small_footprint_is_a_single_room():
    env = generate_floorplan(7, FloorplanParams(width_m=4, height_m=4, min_room_m=4))
    free = env.cells == F
    # one room: free cells form a single component filling the walled rectangle
    i, j = np.argwhere(free)[0]
    assert np.array_equal(flood_fill(free, (int(i), int(j))), free)
    rows, cols = np.nonzero(free)
    box = env.cells[rows.min(): rows.max() + 1, cols.min(): cols.max() + 1]
    assert np.all(box == F)


@pytest.mark.parametrize("bad", [
    dict(width_m=0), dict(height_m=-1), dict(min_room_m=0), dict(door_width_m=0),
    dict(door_width_m=2.0, min_room_m=1.8), dict(min_room_m=0.3),
])
def test_invalid_params(bad):
    with pytest.raises(InvalidParams):
        generate_floorplan(0, FloorplanParams(**bad))


def test_connectivity_and_free_fraction_over_100_seeds():
    for seed in range(1, 101):
        env = generate_floorplan(seed)
        env.validate()
        free = env.cells == F
        i, j = np.argwhere(free)[0]
        assert np.array_equal(flood_fill(free, (int(i), int(j))), free), seed
        assert 0.3 < free_cell_fraction(env) < 0.98, seed


def test_interior_walls_have_doors():
    env = generate_floorplan(5)
    # an unsplit building would be one free rectangle; a split one has interior walls
    rows, cols = np.nonzero(env.cells == F)
    inner = env.cells[rows.min(): rows.max() + 1, cols.min(): cols.max() + 1]
    assert np.any(inner == W)


def test_fill_identity_total_and_idempotent(maps20):
    env = maps20[0]
    assert fill_free_space(env, ObservedRegion.full(env)) == env
    empty = fill_free_space(env, ObservedRegion.empty(env))
    assert np.all(empty.cells == F)
    rng = np.random.default_rng(0)
    region = ObservedRegion(rng.random(env.cells.shape) < 0.4)
    once = fill_free_space(env, region)
    assert fill_free_space(once, region) == once
    assert not np.any((once.cells == X) & ~region.mask)


def test_fill_half_mask_cell_by_cell():
    env = two_rooms(20, 30)
    cells = env.cells.copy()
    cells[5:8, 22] = W  # a wall stub in the right room
    env = EnvironmentMap(cells, env.resolution)
    mask = np.zeros(cells.shape, dtype=bool)
    mask[:, :12] = True
    out = fill_free_space(env, ObservedRegion(mask)).cells
    for i in range(cells.shape[0]):
        for j in range(cells.shape[1]):
            assert out[i, j] == (cells[i, j] if j < 12 else F)
    assert np.all(out[:, 0] == W) and np.all(out[5:8, 22] == F) and np.all(out[:, 15] == F)


def test_fill_dimension_mismatch():
    env = boxed(6, 6)
    with pytest.raises(DimensionMismatch):
        fill_free_space(env, ObservedRegion(np.ones((5, 6), bool)))


def test_point_is_indoor():
    env = generate_floorplan(3)
    free = np.argwhere(env.cells == F)
    i, j = free[len(free) // 2]
    assert point_is_indoor(env, env.cell_center(int(i), int(j)))
    walls = np.argwhere(env.cells == W)
    assert not point_is_indoor(env, env.cell_center(*(int(x) for x in walls[0])))
    assert not point_is_indoor(env, env.cell_center(0, 0))
    with pytest.raises(OutOfBounds):
        point_is_indoor(env, (-1.0, 1.0))


def test_point_is_indoor_matches_flood_fill():
    env = generate_floorplan(11)
    free = env.cells == F
    i, j = np.argwhere(free)[0]
    interior = flood_fill(free, (int(i), int(j)))
    x0, y0, x1, y1 = env.bounds
    rng = np.random.default_rng(11)
    for x, y in rng.uniform([x0, y0], [x1, y1], size=(1000, 2)):
        i, j = env.cell_of((x, y))
        assert point_is_indoor(env, (x, y)) == bool(interior[i, j])


def test_world_cell_round_trip(maps20):
    env = maps20[1]
    for i in range(0, env.height_cells, 7):
        for j in range(0, env.width_cells, 5):
            assert env.cell_of(env.cell_center(i, j)) == (i, j)
    assert isinstance(env.cell_center(0, 0), WorldPoint)


def test_map_validation():
    with pytest.raises(InvalidParams):
        EnvironmentMap(np.zeros((3, 8), np.uint8))
    with pytest.raises(InvalidParams):
        EnvironmentMap(np.zeros((5, 5), np.uint8), resolution=0)
    with pytest.raises(InvalidParams):
        EnvironmentMap(np.zeros((5, 5), np.uint8)).validate()  # free boundary ring
    cells = np.full((6, 6), W, np.uint8)
    cells[2, 2] = F
    with pytest.raises(InvalidParams):
        EnvironmentMap(cells).validate()  # isolated free cell


def test_maps_are_immutable():
    env = boxed(6, 6)
    with pytest.raises(ValueError):
        env.cells[1, 1] = W


def test_json_round_trips(tmp_path, maps20):
    env = maps20[2]
    env2 = EnvironmentMap(env.cells, 0.15, (1.5, -2.25))
    assert map_from_dict(json.loads(json.dumps(map_to_dict(env2)))) == env2
    d = map_to_dict(env2)
    assert set(d) >= {"width_cells", "height_cells", "resolution_m", "origin", "cells"}
    assert set(d["cells"]) <= set("FWX")
    save_map(env2, tmp_path / "m.json")
    assert load_map(tmp_path / "m.json") == env2
    rng = np.random.default_rng(0)
    region = ObservedRegion(rng.random(env.cells.shape) < 0.5, step_index=17)
    assert region_from_dict(region_to_dict(region, env)) == region
    save_region(region, env, tmp_path / "r.json")
    assert load_region(tmp_path / "r.json") == region


def test_region_subset():
    env = boxed(6, 6)
    a = ObservedRegion.empty(env)
    b = ObservedRegion.full(env)
    assert a.issubset(b) and not b.issubset(a)
