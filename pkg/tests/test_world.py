import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastrack.geometry import AABB
from fastrack.teb import TebBox
from fastrack.world import (
    SensingRangeError,
    SensorConfig,
    World,
    environment_from_dict,
    environment_to_dict,
    min_sensing_distance,
    point_in_obstacle,
    revealed_obstacles,
    sense,
    split_box,
    validate_sensor,
)

SENSOR = SensorConfig()


def one_box_world(box=AABB((2, -1, -1), (5, 2, 1))):
    return World.from_boxes([box], AABB((-10, -10, -10), (10, 10, 10)), (0, 0, 0), (8, 0, 0))


def test_split_box_tiles_exactly():
    box = AABB((0, 0, 0), (3.2, 1.0, 4.5))
    cells = split_box(box, 1.5)
    assert sum(c.volume for c in cells) == pytest.approx(box.volume)
    assert all(np.all(c.size <= 1.5 + 1e-12) for c in cells)
    assert len(cells) == 3 * 1 * 3


def test_sense_examples():
    world = one_box_world()
    cell = world.obstacles[0].cells[0]
    new, any_new = sense(cell.center, world, SENSOR)
    assert any_new and cell in new
    new, any_new = sense(cell.center, world, SENSOR)
    assert not any_new and new == []
    far = one_box_world()
    new, any_new = sense((-3, 5, 5), far, SENSOR)
    assert not any_new


def test_revealed_obstacles_examples():
    world = one_box_world()
    assert revealed_obstacles(world) == []
    world.obstacles[0].revealed[1] = True
    assert revealed_obstacles(world) == [world.obstacles[0].cells[1]]
    world.obstacles[0].revealed[:] = True
    assert sum(c.volume for c in revealed_obstacles(world)) == pytest.approx(world.obstacles[0].box.volume)


def test_point_in_obstacle_examples():
    world = one_box_world()
    assert point_in_obstacle((3.5, 0.5, 0), world)
    assert not point_in_obstacle((-9, -9, -9), world)
    assert point_in_obstacle((2, 0, 0), world)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.floats(-6, 9), min_size=3, max_size=3), min_size=1, max_size=8))
def test_reveal_is_monotone_and_conservative(positions):
    world = one_box_world()
    before = 0
    for pos in positions:
        sense(pos, world, SENSOR)
        now = world.revealed_count()
        assert now >= before
        before = now
    # every obstacle point within range of a visited position sits in a revealed cell
    rng = np.random.default_rng(len(positions))
    box = world.obstacles[0].box
    pts = rng.uniform(box.lo, box.hi, size=(400, 3))
    cells = revealed_obstacles(world)
    for pos in positions:
        near = pts[np.max(np.abs(pts - np.asarray(pos)), axis=1) <= SENSOR.range]
        for q in near:
            assert any(c.contains(q) for c in cells)


def test_fresh_world_forgets_reveals():
    world = one_box_world()
    sense((3, 0, 0), world, SENSOR)
    assert world.revealed_count() > 0
    assert world.fresh().revealed_count() == 0


def test_min_sensing_distance_examples():
    teb = TebBox((0.81, 0.81, 0.81), (0.8,) * 3, 0.01)
    assert min_sensing_distance(teb, 0.05) == pytest.approx(1.67)
    assert min_sensing_distance(teb, 0.05) <= 2.0
    assert min_sensing_distance(TebBox((0, 0, 0), (0,) * 3, 0.0), 0.05) == pytest.approx(0.05)
    validate_sensor(SensorConfig(range=2.0), teb, 0.05)
    with pytest.raises(SensingRangeError, match=r"2\*half_width \+ dx"):
        validate_sensor(SensorConfig(range=1.0), teb, 0.05)


def test_environment_round_trip():
    world = one_box_world()
    again = environment_from_dict(environment_to_dict(world))
    assert again.boxes == world.boxes
    assert np.array_equal(again.start, world.start) and np.array_equal(again.goal, world.goal)
