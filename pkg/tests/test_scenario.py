import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socnav.scenario import (
    Path,
    Person,
    Pose2D,
    Rect,
    Scenario,
    Segment,
    load_path_csv,
    load_scenario,
    normalize_angle,
    resample_path,
    save_path_csv,
    save_scenario,
    scenario_from_json,
    scenario_to_json,
)


@given(st.floats(min_value=-1000.0, max_value=1000.0, allow_nan=False))
def test_angle_normalization_range(theta):
    r = normalize_angle(theta)
    assert -math.pi < r <= math.pi
    # same direction modulo full turns
    assert math.isclose(math.cos(r), math.cos(theta), abs_tol=1e-9)
    assert math.isclose(math.sin(r), math.sin(theta), abs_tol=1e-9)


def test_pose_normalizes_on_construction():
    assert Pose2D(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)
    assert Pose2D(0, 0, -math.pi).theta == pytest.approx(math.pi)


def test_pose_frame_round_trip():
    pose = Pose2D(1.5, -2.0, 0.7)
    pts = np.array([[3.0, 1.0], [-2.0, 0.5], [0.0, 0.0]])
    back = pose.to_world(pose.to_local(pts))
    np.testing.assert_allclose(back, pts, atol=1e-12)


def test_person_requires_positive_radius():
    with pytest.raises(ValueError):
        Person(Pose2D(0, 0, 0), body_radius=0.0)


def test_goal_outside_window_rejected():
    with pytest.raises(ValueError, match="window"):
        Scenario(robot=Pose2D(0, 0, 0), goal=Pose2D(6.0, 0, 0))


def test_goal_window_follows_robot_heading():
    # goal 4.9 m along the heading stays inside the rotated window
    theta = 2.2
    gx, gy = 4.9 * math.cos(theta), 4.9 * math.sin(theta)
    scen = Scenario(robot=Pose2D(0, 0, theta), goal=Pose2D(gx, gy, 0))
    assert scen.goal.x == pytest.approx(gx)


def test_robot_inside_obstacle_rejected():
    with pytest.raises(ValueError, match="robot"):
        Scenario(
            robot=Pose2D(0, 0, 0),
            goal=Pose2D(3, 0, 0),
            rect_obstacles=(Rect(-0.5, -0.5, 0.5, 0.5),),
        )


def test_goal_inside_segment_obstacle_rejected():
    with pytest.raises(ValueError, match="goal"):
        Scenario(
            robot=Pose2D(0, 0, 0),
            goal=Pose2D(3, 0, 0),
            segment_obstacles=(Segment(3.0, -1.0, 3.0, 1.0, thickness=0.2),),
        )


def test_scenario_json_round_trip():
    scen = Scenario(
        robot=Pose2D(0.25, -0.125, 0.5),
        goal=Pose2D(3.0, 1.0, -1.0),
        people=(Person(Pose2D(1.0, 1.0, 2.0)), Person(Pose2D(-1.0, 2.0, -2.0), 0.3)),
        rect_obstacles=(Rect(2.0, 2.0, 3.0, 4.0),),
        segment_obstacles=(Segment(-4.0, -4.0, -4.0, 4.0, 0.15),),
    )
    again = scenario_from_json(scenario_to_json(scen))
    assert again == scen


def test_scenario_file_round_trip(tmp_path):
    scen = Scenario(robot=Pose2D(1, 2, 3), goal=Pose2D(2, 3, 0))
    f = tmp_path / "scen.json"
    save_scenario(scen, f)
    assert load_scenario(f) == scen


def test_scenario_json_missing_key():
    with pytest.raises(ValueError, match="missing"):
        scenario_from_json('{"robot": {"x": 0, "y": 0, "theta": 0}}')


def test_path_rejects_consecutive_duplicates():
    with pytest.raises(ValueError, match="duplicate"):
        Path(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))


def test_path_single_point_allowed():
    p = Path(np.array([[1.0, 2.0]]))
    assert len(p) == 1
    assert p.length == 0.0


def test_path_csv_round_trip(tmp_path):
    p = Path(np.array([[0.0, 0.0], [1.25, -0.5], [2.0, 3.0]]))
    f = tmp_path / "path.csv"
    save_path_csv(p, f)
    q = load_path_csv(f)
    np.testing.assert_array_equal(p.points, q.points)


def test_path_csv_empty_rejected(tmp_path):
    f = tmp_path / "empty.csv"
    f.write_text("")
    with pytest.raises(ValueError, match="empty"):
        load_path_csv(f)


def test_resample_step_and_endpoints():
    p = Path(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
    r = resample_path(p, 0.05)
    seg = np.diff(r.points, axis=0)
    d = np.hypot(seg[:, 0], seg[:, 1])
    assert np.all(d <= 0.05 + 1e-9)
    np.testing.assert_allclose(r.points[0], p.points[0])
    np.testing.assert_allclose(r.points[-1], p.points[-1])
    # stations are exact multiples of the step along the arc length
    assert r.length == pytest.approx(2.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-4, 4), st.floats(-4, 4)), min_size=2, max_size=6))
def test_resample_preserves_endpoints_and_length(pts):
    arr = np.array(pts)
    keep = np.ones(len(arr), bool)
    keep[1:] = np.hypot(*(np.diff(arr, axis=0).T)) > 1e-6
    arr = arr[keep]
    if len(arr) < 2:
        return
    p = Path(arr)
    r = resample_path(p, 0.05)
    np.testing.assert_allclose(r.points[0], p.points[0], atol=1e-12)
    np.testing.assert_allclose(r.points[-1], p.points[-1], atol=1e-12)
    assert r.length <= p.length + 1e-9
    # corner cutting can lose up to ~2 steps per interior vertex
    assert r.length >= p.length - 0.1 * len(arr)
