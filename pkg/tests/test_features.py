import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socnav.features import (
    FEATURE_NAMES,
    FeatureParams,
    WeightVector,
    feature_count,
    feature_values,
    feature_vector,
    linear_cost,
    load_weights_csv,
    save_weights_csv,
)
from socnav.scenario import Path, Person, Pose2D, Rect, Scenario, resample_path


def empty_scenario(goal=(3.0, 0.0)):
    return Scenario(robot=Pose2D(0, 0, 0), goal=Pose2D(*goal, 0))


def test_at_goal_no_clutter_all_zero():
    scen = empty_scenario()
    f = feature_vector((3.0, 0.0), scen)
    np.testing.assert_array_equal(f, np.zeros(5))


def test_person_center_peaks_all_three_proxemics():
    scen = Scenario(
        robot=Pose2D(0, 0, 0), goal=Pose2D(3, 0, 0),
        people=(Person(Pose2D(1.0, 1.0, 0.7)),),
    )
    f = feature_vector((1.0, 1.0), scen)
    assert f[2] == pytest.approx(1.0)
    assert f[3] == pytest.approx(1.0)
    assert f[4] == pytest.approx(1.0)


def test_front_gaussian_closed_form():
    # 1.2 m directly ahead with sigma_front_x = 1.2 -> exp(-0.5)
    scen = Scenario(
        robot=Pose2D(0, 0, 0), goal=Pose2D(3, 0, 0),
        people=(Person(Pose2D(0.0, -2.0, math.pi / 2)),),  # facing +y
    )
    f = feature_vector((0.0, -0.8), scen)  # 1.2 m ahead of the person
    assert f[2] == pytest.approx(0.6065306597126334, abs=1e-12)


def test_goal_distance_normalized_by_window_diagonal():
    scen = empty_scenario(goal=(4.0, 0.0))
    f = feature_vector((0.0, 0.0), scen)
    assert f[0] == pytest.approx(4.0 / (10.0 * math.sqrt(2.0)))


def test_obstacle_proximity_gaussian_of_clearance():
    scen = Scenario(
        robot=Pose2D(0, 0, 0), goal=Pose2D(3, 0, 0),
        rect_obstacles=(Rect(1.0, 1.0, 2.0, 2.0),),
    )
    f = feature_vector((1.5, 0.6), scen)  # 0.4 m below the rect edge
    assert f[1] == pytest.approx(math.exp(-0.5), abs=1e-12)
    inside = feature_vector((1.5, 1.5), scen)
    assert inside[1] == pytest.approx(1.0)


def test_linear_cost_trivia():
    scen = empty_scenario()
    w = WeightVector(np.array([1.0, 0, 0, 0, 0]))
    assert linear_cost((3.0, 0.0), scen, w) == pytest.approx(1.0)
    # f = (0.5, 0, 0, 0, 0): point 0.5 * diagonal away from the goal
    scen2 = Scenario(robot=Pose2D(0, 0, 0), goal=Pose2D(-4.0, 0, 0))
    d = 0.5 * 10.0 * math.sqrt(2.0)
    pt = (-4.0 + d, 0.0)
    f = feature_vector(pt, scen2)
    np.testing.assert_allclose(f, [0.5, 0, 0, 0, 0], atol=1e-12)
    assert linear_cost(pt, scen2, WeightVector.uniform()) == pytest.approx(1.1)


@settings(max_examples=60, deadline=None)
@given(st.floats(-4.5, 4.5), st.floats(-4.5, 4.5))
def test_linear_cost_bounds(x, y):
    scen = Scenario(
        robot=Pose2D(0, 0, 0), goal=Pose2D(2, 1, 0),
        people=(Person(Pose2D(1.0, -1.0, 0.3)),),
        rect_obstacles=(Rect(-3.0, 2.0, -1.0, 3.0),),
    )
    c = linear_cost((x, y), scen, WeightVector.uniform())
    assert 1.0 <= c <= 2.0


def test_feature_bounds_fuzz_many_points():
    rng = np.random.default_rng(0)
    scen = Scenario(
        robot=Pose2D(0, 0, 0.4), goal=Pose2D(2, 1, 0),
        people=(Person(Pose2D(1.0, -1.0, 0.3)), Person(Pose2D(-2.0, 2.0, 2.0))),
        rect_obstacles=(Rect(-3.0, 2.0, -1.0, 3.0),),
    )
    pts = rng.uniform(-5, 5, size=(100_000, 2))
    f = feature_values(pts, scen)
    assert f.min() >= 0.0
    assert f.max() <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 4.0))
def test_proxemics_front_back_asymmetry(d):
    scen = Scenario(
        robot=Pose2D(0, 0, 0), goal=Pose2D(0, 4, 0),
        people=(Person(Pose2D(0.0, 0.0, 0.0)),),
    )
    front = feature_vector((d, 0.0), scen)[2]
    back = feature_vector((-d, 0.0), scen)[3]
    assert front > back


def test_feature_count_single_point_zero():
    scen = empty_scenario()
    f = feature_count(Path(np.array([[1.0, 1.0]])), scen)
    np.testing.assert_array_equal(f, np.zeros(5))


def test_feature_count_linear_integrand_exact():
    # radial segment toward the goal: goal_distance is linear in arc length,
    # so the trapezoid rule is exact
    scen = empty_scenario(goal=(0.0, 0.0))
    p = Path(np.array([[1.0, 0.0], [2.0, 0.0]]))
    f = feature_count(p, scen)
    dmax = 10.0 * math.sqrt(2.0)
    assert f[0] == pytest.approx(1.5 / dmax * 1.0, rel=1e-9)
    np.testing.assert_allclose(f[1:], 0.0, atol=1e-15)


def test_feature_count_short_constant_segment():
    # one resample step: F ~ f * length
    scen = empty_scenario(goal=(-4.0, 0.0))
    a = np.array([2.0, 1.0])
    b = a + np.array([0.05, 0.0])
    f_mid = feature_values(np.array([a, b]), scen).mean(axis=0)
    f = feature_count(Path(np.array([a, b])), scen)
    np.testing.assert_allclose(f, f_mid * 0.05, rtol=1e-6)


def test_feature_count_matches_dense_integral():
    scen = Scenario(
        robot=Pose2D(0, 0, 0), goal=Pose2D(3, 1, 0),
        people=(Person(Pose2D(1.5, 0.3, 2.0)),),
        rect_obstacles=(Rect(0.5, -1.5, 1.5, -0.7),),
    )
    t = np.linspace(0, 1, 60)
    pts = np.stack([3.0 * t, 1.0 * t + 0.4 * np.sin(2 * math.pi * t)], axis=1)
    path = Path(pts)
    got = feature_count(path, scen)
    # dense oracle: 0.001 m resampling, trapezoid over the fine stations
    fine = resample_path(path, 0.001).points
    f = feature_values(fine, scen)
    ds = np.hypot(*(np.diff(fine, axis=0).T))
    expected = ((f[:-1] + f[1:]) * 0.5 * ds[:, None]).sum(axis=0)
    # 1% on the count vector; the front/back gate planes make single
    # components noisier where the path crosses right next to a person
    err = np.linalg.norm(got - expected) / np.linalg.norm(expected)
    assert err < 0.01


def test_feature_count_additive_over_concatenation():
    scen = Scenario(
        robot=Pose2D(0, 0, 0), goal=Pose2D(3, 1, 0),
        people=(Person(Pose2D(1.0, 0.5, 1.0)),),
    )
    # both pieces have lengths that are exact multiples of the 0.05 step
    a = Path(np.array([[0.0, 0.0], [1.0, 0.0]]))
    b = Path(np.array([[1.0, 0.0], [1.0, 0.5], [2.5, 0.5]]))
    whole = Path(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [2.5, 0.5]]))
    fa = feature_count(a, scen)
    fb = feature_count(b, scen)
    fw = feature_count(whole, scen)
    np.testing.assert_allclose(fa + fb, fw, atol=1e-9)


def test_weight_vector_validation():
    with pytest.raises(ValueError):
        WeightVector(np.array([0.5, -0.1, 0.2, 0.2, 0.2]))
    w = WeightVector(np.array([2.0, 1.0, 1.0, 0.0, 0.0])).normalized()
    assert w.w.sum() == pytest.approx(1.0)


def test_weights_csv_round_trip(tmp_path):
    w = WeightVector(np.array([0.3, 0.25, 0.15, 0.15, 0.15]))
    f = tmp_path / "w.csv"
    save_weights_csv(w, f)
    again = load_weights_csv(f)
    np.testing.assert_allclose(again.w, w.w)


def test_weights_csv_rejects_unknown_name(tmp_path):
    f = tmp_path / "w.csv"
    f.write_text("goal_distance,0.5\nbogus_feature,0.5\n")
    with pytest.raises(ValueError, match="unknown feature"):
        load_weights_csv(f)


def test_weights_csv_rejects_missing_names(tmp_path):
    f = tmp_path / "w.csv"
    f.write_text("goal_distance,1.0\n")
    with pytest.raises(ValueError, match="missing"):
        load_weights_csv(f)


def test_feature_names_stable():
    assert FEATURE_NAMES == (
        "goal_distance",
        "obstacle_proximity",
        "proxemics_front",
        "proxemics_back",
        "proxemics_sides",
    )
