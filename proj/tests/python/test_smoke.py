"""Smoke tests for the Python bindings."""

import math

import pytest

import canvass


def test_severity_bands():
    assert canvass.severity_of(3) == "critical"
    assert canvass.severity_of(15) == "serious"
    assert canvass.severity_of(45) == "minor"
    with pytest.raises(ValueError):
        canvass.severity_of(46)


def test_target_label():
    assert canvass.target_label({3, 32}) == 1
    assert canvass.target_label({15}) == 0
    assert canvass.target_label(set()) == 0


def test_fractional_years():
    assert canvass.fractional_years("2010-01-01", "2014-01-01") == 4.0
    assert canvass.fractional_years("2013-07-01", "2014-01-01") == pytest.approx(
        184 / 365.25
    )
    with pytest.raises(ValueError):
        canvass.fractional_years("2015-01-01", "2014-01-01")


def test_kde_intensity_colocated():
    events = [("2013-12-20", 41.88, -87.63)]
    value = canvass.kde_intensity(
        events, 41.88, -87.63, "2014-01-01", bandwidth_meters=100.0
    )
    assert value == pytest.approx(1.0 / (2 * math.pi * 100.0**2), rel=1e-12)
    # outside the 90-day window
    assert canvass.kde_intensity(events, 41.88, -87.63, "2014-06-01") == 0.0


def test_odds_ratio_fixture():
    model = {
        "feature_names": ["cluster_purple"],
        "coefficients": [1.555],
        "intercept": 0.0,
    }
    assert abs(canvass.odds_ratio(model, "cluster_purple") - 4.735) <= 0.001
    p0 = canvass.predict_probability(model, {"cluster_purple": 0.0})
    p1 = canvass.predict_probability(model, {"cluster_purple": 1.0})
    assert p0 == 0.5
    assert (p1 / (1 - p1)) / (p0 / (1 - p0)) == pytest.approx(4.735, abs=1e-3)


def test_predict_missing_feature_raises():
    model = {"feature_names": ["x"], "coefficients": [1.0], "intercept": 0.0}
    with pytest.raises(ValueError, match="x"):
        canvass.predict_probability(model, {})


def test_fit_recovers_sign():
    import random

    rng = random.Random(4)
    xs, labels = [], []
    for _ in range(4000):
        x = rng.uniform(-2, 2)
        z = -0.5 + 1.3 * x
        xs.append(x)
        labels.append(1.0 if rng.random() < 1 / (1 + math.exp(-z)) else 0.0)
    fit = canvass.fit_logistic(["x"], [xs], labels)
    assert fit["coefficients"][0] == pytest.approx(1.3, abs=0.2)
    assert fit["intercept"] == pytest.approx(-0.5, abs=0.2)
    assert fit["gradient_norm"] < 1e-8


def test_cluster_1d():
    result = canvass.cluster_1d(
        {"a": 2.0, "b": 1.0, "c": 0.2, "d": -0.3, "e": -1.0, "f": -2.0}, k=6
    )
    assert result["assignment"]["a"] == "purple"
    assert result["assignment"]["f"] == "brown"
    assert result["cluster_means"]["purple"] == 2.0


def test_simulate_schedule_hand_case():
    items = [
        (1, "2014-09-01", 0),
        (2, "2014-09-02", 0),
        (3, "2014-09-03", 1),
        (4, "2014-09-04", 0),
    ]
    scores = {1: 0.3, 2: 0.2, 3: 0.9, 4: 0.1}
    result = canvass.simulate_schedule(items, "model", scores, capacity=2)
    assert result["ordering"][0] == 3
    assert result["mean_day_reduction"] == 1.0
    assert result["std_day_reduction"] == 0.0
    assert result["first_half_fraction"] == 1.0


def test_generate_city(tmp_path):
    manifest = canvass.generate_city(
        seed=7, n_establishments=80, n_inspections=200, out_dir=str(tmp_path)
    )
    assert manifest["total_inspections"] == 200
    for name in (
        "inspections.csv",
        "licenses.csv",
        "weather.csv",
        "events.csv",
        "manifest.json",
    ):
        assert (tmp_path / name).exists()
    # determinism: regeneration yields the same tallies
    again = canvass.generate_city(seed=7, n_establishments=80, n_inspections=200)
    assert again == manifest


def test_feature_names_exported():
    assert len(canvass.FEATURE_NAMES) == 16
    assert canvass.FEATURE_NAMES[0] == "past_serious"
    assert canvass.FEATURE_NAMES[10] == "cluster_purple"
