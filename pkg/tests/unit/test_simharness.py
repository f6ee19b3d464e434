from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from lavawatch.core.errors import ConfigError, FlowOutOfBounds
from lavawatch.core.pipeline import EventStage
from lavawatch.core.simharness import (
    FlowSpec,
    Scenario,
    default_scenarios,
    evaluate_scenario,
    generate_sequence,
    load_scenarios,
    parse_scenario,
    render_report_text,
    render_scenario,
    report_to_json,
    run_benchmark,
    streak_coverage,
    summarize_detection_column,
    write_scenarios,
)


def _flow_scenario(**overrides) -> Scenario:
    flow = FlowSpec(start=(80.0, 60.0), bearing=300.0, speed=2.0, growth=3.0)
    values = {"scenario_id": "flow", "frames": 8, "size": (160, 120), "flow": flow, "seed": 3}
    return Scenario(**{**values, **overrides})


def test_summarize_detection_column() -> None:
    column = [100, 100, 100, 98, 100, 100, 99, 100, 97, 100]

    assert summarize_detection_column(column) == (99.4, 0.6)
    assert summarize_detection_column([]) == (100.0, 0.0)


def test_flow_endpoints_follow_bearing() -> None:
    flow = FlowSpec(start=(10.0, 10.0), bearing=90.0, speed=2.0, length=5.0, growth=1.0, onset=1)

    tail, head = flow.endpoints(4)

    assert tail == pytest.approx((10.0, 4.0))
    assert head == pytest.approx((10.0, -4.0))
    assert flow.step == pytest.approx((0.0, -1.0), abs=1e-12)


def test_streak_coverage_is_fractional_and_local() -> None:
    flow = FlowSpec(start=(30.0, 20.0), bearing=0.0, speed=0.0, width=4, length=12.0)

    coverage = streak_coverage(flow, 0, 64, 40)

    assert coverage.max() == pytest.approx(1.0)
    assert coverage.min() == 0.0
    assert coverage[20, 36] == pytest.approx(1.0)
    assert not coverage[:10].any()
    assert ((coverage > 0) & (coverage < 1)).any()


def test_generate_sequence_is_deterministic() -> None:
    scenario = _flow_scenario(noise_sigma=2.0)

    first = generate_sequence(scenario, frame_interval_ms=40)
    second = generate_sequence(scenario, frame_interval_ms=40)

    assert len(first) == 8
    assert [frame.timestamp_ms for frame in first] == [k * 40 for k in range(8)]
    assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(first, second, strict=True))
    assert first[0].width == 160
    assert first[0].height == 120


def test_still_scenario_without_noise_is_static() -> None:
    frames = generate_sequence(Scenario("still", frames=3, size=(32, 24)))

    assert np.array_equal(frames[0].pixels, frames[2].pixels)
    assert frames[0].pixels[0, 0].tolist() == [40, 40, 40]
    assert frames[0].pixels[0, -1].tolist() == [120, 120, 120]


def test_flow_onset_keeps_early_frames_clean() -> None:
    scenario = _flow_scenario(flow=FlowSpec(start=(80.0, 60.0), bearing=0.0, speed=2.0, onset=4))

    frames = generate_sequence(scenario)

    assert np.array_equal(frames[0].pixels, frames[3].pixels)
    assert not np.array_equal(frames[3].pixels, frames[4].pixels)
    assert list(scenario.active_pairs()) == [4, 5, 6, 7]


def test_out_of_bounds_flow_rejected() -> None:
    scenario = _flow_scenario(flow=FlowSpec(start=(80.0, 60.0), bearing=0.0, speed=20.0))

    with pytest.raises(FlowOutOfBounds):
        generate_sequence(scenario)
    row = evaluate_scenario(scenario)
    assert row.error is not None
    assert row.detection_pct == 0.0


def test_scenario_validation() -> None:
    with pytest.raises(ValueError):
        Scenario("x", frames=1)
    with pytest.raises(ValueError):
        Scenario("x", background_low=200, background_high=100)
    with pytest.raises(ValueError):
        FlowSpec(start=(0.0, 0.0), bearing=0.0, speed=-1.0)


def test_default_scenarios_shape() -> None:
    scenarios = default_scenarios()

    assert len(scenarios) == 100
    assert sum(s.has_flow for s in scenarios) == 50
    assert len({s.scenario_id for s in scenarios}) == 100
    assert len({s.seed for s in scenarios}) == 100
    for scenario in scenarios[:50]:
        assert scenario.flow is not None
        assert 1.0 <= scenario.flow.speed <= 4.0
        offset = scenario.flow.bearing % 90.0
        assert 21.0 <= offset <= 69.0
        generate_sequence(scenario)


def test_evaluate_flow_scenario_detects_direction() -> None:
    row = evaluate_scenario(_flow_scenario())

    assert row.eruption is True
    assert row.detected is True
    assert row.false_events == 0
    assert row.detection_pct >= 50.0
    assert row.mean_area > 0
    assert row.expected_direction == "NE"
    assert row.dominant_direction == "NE"


def test_evaluate_still_scenario_has_no_events() -> None:
    row = evaluate_scenario(Scenario("still", frames=6, size=(96, 64), noise_sigma=2.0, seed=9))

    assert row.eruption is False
    assert row.detected is True
    assert row.events == 0
    assert row.false_events == 0
    assert row.detection_pct == 100.0


def test_scenario_text_round_trip(tmp_path: Path) -> None:
    scenario = _flow_scenario(noise_sigma=1.5)

    parsed = parse_scenario(render_scenario(scenario))

    assert parsed.scenario_id == "flow"
    assert parsed.flow is not None
    assert parsed.flow.bearing == 300.0
    assert parsed.flow.color.h == pytest.approx(scenario.flow.color.h)
    assert parsed.size == (160, 120)
    assert parsed.noise_sigma == 1.5

    written = write_scenarios([scenario, Scenario("still", frames=4)], tmp_path)
    assert [p.name for p in written] == ["flow.scenario", "still.scenario"]
    assert [s.scenario_id for s in load_scenarios(tmp_path)] == ["flow", "still"]


def test_parse_scenario_errors(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="unknown scenario keys"):
        parse_scenario("id = x\nwind = 3\n")
    with pytest.raises(ConfigError, match="frames"):
        parse_scenario("frames = 1\n")
    with pytest.raises(ConfigError):
        load_scenarios(tmp_path / "missing")
    assert parse_scenario("flow = false\n", default_id="fallback").scenario_id == "fallback"


def test_run_benchmark_excludes_error_rows() -> None:
    scenarios = [
        Scenario("still-a", frames=3, size=(48, 32), seed=1),
        _flow_scenario(
            scenario_id="broken",
            flow=FlowSpec(start=(1.0, 1.0), bearing=0.0, speed=1.0),
        ),
        Scenario("still-b", frames=3, size=(48, 32), seed=2),
    ]

    report = run_benchmark(scenarios, workers=2)

    assert [row.scenario_id for row in report.rows] == ["still-a", "broken", "still-b"]
    assert report.rows[1].error is not None
    assert (report.success_pct, report.error_pct) == (100.0, 0.0)
    assert report.false_events == 0

    text = render_report_text(report)
    assert "broken" in text and "ERROR" in text
    assert text.endswith("Result  Succ 100.00%  Err 0.00%  false events 0\n")

    document = json.loads(report_to_json(report))
    assert document["scenarios"] == 3
    assert document["rows"][0]["detection_pct"] == 100.0
    assert math.isclose(document["success_pct"], 100.0)


def test_evaluate_counts_only_events_built_by_event_stage(monkeypatch) -> None:
    monkeypatch.setattr(EventStage, "step", lambda self, prev, curr: None)

    row = evaluate_scenario(_flow_scenario())

    assert row.events == 0
    assert row.detected is False
    assert row.dominant_direction is None


@pytest.mark.slow
def test_default_benchmark_meets_acceptance() -> None:
    report = run_benchmark(default_scenarios(), workers=4)

    assert report.error_pct == 0.0
    assert report.success_pct >= 98.0
    assert report.false_events == 0
    assert report.elapsed_s < 60.0
