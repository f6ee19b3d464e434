from __future__ import annotations

import json
from pathlib import Path

import pytest

from lavawatch import cli
from lavawatch.core.auth import verify_password
from lavawatch.core.imaging import encode_png
from lavawatch.core.simharness import FlowSpec, Scenario, generate_sequence
from lavawatch.infra.frame_source import iter_frame_stream


def _write_pair(tmp_path: Path) -> tuple[Path, Path]:
    flow = FlowSpec(start=(80.0, 60.0), bearing=300.0, speed=2.0, growth=3.0)
    frames = generate_sequence(Scenario("pair", frames=6, size=(160, 120), flow=flow))
    prev, curr = tmp_path / "prev.png", tmp_path / "curr.png"
    prev.write_bytes(encode_png(frames[3]))
    curr.write_bytes(encode_png(frames[4]))
    return prev, curr


def test_hash_password_prints_verifiable_hash(capsys) -> None:
    assert cli.main(["hash-password", "--password", "lava"]) == cli.EXIT_OK

    encoded = capsys.readouterr().out.strip()
    assert verify_password("lava", encoded)


def test_detect_once_prints_flows(tmp_path: Path, capsys) -> None:
    prev, curr = _write_pair(tmp_path)

    assert cli.main(["detect-once", "--prev", str(prev), "--curr", str(curr)]) == cli.EXIT_OK

    document = json.loads(capsys.readouterr().out)
    assert document["flows"]
    flow = document["flows"][0]
    assert set(flow) == {"area", "centroid", "grados", "direction", "deviation", "source"}


def test_detect_once_missing_file_is_config_error(tmp_path: Path) -> None:
    code = cli.main(["detect-once", "--prev", str(tmp_path / "a.png"), "--curr", str(tmp_path)])

    assert code == cli.EXIT_CONFIG


def test_detect_once_size_mismatch_is_runtime_error(tmp_path: Path) -> None:
    prev, _ = _write_pair(tmp_path)
    small = generate_sequence(Scenario("small", frames=2, size=(8, 8)))[0]
    curr = tmp_path / "small.png"
    curr.write_bytes(encode_png(small))

    assert cli.main(["detect-once", "--prev", str(prev), "--curr", str(curr)]) == cli.EXIT_RUNTIME


def test_gen_scenario_writes_png_frames(tmp_path: Path) -> None:
    code = cli.main(
        [
            "gen-scenario",
            "--out",
            str(tmp_path),
            "--id",
            "demo",
            "--frames",
            "4",
            "--size",
            "96x64",
            "--bearing",
            "30",
            "--speed",
            "1",
        ],
    )

    assert code == cli.EXIT_OK
    assert (tmp_path / "demo.scenario").is_file()
    assert sorted(p.name for p in (tmp_path / "demo").iterdir()) == [
        f"frame_{k:05d}.png" for k in range(4)
    ]


def test_gen_scenario_writes_stream(tmp_path: Path) -> None:
    code = cli.main(
        ["gen-scenario", "--out", str(tmp_path), "--id", "s", "--frames", "3", "--size",
         "32x24", "--no-flow", "--format", "stream"],
    )

    assert code == cli.EXIT_OK
    assert len(list(iter_frame_stream(tmp_path / "s.frames"))) == 3


@pytest.mark.parametrize(
    "extra",
    [["--size", "96"], ["--start", "1;2"], ["--speed", "50", "--size", "32x24"], ["--frames", "1"]],
)
def test_gen_scenario_rejects_bad_arguments(tmp_path: Path, extra: list[str]) -> None:
    assert cli.main(["gen-scenario", "--out", str(tmp_path), *extra]) == cli.EXIT_CONFIG


def test_gen_scenario_default_set(tmp_path: Path, capsys) -> None:
    assert cli.main(["gen-scenario", "--out", str(tmp_path), "--default-set"]) == cli.EXIT_OK

    assert len(list(tmp_path.glob("*.scenario"))) == 100
    assert "wrote 100 scenario files" in capsys.readouterr().out


def test_bench_over_scenario_directory(tmp_path: Path, capsys) -> None:
    scenario_text = "frames = 3\nwidth = 48\nheight = 32\n"
    (tmp_path / "still.scenario").write_text(scenario_text, encoding="utf-8")

    assert cli.main(["bench", "--scenarios", str(tmp_path), "--json"]) == cli.EXIT_OK

    document = json.loads(capsys.readouterr().out)
    assert document["scenarios"] == 1
    assert document["success_pct"] == 100.0


def test_bench_rejects_zero_workers(tmp_path: Path) -> None:
    assert cli.main(["bench", "--scenarios", str(tmp_path), "--workers", "0"]) == cli.EXIT_CONFIG


def test_run_processes_frame_directory(tmp_path: Path, capsys) -> None:
    frames_dir = tmp_path / "frames"
    snaps = tmp_path / "snaps"
    frames_dir.mkdir()
    snaps.mkdir()
    flow = FlowSpec(start=(80.0, 60.0), bearing=300.0, speed=2.0, growth=3.0)
    for frame in generate_sequence(Scenario("run", frames=5, size=(160, 120), flow=flow)):
        (frames_dir / f"{frame.frame_id:03d}.png").write_bytes(encode_png(frame))
    log = tmp_path / "events.ndjson"
    config = tmp_path / "lavawatch.conf"
    config.write_text(
        f"input.frames_dir = {frames_dir}\nsnapshot_dir = {snaps}\nevent_log = {log}\n",
        encoding="utf-8",
    )

    assert cli.main(["run", "--config", str(config)]) == cli.EXIT_OK

    metrics = json.loads(capsys.readouterr().err.strip().splitlines()[-1])["metrics"]
    assert metrics["frames"] == 5
    assert len(log.read_bytes().splitlines()) == metrics["events"]


def test_run_with_bad_config_exits_one(tmp_path: Path) -> None:
    config = tmp_path / "bad.conf"
    config.write_text("snapshot_dir = /nowhere\n", encoding="utf-8")

    assert cli.main(["run", "--config", str(config)]) == cli.EXIT_CONFIG


def test_usage_errors_exit_one() -> None:
    with pytest.raises(SystemExit) as exc_info:
        cli.main(["frobnicate"])

    assert exc_info.value.code == cli.EXIT_CONFIG
