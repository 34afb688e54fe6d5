import json
import os

from click.testing import CliRunner

from ldsitrack.cli import main

SCENE_ARGS = [
    "--set", "scene.preset=diagonal",
    "--set", "scene.duration_us=300000",
]


def test_generate_filter_track_round_trip():
    runner = CliRunner()
    with runner.isolated_filesystem():
        r = runner.invoke(main, ["generate", *SCENE_ARGS,
                                 "--events-out", "raw.evt",
                                 "--truth-out", "truth.csv",
                                 "--tags-out", "tags.txt"])
        assert r.exit_code == 0, r.output
        assert os.path.getsize("raw.evt") > 12
        n_tags = sum(1 for _ in open("tags.txt"))

        r = runner.invoke(main, ["filter", "--set", "ldsi.preset=medium",
                                 "--events-in", "raw.evt",
                                 "--events-out", "filtered.evt"])
        assert r.exit_code == 0, r.output
        assert "reduction" in r.output
        assert os.path.getsize("filtered.evt") < os.path.getsize("raw.evt")

        r = runner.invoke(main, ["track", "--events-in", "filtered.evt",
                                 "--estimates-out", "est.csv"])
        assert r.exit_code == 0, r.output
        lines = open("est.csv").read().strip().split("\n")
        assert lines[0] == "t,x,y,support"
        assert len(lines) > 1
        assert n_tags == (os.path.getsize("raw.evt") - 12) // 16


def test_csv_format_flag():
    runner = CliRunner()
    with runner.isolated_filesystem():
        r = runner.invoke(main, ["generate", *SCENE_ARGS, "--format", "csv",
                                 "--events-out", "raw.csv"])
        assert r.exit_code == 0, r.output
        assert open("raw.csv").readline().strip() == "128,128"


def test_ik_command():
    runner = CliRunner()
    with runner.isolated_filesystem():
        with open("pos.csv", "w") as fh:
            fh.write("150,250\n120,260\n")
        r = runner.invoke(main, ["ik", "--positions-in", "pos.csv",
                                 "--angles-out", "angles.csv"])
        assert r.exit_code == 0, r.output
        lines = open("angles.csv").read().strip().split("\n")
        assert lines[0] == "xi_deg,sigma_deg"
        xi, sigma = map(float, lines[1].split(","))
        assert abs(xi - (180 - sigma)) < 1e-6  # symmetric target


def test_ik_unreachable_fails_with_json_error():
    runner = CliRunner()
    with runner.isolated_filesystem():
        with open("pos.csv", "w") as fh:
            fh.write("150,-10\n")
        r = runner.invoke(main, ["ik", "--positions-in", "pos.csv",
                                 "--angles-out", "angles.csv"])
        assert r.exit_code == 1
        err = json.loads(r.output.strip().split("\n")[-1])
        assert err["error"] == "ik"


def test_config_file_plus_override():
    runner = CliRunner()
    with runner.isolated_filesystem():
        with open("run.conf", "w") as fh:
            fh.write("scene.preset = circle\nscene.duration_us = 200000\n"
                     "ldsi.TCE = 9\n")
        r = runner.invoke(main, ["generate", "--config", "run.conf",
                                 "--set", "scene.duration_us=100000",
                                 "--events-out", "a.evt"])
        assert r.exit_code == 0, r.output


def test_run_writes_bundle():
    runner = CliRunner()
    with runner.isolated_filesystem():
        r = runner.invoke(main, ["run", *SCENE_ARGS, "--set", "mode=both",
                                 "--out", "bundle"])
        assert r.exit_code == 0, r.output
        assert sorted(os.listdir("bundle")) == [
            "config.txt", "cycles_event.csv", "cycles_frame.csv",
            "estimates.csv", "report.json",
        ]
        report = json.loads(open("bundle/report.json").read())
        assert set(report) == {"event", "frame"}


def test_compare_outputs_json():
    runner = CliRunner()
    with runner.isolated_filesystem():
        r = runner.invoke(main, ["compare", *SCENE_ARGS])
        assert r.exit_code == 0, r.output
        summary = json.loads(r.output[r.output.index("{"):])
        assert summary["byte_ratio_event_over_frame"] < 1.0


def test_bad_param_fails_cleanly():
    runner = CliRunner()
    with runner.isolated_filesystem():
        open("empty.evt", "wb").write(b"LDSIEVT1" + bytes([128, 0, 128, 0]))
        r = runner.invoke(main, ["filter", "--set", "ldsi.ERCO=11",
                                 "--events-in", "empty.evt",
                                 "--events-out", "out.evt"])
        assert r.exit_code == 1
        err = json.loads(r.output.strip().split("\n")[-1])
        assert err["error"] == "filter"
        assert "range" in err["message"]
