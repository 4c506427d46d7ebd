import json
import os
import stat

import pytest

import ndtstream.harness.experiment as experiment
from ndtstream.control import BufferBased, PredictiveMpc, QLearning, QParams, RateBased
from ndtstream.harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    Report,
    ReportIOError,
    Row,
    aggregate_rows,
    compare,
    emit,
    load_report,
    lower_median,
    parse_config,
    parse_seeds,
    run_experiment,
)
from ndtstream.harness.cli import main
from ndtstream.harness.config import dumps, echo, from_mapping, parse_text
from ndtstream.harness.io import dumps_json, parse_report
from ndtstream.netmodel import ScenarioKind, load_trace

SMALL = ExperimentConfig(scenarios=(ScenarioKind.LowBandwidth, ScenarioKind.Stable),
                         controllers=(RateBased(), PredictiveMpc()), seeds=(1, 2, 3))


@pytest.fixture(scope="module")
def small_report():
    return run_experiment(SMALL, single_thread=True)


# -- config -----------------------------------------------------------------------------

def test_config_text_parsing():
    cfg = parse_config("""
        # sweep
        scenarios = LowBandwidth, HighLatency   # two rows
        seeds = 1..3, 9
        controller.kind = RateBased, PredictiveMpc, BufferBased, QLearning
        controller.h = 4
        controller.search = annealing
        annealing.iters = 300
        qoe.w_b = 0.8
        twin.bandwidth = ar:2:0
        q.episodes = 3
    """, env={})
    assert cfg.scenarios == (ScenarioKind.LowBandwidth, ScenarioKind.HighLatency)
    assert cfg.seeds == (1, 2, 3, 9)
    mpc = cfg.controller("PredictiveMpc")
    assert mpc.horizon == 4 and mpc.search.params.iters == 300
    assert cfg.weights.w_b == 0.8
    assert cfg.controller("QLearning").params.episodes == 3


def test_defaults_when_empty():
    cfg = parse_config("", env={})
    assert cfg == ExperimentConfig()
    assert cfg.seeds == tuple(range(1, 11))


def test_echo_rebuilds_config():
    cfg = parse_config("controller.kind = RateBased, BufferBased, PredictiveMpc, QLearning\n"
                       "controller.search = annealing\nseeds = 5, 7\nladder = 300:640x360, 900:1280x720\n",
                       env={})
    assert from_mapping(echo(cfg), env={}) == cfg
    assert parse_config(dumps(cfg), env={}) == cfg


@pytest.mark.parametrize("text,match", [
    ("seeds 1..3", "line 1"),
    ("a = 1\na = 2", "duplicate"),
    ("controller.hh = 3", "unknown config keys"),
    ("controller.h = five", "controller.h"),
    ("controller.kind = Genetic", "unknown controller"),
    ("scenarios = Mars", "unknown scenario"),
    ("seeds = 3..1", "3..1"),
    ("seeds = 1, 1", "duplicate seeds"),
    ("seeds = -1", "64-bit"),
    ("controller.kind = RateBased, rate", "distinct"),
    ("qoe.b_ref_s = 0", "b_ref"),
    ("device.max_width = 100", "device"),
    ("session.chunk_s = 3", "multiple"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text, env={})


def test_seed_env_override():
    cfg = parse_config("seeds = 1..10", env={"NDTSTREAM_SEED": "4,5"})
    assert cfg.seeds == (4, 5)
    assert parse_seeds("1..3,7") == (1, 2, 3, 7)


def test_parse_text_strips_comments():
    assert parse_text("a = b # c\n\n# only comment\n x=y ") == {"a": "b", "x": "y"}


# -- experiments ------------------------------------------------------------------------

def test_singleton_aggregates_equal_row():
    cfg = ExperimentConfig(scenarios=(ScenarioKind.PacketLoss,), controllers=(RateBased(),), seeds=(4,))
    rep = run_experiment(cfg)
    (row,), (agg,) = rep.rows, rep.aggregates
    for m in experiment.METRICS:
        assert agg.median[m] == agg.mean[m] == getattr(row, m)


def test_stable_rate_based_never_rebuffers():
    cfg = ExperimentConfig(scenarios=(ScenarioKind.Stable,), controllers=(RateBased(),))
    rep = run_experiment(cfg, single_thread=True)
    assert len(rep.rows) == 10 and all(r.rebuffer_s == 0 and r.complete for r in rep.rows)


def test_seed_order_does_not_matter(small_report):
    from dataclasses import replace
    rep = run_experiment(replace(SMALL, seeds=(3, 1, 2)), single_thread=True)
    assert rep.aggregates == small_report.aggregates and rep.rows == small_report.rows


def test_concurrent_equals_single_thread(small_report):
    rep = run_experiment(SMALL, workers=3)
    assert dumps_json(rep) == dumps_json(small_report)


def test_traces_generated_once_per_scenario_seed(monkeypatch):
    calls = []
    real = experiment.gen_scenario

    def counting(kind, duration, seed):
        calls.append((kind, seed))
        return real(kind, duration, seed)

    monkeypatch.setattr(experiment, "gen_scenario", counting)
    run_experiment(SMALL, single_thread=True)
    assert sorted(calls, key=str) == sorted({(k, s) for k in SMALL.scenarios for s in SMALL.seeds}, key=str)


def test_aggregates_recomputable(small_report):
    assert aggregate_rows(small_report.rows) == small_report.aggregates
    for agg in small_report.aggregates:
        qoes = sorted(r.qoe for r in small_report.rows
                      if (r.scenario, r.controller) == (agg.scenario, agg.controller))
        assert agg.median["qoe"] == qoes[(len(qoes) - 1) // 2]
        assert agg.mean["qoe"] == pytest.approx(sum(qoes) / len(qoes), rel=1e-15)


def test_lower_median():
    assert lower_median([4, 1, 3, 2]) == 2
    assert lower_median([5]) == 5
    with pytest.raises(ValueError):
        lower_median([])


def test_qlearning_rows_and_incomplete_flag():
    cfg = ExperimentConfig(scenarios=(ScenarioKind.HighLatency,),
                           controllers=(RateBased(), QLearning(QParams(episodes=2))), seeds=(1, 2))
    rep = run_experiment(cfg, single_thread=True)
    assert rep.aggregate("HighLatency", "QLearning").n == 2
    rb = [r for r in rep.rows if r.controller == "RateBased"]
    assert any(not r.complete for r in rb)
    assert rep.aggregate("HighLatency", "RateBased").incomplete == sum(not r.complete for r in rb)


# -- comparison -------------------------------------------------------------------------

def fake_report(pairs):
    rows = []
    for ctl, qoe, startup, reb in pairs:
        rows.append(Row("LowBandwidth", ctl, 1, qoe, startup, reb, 1000.0, 0, None, True))
    return Report(tuple(rows), aggregate_rows(rows), {}, "test")


def test_compare_examples():
    rep = fake_report([("Old", 70.0, 10.0, 4.0), ("New", 85.0, 5.0, 2.0)])
    (row,) = compare(rep, "Old", "New").rows
    assert row.qoe_delta == pytest.approx(15.0)
    assert row.startup_reduction_pct == pytest.approx(50.0)
    assert row.rebuffer_reduction_pct == pytest.approx(50.0)
    (same,) = compare(rep, "Old", "Old").rows
    assert (same.qoe_delta, same.startup_reduction_pct, same.rebuffer_reduction_pct) == (0, 0, 0)
    with pytest.raises(KeyError):
        compare(rep, "Old", "Missing")


def test_reduction_undefined_for_zero_baseline():
    rep = fake_report([("Old", 70.0, 0.0, 0.0), ("New", 85.0, 1.0, 0.0)])
    (row,) = compare(rep, "Old", "New").rows
    assert row.startup_reduction_pct is None and row.rebuffer_reduction_pct == 0.0


# -- emission ----------------------------------------------------------------------------

def test_json_roundtrip(small_report, tmp_path):
    p = tmp_path / "r.json"
    emit(small_report, "json", p)
    assert load_report(p) == small_report
    d = json.loads(p.read_text())
    assert list(d) == sorted(d)


def test_csv_cardinality_and_header(small_report, tmp_path):
    p = tmp_path / "r.csv"
    emit(small_report, "csv", p)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == "scenario,controller,seed,qoe,startup_s,rebuffer_s,mean_bitrate_kbps,switches,forecast_mae_kbps,complete"
    assert len(lines) == 1 + 2 * 2 * 3
    back = parse_report(p.read_text())
    assert back.rows == small_report.rows and back.aggregates == small_report.aggregates


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores permissions")
def test_read_only_path_reports_path(small_report, tmp_path):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(stat.S_IRUSR | stat.S_IXUSR)
    with pytest.raises(ReportIOError, match=str(d)):
        emit(small_report, "json", d / "r.json")


def test_unwritable_path_reports_path(small_report, tmp_path):
    target = tmp_path / "missing_dir" / "r.json"
    with pytest.raises(ReportIOError, match="missing_dir"):
        emit(small_report, "json", target)


# -- CLI -----------------------------------------------------------------------------------

def test_cli_gen_trace(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["gen-trace", "--scenario", "PacketLoss", "--duration", "60", "--seed", "7", "--out", str(out)]) == 0
    tr = load_trace(out)
    assert len(tr.samples) == 60 and tr.duration == 60


def write_cfg(tmp_path, text):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return p


def test_cli_run_twice_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, "scenarios = LowBandwidth\ncontroller.kind = RateBased, PredictiveMpc\n")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", "--config", str(cfg), "--seed-list", "1..10", "--out", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--seed-list", "1..10", "--out", str(b), "--single-thread"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(load_report(a).rows) == 20


def test_cli_run_csv_and_compare(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "scenarios = Stable\nseeds = 1..2\noutput.format = csv\n")
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().startswith("scenario,controller,seed")
    assert main(["compare", "--report", str(out), "--baseline", "RateBased", "--proposed", "PredictiveMpc"]) == 0
    assert "Stable" in capsys.readouterr().out


def test_cli_env_seed_override(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, "scenarios = Stable\ncontroller.kind = RateBased\n")
    monkeypatch.setenv("NDTSTREAM_SEED", "3,8")
    out = tmp_path / "r.json"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert [r.seed for r in load_report(out).rows] == [3, 8]


def test_cli_exit_codes(tmp_path, capsys):
    bad = write_cfg(tmp_path, "controller.kind = Oracle\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["run", "--config", str(tmp_path / "absent.cfg")]) == 2
    good = write_cfg(tmp_path, "scenarios = Stable\nseeds = 1\n")
    assert main(["run", "--config", str(good), "--out", str(tmp_path / "no" / "r.json")]) == 2
    assert main(["gen-trace", "--scenario", "Mars", "--out", str(tmp_path / "t.csv")]) == 1
    assert main(["compare", "--report", str(tmp_path / "absent.json"), "--baseline", "a", "--proposed", "b"]) == 2
    rep = tmp_path / "r.json"
    assert main(["run", "--config", str(good), "--out", str(rep)]) == 0
    assert main(["compare", "--report", str(rep), "--baseline", "RateBased", "--proposed", "Nope"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 1
    capsys.readouterr()
