import json
from pathlib import Path

import pandas as pd
from pytest import fixture, raises

import diagnostic_check
import pipeline
from reports.report_writer import REPORT_JSON, canonical_report_json, emit_report, load_report
from sov6v.config import parse_config
from sov6v.errors import ConfigError
from sov6v.suites import run_suite
from utils.synthetic import generic_inhomogeneities

BASE = {"N": 2, "x": 0, "y": 1, "omega": [0, 1], "eta": [0.377, 0.411], "seed": 7}


@fixture
def write_config(tmp_path):
    def _write(**overrides):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**BASE, **overrides}), encoding="utf-8")
        return str(path)

    return _write


def test_spectrum_command_writes_tables(write_config, tmp_path):
    out = tmp_path / "out"
    assert pipeline.main(["spectrum", "--config", write_config(), "--out", str(out)]) == 0
    eig = pd.read_csv(out / "eigenvalues.csv")
    assert len(eig) == 4
    assert {"index", "re_xi1", "im_xi1", "re_xi2", "im_xi2"} <= set(eig.columns)
    checks = pd.read_csv(out / "checks.csv")
    assert set(checks["status"]) == {"PASS"}
    report = load_report(str(out / REPORT_JSON))
    assert [s.name for s in report.suites] == ["spectrum"]


def test_reports_are_deterministic(write_config, tmp_path):
    out = tmp_path / "out"
    args = ["spectrum", "--config", write_config(), "--out", str(out)]
    pipeline.main(args)
    first = (out / REPORT_JSON).read_bytes()
    pipeline.main(args)
    assert (out / REPORT_JSON).read_bytes() == first


def test_invalid_model_exits_with_config_code(write_config, tmp_path):
    path = write_config(x=0, y=0)
    assert pipeline.main(["verify", "--config", path, "--out", str(tmp_path / "out")]) == pipeline.EXIT_CONFIG
    assert not (tmp_path / "out").exists()


def test_missing_config_file(tmp_path):
    assert pipeline.main(["all", "--config", str(tmp_path / "nope.json")]) == pipeline.EXIT_CONFIG


def test_empty_suite_list(write_config, tmp_path):
    out = tmp_path / "out"
    assert pipeline.main(["all", "--config", write_config(suites=[]), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [REPORT_JSON]


def test_command_line_overrides(write_config, tmp_path):
    args = pipeline.build_parser().parse_args(
        ["bethe", "--config", write_config(tol={"residual": 1e-6}), "--tol", "1e-5", "--kappa", "0.7,0.2", "--seed", "3"]
    )
    cfg = pipeline.load_config(args)
    assert cfg.suites == ("tq",)
    assert cfg.kappa == (0.7 + 0.2j,)
    assert cfg.seed == 3
    assert cfg.tolerance("residual", 1e-8) == 1e-6
    assert cfg.tolerance("bethe", 1e-8) == 1e-5


def test_bad_kappa_argument():
    with raises(SystemExit):
        pipeline.build_parser().parse_args(["spectrum", "--kappa", "1"])


def test_report_json_round_trip(tmp_path):
    cfg = parse_config(json.dumps({**BASE, "suites": ["elliptic", "spectrum"]}))
    report = run_suite(cfg)
    paths = emit_report(report, str(tmp_path), formats=("json",))
    assert paths == [str(tmp_path / REPORT_JSON)]
    loaded = load_report(paths[0])
    assert canonical_report_json(loaded) == (tmp_path / REPORT_JSON).read_text(encoding="utf-8")
    assert loaded.summary() == report.summary()


def test_diagnostic_check_reads_report(write_config, tmp_path):
    out = tmp_path / "out"
    pipeline.main(["spectrum", "--config", write_config(), "--out", str(out)])
    assert diagnostic_check.main([str(out / REPORT_JSON), "--all"]) == 0
    assert diagnostic_check.main([str(tmp_path / "missing.json")]) == 2


def test_seeded_inhomogeneities():
    a = generic_inhomogeneities(3, 0.377 + 0.411j, seed=5)
    assert a == generic_inhomogeneities(3, 0.377 + 0.411j, seed=5)
    assert a != generic_inhomogeneities(3, 0.377 + 0.411j, seed=6)
    assert len(set(a)) == 3


def test_seeded_inhomogeneities_give_up():
    with raises(RuntimeError):
        generic_inhomogeneities(2, 0.377 + 0.411j, margin=10.0, max_tries=50)


def test_config_error_carries_path():
    with raises(ConfigError) as err:
        parse_config(json.dumps({**BASE, "suites": ["nope"]}))
    assert err.value.path == "suites"


def test_default_config_passes_every_suite():
    path = Path(__file__).resolve().parents[1] / pipeline.DEFAULT_CONFIG
    report = run_suite(parse_config(path.read_text(encoding="utf-8")))
    failed = [(s.name, c.id, c.message) for s in report.suites for c in s.checks if not c.passed]
    assert failed == []
    assert report.passed
