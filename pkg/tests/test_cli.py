import csv
import hashlib
import json
import shutil

import pytest

from gazeid.cli import EXIT_ENROLL, EXIT_IO, EXIT_MISMATCH, EXIT_OK, EXIT_SPEC, build_parser, main
from gazeid.model import RbfModel
from gazeid.pipeline import PipelineConfig


def digest(directory):
    h = hashlib.sha256()
    for path in sorted(directory.iterdir()):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "data"
    assert main(["synth", "--out", str(out), "--subjects", "3", "--sessions", "2", "--duration", "40", "--seed", "4"]) == 0
    return out


@pytest.fixture(scope="module")
def model_path(dataset):
    path = dataset.parent / "model.json"
    assert main(["train", str(dataset), "--out", str(path), "--k", "8"]) == 0
    return path


def test_synth_counts_and_checksum(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    flags = ["--subjects", "20", "--sessions", "2", "--seed", "7", "--duration", "1"]
    assert main(["synth", "--out", str(a), *flags]) == EXIT_OK
    assert main(["synth", "--out", str(b), *flags]) == EXIT_OK
    files = sorted(p.name for p in a.iterdir())
    assert len([f for f in files if f != "truth.csv"]) == 40 and "truth.csv" in files
    assert digest(a) == digest(b)
    assert "40 recordings" in capsys.readouterr().out


def test_synth_bad_spec(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "x"), "--subjects", "0"]) == EXIT_SPEC
    assert "n_subjects" in capsys.readouterr().err
    assert main(["synth", "--out", str(tmp_path / "x"), "--rate", "500"]) == EXIT_SPEC


def test_train_counts_neurons_and_is_byte_identical(dataset, model_path, tmp_path, capsys):
    model = RbfModel.load(model_path)
    assert model.identities == ["S001", "S002", "S003"]
    assert len(model.fixation.neurons) == 24 and len(model.saccade.neurons) == 24
    again = tmp_path / "again.json"
    assert main(["train", str(dataset), "--out", str(again), "--k", "8"]) == EXIT_OK
    assert again.read_bytes() == model_path.read_bytes()
    out = capsys.readouterr().out
    assert "S001:" in out and "fixations" in out
    assert PipelineConfig.from_dict(model.config).model.k == 8


def test_train_insufficient_data(tmp_path, capsys):
    data = tmp_path / "short"
    assert main(["synth", "--out", str(data), "--subjects", "2", "--duration", "3"]) == EXIT_OK
    assert main(["train", str(data), "--out", str(tmp_path / "m.json")]) == EXIT_ENROLL
    assert "S001" in capsys.readouterr().err


def test_evaluate_writes_report(dataset, model_path, tmp_path, capsys):
    out = tmp_path / "report"
    assert main(["evaluate", str(dataset), "--model", str(model_path), "--out-dir", str(out), "--one-to-one"]) == EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["r1"] == 1.0 and metrics["eer"] == 0.0
    assert metrics["r1_one_to_one"] >= metrics["r1"]
    assert next(csv.reader((out / "det.csv").open())) == ["far", "frr"]
    assert next(csv.reader((out / "cmc.csv").open())) == ["rank", "accuracy"]
    for name in ("det.png", "cmc.png"):
        assert (out / name).read_bytes()[:4] == b"\x89PNG"
    assert "R1 1.0000" in capsys.readouterr().out


def test_evaluate_without_figures(dataset, model_path, tmp_path):
    out = tmp_path / "report"
    assert main(["evaluate", str(dataset), "--model", str(model_path), "--out-dir", str(out), "--no-figures"]) == 0
    assert not (out / "det.png").exists() and (out / "metrics.json").exists()


def test_evaluate_missing_model(dataset, tmp_path):
    assert main(["evaluate", str(dataset), "--model", str(tmp_path / "none.json")]) == EXIT_IO


def test_evaluate_identity_mismatch(dataset, model_path, tmp_path, capsys):
    partial = tmp_path / "partial"
    partial.mkdir()
    for name in ("S001_2.csv", "S002_2.csv"):
        shutil.copy(dataset / name, partial / name)
    assert main(["evaluate", str(partial), "--model", str(model_path), "--out-dir", str(tmp_path / "r")]) == EXIT_MISMATCH
    assert "S003" in capsys.readouterr().err


def test_identify(dataset, model_path, tmp_path):
    out = tmp_path / "ids.csv"
    probes = [str(dataset / f"S00{j}_2.csv") for j in (1, 2, 3)]
    assert main(["identify", *probes, "--model", str(model_path), "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["probe", "identity", "score"]
    assert [(r[0], r[1]) for r in rows[1:]] == [("S001_2", "S001"), ("S002_2", "S002"), ("S003_2", "S003")]


def test_ingest_check(dataset, tmp_path, capsys):
    assert main(["ingest-check", str(dataset)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("ok ") == 6 and "rate=250Hz" in out
    bad = tmp_path / "bad_1.csv"
    bad.write_text("t_ms,valid,theta_x_deg,theta_y_deg,stim_x_deg,stim_y_deg\n0,1,x,0,0,0\n")
    assert main(["ingest-check", str(bad)]) == EXIT_IO
    assert "FAIL" in capsys.readouterr().out


def test_segment_dump(dataset, tmp_path):
    out = tmp_path / "seg.csv"
    assert main(["segment", str(dataset / "S001_1.csv"), "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["start_idx", "end_idx", "kind", "duration_ms"]
    assert rows[1][0] == "0" and rows[-1][1] == str(40 * 250 - 1)


def test_segment_flag_override(dataset, tmp_path):
    out = tmp_path / "seg.csv"
    assert main(["segment", str(dataset / "S001_1.csv"), "--out", str(out), "--vt", "1e6"]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert len(rows) == 2 and rows[1][2] == "FIXATION"
    assert main(["segment", str(dataset / "S001_1.csv"), "--frame-len", "4"]) == EXIT_SPEC


def test_config_file(dataset, tmp_path):
    cfg = tmp_path / "gazeid.ini"
    cfg.write_text("[ivt]\nvelocity_threshold_dps = 1e6\n[pipeline]\nstimulus_kind = synth\n")
    out = tmp_path / "seg.csv"
    assert main(["segment", str(dataset / "S001_1.csv"), "--out", str(out), "--config", str(cfg)]) == EXIT_OK
    assert len(list(csv.reader(out.open()))) == 2
    cfg.write_text("[nonsense]\na = 1\n")
    assert main(["segment", str(dataset / "S001_1.csv"), "--config", str(cfg)]) == EXIT_SPEC


def test_features_export(dataset, tmp_path):
    out = tmp_path / "feats"
    assert main(["features", str(dataset), "--out-dir", str(out)]) == EXIT_OK
    fix = list(csv.reader((out / "fixations.csv").open()))
    sacc = list(csv.reader((out / "saccades.csv").open()))
    assert len(fix[0]) == 3 + 12 and len(sacc[0]) == 3 + 46
    assert {r[0] for r in fix[1:]} == {"S001", "S002", "S003"}


def test_select_features_then_train_with_mask(dataset, tmp_path):
    masks = tmp_path / "masks.json"
    assert main(["select-features", str(dataset), "--out", str(masks), "--rounds", "1", "--k", "4"]) == EXIT_OK
    doc = json.loads(masks.read_text())
    assert doc["fixation"] and doc["saccade"]
    model = tmp_path / "m.json"
    assert main(["train", str(dataset), "--out", str(model), "--k", "4", "--mask", str(masks)]) == EXIT_OK
    assert list(RbfModel.load(model).fixation.mask.names) == doc["fixation"]


@pytest.mark.parametrize(
    "command, expected",
    [
        ("train", ["default: 32", "default: 0.5", "default: 100", "default: 50", "default: 15", "default: 6", "default: 550"]),
        ("select-features", ["default: 10", "default: 32"]),
        ("segment", ["default: 50", "default: 100", "default: 12", "default: 1680"]),
        ("synth", ["default: 20", "default: 250.0"]),
        ("evaluate", ["default: 2"]),
    ],
)
def test_help_shows_defaults(command, expected):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[command]
    text = " ".join(sub.format_help().split())
    for item in expected:
        assert item in text


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as err:
        main(["train", "--help"])
    assert err.value.code == 0
    assert "--lambda" in capsys.readouterr().out
