"""
Tests for configuration loading and the command-line pipeline.
"""

import json
import logging
from pathlib import Path

import pytest

from dyexplainer.cli.deps import apply_overrides, load_run_config, parse_override
from dyexplainer.cli.main import main
from dyexplainer.core.exceptions import ConfigError, UnknownConfigKeyError
from tests.conftest import small_config


@pytest.fixture(autouse=True)
def restore_logging():
    """Commands reconfigure the root logger; put it back afterwards."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def config_file(tmp_path: Path, edge_file: Path) -> Path:
    config = small_config(
        data={"path": str(edge_file), "name": "toy", "feature_dim": 4, "bucketing": {"count": 4}}
    )
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config.model_dump(mode="json")), encoding="utf-8")
    return path


def run(*argv: str) -> int:
    return main(list(argv))


def last_stdout_json(capsys) -> dict:
    lines = [line for line in capsys.readouterr().out.splitlines() if line.strip()]
    return json.loads(lines[-1])


# ==================== Configuration ====================


def test_unknown_nested_key_is_named(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"train": {"alpah": 0.1}}), encoding="utf-8")

    with pytest.raises(UnknownConfigKeyError) as exc_info:
        load_run_config(path)

    assert exc_info.value.details == {"key": "train.alpah"}


def test_overrides_decode_json_values():
    assert parse_override("train.alpha=0.25") == (["train", "alpha"], 0.25)
    assert parse_override("data.name=uci") == (["data", "name"], "uci")
    assert parse_override("explainer.temporal_window=null") == (
        ["explainer", "temporal_window"],
        None,
    )


def test_malformed_override():
    with pytest.raises(ConfigError):
        parse_override("train.alpha")


def test_overrides_apply_over_the_file(config_file):
    config = load_run_config(config_file, ["train.alpha=0", "explainer.temporal_window=2"])

    assert config.train.alpha == 0.0
    assert config.explainer.temporal_window == 2
    assert config.backbone.hidden_dim == 4


def test_override_through_a_scalar_is_unknown():
    with pytest.raises(UnknownConfigKeyError):
        apply_overrides({"seed": 1}, ["seed.value=2"])


def test_config_must_be_a_json_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]", encoding="utf-8")

    with pytest.raises(ConfigError):
        load_run_config(path)


def test_seed_propagates_to_sections():
    config = load_run_config(None, ["seed=11"])

    assert config.train.seed == 11
    assert config.synthetic.seed == 11


# ==================== Commands ====================


def test_ingest_reports_snapshots(config_file, tmp_path, capsys):
    out = tmp_path / "out"

    assert run("ingest", "-c", str(config_file), "-o", str(out), "-q") == 0

    summary = last_stdout_json(capsys)
    assert summary["num_snapshots"] == 4
    assert (out / "snapshots.json").is_file()


def test_train_writes_run_artifacts(config_file, tmp_path, capsys):
    out = tmp_path / "out"

    assert run("train", "-c", str(config_file), "-o", str(out), "-q") == 0

    lines = (out / "metrics.jsonl").read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["snapshot"] for line in lines] == [1, 2, 3]
    assert "wall_time" not in json.loads(lines[0])
    assert (out / "checkpoint.dyx").read_bytes()[:4] == b"DYXC"
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "train"
    assert manifest["seed"] == 7
    assert "checkpoint.dyx" in manifest["outputs"]
    assert len(manifest["inputs"]) == 1
    assert last_stdout_json(capsys)["evaluated_snapshots"] == 3


def test_eval_without_checkpoint(config_file, tmp_path, capsys):
    code = run("eval", "-c", str(config_file), "-o", str(tmp_path / "empty"), "-q")

    assert code == 2
    last = capsys.readouterr().err.strip().splitlines()[-1]
    assert last.startswith("error type=checkpoint_not_found code=2")


def test_missing_data_file(tmp_path, capsys):
    code = run("ingest", "-o", str(tmp_path), "data.path=/nonexistent/edges.txt", "-q")

    assert code == 3
    assert "type=file_not_found" in capsys.readouterr().err


def test_invalid_value_is_a_config_error(tmp_path, capsys):
    code = run("train", "-o", str(tmp_path), "train.alpha=0.8", "train.beta=0.5", "-q")

    assert code == 2
    assert "type=validation_error" in capsys.readouterr().err


def test_explain_after_training(config_file, tmp_path):
    out = tmp_path / "out"
    common = ["-c", str(config_file), "-o", str(out), "-q"]
    assert run("train", *common) == 0

    assert run("explain", *common) == 0

    structural = (out / "structural_attention.csv").read_text(encoding="utf-8").splitlines()
    assert structural[0] == "snapshot,src,dst,gate_value"
    assert {line.split(",")[0] for line in structural[1:]} == {"0", "1", "2"}
    temporal = (out / "temporal_attention.csv").read_text(encoding="utf-8").splitlines()
    assert temporal[0] == "node,t_row,t_col,weight"


def test_eval_and_sweep_predict_a_held_out_snapshot(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    common = ["-c", str(config_file), "-o", str(out), "-q", "train.num_steps=2"]
    assert run("train", *common) == 0
    lines = (out / "metrics.jsonl").read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["snapshot"] for line in lines] == [1, 2]

    assert run("eval", *common) == 0
    report = last_stdout_json(capsys)
    assert report["snapshot"] == 3
    assert 0.0 < report["mrr"] <= 1.0

    assert run("sweep", *common) == 0
    sweep = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
    assert sweep[0] == "sparsity,fidelity"
    assert len(sweep) == 10
    assert all(float(line.split(",")[1]) >= 0.0 for line in sweep[1:])


def test_eval_refuses_snapshots_training_has_seen(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    common = ["-c", str(config_file), "-o", str(out), "-q"]
    assert run("train", *common) == 0
    capsys.readouterr()

    assert run("eval", *common) == 3
    assert "type=data_error" in capsys.readouterr().err
    assert run("sweep", *common) == 3


def test_undecodable_edge_file_is_a_data_error(tmp_path, capsys):
    path = tmp_path / "edges.txt"
    path.write_bytes(b"0 1 5\n1 \xff 7\n")

    code = run("ingest", "-o", str(tmp_path / "out"), f"data.path={path}", "-q")

    assert code == 3
    assert "type=parse_error" in capsys.readouterr().err


def test_tracked_edges_get_a_row_per_snapshot(config_file, tmp_path):
    out = tmp_path / "out"
    common = ["-c", str(config_file), "-o", str(out), "-q"]
    assert run("train", *common) == 0

    assert run("explain", *common, "evaluation.track_edges=[[0,1],[5,3]]") == 0

    rows = (out / "structural_attention.csv").read_text(encoding="utf-8").splitlines()[1:]
    assert [row.split(",")[:3] for row in rows] == [
        ["0", "0", "1"], ["0", "5", "3"],
        ["1", "0", "1"], ["1", "5", "3"],
        ["2", "0", "1"], ["2", "5", "3"],
    ]  # fmt: skip
    # (5, 3) only occurs in the last snapshot
    assert float(rows[1].split(",")[3]) == 0.0


def test_seeded_runs_write_identical_artifacts(config_file, tmp_path):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        common = ["-c", str(config_file), "-o", str(out), "-q"]
        assert run("train", *common) == 0
        assert run("explain", *common) == 0
        outputs.append(out)

    for artifact in ("metrics.jsonl", "structural_attention.csv", "temporal_attention.csv"):
        assert (outputs[0] / artifact).read_bytes() == (outputs[1] / artifact).read_bytes()


def test_synth_then_train_on_planted_data(tmp_path, capsys):
    out = tmp_path / "planted"
    overrides = [
        "synthetic.num_nodes=8",
        "synthetic.num_snapshots=5",
        "synthetic.motif_size=2",
        "synthetic.noise_edges_per_snapshot=2",
        "synthetic.lag=1",
        "train.buffer_size=3",
        "train.max_backbone_epochs=2",
        "train.explainer_epochs=1",
        "backbone.num_layers=1",
        "backbone.hidden_dim=4",
        "data.feature_dim=4",
    ]

    assert run("synth", "-o", str(out), "-q", *overrides) == 0

    truth = json.loads((out / "ground_truth.json").read_text(encoding="utf-8"))
    assert truth["lag"] == 1
    assert len(truth["signal_edges"]) == 5
    capsys.readouterr()

    assert run("train", "-c", str(out / "planted_config.json"), "-o", str(out), "-q") == 0
    assert last_stdout_json(capsys)["evaluated_snapshots"] == 4


def test_synth_needs_room_for_the_lag(tmp_path, capsys):
    code = run("synth", "-o", str(tmp_path), "synthetic.lag=5", "train.buffer_size=5", "-q")

    assert code == 2
    assert "type=config_error" in capsys.readouterr().err


def test_recover_reports_each_seed(tmp_path, capsys):
    overrides = [
        "synthetic.num_nodes=8",
        "synthetic.num_snapshots=5",
        "synthetic.motif_size=2",
        "synthetic.noise_edges_per_snapshot=2",
        "synthetic.lag=1",
        "train.buffer_size=3",
        "train.max_backbone_epochs=2",
        "train.explainer_epochs=1",
        "backbone.num_layers=1",
        "backbone.hidden_dim=4",
        "data.feature_dim=4",
    ]

    code = run("recover", "-o", str(tmp_path), "-q", *overrides, "--seeds", "3", "4")

    assert code == 0
    report = json.loads((tmp_path / "recovery.json").read_text(encoding="utf-8"))
    assert [row["seed"] for row in report["rows"]] == [3, 4]
