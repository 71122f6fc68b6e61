import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from alos.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, tmp_path, *args, **kwargs):
    base = ["--registry", str(tmp_path / "reg"), "--out", str(tmp_path / "out"),
            "--seed", "7"]
    return runner.invoke(main, base + list(args), **kwargs)


def test_create_writes_registry_files(runner, tmp_path):
    result = invoke(runner, tmp_path, "create", "cat")
    assert result.exit_code == 0, result.output
    assert "# ALO: cat" in result.output
    assert (tmp_path / "reg" / "cat.alo.md").exists()
    assert (tmp_path / "reg" / "cat.alo.json").exists()


def test_create_empty_name_is_usage_error(runner, tmp_path):
    result = invoke(runner, tmp_path, "create", "")
    assert result.exit_code == 2


def test_create_refuses_overwrite_without_force(runner, tmp_path):
    assert invoke(runner, tmp_path, "create", "cat").exit_code == 0
    again = invoke(runner, tmp_path, "create", "cat")
    assert again.exit_code == 1
    forced = invoke(runner, tmp_path, "create", "cat", "--force")
    assert forced.exit_code == 0


def test_create_logs_transcript(runner, tmp_path):
    invoke(runner, tmp_path, "create", "cat")
    lines = (tmp_path / "out" / "transcripts.jsonl").read_text().splitlines()
    record = json.loads(lines[0])
    assert record["command"] == "create"
    assert record["user"] == "Create ALOs(cat)"
    assert "Create Abstract Language Objects" in record["system"]
    assert "# ALO: cat" in record["response"]


def test_interact_requires_known_names(runner, tmp_path):
    invoke(runner, tmp_path, "create", "cat")
    result = invoke(runner, tmp_path, "interact", "cat", "ghost")
    assert result.exit_code == 1


def test_interact_stores_pair_and_scenario(runner, tmp_path):
    invoke(runner, tmp_path, "create", "cat")
    invoke(runner, tmp_path, "create", "roomba")
    result = invoke(runner, tmp_path, "interact", "cat", "roomba",
                    "--context", "bounded 3D physical world")
    assert result.exit_code == 0, result.output
    assert (tmp_path / "reg" / "cat meets roomba.alo.json").exists()
    scenario_path = tmp_path / "out" / "scenarios" / "cat-meets-roomba.scenario.json"
    assert scenario_path.exists()
    scenario = json.loads(scenario_path.read_text())
    assert scenario["rules"][0]["responder"] == "roomba"
    transcripts = (tmp_path / "out" / "transcripts.jsonl").read_text()
    assert "in ALOs(bounded 3D physical world)" in transcripts


def test_simulate_writes_trace_counts(runner, tmp_path):
    invoke(runner, tmp_path, "create", "cat")
    invoke(runner, tmp_path, "create", "roomba")
    invoke(runner, tmp_path, "interact", "cat", "roomba")
    scenario = tmp_path / "out" / "scenarios" / "cat-meets-roomba.scenario.json"
    result = invoke(runner, tmp_path, "simulate", str(scenario), "--ticks", "300")
    assert result.exit_code == 0, result.output
    trace = (tmp_path / "out" / "trace.jsonl").read_text().splitlines()
    assert len(trace) == 600  # 2 entities x 300 ticks
    result0 = invoke(runner, tmp_path, "simulate", str(scenario), "--ticks", "0")
    assert result0.exit_code == 0
    assert (tmp_path / "out" / "trace.jsonl").read_text() == ""


def test_simulate_same_seed_identical_bytes(runner, tmp_path):
    invoke(runner, tmp_path, "create", "cat")
    invoke(runner, tmp_path, "create", "roomba")
    invoke(runner, tmp_path, "interact", "cat", "roomba")
    scenario = tmp_path / "out" / "scenarios" / "cat-meets-roomba.scenario.json"
    invoke(runner, tmp_path, "simulate", str(scenario), "--ticks", "120")
    first = (tmp_path / "out" / "trace.jsonl").read_bytes()
    invoke(runner, tmp_path, "simulate", str(scenario), "--ticks", "120")
    assert (tmp_path / "out" / "trace.jsonl").read_bytes() == first


def test_export_bundle_and_scripts(runner, tmp_path):
    invoke(runner, tmp_path, "create", "cat")
    invoke(runner, tmp_path, "create", "roomba")
    invoke(runner, tmp_path, "interact", "cat", "roomba")
    scenario = tmp_path / "out" / "scenarios" / "cat-meets-roomba.scenario.json"
    result = invoke(runner, tmp_path, "export", str(scenario))
    assert result.exit_code == 0, result.output
    bundle_path = tmp_path / "out" / "scene.bundle.json"
    bundle = json.loads(bundle_path.read_text())
    from alos.codegen import check_bundle
    assert check_bundle(bundle) == []
    assert (tmp_path / "out" / "cat.update.harness.txt").exists()
    assert (tmp_path / "out" / "roomba.update.harness.txt").exists()
    first = bundle_path.read_bytes()
    invoke(runner, tmp_path, "export", str(scenario))
    assert bundle_path.read_bytes() == first  # re-export byte-identical


def test_export_with_missing_alo_fails(runner, tmp_path):
    invoke(runner, tmp_path, "create", "cat")
    invoke(runner, tmp_path, "create", "roomba")
    invoke(runner, tmp_path, "interact", "cat", "roomba")
    scenario = tmp_path / "out" / "scenarios" / "cat-meets-roomba.scenario.json"
    for f in (tmp_path / "reg").glob("roomba.alo.*"):
        f.unlink()
    result = invoke(runner, tmp_path, "export", str(scenario))
    assert result.exit_code == 1


def test_analyze_writes_sweep_outputs(runner, tmp_path):
    result = invoke(runner, tmp_path, "analyze", "--n", "4",
                    "--temps", "0.0,0.7,2.0")
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    for stem in ("matrix_0.0", "matrix_0.7", "matrix_2.0"):
        assert (out / f"{stem}.csv").exists()
        assert (out / f"{stem}.pgm").exists()
    summary = json.loads((out / "summary.json").read_text())
    means = [row["mean"] for row in summary["results"]]
    assert means[0] >= means[1] >= means[2]


def test_analyze_n1_is_usage_error(runner, tmp_path):
    result = invoke(runner, tmp_path, "analyze", "--n", "1")
    assert result.exit_code == 2


def test_analyze_accepts_config_file(runner, tmp_path):
    config = {"user_prompt": "Define life in 300 words.", "n": 4,
              "temperatures": [0.0], "backend": "mock", "seed": 5}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config))
    result = invoke(runner, tmp_path, "analyze", "--config", str(path))
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "matrix_0.0.csv").exists()


def test_image_prompt_output_and_coverage(runner, tmp_path):
    invoke(runner, tmp_path, "create", "printer")
    result = invoke(runner, tmp_path, "image-prompt", "printer")
    assert result.exit_code == 0
    assert result.output.splitlines()[0].endswith("--v 5")
    assert "visual coverage" in result.output


def test_image_prompt_unknown_name(runner, tmp_path):
    result = invoke(runner, tmp_path, "image-prompt", "ghost")
    assert result.exit_code == 1


def test_image_prompt_suffix_override(runner, tmp_path):
    invoke(runner, tmp_path, "create", "printer")
    result = invoke(runner, tmp_path, "image-prompt", "printer",
                    "--suffix", "--v 6")
    assert result.output.splitlines()[0].endswith("--v 6")


def test_live_backend_requires_key(runner, tmp_path, monkeypatch):
    monkeypatch.delenv("ALO_API_KEY", raising=False)
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    result = invoke(runner, tmp_path, "--backend", "live", "create", "cat")
    assert result.exit_code == 1


def test_repl_session(runner, tmp_path):
    result = invoke(runner, tmp_path, "repl",
                    input="create cat\ncreate roomba\ninteract cat / roomba\nlist\nquit\n")
    assert result.exit_code == 0, result.output
    assert "created 'cat'" in result.output
    assert "created 'cat meets roomba'" in result.output
    assert (tmp_path / "reg" / "cat meets roomba.alo.json").exists()


def test_global_config_file_sets_defaults(runner, tmp_path):
    config = {"backend": "mock", "seed": 3,
              "registry": str(tmp_path / "cfg-reg"), "out": str(tmp_path / "cfg-out")}
    path = tmp_path / "cli.json"
    path.write_text(json.dumps(config))
    result = runner.invoke(main, ["--config", str(path), "create", "cat"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "cfg-reg" / "cat.alo.json").exists()
    assert (tmp_path / "cfg-out" / "transcripts.jsonl").exists()
    # explicit flags still win over the config file
    result = runner.invoke(main, ["--config", str(path),
                                  "--registry", str(tmp_path / "other-reg"),
                                  "create", "roomba"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "other-reg" / "roomba.alo.json").exists()
