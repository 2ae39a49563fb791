import json

import pytest

from persuader.cli import main
from persuader.pack import serialize
from persuader.session import read_transcript
from persuader.sim import builtin_profiles_path


def test_pack_check_accepts_the_shipped_pack(pack_path, capsys):
    assert main(["pack", "check", str(pack_path)]) == 0
    out = capsys.readouterr().out
    assert "ok: covid19-en" in out
    assert "6 scenes" in out


def test_pack_check_rejects_broken_pack(pack, tmp_path, capsys):
    document = serialize(pack)
    del document["scenes"][2]["exception"]  # mask scene loses its exception
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(document))
    assert main(["pack", "check", str(broken)]) == 1
    err = capsys.readouterr().err
    assert "scene mask" in err


def test_pack_check_reports_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{]")
    assert main(["pack", "check", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_repl_runs_a_scripted_dialogue(pack_path, tmp_path, capsys, monkeypatch):
    answers = iter(["1"] * 40)  # always the first option; session ends well before 40
    monkeypatch.setattr("builtins.input", lambda *_: next(answers))
    code = main([
        "repl",
        "--pack", str(pack_path),
        "--seed", "4",
        "--profile", "open_minded",
        "--transcripts", str(tmp_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "Hello, my name is InfoRob" in out
    assert "Goodbye" in out
    assert "[summary]" in out
    transcript = read_transcript(tmp_path / "repl-4.jsonl")
    assert transcript[0]["seed"] == 4


def test_repl_transcript_is_replayable_and_seed_stable(pack_path, tmp_path, monkeypatch, capsys):
    def run(run_dir):
        answers = iter(["1"] * 40)
        monkeypatch.setattr("builtins.input", lambda *_: next(answers))
        assert main([
            "repl", "--pack", str(pack_path), "--seed", "9",
            "--profile", "neutral", "--transcripts", str(run_dir),
        ]) == 0
        capsys.readouterr()
        return (run_dir / "repl-9.jsonl").read_bytes()

    first = run(tmp_path / "a")
    second = run(tmp_path / "b")
    assert first == second


def test_simulate_writes_report(pack_path, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = main([
        "simulate",
        "--pack", str(pack_path),
        "--profiles", str(builtin_profiles_path()),
        "--runs", "20",
        "--seed", "3",
        "--report", str(report_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "runs" in out
    report = json.loads(report_path.read_text())
    assert report["runs"] == 20
    assert report["violation_count"] == 0
    assert sum(report["technique_counts"].values()) == report["argument_count"]
