"""Smoke test for the plotbench Python bindings.

Run with `python python/smoke_test.py` or under pytest after installing the
extension (`pip install --no-build-isolation crates/py`).
"""

import json
import tempfile
from pathlib import Path

import plotbench

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_catalogue():
    fams = plotbench.families()
    assert fams == ["clusters", "histogram", "series", "boxplot", "violin"]
    total = sum(len(plotbench.tasks(f)) for f in fams)
    assert total == 18


def test_sample_round_trip():
    s = plotbench.generate_sample(7, "series", 0)
    again = plotbench.generate_sample(7, "series", 0)
    assert s.id == again.id
    assert s.png == again.png
    assert s.png.startswith(PNG_MAGIC)
    record = json.loads(s.to_json())
    assert record["family"] == "series"
    assert s.feature_tags()


def test_oracle_scores_near_one():
    for fam in plotbench.families():
        s = plotbench.generate_sample(11, fam, 1)
        for task in s.tasks():
            prompt = s.prompt(task)
            assert prompt.strip()
            score, _ = s.score(task, s.oracle_reply(task))
            floor = 0.9 if task in ("biggest_cluster", "approximate") else 1.0 - 1e-9
            assert score >= floor, (fam, task, score)


def test_bad_reply_is_an_error():
    s = plotbench.generate_sample(3, "histogram", 0)
    try:
        s.score("distributions", "no json here")
    except ValueError:
        return
    raise AssertionError("expected ValueError")


def test_harness_round_trip():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        n = plotbench.generate_dataset(root / "ds", 2, 42, augmented=False)
        assert n == 10
        samples = plotbench.load_dataset(root / "ds")
        assert len(samples) == 10
        run = plotbench.run_oracle(root / "ds", root / "runs", 1)
        md = plotbench.score_and_report(Path(run), root / "ds")
        assert "| Model |" in md
        assert "oracle" in md


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
