import json

import numpy as np
import pytest

from fracnls.cli import list_experiments, main
from fracnls.experiments.config import default_document, load_config, to_toml
from fracnls.experiments.data import base_datum
from fracnls.experiments.registry import EXPERIMENTS
from fracnls.propagator import linear_propagate
from fracnls.solver import Trajectory


def write_config(path, kind, **tables):
    doc = default_document(kind)
    doc["seed"] = 42
    for table, values in tables.items():
        doc[table].update(values)
    path.write_text(to_toml(doc))
    return path


SMALL_TAIL = {"n_samples": 100, "laws": ["rademacher"], "norms": ["sobolev:s=0.5"]}


def test_simulate_free_flow_matches_propagator(tmp_path):
    cfg = write_config(tmp_path / "sim.toml", "simulate", model={"mu": 0.0}, grid={"n": 8})
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    traj = Trajectory.load(out / "trajectory.bin")
    c = load_config(cfg)
    phi = base_datum(c.grid, c.options)
    exact = linear_propagate(phi, c.T, c.alpha)
    assert np.max(np.abs(traj.final.values - exact.values)) <= 1e-10
    manifest = json.loads((out / "manifest.json").read_text())
    for key in ("config_hash", "seed", "version", "started", "finished", "files"):
        assert key in manifest
    assert {"report.csv", "summary.json", "trajectory.bin", "trajectory.bin.json", "config.toml"} <= set(manifest["files"])
    assert any(name.startswith("figures/") for name in manifest["files"])


def test_zero_samples_is_validation_error(tmp_path, capsys):
    cfg = write_config(tmp_path / "t.toml", "mc-tail", params={"n_samples": 0})
    assert main(["mc-tail", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "params.n_samples" in capsys.readouterr().err
    assert not (tmp_path / "o" / "manifest.json").exists()


def test_unknown_key_and_missing_file(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text('schema = "fracnls/1"\n[grid]\nsize = 4\n')
    assert main(["randomize", "--config", str(p)]) == 1
    assert "grid.size" in capsys.readouterr().err
    assert main(["randomize", "--config", str(tmp_path / "nope.toml")]) == 1


def test_list_contains_every_kind(capsys):
    assert main(["list"]) == 0
    text = capsys.readouterr().out
    lines = text.strip().splitlines()
    assert [ln.split()[0] for ln in lines] == list(EXPERIMENTS)
    assert list_experiments() == list_experiments()
    rows = json.loads(list_experiments(as_json=True))
    assert [r["kind"] for r in rows] == list(EXPERIMENTS)
    assert all(r["anchor"] for r in rows)


def test_json_summary(tmp_path, capsys):
    cfg = write_config(tmp_path / "r.toml", "randomize", grid={"n": 8})
    assert main(["randomize", "--config", str(cfg), "--out", str(tmp_path / "o"), "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "pass" and summary["kind"] == "randomize"


def test_seed_override(tmp_path):
    cfg = write_config(tmp_path / "r.toml", "randomize", grid={"n": 8})
    main(["randomize", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "7"])
    main(["randomize", "--config", str(cfg), "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert a["seed"] == 7 and b["seed"] == 42
    assert (tmp_path / "a" / "report.csv").read_bytes() != (tmp_path / "b" / "report.csv").read_bytes()


@pytest.mark.parametrize(
    "kind,tables",
    [
        ("mc-tail", {"grid": {"n": 8}, "params": SMALL_TAIL}),
        ("khintchine", {"params": {"n_samples": 25_000, "laws": ["uniform_symmetric"]}}),
        ("bilinear-ball", {"params": {"n_draws": 3, "rho_list": [0.25, 0.5]}}),
    ],
)
def test_rerun_and_jobs_byte_identical(tmp_path, kind, tables):
    cfg = write_config(tmp_path / "c.toml", kind, **tables)
    bodies = []
    for i, jobs in enumerate(["1", "1", "3"]):
        out = tmp_path / f"run{i}"
        assert main([kind, "--config", str(cfg), "--out", str(out), "--jobs", jobs]) in (0, 2, 3)
        bodies.append((out / "report.csv").read_bytes())
    assert bodies[0] == bodies[1] == bodies[2]


def test_exit_code_on_failed_verdict(tmp_path, monkeypatch):
    from fracnls.experiments import registry
    from fracnls.experiments.report import FAIL, ExperimentReport

    def failing(config, jobs=1):
        r = ExperimentReport(config.kind, ["x"], records=[{"x": 1}])
        r.verdicts["forced"] = FAIL
        return r

    monkeypatch.setitem(registry.EXPERIMENTS, "randomize", registry.EXPERIMENTS["randomize"].__class__("randomize", failing, "a", "b"))
    assert main(["randomize", "--out", str(tmp_path / "o")]) == 2
