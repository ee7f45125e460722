import io as _io
import json
import math

import numpy as np
import pytest

import trustbandit
from trustbandit import (
    RunConfig,
    load_dataset,
    run_greedy,
    run_trust,
    sweep_radius,
)
from trustbandit.cli import main
from trustbandit.core import compute_stats
from trustbandit.io import (
    PER_RADIUS_COLUMNS,
    SWEEP_COLUMNS,
    emit_report,
    report_payload,
    sparse_policy,
    write_per_radius_csv,
    write_sweep_csv,
)


def test_public_names_resolve():
    for name in trustbandit.__all__:
        assert getattr(trustbandit, name) is not None


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


class TestJsonlLoader:
    def test_groups_pulls_by_arm(self, tmp_path):
        path = write(tmp_path, "d.jsonl", "\n".join([
            '{"arm": "a", "reward": 1.0}',
            '{"arm": "b", "reward": 2.0}',
            "",
            '{"arm": "a", "reward": 3.0}',
        ]))
        data = load_dataset(path, "jsonl")
        assert data.arms == ("a", "b")
        assert data.rewards[0].tolist() == [1.0, 3.0]
        assert data.rewards[1].tolist() == [2.0]

    def test_bad_json_names_line(self, tmp_path):
        path = write(tmp_path, "d.jsonl", '{"arm": "a", "reward": 1.0}\n{oops\n')
        with pytest.raises(ValueError, match=r"d\.jsonl:2: invalid JSON"):
            load_dataset(path, "jsonl")

    def test_missing_arm_field(self, tmp_path):
        path = write(tmp_path, "d.jsonl", '{"reward": 1.0}\n')
        with pytest.raises(ValueError, match="'arm' field"):
            load_dataset(path, "jsonl")

    def test_non_numeric_reward(self, tmp_path):
        path = write(tmp_path, "d.jsonl", '{"arm": "a", "reward": "high"}\n')
        with pytest.raises(ValueError, match="must be a number or null"):
            load_dataset(path, "jsonl")

    def test_non_finite_reward(self, tmp_path):
        path = write(tmp_path, "d.jsonl", '{"arm": "a", "reward": NaN}\n')
        with pytest.raises(ValueError, match=r"d\.jsonl:1: .*finite"):
            load_dataset(path, "jsonl")

    def test_null_reward_declares_arm(self, tmp_path):
        path = write(tmp_path, "d.jsonl", "\n".join([
            '{"arm": "a", "reward": 1.0}',
            '{"arm": "ghost", "reward": null}',
        ]))
        with pytest.raises(ValueError, match="ghost.*drop_empty"):
            load_dataset(path, "jsonl")
        data = load_dataset(path, "jsonl", drop_empty=True)
        assert data.arms == ("a",)

    def test_null_plus_real_rewards_kept(self, tmp_path):
        path = write(tmp_path, "d.jsonl", "\n".join([
            '{"arm": "a", "reward": null}',
            '{"arm": "a", "reward": 2.5}',
        ]))
        data = load_dataset(path, "jsonl")
        assert data.rewards[0].tolist() == [2.5]


class TestCsvLoader:
    def test_basic(self, tmp_path):
        path = write(tmp_path, "d.csv", "arm,reward\na,1.0\nb,0.5\na,2.0\n")
        data = load_dataset(path, "csv")
        assert data.arms == ("a", "b")
        assert data.rewards[0].tolist() == [1.0, 2.0]

    def test_bad_header(self, tmp_path):
        path = write(tmp_path, "d.csv", "id,value\na,1.0\n")
        with pytest.raises(ValueError, match=r"d\.csv:1: expected header"):
            load_dataset(path, "csv")

    def test_bad_number_names_line(self, tmp_path):
        path = write(tmp_path, "d.csv", "arm,reward\na,1.0\nb,oops\n")
        with pytest.raises(ValueError, match=r"d\.csv:3: reward 'oops'"):
            load_dataset(path, "csv")

    def test_empty_cell_is_declaration(self, tmp_path):
        path = write(tmp_path, "d.csv", "arm,reward\na,1.0\nb,\n")
        data = load_dataset(path, "csv", drop_empty=True)
        assert data.arms == ("a",)


class TestReturnsLoader:
    def test_policies_become_arms(self, tmp_path):
        lines = [json.dumps({"policy_id": f"p{i}", "return": i / 10}) for i in range(100)]
        path = write(tmp_path, "r.jsonl", "\n".join(lines))
        data = load_dataset(path, "returns")
        assert len(data.arms) == 100
        assert all(r.size == 1 for r in data.rewards)

    def test_repeated_policy_accumulates(self, tmp_path):
        lines = [json.dumps({"policy_id": "p", "return": float(i)}) for i in range(5)]
        path = write(tmp_path, "r.jsonl", "\n".join(lines))
        data = load_dataset(path, "returns")
        assert data.arms == ("p",)
        assert data.rewards[0].tolist() == [0.0, 1.0, 2.0, 3.0, 4.0]

    def test_unknown_format(self, tmp_path):
        path = write(tmp_path, "d.jsonl", '{"arm": "a", "reward": 1.0}\n')
        with pytest.raises(ValueError, match="unknown format"):
            load_dataset(path, "parquet")


def toy_stats():
    rng = np.random.default_rng(0)
    labels = [f"a{i}" for i in range(4) for _ in range(2)]
    pulls = rng.normal(0.3, 0.5, len(labels))
    from trustbandit import ArmDataset

    return compute_stats(ArmDataset.from_pulls(labels, pulls), sigma=0.5)


class TestReportSerialization:
    def test_sparse_policy_drops_zero_weights(self):
        rep = run_greedy(toy_stats())
        sparse = sparse_policy(rep)
        assert list(sparse.values()) == [1.0]
        dense = sparse_policy(rep, dense=True)
        assert len(dense) == 4

    def test_negative_infinity_becomes_null(self):
        rep = run_greedy(toy_stats())
        buf = _io.StringIO()
        emit_report(rep, buf)
        payload = json.loads(buf.getvalue())
        assert payload["lower_bound"] is None
        assert payload["method"] == "greedy"

    def test_trust_outcome_round_trip(self, tmp_path):
        stats = toy_stats()
        out = run_trust(stats, delta=0.5, grid_size=10, m=200, seed=5)
        path = tmp_path / "report.json"
        emit_report(out, str(path))
        payload = json.loads(path.read_text())
        assert payload["method"] == "trust"
        assert payload["lower_bound"] == out.certificate
        assert sum(payload["policy"].values()) == pytest.approx(1.0, abs=1e-9)
        assert payload["n_arms"] == 4
        assert payload["dataset_fingerprint"] == stats.fingerprint()
        assert payload["version"] == trustbandit.__version__

    def test_config_echoed(self):
        rep = run_greedy(toy_stats())
        cfg = RunConfig(method="greedy", sigma_mode="bounded_quarter", seed=99)
        payload = report_payload(rep, cfg)
        assert payload["seed"] == 99
        assert payload["config"]["sigma_mode"] == "bounded_quarter"
        assert payload["config"]["method"] == "greedy"

    def test_path_and_handle_agree(self, tmp_path):
        rep = run_greedy(toy_stats())
        buf = _io.StringIO()
        emit_report(rep, buf)
        path = tmp_path / "r.json"
        emit_report(rep, str(path))
        assert buf.getvalue() == path.read_text()


class TestCsvWriters:
    def test_sweep_round_trip(self):
        _, rows = sweep_radius("linear-means", 6, 0, delta=0.5, grid_size=10, m=200)
        buf = _io.StringIO()
        write_sweep_csv(rows, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert len(lines) == 11
        first = dict(zip(SWEEP_COLUMNS, lines[1].split(",")))
        assert float(first["eps"]) == rows[0].eps
        assert float(first["certificate"]) == rows[0].certificate

    def test_per_radius_columns(self):
        out = run_trust(toy_stats(), delta=0.5, grid_size=10, m=200, seed=5)
        buf = _io.StringIO()
        write_per_radius_csv(out.per_radius, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == ",".join(PER_RADIUS_COLUMNS)
        assert len(lines) == 11


JSONL = "\n".join(
    json.dumps({"arm": f"a{i}", "reward": r})
    for i, r in enumerate([1.1, 0.2, 0.5, 0.9])
)


class TestCli:
    def test_m0_prints_index(self, capsys):
        assert main(["m0", "--m", "200", "--delta-prime", "0.05"]) == 0
        assert capsys.readouterr().out.strip() == "5"

    def test_m0_small_m(self, capsys):
        assert main(["m0", "--m", "1", "--delta-prime", "0.5"]) == 0
        assert capsys.readouterr().out.strip() == "1"

    def test_trust_end_to_end(self, tmp_path, capsys):
        data = write(tmp_path, "pulls.jsonl", JSONL)
        out = tmp_path / "report.json"
        sweep = tmp_path / "sweep.csv"
        rc = main([
            "trust", "--data", data, "--sigma", "bounded", "--delta", "0.5",
            "--grid-size", "10", "--m", "200",
            "--out", str(out), "--sweep-out", str(sweep),
        ])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["method"] == "trust"
        assert payload["n_arms"] == 4
        assert payload["lower_bound"] <= payload["empirical_value"]
        assert payload["config"]["grid_size"] == 10
        lines = sweep.read_text().strip().splitlines()
        assert lines[0] == ",".join(PER_RADIUS_COLUMNS)
        assert len(lines) == 11

    def test_greedy_to_stdout(self, tmp_path, capsys):
        data = write(tmp_path, "pulls.jsonl", JSONL)
        assert main(["greedy", "--data", data, "--sigma", "bounded"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["chosen_arm"] == "a0"
        assert payload["lower_bound"] is None

    def test_lcb_on_csv(self, tmp_path, capsys):
        data = write(tmp_path, "pulls.csv", "arm,reward\nx,0.9\ny,0.1\n")
        assert main(["lcb", "--data", data, "--format", "csv",
                     "--sigma", "0.5"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["method"] == "lcb"
        assert payload["chosen_arm"] == "x"

    def test_behavior_on_returns(self, tmp_path, capsys):
        lines = "\n".join(json.dumps({"policy_id": f"p{i}", "return": 0.5})
                          for i in range(3))
        data = write(tmp_path, "r.jsonl", lines)
        assert main(["behavior", "--data", data, "--format", "returns",
                     "--sigma", "bounded"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["empirical_value"] == pytest.approx(0.5)

    def test_combined_reports_source(self, tmp_path, capsys):
        data = write(tmp_path, "pulls.jsonl", JSONL)
        assert main(["combined", "--data", data, "--sigma", "bounded",
                     "--delta", "0.5", "--grid-size", "10", "--m", "200"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["method"] == "combined"
        assert payload["diagnostics"]["source"] in ("trust", "lcb")

    def test_missing_file_exits_two(self, tmp_path, capsys):
        rc = main(["greedy", "--data", str(tmp_path / "nope.jsonl"),
                   "--sigma", "bounded"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_sigma_exits_two(self, tmp_path, capsys):
        data = write(tmp_path, "pulls.jsonl", JSONL)
        assert main(["greedy", "--data", data, "--sigma", "junk"]) == 2

    def test_empirical_sigma_needs_repeats(self, tmp_path, capsys):
        data = write(tmp_path, "pulls.jsonl", JSONL)
        rc = main(["greedy", "--data", data, "--sigma", "empirical"])
        assert rc == 2
        assert "two samples" in capsys.readouterr().err

    def test_unknown_command_exits_two(self, capsys):
        assert main(["nonsense"]) == 2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_simulate_writes_summary_and_sweep(self, tmp_path, capsys):
        out_dir = tmp_path / "results"
        rc = main(["simulate", "--instance", "linear-means", "--d", "6",
                   "--seeds", "0", "--out", str(out_dir)])
        assert rc == 0
        payload = json.loads((out_dir / "linear-means_d6_summary.json").read_text())
        assert set(payload["methods"]) == {
            "behavior", "greedy", "lcb", "trust", "combined"
        }
        sweep = (out_dir / "linear-means_d6_sweep.csv").read_text().splitlines()
        assert sweep[0] == ",".join(SWEEP_COLUMNS)
        assert len(sweep) == 26

    def test_simulate_strong_signal_check(self, tmp_path, capsys):
        out_dir = tmp_path / "results"
        rc = main(["simulate", "--instance", "strong-signal", "--d", "400",
                   "--seeds", "0,1", "--out", str(out_dir)])
        assert rc == 0
        payload = json.loads(
            (out_dir / "strong-signal_d400_check.json").read_text()
        )
        assert payload["d_half"] == 200
        assert payload["threshold"] == pytest.approx(0.3)
        assert isinstance(payload["passed"], bool)
        assert len(payload["improvements"]) == 2

    def test_dense_policy_flag(self, tmp_path, capsys):
        data = write(tmp_path, "pulls.jsonl", JSONL)
        assert main(["greedy", "--data", data, "--sigma", "bounded",
                     "--dense-policy"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["policy"]) == 4

    def test_drop_empty_arms_flag(self, tmp_path, capsys):
        text = JSONL + "\n" + json.dumps({"arm": "ghost", "reward": None})
        data = write(tmp_path, "pulls.jsonl", text)
        assert main(["greedy", "--data", data, "--sigma", "bounded"]) == 2
        capsys.readouterr()
        assert main(["greedy", "--data", data, "--sigma", "bounded",
                     "--drop-empty-arms"]) == 0
        assert json.loads(capsys.readouterr().out)["n_arms"] == 4
