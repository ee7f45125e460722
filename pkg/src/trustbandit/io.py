"""Reading pull logs and writing policy reports.

Two input layouts are supported:

* JSONL: one object per line, ``{"arm": <str>, "reward": <number>}``.
  A record with ``"reward": null`` registers the arm without a pull.
* CSV: header ``arm,reward``, one pull per row.

Trajectory returns use the same JSONL idea with keys ``policy_id`` and
``return``; each policy is treated as an arm of the induced bandit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, TextIO

import numpy as np

from .core import ArmDataset
from .baselines import PolicyReport

__version__ = "0.1.0"

SPARSE_WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class RunConfig:
    method: str
    sigma_mode: str
    delta: float = 0.1
    alpha: float = 1.3
    grid_size: int = 40
    m: int = 200
    seed: int = 2023

    def to_dict(self) -> dict:
        return asdict(self)


def _records(lines: Iterable[str], path: str, key: str, value: str):
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or key not in rec:
            raise ValueError(f"{path}:{lineno}: expected an object with a {key!r} field")
        arm = rec[key]
        if not isinstance(arm, str) or not arm:
            raise ValueError(f"{path}:{lineno}: {key!r} must be a non-empty string")
        reward = rec.get(value)
        if reward is None:
            yield lineno, arm, None
            continue
        if isinstance(reward, bool) or not isinstance(reward, (int, float)):
            raise ValueError(f"{path}:{lineno}: {value!r} must be a number or null")
        if not math.isfinite(reward):
            raise ValueError(f"{path}:{lineno}: {value!r} must be finite")
        yield lineno, arm, float(reward)


def _collect(
    pairs: Iterable[tuple[int, str, float | None]], path: str, drop_empty: bool
) -> ArmDataset:
    rewards: dict[str, list[float]] = {}
    for lineno, arm, reward in pairs:
        bucket = rewards.setdefault(arm, [])
        if reward is not None:
            bucket.append(reward)
    if drop_empty:
        rewards = {k: v for k, v in rewards.items() if v}
    empty = [k for k, v in rewards.items() if not v]
    if empty:
        raise ValueError(
            f"{path}: arms with no rewards: {', '.join(sorted(empty)[:5])}"
            f"{' ...' if len(empty) > 5 else ''} (pass drop_empty to skip them)"
        )
    if not rewards:
        raise ValueError(f"{path}: no pull records found")
    return ArmDataset(
        tuple(rewards), tuple(np.asarray(v, dtype=float) for v in rewards.values())
    )


def load_dataset_jsonl(path: str, drop_empty: bool = False) -> ArmDataset:
    with open(path, encoding="utf-8") as fh:
        return _collect(_records(fh, path, "arm", "reward"), path, drop_empty)


def load_trajectory_returns(path: str, drop_empty: bool = False) -> ArmDataset:
    """JSONL with ``policy_id``/``return`` keys; policies become arms."""
    with open(path, encoding="utf-8") as fh:
        return _collect(_records(fh, path, "policy_id", "return"), path, drop_empty)


def load_dataset_csv(path: str, drop_empty: bool = False) -> ArmDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if header[:2] != ["arm", "reward"]:
            raise ValueError(f"{path}:1: expected header 'arm,reward', got {','.join(header)!r}")

        def gen():
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) < 2:
                    raise ValueError(f"{path}:{lineno}: expected two columns")
                arm = row[0].strip()
                if not arm:
                    raise ValueError(f"{path}:{lineno}: empty arm label")
                cell = row[1].strip()
                if not cell:
                    yield lineno, arm, None
                    continue
                try:
                    reward = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: reward {cell!r} is not a number"
                    ) from None
                if not math.isfinite(reward):
                    raise ValueError(f"{path}:{lineno}: reward must be finite")
                yield lineno, arm, reward

        return _collect(gen(), path, drop_empty)


def load_dataset(path: str, fmt: str = "jsonl", drop_empty: bool = False) -> ArmDataset:
    if fmt == "jsonl":
        return load_dataset_jsonl(path, drop_empty)
    if fmt == "csv":
        return load_dataset_csv(path, drop_empty)
    if fmt == "returns":
        return load_trajectory_returns(path, drop_empty)
    raise ValueError(f"unknown format {fmt!r}; expected jsonl, csv, or returns")


def sparse_policy(report: PolicyReport, dense: bool = False) -> dict[str, float]:
    """Arm -> weight map, dropping weights at or below the floor unless dense."""
    w = report.policy.weights
    return {
        arm: float(wi)
        for arm, wi in zip(report.arms, w)
        if dense or wi > SPARSE_WEIGHT_FLOOR
    }


def _json_number(x: float):
    return None if not math.isfinite(x) else x


def report_payload(
    report: PolicyReport, config: RunConfig | None = None, dense: bool = False
) -> dict:
    payload = {
        "method": report.method,
        "policy": sparse_policy(report, dense),
        "empirical_value": _json_number(report.empirical_value),
        "lower_bound": _json_number(report.lower_bound),
        "chosen_arm": report.chosen_arm,
        "delta": report.delta,
        "n_arms": len(report.arms),
        "dataset_fingerprint": report.stats_fingerprint,
        "seed": config.seed if config is not None else None,
        "version": __version__,
    }
    if report.diagnostics:
        payload["diagnostics"] = {
            k: _json_number(v) if isinstance(v, float) else v
            for k, v in report.diagnostics.items()
            if np.isscalar(v) or v is None
        }
    if config is not None:
        payload["config"] = config.to_dict()
    return payload


def _summary_payload(summary) -> dict:
    return {
        "instance": summary.tag,
        "d": summary.d,
        "seeds": list(summary.seeds),
        "methods": {
            name: {
                "mean_true_value": _json_number(ms.mean_true_value),
                "mean_lower_bound": _json_number(ms.mean_lower_bound),
                "variance_true_value": _json_number(ms.variance_true_value),
                "min_true_value": _json_number(ms.min_true_value),
                "true_values": [_json_number(x) for x in ms.true_values],
                "lower_bounds": [_json_number(x) for x in ms.lower_bounds],
            }
            for name, ms in summary.methods.items()
        },
        "wall_clock_s": summary.wall_clock_s,
        "config": dict(summary.config),
        "version": __version__,
    }


def emit_report(
    obj, out, config: RunConfig | None = None, dense: bool = False
) -> None:
    """Serialize a policy report, trust outcome, or experiment summary as JSON.

    ``out`` is a path or an open text handle.  Keys are sorted so diffs of two
    runs line up; non-finite numbers become null.
    """
    from .baselines import trust_report as _as_report
    from .trust import TrustOutcome

    if isinstance(obj, TrustOutcome):
        obj = _as_report(obj)
    if isinstance(obj, PolicyReport):
        payload = report_payload(obj, config, dense)
    else:
        payload = _summary_payload(obj)
    if hasattr(out, "write"):
        json.dump(payload, out, sort_keys=True, indent=2)
        out.write("\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")


SWEEP_COLUMNS = (
    "eps",
    "eps_over_eps0",
    "objective",
    "g_hat",
    "penalized",
    "true_value",
    "certificate",
)

PER_RADIUS_COLUMNS = ("eps", "objective", "g_hat", "penalized", "certificate")


def _write_rows(rows, columns, out: TextIO) -> None:
    writer = csv.writer(out)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(getattr(row, col))) for col in columns])


def write_sweep_csv(rows, out: TextIO) -> None:
    _write_rows(rows, SWEEP_COLUMNS, out)


def write_per_radius_csv(rows, out: TextIO) -> None:
    _write_rows(rows, PER_RADIUS_COLUMNS, out)
