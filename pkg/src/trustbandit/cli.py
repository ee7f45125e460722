"""Command-line entry points.

Subcommands: ``trust``, ``lcb``, ``greedy``, ``behavior``, ``combined``
(policy selection on a pull log), ``simulate`` (synthetic benchmarks), and
``m0`` (order-statistic index diagnostic).

Exit codes: 0 on success, 2 on validation or I/O errors, 3 when the
trust-region solver fails to converge.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .baselines import run_behavior, run_combined, run_greedy, run_lcb, trust_report
from .complexity import compute_m0
from .core import compute_stats
from .io import RunConfig, emit_report, load_dataset, write_per_radius_csv, write_sweep_csv
from .solver import SolverError
from .trust import run_trust

_SIGMA_ALIASES = {
    "bounded": "bounded_quarter",
    "bounded_quarter": "bounded_quarter",
    "empirical": "empirical_std",
    "empirical_std": "empirical_std",
}


def _sigma_mode(text: str):
    key = text.strip().lower()
    if key in _SIGMA_ALIASES:
        return _SIGMA_ALIASES[key]
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"{text!r} is not a noise scale; pass a positive float, "
            "'bounded' (sigma = 1/2), or 'empirical'"
        ) from None
    if value <= 0:
        raise argparse.ArgumentTypeError("sigma must be positive")
    return value


def _seed_list(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="pull log to read")
    p.add_argument(
        "--format", default="jsonl", choices=("jsonl", "csv", "returns"),
        help="input layout; 'returns' reads policy_id/return records",
    )
    p.add_argument(
        "--drop-empty-arms", action="store_true",
        help="silently drop arms declared with no rewards",
    )
    p.add_argument(
        "--sigma", type=_sigma_mode, required=True, metavar="MODE",
        help="per-arm noise scale: a float, 'bounded' (1/2), or 'empirical'",
    )
    p.add_argument("--delta", type=float, default=0.1, help="failure probability")
    p.add_argument("--out", default=None, help="report JSON path (default: stdout)")
    p.add_argument(
        "--dense-policy", action="store_true",
        help="serialize every arm weight instead of dropping near-zero ones",
    )


def _add_trust_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=1.3, help="radius grid decay rate")
    p.add_argument("--grid-size", type=int, default=40, help="number of grid radii")
    p.add_argument("--m", type=int, default=200, help="Monte Carlo draws per radius")
    p.add_argument("--seed", type=int, default=2023, help="noise stream seed")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers")
    p.add_argument(
        "--strict-m0", action="store_true",
        help="error out instead of falling back to the sample maximum when m "
        "is too small for the target quantile",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trustbandit",
        description="Certified policy improvement for offline bandit data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_trust = sub.add_parser("trust", help="trust-region policy with certificate")
    _add_data_args(p_trust)
    _add_trust_args(p_trust)
    p_trust.add_argument(
        "--sweep-out", default=None, help="per-radius diagnostics CSV path"
    )

    for name, blurb in (
        ("lcb", "pick the best lower-confidence-bound arm"),
        ("greedy", "pick the best empirical-mean arm"),
        ("behavior", "precision-weighted imitation policy"),
    ):
        _add_data_args(sub.add_parser(name, help=blurb))

    p_comb = sub.add_parser(
        "combined", help="better of trust and lcb by certified bound"
    )
    _add_data_args(p_comb)
    _add_trust_args(p_comb)

    p_sim = sub.add_parser("simulate", help="run synthetic benchmarks")
    p_sim.add_argument(
        "--instance", required=True,
        choices=("data-starved", "linear-means", "strong-signal"),
    )
    p_sim.add_argument("--d", type=int, default=None, help="number of arms")
    p_sim.add_argument(
        "--seeds", type=_seed_list, default=tuple(range(2023, 2031)),
        help="comma or space separated seed list",
    )
    p_sim.add_argument(
        "--full-scale", action="store_true",
        help="use benchmark-scale defaults (d, m=200, grid size 40)",
    )
    p_sim.add_argument("--noise-sigma", type=float, default=0.1,
                       help="noise scale for strong-signal instances")
    p_sim.add_argument("--delta", type=float, default=0.1)
    p_sim.add_argument("--jobs", type=int, default=None)
    p_sim.add_argument("--out", required=True, help="output directory")

    p_m0 = sub.add_parser("m0", help="order-statistic index for a quantile")
    p_m0.add_argument("--m", type=int, required=True)
    p_m0.add_argument("--delta-prime", type=float, required=True)

    return parser


_FULL_SCALE_D = {"data-starved": 10000, "linear-means": 1000, "strong-signal": 2000}


def _run_policy_command(args: argparse.Namespace) -> int:
    data = load_dataset(args.data, args.format, args.drop_empty_arms)
    stats = compute_stats(data, sigma=args.sigma)
    sigma_label = args.sigma if isinstance(args.sigma, str) else repr(args.sigma)
    seed = getattr(args, "seed", 2023)
    config = RunConfig(
        method=args.command,
        sigma_mode=sigma_label,
        delta=args.delta,
        alpha=getattr(args, "alpha", 1.3),
        grid_size=getattr(args, "grid_size", 40),
        m=getattr(args, "m", 200),
        seed=seed,
    )

    outcome = None
    if args.command in ("trust", "combined"):
        outcome = run_trust(
            stats, delta=args.delta, alpha=args.alpha, grid_size=args.grid_size,
            m=args.m, seed=args.seed, n_jobs=args.jobs, strict_m0=args.strict_m0,
        )
    if args.command == "trust":
        report = trust_report(outcome)
    elif args.command == "combined":
        report = run_combined(trust_report(outcome), run_lcb(stats, args.delta))
    elif args.command == "lcb":
        report = run_lcb(stats, args.delta)
    elif args.command == "greedy":
        report = run_greedy(stats)
    else:
        report = run_behavior(stats, args.delta)

    if args.out is None:
        emit_report(report, sys.stdout, config, args.dense_policy)
    else:
        emit_report(report, args.out, config, args.dense_policy)
    if getattr(args, "sweep_out", None):
        with open(args.sweep_out, "w", encoding="utf-8", newline="") as fh:
            write_per_radius_csv(outcome.per_radius, fh)
    return 0


def _run_simulate(args: argparse.Namespace) -> int:
    from .simulate import run_experiment, strong_signal_check, sweep_radius

    if args.full_scale:
        m, grid_size = 200, 40
    else:
        m, grid_size = 100, 25
    d = args.d
    if d is None:
        d = _FULL_SCALE_D[args.instance] if args.full_scale else 500
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.join(args.out, f"{args.instance}_d{d}")

    if args.instance == "strong-signal":
        check = strong_signal_check(
            d // 2, sigma=args.noise_sigma, delta=args.delta, seeds=args.seeds
        )
        payload = {
            "d_half": check.d_half, "sigma": check.sigma, "delta": check.delta,
            "threshold": check.threshold, "vacuous": check.vacuous,
            "improvements": list(check.improvements),
            "n_pass": check.n_pass, "passed": check.passed,
        }
        with open(stem + "_check.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        print(f"wrote {stem}_check.json (passed: {check.passed})")
        return 0

    summary = run_experiment(
        args.instance, d, args.seeds, delta=args.delta, grid_size=grid_size,
        m=m, noise_sigma=args.noise_sigma, n_jobs=args.jobs,
    )
    emit_report(summary, stem + "_summary.json")
    _, rows = sweep_radius(
        args.instance, d, args.seeds[0], delta=args.delta, grid_size=grid_size,
        m=m, noise_sigma=args.noise_sigma, n_jobs=args.jobs,
    )
    with open(stem + "_sweep.csv", "w", encoding="utf-8", newline="") as fh:
        write_sweep_csv(rows, fh)
    print(f"wrote {stem}_summary.json and {stem}_sweep.csv")
    for name, ms in summary.methods.items():
        print(
            f"  {name:9s} mean true value {ms.mean_true_value:+.4f}  "
            f"mean lower bound {ms.mean_lower_bound:+.4f}"
        )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "m0":
            print(compute_m0(args.m, args.delta_prime))
            return 0
        if args.command == "simulate":
            return _run_simulate(args)
        return _run_policy_command(args)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
