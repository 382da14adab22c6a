"""Command-line front-end.

Subcommands: ``infer`` (datasets), ``simulate`` (synthetic error curves),
``bounds`` (theoretical curves), ``bench`` (timing), ``replay`` (re-run a
manifest).  Every command writes its delimited report, a rendered figure
beside it, and a manifest sufficient to reproduce the outputs
byte-for-byte.  Warnings go to stderr; the exit code is 0 unless the
command itself failed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bounds, io, plotting
from .manifest import RunManifest, load_manifest, sha256_file, write_manifest
from .model import (
    ConfigError,
    DuplicateLabelError,
    LabelFormatError,
    Prior,
)
from .online import ALGORITHMS, run_offline
from .simulate import SyntheticConfig, estimate_error_curve, timing_harness

DEFAULT_SORTED_TASK_CAP = 5000


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def parse_grid(text: str) -> list[int]:
    """Grid syntax: comma-separated integers and a..b or a..b..step ranges."""
    values: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            parts = token.split("..")
            if len(parts) == 2:
                start, stop, step = int(parts[0]), int(parts[1]), 1
            elif len(parts) == 3:
                start, stop, step = (int(p) for p in parts)
            else:
                raise ConfigError(f"bad grid token {token!r}")
            values.extend(range(start, stop + 1, step))
        else:
            values.append(int(token))
    seen: set[int] = set()
    unique = [v for v in values if not (v in seen or seen.add(v))]
    if not unique:
        raise ConfigError(f"empty grid {text!r}")
    return unique


def _algo_options(algo: str, args_iters, args_steps, args_particles, kos_default: int) -> dict:
    opts: dict = {}
    if algo in ("em", "amf"):
        opts["iters"] = 50 if args_iters is None else args_iters
    elif algo == "kos":
        opts["iters"] = kos_default if args_iters is None else args_iters
    elif algo == "gibbs":
        opts["steps"] = args_steps
    elif algo == "pf":
        opts["particles"] = args_particles
    return opts


def _expand_algos(requested: list[str], policy: str) -> list[str]:
    if requested == ["all"]:
        algos = list(ALGORITHMS)
        if policy == "us" and "gibbs" in algos:
            algos.remove("gibbs")
            _warn("gibbs has no online posterior; dropped from 'all' under the us policy")
        return algos
    return requested


def _check_sorted_cap(algos, policy: str, num_tasks: int, cap: int) -> None:
    if policy == "us" and "sorted-sbic" in algos and num_tasks > cap:
        raise ConfigError(
            f"sorted-sbic online needs |M|^2 view memory; refusing {num_tasks} tasks "
            f"(cap {cap}; raise with --max-sorted-tasks)"
        )


# ---------------------------------------------------------------------------
# command bodies: pure functions of (params, out_dir) so replay can reuse them


def run_infer(params: dict, out_dir: Path) -> dict:
    start = time.perf_counter()
    algo = params["algo"]
    prior = Prior(params["alpha"], params["beta"], params["q"])
    matrix = io.read_labels_csv(params["labels"])
    if len(matrix) == 0:
        _warn(f"{params['labels']}: no label records; writing empty predictions")

    root = np.random.SeedSequence(params["seed"])
    children = root.spawn(1 + 2 * params["shuffles"])
    prediction = run_offline(algo, matrix, prior, children[0], params["options"])

    predictions_name = f"{algo}_predictions.csv"
    io.write_predictions_csv(out_dir / predictions_name, matrix, prediction)
    outputs = [predictions_name]
    digests = {params["labels"]: sha256_file(params["labels"])}
    info: dict = {
        "algo": algo,
        "records": len(matrix),
        "tasks": matrix.num_tasks,
        "workers": matrix.num_workers,
    }

    if params.get("gold"):
        digests[params["gold"]] = sha256_file(params["gold"])
        gold = io.read_gold_csv(params["gold"])
        idx, classes, notes = io.align_gold(matrix, gold)
        for note in notes:
            _warn(note)
        if idx.size == 0:
            _warn("no gold tasks overlap the labels; skipping error estimate")
        else:
            errors = []
            for k in range(params["shuffles"]):
                perm_rng = np.random.default_rng(children[1 + 2 * k])
                shuffled = matrix.permuted(perm_rng.permutation(len(matrix)))
                pred_k = run_offline(algo, shuffled, prior, children[2 + 2 * k], params["options"])
                errors.append(float(np.mean(pred_k.classes[idx] != classes)))
            err_arr = np.asarray(errors)
            info["error_mean"] = float(err_arr.mean())
            info["error_std"] = float(err_arr.std())
            info["shuffles"] = params["shuffles"]
            hist_name = f"{algo}_error_hist.png"
            plotting.save_error_histogram(
                out_dir / hist_name, errors, f"{algo}: error over {len(errors)} repeats"
            )
            outputs.append(hist_name)
            print(
                f"{algo}: error {info['error_mean']:.4f} +- {info['error_std']:.4f} "
                f"over {params['shuffles']} repeats ({idx.size} gold tasks)"
            )

    manifest = RunManifest(
        command="infer",
        params=params,
        seed=params["seed"],
        version=__version__,
        input_digests=digests,
        outputs=outputs,
        wall_time_s=time.perf_counter() - start,
    )
    write_manifest(out_dir / f"infer_{algo}_manifest.json", manifest)
    return info


def run_simulate(params: dict, out_dir: Path) -> dict:
    start = time.perf_counter()
    prior = Prior(params["alpha"], params["beta"], params["q"])
    policy = params["policy"]
    algos = _expand_algos(params["algos"], policy)
    r_grid = params["r_grid"]
    _check_sorted_cap(algos, policy, params["tasks"], params["max_sorted_tasks"])

    outputs = []
    curves = {}
    for algo in algos:
        cfg = SyntheticConfig(
            num_tasks=params["tasks"],
            labels_per_task=r_grid[0],
            labels_per_worker=params["L"],
            prior=prior,
            policy=policy,
            aggregator=algo,
            seed=params["seed"],
            arrival=params["arrival"],
            options=_algo_options(
                algo, params["iters"], params["steps"], params["particles"], kos_default=5
            ),
        )
        points = estimate_error_curve(
            cfg,
            r_grid,
            target=params["error_runs"],
            max_runs=params["max_runs"],
            confidence=params["confidence"],
            workers=params["workers"],
        )
        name = f"curve_{policy}_{algo}.csv"
        io.write_curve_csv(out_dir / name, points)
        outputs.append(name)
        curves[algo] = points

    figure_name = f"curves_{policy}.png"
    plotting.save_error_curves(
        out_dir / figure_name,
        curves,
        title=f"{policy} policy, |M|={params['tasks']}, L={params['L']}",
    )
    outputs.append(figure_name)

    manifest = RunManifest(
        command="simulate",
        params=params,
        seed=params["seed"],
        version=__version__,
        outputs=outputs,
        wall_time_s=time.perf_counter() - start,
    )
    write_manifest(out_dir / f"simulate_{policy}_manifest.json", manifest)
    return {"outputs": outputs}


def run_bounds(params: dict, out_dir: Path) -> dict:
    start = time.perf_counter()
    spec = bounds.BoundSpec(
        labels_per_worker=params["L"],
        alpha=params["alpha"],
        beta=params["beta"],
        variant=params["variant"],
        policy=params["policy"],
        anchor=tuple(params["anchor"]),
    )
    r_grid = params["r_grid"]
    values = bounds.bound_curve(spec, r_grid)
    rate = bounds.exponent_constant(spec)

    stem = f"bound_{params['policy']}_{params['variant']}"
    io.write_bound_csv(out_dir / f"{stem}.csv", r_grid, values)
    label = f"{params['variant']} / {params['policy']} (rate {rate:.4f})"
    plotting.save_bound_curve(out_dir / f"{stem}.png", r_grid, values, label)
    outputs = [f"{stem}.csv", f"{stem}.png"]
    print(f"per-label decay rate: {rate:.6f}")

    manifest = RunManifest(
        command="bounds",
        params=params,
        seed=params["seed"],
        version=__version__,
        outputs=outputs,
        wall_time_s=time.perf_counter() - start,
    )
    write_manifest(out_dir / f"{stem}_manifest.json", manifest)
    return {"rate": rate, "outputs": outputs}


def run_bench(params: dict, out_dir: Path) -> dict:
    start = time.perf_counter()
    prior = Prior(params["alpha"], params["beta"], params["q"])
    policy = params["policy"]
    algos = _expand_algos(params["algos"], policy)
    _check_sorted_cap(algos, policy, params["tasks"], params["max_sorted_tasks"])

    # the mean-field pair share one implementation, hence one timing row
    merged = list(algos)
    shared_row = "em" in merged and "amf" in merged
    if shared_row:
        merged.remove("em")

    # wall-clock numbers cannot reproduce across machines or runs, so the
    # manifest records them; a replay re-renders the report from the record
    recorded = params.get("measured_rows")
    if recorded is not None:
        rows = [(int(r), str(a), float(m), float(s)) for r, a, m, s in recorded]
    else:
        rows = []
        for algo in merged:
            for r_value in params["r_grid"]:
                cfg = SyntheticConfig(
                    num_tasks=params["tasks"],
                    labels_per_task=r_value,
                    labels_per_worker=params["L"],
                    prior=prior,
                    policy=policy,
                    aggregator=algo,
                    seed=params["seed"],
                    arrival=params["arrival"],
                    options=_algo_options(
                        algo, params["iters"], params["steps"], params["particles"], kos_default=5
                    ),
                )
                result = timing_harness(cfg, repeats=params["repeats"])
                name = "em/amf" if (algo == "amf" and shared_row) else algo
                rows.append((r_value, name, result.mean_ms, result.std_ms))
                print(f"{name} R={r_value}: {result.mean_ms:.1f} +- {result.std_ms:.1f} ms")

    csv_name = f"timing_{policy}.csv"
    io.write_timing_csv(out_dir / csv_name, rows)
    figure_name = f"timing_{policy}.png"
    plotting.save_timing(
        out_dir / figure_name, rows, title=f"{policy} policy, |M|={params['tasks']}"
    )
    outputs = [csv_name, figure_name]

    manifest = RunManifest(
        command="bench",
        params={**params, "measured_rows": [list(row) for row in rows]},
        seed=params["seed"],
        version=__version__,
        outputs=outputs,
        wall_time_s=time.perf_counter() - start,
    )
    write_manifest(out_dir / f"bench_{policy}_manifest.json", manifest)
    return {"rows": rows, "outputs": outputs}


COMMANDS = {
    "infer": run_infer,
    "simulate": run_simulate,
    "bounds": run_bounds,
    "bench": run_bench,
}


def run_replay(manifest_path: str, out_dir: Path) -> dict:
    manifest = load_manifest(manifest_path)
    if manifest.command not in COMMANDS:
        raise ConfigError(f"manifest names unknown command {manifest.command!r}")
    return COMMANDS[manifest.command](manifest.params, out_dir)


# ---------------------------------------------------------------------------
# argument parsing


def _add_prior_flags(parser, alpha: float, beta: float) -> None:
    parser.add_argument("--alpha", type=float, default=alpha, help="worker prior alpha")
    parser.add_argument("--beta", type=float, default=beta, help="worker prior beta")
    parser.add_argument("--q", type=float, default=0.5, help="class prior P(y=+1)")


def _add_common_flags(parser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--out",
        default=os.environ.get("SBIC_OUT_DIR", "."),
        help="output directory (default: $SBIC_OUT_DIR or the working directory)",
    )


def _add_algo_tuning_flags(parser) -> None:
    parser.add_argument("--iters", type=int, default=None, help="em/amf/kos iteration count")
    parser.add_argument("--steps", type=int, default=500, help="gibbs chain steps")
    parser.add_argument("--particles", type=int, default=50, help="particle count for pf")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbic",
        description="Streaming Bayesian inference and baselines for crowdsourced binary labels",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_infer = sub.add_parser("infer", help="aggregate a label CSV into predictions")
    p_infer.add_argument("--labels", required=True, help="label CSV (task,worker,label)")
    p_infer.add_argument("--gold", default=None, help="gold CSV (task,label)")
    p_infer.add_argument("--algo", required=True, choices=ALGORITHMS)
    p_infer.add_argument(
        "--shuffles",
        type=int,
        default=100,
        help="gold-error repeats over shuffled orders / seeds",
    )
    _add_prior_flags(p_infer, alpha=2.0, beta=1.0)
    _add_algo_tuning_flags(p_infer)
    _add_common_flags(p_infer)

    p_sim = sub.add_parser("simulate", help="estimate synthetic error curves")
    p_sim.add_argument("--tasks", type=int, default=200)
    p_sim.add_argument("--R", dest="r_grid", default="1..40", help="labels-per-task grid")
    p_sim.add_argument("--L", type=int, default=10, help="labels per worker")
    p_sim.add_argument("--policy", choices=("uni", "us"), default="uni")
    p_sim.add_argument(
        "--algo",
        action="append",
        choices=ALGORITHMS + ("all",),
        default=None,
        help="aggregator (repeatable, or 'all')",
    )
    p_sim.add_argument("--error-runs", type=int, default=200, help="stop after this many runs with errors")
    p_sim.add_argument("--max-runs", type=int, default=200_000, help="runaway guard per grid point")
    p_sim.add_argument("--confidence", type=float, default=0.99)
    p_sim.add_argument("--workers", type=int, default=1, help="process pool size")
    p_sim.add_argument("--arrival", choices=("sessions", "interleaved"), default="sessions")
    p_sim.add_argument("--max-sorted-tasks", type=int, default=DEFAULT_SORTED_TASK_CAP)
    _add_prior_flags(p_sim, alpha=4.0, beta=3.0)
    _add_algo_tuning_flags(p_sim)
    _add_common_flags(p_sim)

    p_bounds = sub.add_parser("bounds", help="evaluate the theoretical error curves")
    p_bounds.add_argument("--L", type=int, required=True)
    p_bounds.add_argument("--variant", choices=("fast", "sorted"), required=True)
    p_bounds.add_argument("--policy", choices=("uni", "us"), required=True)
    p_bounds.add_argument(
        "--anchor",
        required=True,
        help="R0,error0 pair fixing the curve's free intercept",
    )
    p_bounds.add_argument("--R", dest="r_grid", default="1..80")
    _add_prior_flags(p_bounds, alpha=4.0, beta=3.0)
    _add_common_flags(p_bounds)

    p_bench = sub.add_parser("bench", help="wall-time per run for each algorithm")
    p_bench.add_argument("--tasks", type=int, default=1000)
    p_bench.add_argument("--R", dest="r_grid", default="10")
    p_bench.add_argument("--L", type=int, default=10)
    p_bench.add_argument("--policy", choices=("uni", "us"), default="us")
    p_bench.add_argument(
        "--algo",
        action="append",
        choices=ALGORITHMS + ("all",),
        default=None,
    )
    p_bench.add_argument("--repeats", type=int, default=10)
    p_bench.add_argument("--arrival", choices=("sessions", "interleaved"), default="sessions")
    p_bench.add_argument("--max-sorted-tasks", type=int, default=DEFAULT_SORTED_TASK_CAP)
    _add_prior_flags(p_bench, alpha=4.0, beta=3.0)
    _add_algo_tuning_flags(p_bench)
    _add_common_flags(p_bench)

    p_replay = sub.add_parser("replay", help="re-run a command from its manifest")
    p_replay.add_argument("manifest")
    p_replay.add_argument(
        "--out", default=os.environ.get("SBIC_OUT_DIR", "."), help="output directory"
    )

    return parser


def _params_from_args(args) -> dict:
    if args.command == "infer":
        return {
            "labels": str(Path(args.labels).resolve()),
            "gold": str(Path(args.gold).resolve()) if args.gold else None,
            "algo": args.algo,
            "shuffles": args.shuffles,
            "alpha": args.alpha,
            "beta": args.beta,
            "q": args.q,
            "seed": args.seed,
            "options": _algo_options(args.algo, args.iters, args.steps, args.particles, kos_default=100),
        }
    if args.command == "simulate":
        return {
            "tasks": args.tasks,
            "r_grid": parse_grid(args.r_grid),
            "L": args.L,
            "policy": args.policy,
            "algos": args.algo or ["maj"],
            "error_runs": args.error_runs,
            "max_runs": args.max_runs,
            "confidence": args.confidence,
            "workers": args.workers,
            "arrival": args.arrival,
            "max_sorted_tasks": args.max_sorted_tasks,
            "alpha": args.alpha,
            "beta": args.beta,
            "q": args.q,
            "seed": args.seed,
            "iters": args.iters,
            "steps": args.steps,
            "particles": args.particles,
        }
    if args.command == "bounds":
        r0_text, e0_text = args.anchor.split(",")
        return {
            "L": args.L,
            "variant": args.variant,
            "policy": args.policy,
            "anchor": [float(r0_text), float(e0_text)],
            "r_grid": parse_grid(args.r_grid),
            "alpha": args.alpha,
            "beta": args.beta,
            "seed": args.seed,
        }
    if args.command == "bench":
        return {
            "tasks": args.tasks,
            "r_grid": parse_grid(args.r_grid),
            "L": args.L,
            "policy": args.policy,
            "algos": args.algo or ["all"],
            "repeats": args.repeats,
            "arrival": args.arrival,
            "max_sorted_tasks": args.max_sorted_tasks,
            "alpha": args.alpha,
            "beta": args.beta,
            "q": args.q,
            "seed": args.seed,
            "iters": args.iters,
            "steps": args.steps,
            "particles": args.particles,
        }
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "replay":
            run_replay(args.manifest, out_dir)
        else:
            COMMANDS[args.command](_params_from_args(args), out_dir)
    except (ConfigError, LabelFormatError, DuplicateLabelError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
