"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 non-convergence, 4 a violated
inequality (theorem verdict or an exact pathwise check).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import VIOLATED, check_main_theorem, check_main_theorem_general
from .cocycle import default_mode, estimate_kingman_bound, trajectory_increments
from .ergodic import EnvPath, batch_means
from .errors import ConvergenceError, InvariantViolation, ValidationError
from .matrix import matrix_norm
from .principal import CSV_HEADER, cesaro_proof_trace
from .scenario import Scenario, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_VIOLATION = 0, 2, 3, 4
SUITE_COLUMNS = ["scenario_id", "N", "driver_kind", "lambda", "stderr", "log_rho_avg", "margin", "verdict", "seed"]


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _plain(obj):
    if is_dataclass(obj):
        return _plain(obj.to_dict() if hasattr(obj, "to_dict") else asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float at 17 significant digits; non-finite floats become strings."""
    obj = _plain(obj)
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        s = fmt_float(obj)
        return s if math.isfinite(obj) else json.dumps(s)
    return json.dumps(obj)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _bundle(command: str, scenario: Scenario, seed: int, results: dict, started: float) -> dict:
    return {
        "artifact": "rmslyap",
        "version": __version__,
        "command": command,
        "seed": seed,
        "scenario": scenario.echo(),
        "results": results,
        # the only field that varies between identical runs
        "timing": {
            "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
            "wall_clock_s": time.time() - started,
        },
    }


def _emit(bundle: dict, out: str | None) -> None:
    text = dumps(bundle) + "\n"
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def convergence_grid(n: int, points: int = 200) -> np.ndarray:
    """Log-spaced step counts 1..n (always including n)."""
    return np.unique(np.concatenate([np.geomspace(1, n, points).astype(np.int64), [n]]))


def cmd_estimate(args) -> int:
    started = time.time()
    sc = load_scenario(args.scenario)
    seed = sc.resolve_seed(args.seed)
    n = args.n or sc.defaults["n"]
    num_paths = args.num_paths or sc.defaults["num_paths"]
    mode = args.mode or default_mode(sc.system)
    inc, unit = trajectory_increments(sc.system, EnvPath(sc.driver, seed), n, mode)
    value, stderr = batch_means(inc)
    if mode == "matrix" and args.norm == "operator2" and value > -math.inf:
        value += math.log(matrix_norm(unit, "operator2")) / n
    kingman = [estimate_kingman_bound(sc.system, k, num_paths, seed, args.norm) for k in (1, 2, 4, 8)]
    results = {
        "estimate": {
            "value": value, "method": f"trajectory-{mode}", "n": n, "samples": 1, "stderr": stderr,
            "seed": seed, "norm": args.norm if mode == "matrix" else "euclidean-vector",
        },
        "kingman": kingman,
    }
    _emit(_bundle("estimate", sc, seed, results, started), args.out)
    if args.csv:
        grid = convergence_grid(n)
        with np.errstate(invalid="ignore"):
            running = np.cumsum(inc)[grid - 1] / grid
        atomic_write(args.csv, _csv_text(["n", "lambda_hat"], zip(grid.tolist(), running.tolist())))
    print(f"{sc.name}: lambda_hat = {fmt_float(value)} +/- {fmt_float(stderr)} ({mode}, n={n})", file=sys.stderr)
    return EXIT_OK


def cmd_theorem(args) -> int:
    started = time.time()
    sc = load_scenario(args.scenario)
    seed = sc.resolve_seed(args.seed)
    budget = args.budget or sc.defaults["budget"]
    epsilons = args.epsilons or sc.defaults["epsilons"]
    if np.all(sc.A > 0):
        report = check_main_theorem(sc.system, budget, seed)
    else:
        report = check_main_theorem_general(sc.system, epsilons, budget, seed)
    results = {"theorem": report}
    _emit(_bundle("theorem", sc, seed, results, started), args.out)
    print(f"{sc.name}: margin = {fmt_float(report.margin)} (tolerance {fmt_float(report.tolerance)}), "
          f"verdict: {report.verdict}", file=sys.stderr)
    if report.verdict == VIOLATED:
        print("VIOLATION: lambda < ln rho(A Dbar) beyond tolerance; this indicates a bug", file=sys.stderr)
        return EXIT_VIOLATION
    if not report.agreement:
        print("; ".join(report.diagnostics), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_proof_trace(args) -> int:
    started = time.time()
    sc = load_scenario(args.scenario)
    seed = sc.resolve_seed(args.seed)
    n = args.n or 10_000
    depth = args.depth or sc.defaults["depth"]
    tol = sc.defaults["tolerances"]
    trace = cesaro_proof_trace(sc.system, EnvPath(sc.driver, seed), n, depth, tol["principal"], tol["trace"],
                               strict=False)
    means = trace.means()
    results = {"report": trace.report, "final_means": means}
    _emit(_bundle("proof-trace", sc, seed, results, started), args.out)
    if args.csv:
        atomic_write(args.csv, _csv_text(CSV_HEADER, trace.rows()))
    failures = trace.report["failures"]
    print(f"{sc.name}: min prefix slack {fmt_float(trace.report['prefix_min_relative_slack'])}, "
          f"{len(failures)} failure(s)", file=sys.stderr)
    return EXIT_VIOLATION if failures else EXIT_OK


def _suite_row(task) -> list:
    path, seed_override, budget = task
    name = Path(path).stem
    try:
        sc = load_scenario(path)
        seed = sc.resolve_seed(seed_override)
        report = check_main_theorem(sc.system, budget or sc.defaults["budget"], seed)
    except (ValidationError, ConvergenceError) as exc:
        return [name, "", "", "", "", "", "", f"error: {exc}", ""]
    return [name, sc.system.N, sc.driver.kind, report.lam.value, report.lam.stderr, report.log_rho_avg,
            report.margin, report.verdict, seed]


def cmd_suite(args) -> int:
    files = sorted(Path(args.directory).glob("*.json"))
    if not files:
        print(f"no scenario files in {args.directory}", file=sys.stderr)
        return EXIT_INVALID
    tasks = [(str(f), args.seed, args.budget) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_suite_row, tasks))
    else:
        rows = [_suite_row(t) for t in tasks]
    text = _csv_text(SUITE_COLUMNS, rows)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    verdicts = [r[7] for r in rows]
    violations = sum(v == VIOLATED for v in verdicts)
    errors = sum(v.startswith("error") for v in verdicts)
    print(f"{len(rows)} scenarios, {violations} violation(s), {errors} error(s)", file=sys.stderr)
    if violations:
        return EXIT_VIOLATION
    return EXIT_INVALID if errors else EXIT_OK


def _epsilons(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmslyap", description="Top Lyapunov exponents of A D(omega) systems")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="write the JSON bundle here (default: stdout)")

    e = sub.add_parser("estimate", parents=[common], help="trajectory estimate and Kingman upper bounds")
    e.add_argument("scenario")
    e.add_argument("--n", type=int)
    e.add_argument("--num-paths", type=int)
    e.add_argument("--mode", choices=["vector", "matrix"])
    e.add_argument("--norm", choices=["frobenius", "operator2"], default="frobenius")
    e.add_argument("--csv", help="write the running estimate series (n, lambda_hat)")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("theorem", parents=[common], help="check lambda >= ln rho(A Dbar)")
    t.add_argument("scenario")
    t.add_argument("--budget", type=int)
    t.add_argument("--epsilons", type=_epsilons)
    t.set_defaults(func=cmd_theorem)

    r = sub.add_parser("proof-trace", parents=[common], help="replay the Cesaro-mean inequalities (positive A)")
    r.add_argument("scenario")
    r.add_argument("--n", type=int)
    r.add_argument("--depth", type=int)
    r.add_argument("--csv", help="write the per-step trace (k, i, w_i, rho, d_i)")
    r.set_defaults(func=cmd_proof_trace)

    s = sub.add_parser("suite", help="theorem check over a directory of scenarios")
    s.add_argument("directory")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--budget", type=int)
    s.add_argument("--out", help="write the summary CSV here (default: stdout)")
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except InvariantViolation as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
