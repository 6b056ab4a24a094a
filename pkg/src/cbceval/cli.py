"""Command-line surface: cluster, evaluate, check, verify.

Exit codes: 0 success, 1 input error, 2 deadlock, 3 assignment deadlock,
4 oracle capacity exceeded, 5 consistency property violation. All randomness
flows from --seed; identical inputs and flags reproduce identical outputs
(the report timestamp is the sole isolated exception).
"""

import argparse
import json
import os
import sys

from .cbc import CBCConfig, run_pipeline
from .constraints import detect_deadlock
from .errors import AssignmentDeadlockError, CapacityError, CBCError, ParseError
from .evaluate import deadlock_to_dict, rank, report_json, round_floats
from .ingest import bind_and_validate, parse_constraint_spec, parse_dataset
from .kmeans import KMeansConfig, choose_k, run_kmeans, sse
from .model import ConstraintSpec
from .oracle import MAX_CANDIDATES, MAX_CLUSTERS, brute_force_feasible_exists, brute_force_min_sse

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEADLOCK = 2
EXIT_ASSIGNMENT = 3
EXIT_CAPACITY = 4
EXIT_PROPERTY = 5


def _use_color() -> bool:
    return os.environ.get("CBC_NO_COLOR") is None and sys.stderr.isatty()


def _style(text: str, code: str) -> str:
    return f"\x1b[{code}m{text}\x1b[0m" if _use_color() else text


def _fail(message: str) -> int:
    print(f"{_style('error', '31')}: {message}", file=sys.stderr)
    return EXIT_INPUT


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _load_weights(path: str | None) -> dict | None:
    if path is None:
        return None
    raw = _read(path)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in data.values()
    ):
        raise ParseError(f"{path}: weights must be an object of attribute -> number")
    return {k: float(v) for k, v in data.items()}


def _bound_inputs(args) -> tuple:
    dataset = parse_dataset(_read(args.data))
    spec = (
        parse_constraint_spec(_read(args.constraints))
        if getattr(args, "constraints", None)
        else ConstraintSpec()
    )
    report = bind_and_validate(dataset, spec)
    if not report.ok:
        raise ParseError(report.summary())
    return dataset, spec


def _resolve_k(args, dataset, spec) -> int:
    if args.k is not None:
        if spec.k is not None and spec.k != args.k:
            raise ParseError(
                f"--k {args.k} conflicts with k={spec.k} in the constraint spec"
            )
        return args.k
    if spec.k is not None:
        return spec.k
    n = len(dataset)
    if n < 3:
        return 1
    return choose_k(dataset, (2, min(8, n - 1)), args.seed)


def _cmd_cluster(args) -> int:
    dataset = parse_dataset(_read(args.data))
    weights = _load_weights(args.weights)
    if args.k > len(dataset):
        return _fail("k exceeds candidate count")
    config = KMeansConfig(k=args.k, seed=args.seed, restarts=args.restarts)
    clustering = run_kmeans(dataset, config, weights)
    payload = round_floats(
        {
            "k": clustering.k,
            "seed": clustering.seed,
            "iterations": clustering.iterations,
            "sse": clustering.sse,
            "attributes": list(dataset.schema.names),
            "assignment": dict(clustering.assignment),
            "centroids": [list(c) for c in clustering.centroids],
        }
    )
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    dataset, spec = _bound_inputs(args)
    weights = _load_weights(args.weights)
    k = _resolve_k(args, dataset, spec)
    config = CBCConfig(kmeans=KMeansConfig(k=k, seed=args.seed))
    try:
        result = run_pipeline(dataset, spec, config)
    except AssignmentDeadlockError as exc:
        print(f"{_style('assignment deadlock', '33')}: {exc}", file=sys.stderr)
        return EXIT_ASSIGNMENT
    report = rank(result, dataset, weights)
    _emit(report_json(report), args.out)
    if result.aborted:
        print(_style("deadlock: run aborted at bind time", "33"), file=sys.stderr)
        return EXIT_DEADLOCK
    return EXIT_OK


def _cmd_check(args) -> int:
    dataset, spec = _bound_inputs(args)
    k = args.k if args.k is not None else spec.k
    report = detect_deadlock(spec, dataset, k)
    payload = round_floats(deadlock_to_dict(report))
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_DEADLOCK if report.deadlocked else EXIT_OK


def _cmd_verify(args) -> int:
    dataset = parse_dataset(_read(args.data))
    spec = (
        parse_constraint_spec(_read(args.constraints)) if args.constraints else None
    )
    if spec is not None:
        report = bind_and_validate(dataset, spec)
        if not report.ok:
            raise ParseError(report.summary())
    n, k = len(dataset), args.k
    if n > MAX_CANDIDATES or k > MAX_CLUSTERS:
        print(
            f"capacity exceeded: verify handles n <= {MAX_CANDIDATES}, "
            f"k <= {MAX_CLUSTERS} (got n={n}, k={k})",
            file=sys.stderr,
        )
        return EXIT_CAPACITY

    checks: list[tuple[str, bool, str]] = []
    weights = spec.distance_weights if spec is not None else None

    engine_sse = None
    engine_status = "ok"
    if spec is not None and spec.has_assignment_constraints:
        config = CBCConfig(
            kmeans=KMeansConfig(k=k, seed=args.seed, restarts=args.restarts)
        )
        try:
            result = run_pipeline(dataset, spec, config)
        except AssignmentDeadlockError:
            result = None
            engine_status = "assignment-deadlock"
        if result is not None and result.aborted:
            engine_status = "bind-deadlock"
        elif result is not None:
            engine_sse = result.clustering.sse
            checks.append(
                (
                    "sse-recompute",
                    abs(sse(dataset, result.clustering, weights) - engine_sse) <= 1e-9,
                    f"stored {engine_sse:.12g}",
                )
            )
    else:
        config = KMeansConfig(k=k, seed=args.seed, restarts=args.restarts)
        clustering = run_kmeans(dataset, config, weights)
        engine_sse = clustering.sse
        checks.append(
            (
                "sse-recompute",
                abs(sse(dataset, clustering, weights) - engine_sse) <= 1e-9,
                f"stored {engine_sse:.12g}",
            )
        )

    oracle_result = brute_force_min_sse(dataset, k, spec)
    oracle_sse = oracle_result[1] if oracle_result is not None else None

    rows = [
        ("engine SSE", f"{engine_sse:.12g}" if engine_sse is not None else engine_status),
        ("oracle SSE", f"{oracle_sse:.12g}" if oracle_sse is not None else "infeasible"),
    ]
    if engine_sse is not None and oracle_sse is not None:
        checks.append(
            (
                "engine-not-below-oracle",
                engine_sse >= oracle_sse - 1e-9,
                f"engine {engine_sse:.12g} vs oracle {oracle_sse:.12g}",
            )
        )
        gap = 0.0 if oracle_sse == 0 else (engine_sse - oracle_sse) / oracle_sse * 100
        rows.append(("gap", f"{gap:.2f}%"))
    if engine_sse is not None and oracle_sse is None:
        checks.append(
            (
                "engine-not-beyond-oracle",
                False,
                "engine produced a clustering but the oracle proves the spec infeasible",
            )
        )

    if spec is not None:
        deadlock = detect_deadlock(spec, dataset, k)
        exists, _, reason = brute_force_feasible_exists(spec, dataset, k)
        agree = deadlock.deadlocked == (not exists)
        checks.append(
            (
                "feasibility-agreement",
                agree,
                f"engine {'deadlock' if deadlock.deadlocked else 'feasible'}, "
                f"oracle {'feasible' if exists else 'infeasible'} ({reason})",
            )
        )
        rows.append(
            (
                "feasibility",
                f"engine={'no-deadlock' if not deadlock.deadlocked else 'deadlock'} "
                f"oracle={'feasible' if exists else 'infeasible'} "
                f"agree={'yes' if agree else 'no'}",
            )
        )
        if engine_status == "assignment-deadlock" and exists:
            rows.append(
                (
                    "note",
                    "greedy assignment found no slot though a solution exists "
                    "(known greedy limitation, not a violation)",
                )
            )

    width = max(len(label) for label, _ in rows) + 2
    for label, value in rows:
        print(f"{label + ':':<{width}} {value}")
    all_ok = all(ok for _, ok, _ in checks)
    for name, ok, detail in checks:
        mark = _style("PASS", "32") if ok else _style("FAIL", "31")
        print(f"{mark} {name}: {detail}")
    return EXIT_OK if all_ok else EXIT_PROPERTY


def _seed_type(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbceval",
        description="Constraint-based clustering and evaluation of SaaS candidates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cluster = sub.add_parser("cluster", help="baseline seeded k-means, JSON output")
    cluster.add_argument("--data", required=True, help="dataset CSV path")
    cluster.add_argument("--k", required=True, type=int, help="cluster count")
    cluster.add_argument("--seed", required=True, type=_seed_type, help="RNG seed")
    cluster.add_argument("--restarts", type=int, default=1, help="best-of-N restarts")
    cluster.add_argument("--weights", help="distance weights JSON path")
    cluster.add_argument("--out", help="write JSON here instead of stdout")
    cluster.set_defaults(func=_cmd_cluster)

    evaluate = sub.add_parser(
        "evaluate", help="full pipeline plus ranked evaluation report"
    )
    evaluate.add_argument("--data", required=True, help="dataset CSV path")
    evaluate.add_argument("--constraints", required=True, help="constraint spec JSON path")
    evaluate.add_argument("--weights", help="scoring weights JSON path")
    evaluate.add_argument("--k", type=int, help="cluster count (default: spec k or silhouette pick)")
    evaluate.add_argument("--seed", type=_seed_type, default=0, help="RNG seed (default 0)")
    evaluate.add_argument("--out", help="write the report here instead of stdout")
    evaluate.set_defaults(func=_cmd_evaluate)

    check = sub.add_parser("check", help="bind inputs and detect deadlocks only")
    check.add_argument("--data", required=True, help="dataset CSV path")
    check.add_argument("--constraints", required=True, help="constraint spec JSON path")
    check.add_argument("--k", type=int, help="cluster count (default: spec k)")
    check.set_defaults(func=_cmd_check)

    verify = sub.add_parser("verify", help="engine vs exhaustive oracle comparison")
    verify.add_argument("--data", required=True, help="dataset CSV path")
    verify.add_argument("--constraints", help="constraint spec JSON path")
    verify.add_argument("--k", required=True, type=int, help="cluster count")
    verify.add_argument("--seed", type=_seed_type, default=0, help="RNG seed (default 0)")
    verify.add_argument("--restarts", type=int, default=50, help="engine restarts (default 50)")
    verify.set_defaults(func=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        return _fail(str(exc))
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except AssignmentDeadlockError as exc:
        print(f"assignment deadlock: {exc}", file=sys.stderr)
        return EXIT_ASSIGNMENT
    except CBCError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
