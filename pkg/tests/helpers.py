"""Shared generators and fixtures for the test suite."""

import random

from cbceval.model import (
    AttributeSchema,
    Candidate,
    CandidateDataset,
    ConstraintSpec,
    ExistentialRule,
)

SAMPLE_ROWS = {
    "T100": ((2, 2, 4, 2, 3, 5), 6),
    "T101": ((3, 5, 3, 3, 4, 4), 7),
    "T102": ((4, 4, 2, 4, 5, 8), 3),
    "T103": ((5, 5, 5, 4, 5, 2), 9),
    "T104": ((2, 3, 4, 5, 4, 5), 5),
    "T105": ((3, 2, 3, 5, 3, 3), 6),
    "T106": ((4, 4, 2, 4, 2, 4), 7),
    "T107": ((5, 5, 2, 4, 1, 5), 6),
    "T108": ((5, 5, 3, 3, 1, 5), 5),
    "T109": ((4, 3, 4, 3, 3, 4), 4),
}

FEASIBLE_AT_6 = ["T100", "T101", "T103", "T105", "T106", "T107"]
INFEASIBLE_AT_6 = ["T102", "T104", "T108", "T109"]


def random_dataset(rng: random.Random, n: int, d: int = 3) -> CandidateDataset:
    schema = AttributeSchema(tuple(f"f{i}" for i in range(d)))
    candidates = tuple(
        Candidate(
            f"C{i:03d}",
            tuple(float(rng.randint(1, 10)) for _ in range(d)),
            float(rng.randint(1, 10)),
        )
        for i in range(n)
    )
    return CandidateDataset(schema, candidates)


def random_pairs(rng: random.Random, ids, count: int):
    """Distinct unordered id pairs, at most count of them."""
    pool = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]
    rng.shuffle(pool)
    return pool[:count]


def random_constraint_spec(
    rng: random.Random,
    dataset: CandidateDataset,
    *,
    links: bool = True,
    sizes: bool = True,
    rules: bool = False,
    tau: float | None = None,
) -> ConstraintSpec:
    ids = list(dataset.ids())
    n = len(ids)
    kwargs: dict = {}
    if links and n >= 2:
        pairs = random_pairs(rng, ids, rng.randint(0, min(4, n)))
        split = rng.randint(0, len(pairs))
        kwargs["must_link"] = pairs[:split]
        kwargs["cannot_link"] = pairs[split:]
    if sizes and rng.random() < 0.6:
        if rng.random() < 0.5:
            kwargs["min_cluster_size"] = rng.randint(0, max(1, n // 2))
        if rng.random() < 0.5:
            low = kwargs.get("min_cluster_size", 0)
            kwargs["max_cluster_size"] = rng.randint(max(low, 1), n + 1)
    if rules and rng.random() < 0.6:
        attr = rng.choice(dataset.schema.names)
        op = rng.choice((">=", "<=", ">", "<"))
        kwargs["existential"] = [
            ExistentialRule(attr, op, float(rng.randint(1, 10)), rng.randint(0, n))
        ]
    kwargs["feasibility_threshold"] = (
        tau if tau is not None else float(rng.randint(1, 10))
    )
    return ConstraintSpec(**kwargs)


def assignment_satisfies(assignment: dict, spec: ConstraintSpec, k: int) -> list[str]:
    """List of constraint violations in an assignment (empty means clean)."""
    problems = []
    for a, b in spec.must_link:
        if assignment[a] != assignment[b]:
            problems.append(f"must_link ({a}, {b}) split")
    for a, b in spec.cannot_link:
        if assignment[a] == assignment[b]:
            problems.append(f"cannot_link ({a}, {b}) co-assigned")
    counts = [0] * k
    for label in assignment.values():
        counts[label] += 1
    if spec.min_cluster_size:
        for j, c in enumerate(counts):
            if c < spec.min_cluster_size:
                problems.append(f"cluster {j} below min size: {c}")
    if spec.max_cluster_size is not None:
        for j, c in enumerate(counts):
            if c > spec.max_cluster_size:
                problems.append(f"cluster {j} above max size: {c}")
    return problems
