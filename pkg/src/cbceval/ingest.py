"""Parsing and validation of dataset CSV and constraint-spec JSON files.

Datasets are CSV (first column ``id``, a ``constraints`` column, every other
column a rating attribute in header order). Constraint specs are JSON. All
parse failures raise :class:`ParseError` with a row/field locator; cross-file
consistency problems are collected into a :class:`ValidationReport` instead.
"""

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import DomainError, ParseError
from .model import (
    AttributeSchema,
    Candidate,
    CandidateDataset,
    COMPARATORS,
    ConstraintSpec,
    DEFAULT_SCALE_MAX,
    DEFAULT_SCALE_MIN,
    ExistentialRule,
    UserConstraintSpec,
)

_SPEC_KEYS = (
    "must_link",
    "cannot_link",
    "distance_weights",
    "k",
    "min_cluster_size",
    "max_cluster_size",
    "existential",
    "feasibility_threshold",
    "user_spec",
)

_RULE_KEYS = ("attribute", "op", "threshold", "min_count")

_USER_REQUIRED = (
    "parallel_instances",
    "max_instances",
    "total_work",
    "min_workload_per_instance",
    "budget_per_instance",
    "deadline",
    "budget_class",
)

_USER_OPTIONAL = (
    "task_length",
    "budget_confidence",
    "deadline_confidence",
    "spot_bid",
    "trial_period",
)


@dataclass
class ValidationReport:
    """Bind-time findings; the input is accepted iff ``errors`` is empty."""

    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, locator: str, message: str):
        self.errors.append((locator, message))

    def warn(self, locator: str, message: str):
        self.warnings.append((locator, message))

    def summary(self) -> str:
        lines = [f"{loc}: {msg}" for loc, msg in self.errors]
        lines += [f"{loc}: warning: {msg}" for loc, msg in self.warnings]
        return "\n".join(lines) if lines else "ok"


def parse_dataset(
    csv_text: str,
    *,
    scale_min: float = DEFAULT_SCALE_MIN,
    scale_max: float = DEFAULT_SCALE_MAX,
) -> CandidateDataset:
    """Parse dataset CSV text into a validated :class:`CandidateDataset`.

    Accepts LF or CRLF line endings. Column order defines attribute order,
    so centroid vectors are reproducible from the file alone.
    """
    text = csv_text.lstrip("﻿").replace("\r\n", "\n").replace("\r", "\n")
    try:
        rows = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise ParseError(f"malformed CSV: {exc}") from exc
    rows = [row for row in rows if any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError("missing header", locator="header")
    header = [cell.strip() for cell in rows[0]]
    if not header or header[0].lower() != "id":
        raise ParseError("first column must be 'id'", locator="header")
    constraints_cols = [i for i, name in enumerate(header) if name.lower() == "constraints"]
    if not constraints_cols:
        raise ParseError("missing 'constraints' column", locator="header")
    if len(constraints_cols) > 1:
        raise ParseError("duplicate 'constraints' column", locator="header")
    constraints_col = constraints_cols[0]
    attr_cols = [
        i for i in range(1, len(header)) if i != constraints_col
    ]
    if not attr_cols:
        raise ParseError("dataset needs at least one rating column", locator="header")
    names = []
    for i in attr_cols:
        name = header[i]
        if not name:
            raise ParseError(f"empty attribute name in column {i + 1}", locator="header")
        if name in names:
            raise ParseError(f"duplicate column {name!r}", locator="header")
        names.append(name)

    try:
        schema = AttributeSchema(tuple(names), scale_min=scale_min, scale_max=scale_max)
    except DomainError as exc:
        raise ParseError(str(exc), locator="header") from exc

    candidates = []
    seen_ids = set()
    for line_no, row in enumerate(rows[1:], start=2):
        cells = [cell.strip() for cell in row]
        if len(cells) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(cells)}",
                locator=f"row {line_no}",
            )
        cid = cells[0]
        if not cid:
            raise ParseError("empty id", locator=f"row {line_no}")
        if cid in seen_ids:
            raise ParseError(f"duplicate id {cid}", locator=f"row {line_no}")
        seen_ids.add(cid)

        def _cell(col: int, name: str) -> float:
            raw = cells[col]
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(
                    f"not a number: {raw!r}", locator=f"row {cid}, column {name}"
                ) from None
            if not scale_min <= value <= scale_max:
                raise ParseError(
                    f"rating {raw} out of range [{scale_min:g}, {scale_max:g}]",
                    locator=f"row {cid}, column {name}",
                )
            return value

        ratings = tuple(_cell(i, header[i]) for i in attr_cols)
        constraints_rating = _cell(constraints_col, header[constraints_col])
        candidates.append(Candidate(cid, ratings, constraints_rating))

    return CandidateDataset(schema, tuple(candidates))


def _format_number(value: float) -> str:
    return format(value, ".12g")


def serialize_dataset(dataset: CandidateDataset) -> str:
    """Canonical CSV for a dataset; ``parse_dataset`` round-trips it exactly."""
    lines = [",".join(["id", *dataset.schema.names, "constraints"])]
    for cand in dataset.candidates:
        cells = [cand.id]
        cells += [_format_number(r) for r in cand.ratings]
        cells.append(_format_number(cand.constraints_rating))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _reject_bool(value, locator: str):
    if isinstance(value, bool):
        raise ParseError("expected a number, got a boolean", locator=locator)


def _as_int(value, locator: str) -> int:
    _reject_bool(value, locator)
    if not isinstance(value, int):
        raise ParseError(f"expected an integer, got {value!r}", locator=locator)
    return value


def _as_number(value, locator: str) -> float:
    _reject_bool(value, locator)
    if not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", locator=locator)
    return float(value)


def _parse_pairs(raw, locator: str) -> list[tuple[str, str]]:
    if not isinstance(raw, list):
        raise ParseError("expected an array of id pairs", locator=locator)
    pairs = []
    for i, entry in enumerate(raw):
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(x, str) and x for x in entry)
        ):
            raise ParseError(
                "each pair must be a 2-element array of ids", locator=f"{locator}[{i}]"
            )
        pairs.append((entry[0], entry[1]))
    return pairs


def _parse_rules(raw, locator: str) -> list[ExistentialRule]:
    if not isinstance(raw, list):
        raise ParseError("expected an array of rules", locator=locator)
    rules = []
    for i, entry in enumerate(raw):
        loc = f"{locator}[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("expected a rule object", locator=loc)
        for key in entry:
            if key not in _RULE_KEYS:
                raise ParseError(f"unknown field {key!r}", locator=loc)
        for key in _RULE_KEYS:
            if key not in entry:
                raise ParseError(f"required field {key!r} missing", locator=loc)
        attribute = entry["attribute"]
        if not isinstance(attribute, str) or not attribute:
            raise ParseError("attribute must be a non-empty string", locator=loc)
        op = entry["op"]
        if op not in COMPARATORS:
            raise ParseError(
                f"op must be one of {list(COMPARATORS)}, got {op!r}", locator=loc
            )
        threshold = _as_number(entry["threshold"], f"{loc}.threshold")
        min_count = _as_int(entry["min_count"], f"{loc}.min_count")
        if min_count < 0:
            raise ParseError("min_count must be nonnegative", locator=f"{loc}.min_count")
        rules.append(ExistentialRule(attribute, op, threshold, min_count))
    return rules


def _parse_user_spec(raw, locator: str) -> UserConstraintSpec:
    if not isinstance(raw, dict):
        raise ParseError("expected an object", locator=locator)
    known = set(_USER_REQUIRED) | set(_USER_OPTIONAL)
    for key in raw:
        if key not in known:
            raise ParseError(f"unknown field {key!r}", locator=locator)
    for key in _USER_REQUIRED:
        if key not in raw:
            raise ParseError(f"required field {key!r} missing", locator=locator)
    budget_class = raw["budget_class"]
    if not isinstance(budget_class, str):
        raise ParseError("budget_class must be a string", locator=f"{locator}.budget_class")
    kwargs = {
        "parallel_instances": _as_int(raw["parallel_instances"], f"{locator}.parallel_instances"),
        "max_instances": _as_int(raw["max_instances"], f"{locator}.max_instances"),
        "total_work": _as_number(raw["total_work"], f"{locator}.total_work"),
        "min_workload_per_instance": _as_number(
            raw["min_workload_per_instance"], f"{locator}.min_workload_per_instance"
        ),
        "budget_per_instance": _as_number(
            raw["budget_per_instance"], f"{locator}.budget_per_instance"
        ),
        "deadline": _as_number(raw["deadline"], f"{locator}.deadline"),
        "budget_class": budget_class,
    }
    for key in _USER_OPTIONAL:
        if key in raw:
            kwargs[key] = _as_number(raw[key], f"{locator}.{key}")
    try:
        return UserConstraintSpec(**kwargs)
    except DomainError as exc:
        raise ParseError(str(exc), locator=locator) from exc


def parse_constraint_spec(json_text: str) -> ConstraintSpec:
    """Parse constraint-spec JSON into a :class:`ConstraintSpec`.

    Unknown fields are rejected. Omitted optional fields stay absent; the
    feasibility threshold alone defaults (to the default-scale midpoint 5.5).
    """
    try:
        data = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object")
    for key in data:
        if key not in _SPEC_KEYS:
            raise ParseError(f"unknown field {key!r}")

    kwargs: dict = {}
    if "must_link" in data:
        kwargs["must_link"] = _parse_pairs(data["must_link"], "must_link")
    if "cannot_link" in data:
        kwargs["cannot_link"] = _parse_pairs(data["cannot_link"], "cannot_link")
    if "distance_weights" in data:
        raw = data["distance_weights"]
        if not isinstance(raw, dict):
            raise ParseError("expected an object", locator="distance_weights")
        kwargs["distance_weights"] = {
            name: _as_number(v, f"distance_weights.{name}") for name, v in raw.items()
        }
    for key in ("k", "min_cluster_size", "max_cluster_size"):
        if key in data:
            value = _as_int(data[key], key)
            if value < 0:
                raise ParseError("must be nonnegative", locator=key)
            kwargs[key] = value
    if "existential" in data:
        kwargs["existential"] = tuple(_parse_rules(data["existential"], "existential"))
    if "feasibility_threshold" in data:
        kwargs["feasibility_threshold"] = _as_number(
            data["feasibility_threshold"], "feasibility_threshold"
        )
    if "user_spec" in data:
        kwargs["user_spec"] = _parse_user_spec(data["user_spec"], "user_spec")

    try:
        return ConstraintSpec(**kwargs)
    except DomainError as exc:
        raise ParseError(str(exc)) from exc


def constraint_spec_to_dict(spec: ConstraintSpec) -> dict:
    """JSON-ready dict mirroring the parse format (absent fields omitted)."""
    out: dict = {}
    if spec.must_link:
        out["must_link"] = [list(p) for p in spec.must_link]
    if spec.cannot_link:
        out["cannot_link"] = [list(p) for p in spec.cannot_link]
    if spec.distance_weights is not None:
        out["distance_weights"] = dict(sorted(spec.distance_weights.items()))
    for key in ("k", "min_cluster_size", "max_cluster_size"):
        value = getattr(spec, key)
        if value is not None:
            out[key] = value
    if spec.existential:
        out["existential"] = [
            {
                "attribute": r.attribute,
                "op": r.op,
                "threshold": r.threshold,
                "min_count": r.min_count,
            }
            for r in spec.existential
        ]
    out["feasibility_threshold"] = spec.feasibility_threshold
    if spec.user_spec is not None:
        user: dict = {}
        for key in (*_USER_REQUIRED, *_USER_OPTIONAL):
            value = getattr(spec.user_spec, key)
            if value is not None:
                user[key] = value
        out["user_spec"] = user
    return out


def serialize_constraint_spec(spec: ConstraintSpec) -> str:
    return json.dumps(constraint_spec_to_dict(spec), indent=2) + "\n"


def bind_and_validate(dataset: CandidateDataset, spec: ConstraintSpec) -> ValidationReport:
    """Cross-check a parsed spec against a parsed dataset.

    Collects every failure rather than stopping at the first.
    """
    report = ValidationReport()
    ids = set(dataset.ids())
    names = set(dataset.schema.names)

    for label in ("must_link", "cannot_link"):
        for i, (a, b) in enumerate(getattr(spec, label)):
            for cid in (a, b):
                if cid not in ids:
                    report.error(f"{label}[{i}]", f"unknown id {cid}")

    if spec.distance_weights is not None:
        for name in spec.distance_weights:
            if name not in names:
                report.error("distance_weights", f"unknown attribute {name!r}")

    for i, rule in enumerate(spec.existential):
        if rule.attribute not in names:
            report.error(f"existential[{i}]", f"unknown attribute {rule.attribute!r}")
        if rule.min_count == 0:
            report.warn(f"existential[{i}]", "min_count 0 makes the rule vacuous")

    if spec.k is not None and spec.k > len(dataset):
        report.error("k", "k exceeds candidate count")

    scale = (dataset.schema.scale_min, dataset.schema.scale_max)
    if not scale[0] <= spec.feasibility_threshold <= scale[1]:
        report.error(
            "feasibility_threshold",
            f"threshold {spec.feasibility_threshold:g} outside rating scale "
            f"[{scale[0]:g}, {scale[1]:g}]",
        )

    return report
