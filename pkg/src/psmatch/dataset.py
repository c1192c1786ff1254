"""Unit-level data: CSV loading, validation, and matched-dataset export.

The input contract is strict: the treatment column must be binary 0/1 with
at least one unit in each group, and every cell of the treatment, covariate,
and balance-only columns must parse as a finite number.  A file that
violates the contract is rejected as a whole; there is no listwise
deletion, so users must impute missing data upstream.

Columns not named in the role mapping are carried through untouched as
opaque strings (outcomes typically live there).  Exported files append the
reserved columns ``_ps``, ``_logit_ps``, ``_weight``, ``_matched``; input
covariates may not use those names.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateColumn,
    EmptyGroup,
    InputError,
    MissingValue,
    NonBinaryTreatment,
    UnknownColumn,
)

RESERVED_COLUMNS = ("_ps", "_logit_ps", "_weight", "_matched")


def _fmt17(x: float) -> str:
    """Format a float with 17 significant digits (lossless round trip)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ColumnRoles:
    """Maps file columns to their roles in the analysis.

    Attributes:
        treatment: name of the binary 0/1 treatment column.
        covariates: columns used to estimate the propensity score.
        balance_only: columns checked for balance but excluded from
            estimation.
        unit_id: optional id column; when absent, 1-based row numbers
            are used as ids.
    """

    treatment: str
    covariates: tuple[str, ...]
    balance_only: tuple[str, ...] = ()
    unit_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "balance_only", tuple(self.balance_only))


@dataclass(frozen=True)
class Dataset:
    """Validated, immutable table of units.

    Covariate and balance-only columns are float matrices with one row per
    unit; ``extra`` holds passthrough columns as raw strings keyed by name.
    ``column_order`` preserves the input header order for export.
    """

    unit_ids: tuple[str, ...]
    treatment: np.ndarray
    covariate_names: tuple[str, ...]
    covariates: np.ndarray
    balance_names: tuple[str, ...] = ()
    balance_only: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    extra: dict[str, tuple[str, ...]] = field(default_factory=dict)
    treatment_name: str = "treatment"
    id_name: str | None = None
    column_order: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.unit_ids)
        treatment = np.asarray(self.treatment)
        if treatment.shape != (n,):
            raise InputError("treatment length does not match unit count")
        values = set(np.unique(treatment).tolist())
        if not values <= {0, 1}:
            bad = sorted(values - {0, 1})[0]
            raise NonBinaryTreatment(bad)
        if 1 not in values or 0 not in values:
            raise EmptyGroup("need at least one treated and one control unit")
        object.__setattr__(self, "treatment", treatment.astype(np.int64))

        covariates = np.asarray(self.covariates, dtype=float)
        if covariates.size == 0:
            covariates = covariates.reshape(n, 0)
        balance = np.asarray(self.balance_only, dtype=float)
        if balance.size == 0:
            balance = balance.reshape(n, 0)
        if covariates.shape[0] != n or balance.shape[0] != n:
            raise InputError("column lengths do not match unit count")
        if not np.all(np.isfinite(covariates)) or not np.all(np.isfinite(balance)):
            raise InputError("covariate columns contain non-finite values")
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "balance_only", balance)
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        object.__setattr__(self, "balance_names", tuple(self.balance_names))
        object.__setattr__(self, "unit_ids", tuple(self.unit_ids))

        named = [self.treatment_name, *self.covariate_names, *self.balance_names]
        if self.id_name is not None:
            named.append(self.id_name)
        named.extend(self.extra.keys())
        seen = set()
        for name in named:
            if name in seen:
                raise DuplicateColumn(f"column '{name}' has more than one role or appears twice")
            seen.add(name)
        for name in (*self.covariate_names, *self.balance_names):
            if name in RESERVED_COLUMNS:
                raise DuplicateColumn(f"column '{name}' collides with a reserved output column")
        if len(self.covariate_names) != covariates.shape[1]:
            raise InputError("covariate name count does not match column count")
        if len(self.balance_names) != balance.shape[1]:
            raise InputError("balance-only name count does not match column count")

        if not self.column_order:
            order = [] if self.id_name is None else [self.id_name]
            order.append(self.treatment_name)
            order.extend(self.covariate_names)
            order.extend(self.balance_names)
            order.extend(self.extra.keys())
            object.__setattr__(self, "column_order", tuple(order))

        self.treatment.setflags(write=False)
        self.covariates.setflags(write=False)
        self.balance_only.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    @property
    def treated_mask(self) -> np.ndarray:
        return self.treatment == 1

    @property
    def control_mask(self) -> np.ndarray:
        return self.treatment == 0

    @property
    def n_treated(self) -> int:
        return int(np.sum(self.treatment == 1))

    @property
    def n_control(self) -> int:
        return int(np.sum(self.treatment == 0))

    def column(self, name: str) -> np.ndarray:
        """Return a covariate or balance-only column by name."""
        if name in self.covariate_names:
            return self.covariates[:, self.covariate_names.index(name)]
        if name in self.balance_names:
            return self.balance_only[:, self.balance_names.index(name)]
        raise UnknownColumn(name)

    def numeric_extra(self, name: str) -> np.ndarray:
        """Parse a passthrough column as floats (for outcome summaries)."""
        if name not in self.extra:
            raise UnknownColumn(name)
        out = np.empty(self.n)
        for i, cell in enumerate(self.extra[name]):
            try:
                v = float(cell)
            except ValueError:
                raise MissingValue(i + 1, name) from None
            if not math.isfinite(v):
                raise MissingValue(i + 1, name)
            out[i] = v
        return out


def _parse_cell(cell: str, row: int, column: str) -> float:
    text = cell.strip()
    if not text:
        raise MissingValue(row, column)
    try:
        value = float(text)
    except ValueError:
        raise MissingValue(row, column) from None
    if not math.isfinite(value):
        raise MissingValue(row, column)
    return value


def load_csv(path, roles: ColumnRoles) -> Dataset:
    """Load and validate a comma-separated file under the given role mapping.

    The header row is mandatory.  Raises :class:`MissingValue` (naming the
    1-based data row and the column) on any empty or non-numeric required
    cell, :class:`NonBinaryTreatment` when the treatment column has a value
    outside {0, 1}, :class:`EmptyGroup` when either group is empty, and
    :class:`DuplicateColumn` on repeated header names.  Row order is
    preserved.
    """
    if not roles.covariates:
        raise InputError("at least one covariate column is required")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    seen = set()
    for name in header:
        if name in seen:
            raise DuplicateColumn(f"column '{name}' appears twice in the header")
        seen.add(name)
    index = {name: i for i, name in enumerate(header)}

    wanted = [roles.treatment, *roles.covariates, *roles.balance_only]
    if roles.unit_id is not None:
        wanted.append(roles.unit_id)
    for name in wanted:
        if name not in index:
            raise UnknownColumn(name)

    role_names = {roles.treatment, *roles.covariates, *roles.balance_only}
    if roles.unit_id is not None:
        role_names.add(roles.unit_id)
    extra_names = [name for name in header if name not in role_names]

    n = len(rows)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            short = min(len(row), len(header))
            raise MissingValue(r + 1, header[short] if len(row) < len(header) else header[-1])

    treatment = np.empty(n, dtype=np.int64)
    t_col = index[roles.treatment]
    for r, row in enumerate(rows):
        value = _parse_cell(row[t_col], r + 1, roles.treatment)
        if value not in (0.0, 1.0):
            raise NonBinaryTreatment(int(value) if value.is_integer() else value)
        treatment[r] = int(value)

    def parse_block(names: tuple[str, ...]) -> np.ndarray:
        block = np.empty((n, len(names)))
        for j, name in enumerate(names):
            col = index[name]
            for r, row in enumerate(rows):
                block[r, j] = _parse_cell(row[col], r + 1, name)
        return block

    covariates = parse_block(roles.covariates)
    balance = parse_block(roles.balance_only)

    if roles.unit_id is not None:
        ids = tuple(row[index[roles.unit_id]] for row in rows)
    else:
        ids = tuple(str(r + 1) for r in range(n))

    extra = {name: tuple(row[index[name]] for row in rows) for name in extra_names}

    return Dataset(
        unit_ids=ids,
        treatment=treatment,
        covariate_names=roles.covariates,
        covariates=covariates,
        balance_names=roles.balance_only,
        balance_only=balance,
        extra=extra,
        treatment_name=roles.treatment,
        id_name=roles.unit_id,
        column_order=tuple(header),
    )


def _column_plan(ds: Dataset, skip: tuple[str, ...] = ()) -> list[tuple[str, str, object]]:
    plan: list[tuple[str, str, object]] = []
    for name in ds.column_order:
        if name in skip:
            continue
        if ds.id_name is not None and name == ds.id_name:
            plan.append((name, "id", None))
        elif name == ds.treatment_name:
            plan.append((name, "treatment", None))
        elif name in ds.covariate_names:
            plan.append((name, "covariate", ds.covariate_names.index(name)))
        elif name in ds.balance_names:
            plan.append((name, "balance", ds.balance_names.index(name)))
        else:
            plan.append((name, "extra", name))
    return plan


def _row_values(ds: Dataset, i: int, plan) -> list[str]:
    row = []
    for _, kind, key in plan:
        if kind == "id":
            row.append(ds.unit_ids[i])
        elif kind == "treatment":
            row.append(str(int(ds.treatment[i])))
        elif kind == "covariate":
            row.append(_fmt17(ds.covariates[i, key]))
        elif kind == "balance":
            row.append(_fmt17(ds.balance_only[i, key]))
        else:
            row.append(ds.extra[key][i])
    return row


def write_csv(ds: Dataset, path) -> None:
    """Write the dataset as-is (no appended analysis columns)."""
    plan = _column_plan(ds)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([name for name, _, _ in plan])
        for i in range(ds.n):
            writer.writerow(_row_values(ds, i, plan))


def export(ds: Dataset, model, result, mode: str, path) -> None:
    """Write the dataset with appended scores, weights, and match flags.

    ``mode`` is ``"full"`` (all rows) or ``"matched_only"`` (rows with
    positive weight).  Output keeps the input column order, then appends
    ``_ps``, ``_logit_ps``, ``_weight``, ``_matched``.  Floats are written
    with 17 significant digits so a reload reproduces them exactly.
    """
    if mode not in ("full", "matched_only"):
        raise InputError(f"unknown export mode '{mode}'")

    # Stale reserved columns from a previously exported file are replaced
    # by the freshly appended block, never duplicated.
    plan = _column_plan(ds, skip=RESERVED_COLUMNS)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([name for name, _, _ in plan] + list(RESERVED_COLUMNS))
        for i in range(ds.n):
            weight = float(result.weights[i])
            if mode == "matched_only" and not weight > 0.0:
                continue
            row = _row_values(ds, i, plan)
            row.append(_fmt17(model.scores[i]))
            row.append(_fmt17(model.logits[i]))
            row.append(_fmt17(weight))
            row.append("1" if weight > 0.0 else "0")
            writer.writerow(row)
