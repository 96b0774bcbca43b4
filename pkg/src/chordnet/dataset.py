"""Categorical datasets and marginal contingency tables."""

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DatasetError, InputError
from .nodeset import NodeSet

if TYPE_CHECKING:
    from .chordal import Graph


@dataclass(frozen=True)
class VariableSpec:
    """A categorical random variable."""

    name: str
    arity: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Complete categorical data: one row per observation, one column per variable.

    ``rows`` is a read-only int64 array of shape (row_count, len(variables)).
    """

    variables: Tuple[VariableSpec, ...]
    rows: np.ndarray

    @property
    def row_count(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def arities(self) -> Tuple[int, ...]:
        return tuple(v.arity for v in self.variables)

    def take_rows(self, index: Union[Sequence[int], np.ndarray]) -> "Dataset":
        """Dataset restricted to (or reordered by) the given row indices."""
        return make_dataset(self.variables, self.rows[np.asarray(index, dtype=np.int64)])


@dataclass(frozen=True)
class ContingencyTable:
    """Counts n_a^(j) over the joint outcomes of ``subset``.

    ``cells`` is row-major over the subset members in ascending index order,
    last member fastest.
    """

    subset: NodeSet
    shape: Tuple[int, ...]
    cells: Tuple[int, ...]
    total: int


def make_dataset(variables: Sequence[VariableSpec], rows: np.ndarray) -> Dataset:
    """Validate and freeze a dataset."""
    variables = tuple(variables)
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise DatasetError(f"duplicate variable names: {names}")
    for v in variables:
        if v.arity < 2:
            raise DatasetError(f"variable {v.name!r} has arity {v.arity} < 2")

    data = np.array(rows, dtype=np.int64, copy=True).reshape(-1, len(variables))
    if data.size:
        if data.min() < 0:
            raise DatasetError("negative values are not allowed")
        limits = np.array([v.arity for v in variables], dtype=np.int64)
        bad = np.argwhere(data >= limits)
        if bad.size:
            r, c = (int(x) for x in bad[0])
            raise DatasetError(
                f"value {int(data[r, c])} ≥ arity {variables[c].arity} "
                f"of variable {variables[c].name!r}",
                line=r + 2,
            )
    data.flags.writeable = False
    return Dataset(variables=variables, rows=data)


def load_dataset(csv_text: str, arities: Optional[Mapping[str, int]] = None) -> Dataset:
    """Parse a header-plus-integers CSV into a Dataset.

    Args:
        csv_text: UTF-8 text, one header line of names, then comma-separated
            nonnegative integers (LF or CRLF)
        arities: Optional arity declarations by variable name; undeclared
            variables get max observed value + 1, floored at 2

    Returns:
        Validated Dataset

    Raises:
        DatasetError with a 1-based line number
    """
    lines = csv_text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or not lines[0].strip():
        raise DatasetError("empty header", line=1)

    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = [name.strip() for name in next(reader)]
    if any(not name for name in header):
        raise DatasetError("empty variable name in header", line=1)
    if len(set(header)) != len(header):
        raise DatasetError("duplicate variable names in header", line=1)

    width = len(header)
    parsed = []
    for lineno, record in enumerate(reader, start=2):
        if not record or (len(record) == 1 and not record[0].strip()):
            raise DatasetError("blank row (missing values are not supported)", line=lineno)
        if len(record) != width:
            raise DatasetError(f"expected {width} fields, found {len(record)}", line=lineno)
        row = []
        for name, cell in zip(header, record):
            text = cell.strip()
            if not (text.isascii() and text.isdigit()):
                raise DatasetError(
                    f"non-integer value {cell!r} for variable {name!r}", line=lineno
                )
            row.append(int(text))
        parsed.append(row)

    data = np.array(parsed, dtype=np.int64).reshape(-1, width)

    declared = dict(arities or {})
    unknown = set(declared) - set(header)
    if unknown:
        raise InputError(f"arity declared for unknown variables: {sorted(unknown)}")

    variables = []
    for col, name in enumerate(header):
        if name in declared:
            arity = int(declared[name])
            if arity < 2:
                raise InputError(f"declared arity of {name!r} must be ≥ 2")
            if data.shape[0]:
                over = np.nonzero(data[:, col] >= arity)[0]
                if over.size:
                    r = int(over[0])
                    raise DatasetError(
                        f"value {int(data[r, col])} ≥ arity {arity} of variable {name!r}",
                        line=r + 2,
                    )
        else:
            observed = int(data[:, col].max()) + 1 if data.shape[0] else 0
            arity = max(2, observed)
        variables.append(VariableSpec(name=name, arity=arity))

    return make_dataset(variables, data)


def load_dataset_file(
    path: Union[str, Path], arities: Optional[Mapping[str, int]] = None
) -> Dataset:
    """Read and parse a CSV dataset file."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InputError(f"cannot read dataset {path}: {e}")
    return load_dataset(text, arities)


def contingency(dataset: Dataset, subset: NodeSet) -> ContingencyTable:
    """Count joint outcomes of the variables in ``subset``.

    Raises:
        InputError for an empty subset or an index out of range
    """
    if not subset:
        raise InputError("contingency table needs a nonempty subset")
    members = tuple(sorted(subset))
    if len(set(members)) != len(members):
        raise InputError(f"duplicate indices in subset {subset}")
    if members[0] < 0 or members[-1] >= dataset.n_vars:
        raise InputError(f"subset {subset} out of range for {dataset.n_vars} variables")

    shape = tuple(dataset.variables[i].arity for i in members)
    size = int(np.prod(shape))
    if dataset.row_count:
        columns = dataset.rows[:, list(members)]
        flat = np.ravel_multi_index(tuple(columns.T), shape)
        counts = np.bincount(flat, minlength=size)
    else:
        counts = np.zeros(size, dtype=np.int64)

    return ContingencyTable(
        subset=members,
        shape=shape,
        cells=tuple(int(c) for c in counts),
        total=dataset.row_count,
    )


def sample_dataset(
    graph: "Graph",
    rows: int,
    seed: int = 0,
    arity: int = 2,
    copy_probability: float = 0.8,
    names: Optional[Sequence[str]] = None,
) -> Dataset:
    """Draw synthetic categorical data whose dependencies follow ``graph``.

    Variables are visited in reverse perfect elimination order; each takes the
    value of a random already-sampled neighbor with ``copy_probability`` and a
    uniform value otherwise.
    """
    from .chordal import is_chordal

    chordal, peo = is_chordal(graph)
    if not chordal or peo is None:
        raise InputError("synthetic data needs a chordal dependency graph")
    if arity < 2:
        raise InputError("arity must be at least 2")

    rng = np.random.default_rng(seed)
    n = graph.n
    data = np.zeros((rows, n), dtype=np.int64)
    adjacency = graph.adjacency()
    sampled: list = []
    for v in reversed(peo):
        parents = [u for u in sampled if u in adjacency[v]]
        uniform = rng.integers(0, arity, size=rows)
        if parents:
            source = rng.choice(parents, size=rows)
            copied = data[np.arange(rows), source]
            keep = rng.random(rows) < copy_probability
            data[:, v] = np.where(keep, copied, uniform)
        else:
            data[:, v] = uniform
        sampled.append(v)

    labels = list(names) if names is not None else [f"x{i}" for i in range(n)]
    if len(labels) != n:
        raise InputError("one name per variable is required")
    return make_dataset([VariableSpec(name, arity) for name in labels], data)


def dataset_to_csv(dataset: Dataset) -> str:
    """Serialize a dataset in the loader's CSV format."""
    lines = [",".join(dataset.names)]
    lines.extend(",".join(str(int(v)) for v in row) for row in dataset.rows)
    return "\n".join(lines) + "\n"
