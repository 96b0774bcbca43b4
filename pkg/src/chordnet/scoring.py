"""Dirichlet marginal-likelihood scores, score tables and score files."""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.special import gammaln

from .dataset import ContingencyTable, Dataset, contingency
from .errors import InputError, MissingScoreError, ScoreFileError
from .nodeset import MAX_VARIABLES, NodeSet, all_subsets, canonical_key

DEFAULT_PSEUDOCOUNT = 0.5
DEFAULT_SCALE = 1000
# WCNF weights are read as signed 64-bit integers by most solvers
INT_LIMIT = 2**62


@dataclass(frozen=True)
class PriorSpec:
    """Symmetric Dirichlet prior: every cell gets ``per_cell_pseudocount``."""

    per_cell_pseudocount: float = DEFAULT_PSEUDOCOUNT

    def __post_init__(self) -> None:
        if not (self.per_cell_pseudocount > 0 and math.isfinite(self.per_cell_pseudocount)):
            raise InputError(
                f"pseudocount must be positive, got {self.per_cell_pseudocount}"
            )


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Log marginal likelihood v(a) for every nonempty subset up to the cap."""

    n_vars: int
    entries: Dict[NodeSet, float]
    max_subset_size: int

    def __getitem__(self, subset: NodeSet) -> float:
        try:
            return self.entries[subset]
        except KeyError:
            raise MissingScoreError(f"no score for subset {subset}")

    def __contains__(self, subset: object) -> bool:
        return subset in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScoreTable):
            return NotImplemented
        return (
            self.n_vars == other.n_vars
            and self.max_subset_size == other.max_subset_size
            and self.entries == other.entries
        )

    def subsets(self) -> List[NodeSet]:
        """Entries' subsets in canonical (size, lexicographic) order."""
        return sorted(self.entries, key=canonical_key)


@dataclass(frozen=True, eq=False)
class IntScoreTable:
    """Scores multiplied by ``scale_factor`` and rounded half away from zero."""

    n_vars: int
    entries: Dict[NodeSet, int]
    scale_factor: int
    max_subset_size: int

    def __getitem__(self, subset: NodeSet) -> int:
        try:
            return self.entries[subset]
        except KeyError:
            raise MissingScoreError(f"no score for subset {subset}")

    def __contains__(self, subset: object) -> bool:
        return subset in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def subsets(self) -> List[NodeSet]:
        return sorted(self.entries, key=canonical_key)


AnyScoreTable = Union[ScoreTable, IntScoreTable]


def log_marginal(table: ContingencyTable, prior: PriorSpec) -> float:
    """Log of the Dirichlet-multinomial marginal likelihood of one contingency table.

    log P = lnΓ(α) − lnΓ(n+α) + Σ_j [lnΓ(n_j+α_j) − lnΓ(α_j)], with α_j = α_cell
    and α = k·α_cell. Computed in log-gamma space only.
    """
    alpha_cell = prior.per_cell_pseudocount
    if not alpha_cell > 0:
        raise InputError(f"pseudocount must be positive, got {alpha_cell}")

    counts = np.asarray(table.cells, dtype=np.float64)
    alpha = alpha_cell * counts.size
    total = float(counts.sum())

    result = float(
        gammaln(alpha) - gammaln(total + alpha)
        + np.sum(gammaln(counts + alpha_cell) - gammaln(alpha_cell))
    )
    if not math.isfinite(result):
        raise InputError(f"non-finite score for subset {table.subset}")
    # exact zero for tables without observations, and no positive rounding noise
    return min(result, 0.0) if total else 0.0


def _score_subsets(
    dataset: Dataset, subsets: Sequence[NodeSet], pseudocount: float
) -> List[float]:
    prior = PriorSpec(pseudocount)
    return [log_marginal(contingency(dataset, s), prior) for s in subsets]


def build_score_table(
    dataset: Dataset,
    prior: PriorSpec,
    max_subset_size: Optional[int] = None,
    workers: int = 1,
) -> ScoreTable:
    """Score every nonempty subset of the dataset's variables up to the cap.

    Args:
        dataset: Categorical data
        prior: Dirichlet prior
        max_subset_size: Largest subset scored (default: all variables)
        workers: Worker processes; subsets are partitioned into chunks

    Returns:
        ScoreTable with Σ_{k≤cap} C(n,k) entries
    """
    n = dataset.n_vars
    if n > MAX_VARIABLES:
        raise InputError(f"{n} variables exceed the limit of {MAX_VARIABLES}")
    if n < 1:
        raise InputError("dataset has no variables")
    cap = n if max_subset_size is None else max_subset_size
    if cap < 1:
        raise InputError("max_subset_size must be at least 1")
    cap = min(cap, n)

    subsets = list(all_subsets(n, cap))
    pseudocount = prior.per_cell_pseudocount

    if workers <= 1 or len(subsets) < 64:
        scores = _score_subsets(dataset, subsets, pseudocount)
    else:
        chunk = math.ceil(len(subsets) / (workers * 4))
        parts = [subsets[i:i + chunk] for i in range(0, len(subsets), chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(
                _score_subsets, [dataset] * len(parts), parts, [pseudocount] * len(parts)
            )
            scores = [s for part in results for s in part]

    return ScoreTable(n_vars=n, entries=dict(zip(subsets, scores)), max_subset_size=cap)


def network_score(
    table: AnyScoreTable,
    cliques: Iterable[NodeSet],
    separators: Iterable[NodeSet],
) -> Union[float, int]:
    """Σ_c v(c) − Σ_s v(s); separators count with multiplicity.

    Integer tables give exact integer sums.

    Raises:
        MissingScoreError when a clique or separator has no entry
    """
    plus = [table[tuple(c)] for c in cliques]
    minus = [table[tuple(s)] for s in separators]
    if isinstance(table, IntScoreTable):
        return sum(plus) - sum(minus)
    return math.fsum(plus + [-m for m in minus])


def round_half_away(value: float) -> int:
    magnitude = abs(value)
    whole = math.floor(magnitude)
    rounded = whole + (1 if magnitude - whole >= 0.5 else 0)
    return -rounded if value < 0 else rounded



def integer_scale(table: ScoreTable, factor: int = DEFAULT_SCALE) -> IntScoreTable:
    """Scale every entry by ``factor`` and round half away from zero.

    Raises:
        InputError when ``factor`` < 1 or an entry overflows the 64-bit range
    """
    if factor < 1:
        raise InputError(f"scale factor must be ≥ 1, got {factor}")

    entries: Dict[NodeSet, int] = {}
    for subset, value in table.entries.items():
        scaled = value * factor
        if not math.isfinite(scaled) or abs(scaled) >= INT_LIMIT:
            raise InputError(f"scaled score of {subset} overflows: {value} × {factor}")
        entries[subset] = round_half_away(scaled)

    return IntScoreTable(
        n_vars=table.n_vars,
        entries=entries,
        scale_factor=factor,
        max_subset_size=table.max_subset_size,
    )


def format_score(value: float) -> str:
    """Shortest fixed-point rendering with ≥ 6 fractional digits that round-trips."""
    if not math.isfinite(value):
        raise InputError(f"cannot write non-finite score {value}")
    for digits in range(6, 400):
        text = f"{value:.{digits}f}"
        if float(text).hex() == value.hex():
            return text
    return repr(value)


def write_score_file(table: ScoreTable) -> str:
    """Render a score table: n_vars, entry count, then ``<score> <k> <i_1> … <i_k>``."""
    lines = [str(table.n_vars), str(len(table))]
    for subset in table.subsets():
        fields = [format_score(table.entries[subset]), str(len(subset))]
        fields.extend(str(i) for i in subset)
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def _parse_int(token: str, what: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ScoreFileError(f"{what} must be an integer, got {token!r}", line=line)


def read_score_file(text: str) -> ScoreTable:
    """Parse a score file written by ``write_score_file``.

    Raises:
        ScoreFileError on malformed lines, duplicates, out-of-range subsets,
        count mismatches or missing subsets
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [line.rstrip("\r") for line in lines]
    if len(lines) < 2:
        raise ScoreFileError("missing header lines", line=len(lines) + 1)

    n_vars = _parse_int(lines[0].strip(), "variable count", 1)
    if not 1 <= n_vars <= MAX_VARIABLES:
        raise ScoreFileError(f"variable count {n_vars} out of range", line=1)
    count = _parse_int(lines[1].strip(), "entry count", 2)
    if count != len(lines) - 2:
        raise ScoreFileError(
            f"header announces {count} entries, file has {len(lines) - 2}", line=2
        )

    entries: Dict[NodeSet, float] = {}
    for lineno, line in enumerate(lines[2:], start=3):
        tokens = line.split()
        if len(tokens) < 3:
            raise ScoreFileError("expected '<score> <k> <indices…>'", line=lineno)
        try:
            score = float(tokens[0])
        except ValueError:
            raise ScoreFileError(f"bad score {tokens[0]!r}", line=lineno)
        if not math.isfinite(score):
            raise ScoreFileError("score must be finite", line=lineno)
        k = _parse_int(tokens[1], "subset size", lineno)
        if k < 1 or len(tokens) - 2 != k:
            raise ScoreFileError(
                f"subset size {k} does not match {len(tokens) - 2} listed indices",
                line=lineno,
            )
        members = [_parse_int(t, "index", lineno) for t in tokens[2:]]
        if any(i < 0 or i >= n_vars for i in members):
            raise ScoreFileError(f"subset {members} out of range", line=lineno)
        if any(a >= b for a, b in zip(members, members[1:])):
            raise ScoreFileError(f"indices {members} not strictly ascending", line=lineno)
        subset = tuple(members)
        if subset in entries:
            raise ScoreFileError(f"duplicate subset {members}", line=lineno)
        entries[subset] = score

    if not entries:
        raise ScoreFileError("score file has no entries", line=2)
    cap = max(len(s) for s in entries)
    expected = sum(math.comb(n_vars, k) for k in range(1, cap + 1))
    if len(entries) != expected:
        missing = next(s for s in all_subsets(n_vars, cap) if s not in entries)
        raise ScoreFileError(f"incomplete table: no entry for subset {list(missing)}")

    return ScoreTable(n_vars=n_vars, entries=entries, max_subset_size=cap)


def load_score_file(path: Union[str, Path]) -> ScoreTable:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InputError(f"cannot read score file {path}: {e}")
    return read_score_file(text)


def candidate_counts(n_vars: int, cap: Optional[int] = None) -> Mapping[str, int]:
    """Scored candidates versus all subsets including the empty set."""
    limit = n_vars if cap is None else min(cap, n_vars)
    return {
        "scored": sum(math.comb(n_vars, k) for k in range(1, limit + 1)),
        "all_subsets": 2 ** n_vars,
    }
