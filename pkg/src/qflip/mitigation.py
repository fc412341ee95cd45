"""Error mitigation and scoring.

Mitigation inverts the depth-m prediction matrix on each circuit's
empirical distribution and projects back onto the simplex. The classical
readout-calibration baseline (depth-0 confusion matrix, MEM) is built from
gate-free records. Quality is scored with the Jensen-Shannon divergence
in bits against the ideal output of an identity circuit, averaged over
circuits per (depth, input) and over everything per depth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .channel import MitigationMatrix, NoiseModel, mitigation_matrix
from .errors import CoverageError, NumericError
from .records import Dataset, index_to_bits
from .transforms import require_prob_dist, simplex_project

__all__ = [
    "UNMITIGATED",
    "MEM",
    "PROPOSED",
    "PROPOSED_PAVG",
    "METHOD_ORDER",
    "DEFAULT_METHODS",
    "COND_LIMIT",
    "ILL_CONDITIONED_FLAG",
    "jsd",
    "mitigate",
    "build_mem_matrix",
    "evaluate_mitigation",
    "ReportRow",
    "MitigationReport",
]

UNMITIGATED = "unmitigated"
MEM = "MEM"
PROPOSED = "proposed"
PROPOSED_PAVG = "proposed_pavg"
METHOD_ORDER = (UNMITIGATED, MEM, PROPOSED, PROPOSED_PAVG)
DEFAULT_METHODS = (UNMITIGATED, MEM, PROPOSED)

# above this 1-norm condition number the factorized solve is distrusted
# and the pseudo-inverse path is taken (and flagged in reports)
COND_LIMIT = 1e8
ILL_CONDITIONED_FLAG = "ill_conditioned"


def jsd(p, q) -> float:
    """Jensen-Shannon divergence in bits; 0 for equal, 1 for disjoint."""
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    if p_arr.shape != q_arr.shape:
        raise ValueError(f"shape mismatch: {p_arr.shape} vs {q_arr.shape}")
    p_arr = np.maximum(require_prob_dist(p_arr), 0.0)
    q_arr = np.maximum(require_prob_dist(q_arr), 0.0)
    mid = 0.5 * (p_arr + q_arr)
    return 0.5 * (_kl_bits(p_arr, mid) + _kl_bits(q_arr, mid))


def _kl_bits(a: np.ndarray, mid: np.ndarray) -> float:
    mask = a > 0.0
    return float(np.sum(a[mask] * np.log2(a[mask] / mid[mask])))


def _solve_columns(matrix: np.ndarray, rhs: np.ndarray, condition: float):
    """Solve matrix @ x = rhs column-wise; returns (solutions, fallback_used)."""
    if np.isfinite(condition) and condition <= COND_LIMIT:
        try:
            solutions = lu_solve(lu_factor(matrix), rhs)
            if np.all(np.isfinite(solutions)):
                return solutions, False
        except (ValueError, np.linalg.LinAlgError):
            pass
    solutions = np.linalg.lstsq(matrix, rhs, rcond=None)[0]
    if not np.all(np.isfinite(solutions)):
        raise NumericError("mitigation solve failed even via least squares")
    return solutions, True


def mitigate(mit: MitigationMatrix, noisy) -> np.ndarray:
    """Invert the mitigation system on one observed distribution."""
    noisy = np.asarray(noisy, dtype=float)
    if noisy.shape != (mit.size,):
        raise ValueError(f"distribution shape {noisy.shape} does not match {mit.size}")
    solution, _ = _solve_columns(mit.matrix, noisy, mit.condition)
    return simplex_project(solution)


def build_mem_matrix(dataset: Dataset) -> MitigationMatrix:
    """Readout-confusion matrix from gate-free (depth-0) records.

    Column in = averaged prepare-and-measure distribution on input in;
    needs every basis input at depth 0.
    """
    size = dataset.size
    columns = np.empty((size, size))
    missing = []
    for index in range(size):
        records = dataset.group(0, index)
        if not records:
            missing.append(index)
            continue
        total = np.zeros(size)
        for record in records:
            empirical = np.zeros(size)
            for outcome, count in record.counts.items():
                empirical[outcome] = count
            total += empirical / record.shots
        columns[:, index] = total / len(records)
    if missing:
        shown = ", ".join(index_to_bits(i, dataset.n) for i in missing[:8])
        if len(missing) > 8:
            shown += f", ... ({len(missing)} total)"
        raise CoverageError(f"no depth-0 records for inputs {shown}")
    try:
        condition = float(np.linalg.cond(columns, 1))
    except np.linalg.LinAlgError:
        condition = float("inf")
    return MitigationMatrix(depth=0, matrix=columns, condition=condition)


@dataclass(frozen=True)
class ReportRow:
    depth: int
    input_label: str  # bitstring, or "all" for the pooled row
    method: str
    mean_jsd: float
    std_jsd: float
    flags: str


@dataclass(eq=False)
class MitigationReport:
    n: int
    rows: list

    def mean(self, depth: int, method: str, input_label: str = "all") -> float:
        for row in self.rows:
            if (row.depth, row.method, row.input_label) == (depth, method, input_label):
                return row.mean_jsd
        raise KeyError(f"no report row for depth={depth} method={method} input={input_label}")

    def methods(self) -> list:
        return sorted({row.method for row in self.rows}, key=METHOD_ORDER.index)

    def write_csv(self, path, meta: str | None = None) -> None:
        with open(path, "w", newline="") as handle:
            if meta:
                handle.write(f"# {meta}\n")
            writer = csv.writer(handle)
            writer.writerow(["depth", "input", "method", "mean_jsd", "std_jsd", "flags"])
            for row in self.rows:
                writer.writerow(
                    [
                        row.depth,
                        row.input_label,
                        row.method,
                        f"{row.mean_jsd:.12g}",
                        f"{row.std_jsd:.12g}",
                        row.flags,
                    ]
                )


def _empirical_matrix(records, size: int) -> np.ndarray:
    columns = np.zeros((size, len(records)))
    for j, record in enumerate(sorted(records, key=lambda r: r.sequence_id)):
        for outcome, count in record.counts.items():
            columns[outcome, j] = count / record.shots
    return columns


def evaluate_mitigation(
    dataset: Dataset,
    model: NoiseModel | None = None,
    test_depths=None,
    inputs=None,
    methods=DEFAULT_METHODS,
    mem_dataset: Dataset | None = None,
) -> MitigationReport:
    """Score each method per circuit and aggregate.

    Per record: mitigate its empirical distribution (method-dependent) and
    take the JSD against the input basis state. Rows report mean/std over
    circuits per (depth, input, method), plus pooled "all" rows per
    (depth, method). Ill-conditioned or fallback solves set the flag.
    """
    methods = list(methods)
    unknown = [m for m in methods if m not in METHOD_ORDER]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {METHOD_ORDER}")
    if not methods:
        raise ValueError("need at least one method")
    if model is None and (PROPOSED in methods or PROPOSED_PAVG in methods):
        raise ValueError("model-based methods need a fitted model")
    depths = (
        [d for d in dataset.depths() if d > 0] if test_depths is None
        else sorted(set(int(d) for d in test_depths))
    )
    if not depths:
        raise CoverageError("no test depths")
    inputs = dataset.input_indices() if inputs is None else sorted(set(inputs))
    grouped = {}
    for record in dataset.records:
        grouped.setdefault((record.depth, record.input_index), []).append(record)
    missing = [
        (depth, index)
        for index in inputs
        for depth in depths
        if (depth, index) not in grouped
    ]
    if missing:
        shown = ", ".join(
            f"(m={depth}, in={index_to_bits(index, dataset.n)})"
            for depth, index in missing[:8]
        )
        if len(missing) > 8:
            shown += f", ... ({len(missing)} total)"
        raise CoverageError(f"dataset is missing records for {shown}")

    mem_matrix = None
    if MEM in methods:
        mem_matrix = build_mem_matrix(mem_dataset if mem_dataset is not None else dataset)

    size = dataset.size
    identity = np.eye(size)
    rows = []
    for depth in depths:
        systems = {}
        if MEM in methods:
            systems[MEM] = mem_matrix
        if PROPOSED in methods:
            systems[PROPOSED] = mitigation_matrix(model, depth)
        if PROPOSED_PAVG in methods:
            systems[PROPOSED_PAVG] = mitigation_matrix(model, depth, use_average_rates=True)
        scores = {method: {} for method in methods}
        flagged = {method: False for method in methods}
        for index in inputs:
            raw = _empirical_matrix(grouped[(depth, index)], size)
            ideal = identity[:, index]
            for method in methods:
                if method == UNMITIGATED:
                    outputs = raw
                else:
                    system = systems[method]
                    solved, fallback = _solve_columns(system.matrix, raw, system.condition)
                    if fallback or system.condition > COND_LIMIT:
                        flagged[method] = True
                    outputs = np.stack(
                        [simplex_project(solved[:, j]) for j in range(solved.shape[1])],
                        axis=1,
                    )
                scores[method][index] = np.array(
                    [jsd(ideal, outputs[:, j]) for j in range(outputs.shape[1])]
                )
        # rows come after the whole depth so flags cover every input
        ordered = sorted(methods, key=METHOD_ORDER.index)
        for index in inputs:
            for method in ordered:
                values = scores[method][index]
                rows.append(
                    ReportRow(
                        depth=depth,
                        input_label=index_to_bits(index, dataset.n),
                        method=method,
                        mean_jsd=float(values.mean()),
                        std_jsd=float(values.std()),
                        flags=ILL_CONDITIONED_FLAG if flagged[method] else "",
                    )
                )
        for method in ordered:
            pooled = np.concatenate([scores[method][index] for index in inputs])
            rows.append(
                ReportRow(
                    depth=depth,
                    input_label="all",
                    method=method,
                    mean_jsd=float(pooled.mean()),
                    std_jsd=float(pooled.std()),
                    flags=ILL_CONDITIONED_FLAG if flagged[method] else "",
                )
            )
    return MitigationReport(n=dataset.n, rows=rows)
