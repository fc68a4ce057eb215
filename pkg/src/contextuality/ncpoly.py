"""Noncontextual-fraction programs and a self-contained simplex solver.

The decomposition question "how much of this empirical model is explained by
a global distribution" is a small dense LP: maximize the total weight b >= 0
over deterministic global assignments subject to incidence * b <= table
probabilities, row by row. The solver is a plain two-phase tableau simplex
with Bland's rule; exact Fraction arithmetic reuses the same pivoting code
with a zero tolerance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .scenario import (
    ContextKey,
    EmpiricalModel,
    Scenario,
    no_disturbance,
)

MAX_INCIDENCE_COLUMNS = 2**20
EPS_LP = 1e-9
EPS_ND_PRECONDITION = 1e-6

__all__ = [
    "MAX_INCIDENCE_COLUMNS",
    "EPS_LP",
    "SignallingModelError",
    "IncidenceMatrix",
    "LinearProgram",
    "SimplexResult",
    "FractionResult",
    "incidence",
    "simplex",
    "simplex_exact",
    "ncf_program",
    "contextual_fraction",
]


class SignallingModelError(ValueError):
    """The model violates no-disturbance beyond tolerance; the
    noncontextual-fraction program is not meaningful for it."""


@dataclass(frozen=True)
class IncidenceMatrix:
    """0/1 matrix pairing event rows with deterministic assignments.

    Rows: (context, joint outcome tuple), contexts in declared order, tuples
    in declared-outcome lexicographic order. Columns: global assignments in
    the same lexicographic order over scenario observables. Entry 1 iff the
    assignment restricts to the row's tuple.
    """

    labels: tuple[str, ...]
    rows: tuple[tuple[ContextKey, tuple[str, ...]], ...]
    assignments: tuple[tuple[str, ...], ...]
    matrix: np.ndarray

    def column(self, assignment: tuple[str, ...]) -> int:
        return self.assignments.index(assignment)


def incidence(sc: Scenario) -> IncidenceMatrix:
    if sc.assignment_space() > MAX_INCIDENCE_COLUMNS:
        raise ValueError(
            f"assignment space {sc.assignment_space()} exceeds the 2**20 "
            f"incidence guard"
        )
    labels = tuple(o.label for o in sc.observables)
    assignments = tuple(
        itertools.product(*[o.outcomes for o in sc.observables])
    )
    positions = {l: i for i, l in enumerate(labels)}
    rows: list[tuple[ContextKey, tuple[str, ...]]] = []
    for ctx in sc.contexts:
        for tup in sc.joint_outcomes(ctx):
            rows.append((ctx, tup))
    mat = np.zeros((len(rows), len(assignments)), dtype=np.int8)
    for r, (ctx, tup) in enumerate(rows):
        idxs = [positions[l] for l in ctx]
        for c, a in enumerate(assignments):
            if tuple(a[i] for i in idxs) == tup:
                mat[r, c] = 1
    mat.setflags(write=False)
    return IncidenceMatrix(labels, tuple(rows), assignments, mat)


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective . x  subject to  row_i . x  (sense_i)  rhs_i, x >= 0."""

    objective: tuple
    matrix: tuple[tuple, ...]
    senses: tuple[str, ...]
    rhs: tuple

    def __post_init__(self) -> None:
        objective = tuple(self.objective)
        matrix = tuple(tuple(row) for row in self.matrix)
        senses = tuple(self.senses)
        rhs = tuple(self.rhs)
        if not (len(matrix) == len(senses) == len(rhs)):
            raise ValueError("matrix, senses and rhs must have equal length")
        for row in matrix:
            if len(row) != len(objective):
                raise ValueError("matrix width must match the objective")
        for s in senses:
            if s not in ("<=", "=", ">="):
                raise ValueError(f"unknown sense {s!r}")
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "rhs", rhs)

    @property
    def nvars(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class SimplexResult:
    status: str  # Optimal | Infeasible | Unbounded
    value: object | None
    x: tuple | None
    basis: tuple[int, ...] | None  # standard-form column indices, one per row


def _pivot(T: list[list], basis: list[int], row: int, col: int) -> None:
    pr = T[row]
    pv = pr[col]
    T[row] = [v / pv for v in pr]
    pr = T[row]
    for i, other in enumerate(T):
        if i != row and other[col] != 0:
            f = other[col]
            T[i] = [v - f * w for v, w in zip(other, pr)]
    basis[row] = col


def _bland_iterate(T: list[list], basis: list[int], c: list, eps) -> str:
    """Run Bland-rule pivots to optimality or unboundedness, in place."""
    m = len(T)
    ncols = len(c)
    while True:
        in_basis = set(basis)
        cB = [c[b] for b in basis]
        enter = -1
        for j in range(ncols):
            if j in in_basis:
                continue
            reduced = c[j] - sum(cB[i] * T[i][j] for i in range(m))
            if reduced > eps:
                enter = j
                break
        if enter < 0:
            return "Optimal"
        leave = -1
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > eps:
                ratio = T[i][-1] / a
                if (
                    best is None
                    or ratio < best - eps
                    or (abs(ratio - best) <= eps and basis[i] < basis[leave])
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            return "Unbounded"
        _pivot(T, basis, leave, enter)


def _solve(lp: LinearProgram, convert, eps) -> SimplexResult:
    n = lp.nvars
    zero = convert(0)
    one = convert(1)
    rows = [[convert(v) for v in row] for row in lp.matrix]
    rhs = [convert(v) for v in lp.rhs]
    senses = list(lp.senses)
    for i in range(len(rows)):
        if rhs[i] < zero:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]
    m = len(rows)
    if m == 0:
        obj = [convert(v) for v in lp.objective]
        if any(v > eps for v in obj):
            return SimplexResult("Unbounded", None, None, None)
        return SimplexResult("Optimal", zero, (zero,) * n, ())

    # standard form: x columns, then one slack/surplus per inequality, then
    # one artificial per row that needs it
    n_slack = sum(1 for s in senses if s != "=")
    art_cols: list[int] = []
    T: list[list] = []
    basis: list[int] = []
    slack_seen = 0
    total = n + n_slack
    needs_art = [s != "<=" for s in senses]
    n_art = sum(needs_art)
    width = total + n_art + 1
    art_seen = 0
    for i in range(m):
        row = [zero] * width
        row[:n] = rows[i]
        if senses[i] != "=":
            sign = one if senses[i] == "<=" else -one
            row[n + slack_seen] = sign
            slack_col = n + slack_seen
            slack_seen += 1
        if needs_art[i]:
            col = total + art_seen
            row[col] = one
            art_cols.append(col)
            basis.append(col)
            art_seen += 1
        else:
            basis.append(slack_col)
        row[-1] = rhs[i]
        T.append(row)

    if art_cols:
        c1 = [zero] * (total + n_art)
        for col in art_cols:
            c1[col] = -one
        status = _bland_iterate(T, basis, c1, eps)
        assert status == "Optimal"  # phase 1 is bounded above by 0
        infeas = -sum(
            T[i][-1] for i in range(len(T)) if basis[i] in art_cols
        )
        if infeas < -eps:
            return SimplexResult("Infeasible", None, None, None)
        # drive leftover artificials out of the basis, dropping redundant rows
        art_set = set(art_cols)
        keep_rows: list[int] = []
        for i in range(len(T)):
            if basis[i] not in art_set:
                keep_rows.append(i)
                continue
            piv = next(
                (
                    j
                    for j in range(total)
                    if j not in art_set and abs(T[i][j]) > eps
                ),
                None,
            )
            if piv is not None:
                _pivot(T, basis, i, piv)
                keep_rows.append(i)
        T = [T[i][:total] + [T[i][-1]] for i in keep_rows]
        basis = [basis[i] for i in keep_rows]
    else:
        T = [row[:total] + [row[-1]] for row in T]

    c2 = [convert(v) for v in lp.objective] + [zero] * n_slack
    status = _bland_iterate(T, basis, c2, eps)
    if status != "Optimal":
        return SimplexResult(status, None, None, None)
    x = [zero] * (total)
    for i, b in enumerate(basis):
        x[b] = T[i][-1]
    value = sum(v * w for v, w in zip(c2, x))
    return SimplexResult("Optimal", value, tuple(x[:n]), tuple(basis))


def simplex(lp: LinearProgram) -> SimplexResult:
    """Floating-point two-phase simplex with Bland's rule, feasibility and
    optimality tolerances at EPS_LP."""
    return _solve(lp, float, EPS_LP)


def simplex_exact(lp: LinearProgram) -> SimplexResult:
    """Same pivoting over exact Fractions (zero tolerance)."""
    return _solve(lp, Fraction, Fraction(0))


# --------------------------------------------------- noncontextual fraction


@dataclass(frozen=True)
class FractionResult:
    """Noncontextual/contextual split of an empirical model.

    witness maps global assignments (value tuples in observable order) to
    their weights in the maximal noncontextual part; weights sum to ncf.
    Exact fields are filled when the model carries exact tables."""

    ncf: float
    cf: float
    witness: dict[tuple[str, ...], float]
    ncf_exact: Fraction | None = None
    witness_exact: dict[tuple[str, ...], Fraction] | None = None

    def __post_init__(self) -> None:
        if not (-EPS_LP <= self.ncf <= 1 + EPS_LP):
            raise ValueError(f"ncf out of range: {self.ncf!r}")
        if abs(self.ncf + self.cf - 1.0) > EPS_LP:
            raise ValueError("cf must equal 1 - ncf")
        if abs(sum(self.witness.values()) - self.ncf) > EPS_LP:
            raise ValueError("witness weights must sum to ncf")


def ncf_program(m: EmpiricalModel, exact: bool = False) -> LinearProgram:
    """The decomposition LP for a model: maximize total assignment weight
    under the incidence upper bounds."""
    inc = incidence(m.scenario)
    rhs = []
    for ctx, tup in inc.rows:
        dist = m.tables[ctx]
        rhs.append(dist.exact[tup] if exact else dist[tup])
    one = Fraction(1) if exact else 1.0
    return LinearProgram(
        (one,) * len(inc.assignments),
        tuple(tuple(int(v) for v in row) for row in inc.matrix),
        ("<=",) * len(inc.rows),
        tuple(rhs),
    )


def _validate_witness(
    inc: IncidenceMatrix, m: EmpiricalModel, witness: dict, ncf: float
) -> None:
    total = sum(witness.values())
    if abs(total - ncf) > EPS_LP:
        raise RuntimeError("witness weights do not sum to the optimum")
    for w in witness.values():
        if w < -EPS_LP:
            raise RuntimeError("negative witness weight")
    for (ctx, tup), row in zip(inc.rows, inc.matrix):
        used = sum(
            w for a, w in witness.items() if row[inc.column(a)]
        )
        if used > m.tables[ctx][tup] + EPS_LP:
            raise RuntimeError(
                f"witness exceeds probability at {ctx} {tup}"
            )


def _exact_resolve(
    lp_exact: LinearProgram, basis: tuple[int, ...]
) -> tuple[Fraction, tuple[Fraction, ...]] | None:
    """Evaluate the float-optimal basis in exact arithmetic and certify its
    optimality via exact reduced costs; None when the certificate fails."""
    n = lp_exact.nvars
    m = len(lp_exact.matrix)
    if len(basis) != m:
        return None
    total = n + m  # every NCF row is <=, one slack per row
    cols = []
    for j in range(total):
        if j < n:
            col = [Fraction(lp_exact.matrix[i][j]) for i in range(m)]
        else:
            col = [Fraction(1) if i == j - n else Fraction(0) for i in range(m)]
        cols.append(col)
    B = [[cols[b][i] for b in basis] for i in range(m)]
    rhs = [Fraction(v) for v in lp_exact.rhs]
    xB = _gauss_solve(B, rhs)
    if xB is None or any(v < 0 for v in xB):
        return None
    c = [Fraction(v) for v in lp_exact.objective] + [Fraction(0)] * m
    cB = [c[b] for b in basis]
    # y solves y B = cB; reduced cost of column j is c_j - y . col_j
    Bt = [[B[i][k] for i in range(m)] for k in range(m)]
    y = _gauss_solve(Bt, cB)
    if y is None:
        return None
    for j in range(total):
        red = c[j] - sum(yi * v for yi, v in zip(y, cols[j]))
        if red > 0:
            return None
    x = [Fraction(0)] * total
    for b, v in zip(basis, xB):
        x[b] = v
    value = sum(ci * xi for ci, xi in zip(c, x))
    return value, tuple(x[:n])


def _gauss_solve(
    mat: list[list[Fraction]], rhs: list[Fraction]
) -> list[Fraction] | None:
    k = len(mat)
    aug = [list(row) + [b] for row, b in zip(mat, rhs)]
    for col in range(k):
        piv = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return [aug[r][k] for r in range(k)]


def contextual_fraction(m: EmpiricalModel) -> FractionResult:
    """Solve the decomposition LP. Precondition: the model passes
    no-disturbance within 1e-6 (raises SignallingModelError otherwise).

    ncf is the LP optimum (clamped into [0, 1]); cf = 1 - ncf; the witness is
    revalidated against the tables after solving. When exact tables are
    available the float-optimal basis is re-solved in Fractions and the exact
    optimum must agree with the float one within 1e-9."""
    worst, _ = no_disturbance(m)
    if worst > EPS_ND_PRECONDITION:
        raise SignallingModelError(
            f"no-disturbance violated by {worst!r}; the fraction program "
            f"needs a non-signalling model"
        )
    inc = incidence(m.scenario)
    lp = ncf_program(m, exact=False)
    res = simplex(lp)
    if res.status != "Optimal":  # pragma: no cover - b=0 is always feasible
        raise RuntimeError(f"decomposition LP ended {res.status}")
    ncf = min(max(float(res.value), 0.0), 1.0)
    witness = {
        a: float(w)
        for a, w in zip(inc.assignments, res.x)
        if w > EPS_LP
    }
    _validate_witness(inc, m, witness, ncf)

    ncf_exact = None
    witness_exact = None
    if m.exact_available:
        lp_x = ncf_program(m, exact=True)
        resolved = _exact_resolve(lp_x, res.basis)
        if resolved is None:
            exact_res = simplex_exact(lp_x)
            assert exact_res.status == "Optimal"
            value, xs = exact_res.value, exact_res.x
        else:
            value, xs = resolved
        if abs(float(value) - ncf) > EPS_LP:
            raise RuntimeError(
                f"exact optimum {value} drifts from float optimum {ncf!r}"
            )
        ncf_exact = Fraction(value)
        ncf = float(value)
        witness_exact = {
            a: w for a, w in zip(inc.assignments, xs) if w != 0
        }
        witness = {a: float(w) for a, w in witness_exact.items()}
    return FractionResult(
        ncf, 1.0 - ncf, witness, ncf_exact, witness_exact
    )
