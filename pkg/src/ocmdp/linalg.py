"""Exact linear algebra over rationals: a sparse Gaussian elimination
used for stationary distributions, absorption probabilities and
gain/bias policy evaluation."""

from __future__ import annotations

from fractions import Fraction


class SingularSystem(Exception):
    pass


def solve_sparse(rows: list[dict[int, Fraction]], rhs: list[Fraction],
                 n: int) -> list[Fraction]:
    """Solve a square sparse system given as one {column: coeff} dict per
    row.  Eliminates in column order, picking the structurally sparsest
    pivot row to limit fill-in.  Raises SingularSystem when no unique
    solution exists."""
    rows = [dict(r) for r in rows]
    rhs = list(rhs)
    if len(rows) != n or len(rhs) != n:
        raise ValueError("system is not square")
    # rows_with[c] over-approximates the rows whose support contains c.
    rows_with: dict[int, set[int]] = {c: set() for c in range(n)}
    for i, row in enumerate(rows):
        for c in row:
            rows_with[c].add(i)
    where: list[int] = [-1] * n
    used: set[int] = set()
    for col in range(n):
        pivot = -1
        best = None
        for i in rows_with[col]:
            if i in used:
                continue
            coeff = rows[i].get(col)
            if coeff is None or coeff == 0:
                continue
            if best is None or len(rows[i]) < best:
                best = len(rows[i])
                pivot = i
        if pivot < 0:
            raise SingularSystem("no pivot for column %d" % col)
        used.add(pivot)
        where[col] = pivot
        pval = rows[pivot][col]
        if pval != 1:
            for c in rows[pivot]:
                rows[pivot][c] /= pval
            rhs[pivot] /= pval
        for i in list(rows_with[col]):
            if i == pivot or i in used:
                continue
            factor = rows[i].get(col)
            if not factor:
                rows[i].pop(col, None)
                continue
            for c, v in rows[pivot].items():
                cur = rows[i].get(c, Fraction(0)) - factor * v
                if cur:
                    rows[i][c] = cur
                    rows_with[c].add(i)
                else:
                    rows[i].pop(c, None)
            rhs[i] -= factor * rhs[pivot]
    # Back-substitution in reverse column order.
    x: list[Fraction] = [Fraction(0)] * n
    for col in range(n - 1, -1, -1):
        i = where[col]
        acc = rhs[i]
        for c, v in rows[i].items():
            if c != col:
                acc -= v * x[c]
        x[col] = acc
    return x
